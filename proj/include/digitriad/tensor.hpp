#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "digitriad/errors.hpp"

namespace digitriad {

using index_t = std::int64_t;

// Extents of a dense row-major array, rank 1 to 4, every extent >= 1.
class Shape {
  public:
    static constexpr int kMaxRank = 4;

    Shape() : rank_(1), dim_{1, 1, 1, 1} {}

    Shape(std::initializer_list<index_t> dims) {
        if (dims.size() < 1 || dims.size() > kMaxRank) {
            throw shape_error("rank must be 1..4, got " + std::to_string(dims.size()));
        }
        rank_ = static_cast<int>(dims.size());
        dim_ = {1, 1, 1, 1};
        int i = 0;
        for (index_t d : dims) dim_[i++] = d;
        validate();
    }

    explicit Shape(const std::vector<index_t>& dims) {
        if (dims.size() < 1 || dims.size() > kMaxRank) {
            throw shape_error("rank must be 1..4, got " + std::to_string(dims.size()));
        }
        rank_ = static_cast<int>(dims.size());
        dim_ = {1, 1, 1, 1};
        for (int i = 0; i < rank_; ++i) dim_[i] = dims[i];
        validate();
    }

    int rank() const { return rank_; }
    index_t operator[](int i) const { return dim_[i]; }

    index_t count() const {
        index_t n = 1;
        for (int i = 0; i < rank_; ++i) n *= dim_[i];
        return n;
    }

    bool operator==(const Shape& o) const { return rank_ == o.rank_ && dim_ == o.dim_; }
    bool operator!=(const Shape& o) const { return !(*this == o); }

    std::string str() const {
        std::ostringstream os;
        os << '[';
        for (int i = 0; i < rank_; ++i) os << (i ? "," : "") << dim_[i];
        os << ']';
        return os.str();
    }

  private:
    void validate() const {
        index_t n = 1;
        for (int i = 0; i < rank_; ++i) {
            if (dim_[i] < 1) throw shape_error("extent must be >= 1 in " + str());
            if (n > std::numeric_limits<index_t>::max() / dim_[i]) {
                throw size_error("element count overflows in shape");
            }
            n *= dim_[i];
        }
    }

    int rank_;
    std::array<index_t, kMaxRank> dim_;
};

// Dense row-major N-d array of real values; the universal value type for
// images, weights, activations and gradients. Last dimension is contiguous.
template <class T>
class Tensor {
  public:
    Tensor() : shape_(), data_(1, T(0)) {}

    explicit Tensor(Shape shape) : shape_(shape), data_(static_cast<std::size_t>(shape.count()), T(0)) {}

    Tensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
        if (static_cast<index_t>(data_.size()) != shape_.count()) {
            throw shape_error("data length " + std::to_string(data_.size()) + " does not match shape " + shape_.str());
        }
    }

    static Tensor zeros(Shape shape) { return Tensor(shape); }

    const Shape& shape() const { return shape_; }
    index_t size() const { return static_cast<index_t>(data_.size()); }
    index_t dim(int i) const { return shape_[i]; }
    int rank() const { return shape_.rank(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator[](index_t i) { return data_[static_cast<std::size_t>(i)]; }
    const T& operator[](index_t i) const { return data_[static_cast<std::size_t>(i)]; }

    // Rank-2 access.
    T& at(index_t i, index_t j) { return data_[static_cast<std::size_t>(i * shape_[1] + j)]; }
    const T& at(index_t i, index_t j) const { return data_[static_cast<std::size_t>(i * shape_[1] + j)]; }

    // Rank-4 access.
    T& at(index_t i, index_t j, index_t k, index_t l) {
        return data_[static_cast<std::size_t>(((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l)];
    }
    const T& at(index_t i, index_t j, index_t k, index_t l) const {
        return data_[static_cast<std::size_t>(((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l)];
    }

    // Same flat data under a new shape; element counts must agree.
    Tensor reshape(Shape s) const {
        if (s.count() != shape_.count()) {
            throw shape_error("reshape " + shape_.str() + " -> " + s.str() + " changes element count");
        }
        return Tensor(s, data_);
    }

    // Elementwise transform, same shape.
    template <class F>
    Tensor map(F f) const {
        Tensor out(shape_);
        const std::size_t n = data_.size();
        for (std::size_t i = 0; i < n; ++i) out.data_[i] = f(data_[i]);
        return out;
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    bool all_finite() const {
        for (T v : data_) {
            if (!std::isfinite(static_cast<double>(v))) return false;
        }
        return true;
    }

  private:
    Shape shape_;
    std::vector<T> data_;
};

template <class T>
Tensor<T> zeros(Shape shape) {
    return Tensor<T>::zeros(shape);
}

// ------------------------------------------------------------------
// GEMM kernels. Every C element is accumulated in a fixed k order by a
// single thread, so results are bit-identical for any thread count.
// ------------------------------------------------------------------

// C[m,n] = (acc ? C : 0) + A[m,k] * B[k,n]
template <class T>
void gemm_nn(const T* A, const T* B, T* C, index_t M, index_t K, index_t N, bool accumulate = false) {
#pragma omp parallel for schedule(static)
    for (index_t i = 0; i < M; ++i) {
        T* c = C + i * N;
        if (!accumulate) {
            for (index_t j = 0; j < N; ++j) c[j] = T(0);
        }
        const T* a = A + i * K;
        for (index_t k = 0; k < K; ++k) {
            const T ak = a[k];
            const T* b = B + k * N;
            for (index_t j = 0; j < N; ++j) c[j] += ak * b[j];
        }
    }
}

// C[m,n] = (acc ? C : 0) + A^T * B with A stored [k,m], B stored [k,n]
template <class T>
void gemm_tn(const T* A, const T* B, T* C, index_t M, index_t K, index_t N, bool accumulate = false) {
#pragma omp parallel
    {
#ifdef _OPENMP
        const int nt = omp_get_num_threads();
        const int tid = omp_get_thread_num();
#else
        const int nt = 1;
        const int tid = 0;
#endif
        const index_t chunk = (M + nt - 1) / nt;
        const index_t i0 = tid * chunk;
        const index_t i1 = std::min(M, i0 + chunk);
        if (!accumulate) {
            for (index_t i = i0; i < i1; ++i) {
                T* c = C + i * N;
                for (index_t j = 0; j < N; ++j) c[j] = T(0);
            }
        }
        // k outer keeps each B row hot in L1 while it serves i0..i1.
        for (index_t k = 0; k < K; ++k) {
            const T* acol = A + k * M;
            const T* b = B + k * N;
            for (index_t i = i0; i < i1; ++i) {
                const T ak = acol[i];
                T* c = C + i * N;
                for (index_t j = 0; j < N; ++j) c[j] += ak * b[j];
            }
        }
    }
}

// Rank-2 matrix product with shape checks.
template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw shape_error("matmul needs rank-2 operands, got " + a.shape().str() + " and " + b.shape().str());
    }
    if (a.dim(1) != b.dim(0)) {
        throw shape_error("matmul inner dimensions differ: " + a.shape().str() + " x " + b.shape().str());
    }
    Tensor<T> c(Shape{a.dim(0), b.dim(1)});
    gemm_nn(a.data(), b.data(), c.data(), a.dim(0), a.dim(1), b.dim(1));
    return c;
}

// Row maxima indices; ties break to the lowest index.
template <class T>
std::vector<int> argmax_rows(const Tensor<T>& t) {
    if (t.rank() != 2) throw shape_error("argmax_rows needs rank-2 input, got " + t.shape().str());
    const index_t m = t.dim(0), n = t.dim(1);
    std::vector<int> out(static_cast<std::size_t>(m));
    for (index_t i = 0; i < m; ++i) {
        const T* row = t.data() + i * n;
        int best = 0;
        for (index_t j = 1; j < n; ++j) {
            if (row[j] > row[best]) best = static_cast<int>(j);
        }
        out[static_cast<std::size_t>(i)] = best;
    }
    return out;
}

// Gather whole samples (rows of the leading dimension) into a batch tensor.
template <class T>
Tensor<T> gather_rows(const Tensor<T>& x, const index_t* idx, index_t count) {
    const index_t stride = x.size() / x.dim(0);
    std::vector<index_t> dims(static_cast<std::size_t>(x.rank()));
    dims[0] = count;
    for (int i = 1; i < x.rank(); ++i) dims[static_cast<std::size_t>(i)] = x.dim(i);
    Tensor<T> out{Shape(dims)};
    for (index_t i = 0; i < count; ++i) {
        std::memcpy(out.data() + i * stride, x.data() + idx[i] * stride,
                    static_cast<std::size_t>(stride) * sizeof(T));
    }
    return out;
}

}  // namespace digitriad
