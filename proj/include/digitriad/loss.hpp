#pragma once

#include <cmath>
#include <utility>

#include "digitriad/errors.hpp"
#include "digitriad/tensor.hpp"

namespace digitriad {

// Row-wise softmax with max subtraction.
template <class T>
Tensor<T> softmax(const Tensor<T>& logits) {
    if (logits.rank() != 2) throw shape_error("softmax expects [n,c], got " + logits.shape().str());
    const index_t n = logits.dim(0), c = logits.dim(1);
    Tensor<T> p{logits.shape()};
    for (index_t i = 0; i < n; ++i) {
        const T* row = logits.data() + i * c;
        T* out = p.data() + i * c;
        T m = row[0];
        for (index_t j = 1; j < c; ++j) m = std::max(m, row[j]);
        T sum = T(0);
        for (index_t j = 0; j < c; ++j) {
            out[j] = std::exp(row[j] - m);
            sum += out[j];
        }
        for (index_t j = 0; j < c; ++j) out[j] /= sum;
    }
    return p;
}

template <class T>
struct LossResult {
    double loss;        // mean of -log softmax(logits)[true class]
    Tensor<T> grad;     // (softmax - one_hot)/n
};

// Fused softmax + cross-entropy; the fused gradient avoids forming log
// probabilities and stays stable under large logit shifts.
template <class T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, const Tensor<T>& one_hot) {
    if (logits.shape() != one_hot.shape() || logits.rank() != 2) {
        throw shape_error("softmax_cross_entropy: " + logits.shape().str() + " vs " + one_hot.shape().str());
    }
    const index_t n = logits.dim(0), c = logits.dim(1);
    LossResult<T> r{0.0, Tensor<T>{logits.shape()}};
    double total = 0.0;
    for (index_t i = 0; i < n; ++i) {
        const T* row = logits.data() + i * c;
        const T* oh = one_hot.data() + i * c;
        T* g = r.grad.data() + i * c;
        T m = row[0];
        for (index_t j = 1; j < c; ++j) m = std::max(m, row[j]);
        double sum = 0.0;
        for (index_t j = 0; j < c; ++j) sum += std::exp(double(row[j]) - double(m));
        const double log_sum = std::log(sum);
        for (index_t j = 0; j < c; ++j) {
            const double p = std::exp(double(row[j]) - double(m)) / sum;
            g[j] = static_cast<T>((p - double(oh[j])) / double(n));
            if (oh[j] > T(0)) total += -(double(row[j]) - double(m) - log_sum) * double(oh[j]);
        }
    }
    r.loss = total / double(n);
    return r;
}

}  // namespace digitriad
