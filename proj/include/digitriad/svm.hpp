#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <thread>
#include <vector>

#include "digitriad/dataset.hpp"
#include "digitriad/errors.hpp"
#include "digitriad/rng.hpp"
#include "digitriad/tensor.hpp"

namespace digitriad {

// One-vs-rest linear classifier: one weight row and one bias per class.
template <class T>
struct LinearModel {
    Tensor<T> weights;  // [classes, features]
    Tensor<T> biases;   // [classes]
};

// Primal stochastic subgradient solver settings. The learning rate follows
// eta_t = 1/(lambda*t) with the 1-1/t weight decay folded into a scale factor.
struct SvmConfig {
    double lambda = 1e-5;
    int epochs = 10;
    std::uint64_t seed = 42;
    int threads = 0;  // 0 = hardware concurrency, capped at one per class
};

namespace detail {

inline double dot_cols(const float* x, const double* v, index_t d) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    index_t j = 0;
    for (; j + 4 <= d; j += 4) {
        s0 += double(x[j]) * v[j];
        s1 += double(x[j + 1]) * v[j + 1];
        s2 += double(x[j + 2]) * v[j + 2];
        s3 += double(x[j + 3]) * v[j + 3];
    }
    for (; j < d; ++j) s0 += double(x[j]) * v[j];
    return (s0 + s1) + (s2 + s3);
}

inline double dot_cols(const double* x, const double* v, index_t d) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    index_t j = 0;
    for (; j + 4 <= d; j += 4) {
        s0 += x[j] * v[j];
        s1 += x[j + 1] * v[j + 1];
        s2 += x[j + 2] * v[j + 2];
        s3 += x[j + 3] * v[j + 3];
    }
    for (; j < d; ++j) s0 += x[j] * v[j];
    return (s0 + s1) + (s2 + s3);
}

// One binary subproblem: class-vs-rest hinge with L2 penalty on w only.
// Solver state is kept in double so the scale trick stays exact; the final
// iterate (not an average) is emitted.
template <class T>
void pegasos_binary(const Tensor<T>& x, const std::vector<int>& labels, int positive_class, const SvmConfig& cfg,
                    T* w_out, T* b_out) {
    const index_t n = x.dim(0);
    const index_t d = x.dim(1);
    std::vector<double> v(static_cast<std::size_t>(d), 0.0);
    double scale = 1.0;
    double bias = 0.0;

    Rng rng(cfg.seed + static_cast<std::uint64_t>(positive_class));
    std::vector<index_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), index_t(0));

    std::int64_t t = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (index_t pos = 0; pos < n; ++pos) {
            const index_t i = order[static_cast<std::size_t>(pos)];
            ++t;
            const double eta = 1.0 / (cfg.lambda * double(t));
            const double y = labels[static_cast<std::size_t>(i)] == positive_class ? 1.0 : -1.0;
            const T* xi = x.data() + i * d;
            const double margin = y * (scale * dot_cols(xi, v.data(), d) + bias);
            scale *= 1.0 - 1.0 / double(t);
            if (scale == 0.0) {  // exact at t == 1
                std::fill(v.begin(), v.end(), 0.0);
                scale = 1.0;
            }
            if (margin < 1.0) {
                const double a = eta * y / scale;
                for (index_t j = 0; j < d; ++j) v[static_cast<std::size_t>(j)] += a * double(xi[j]);
                bias += eta * y;
            }
        }
    }
    for (index_t j = 0; j < d; ++j) w_out[j] = static_cast<T>(scale * v[static_cast<std::size_t>(j)]);
    *b_out = static_cast<T>(bias);
}

}  // namespace detail

// Trains the 10 independent class-vs-rest subproblems; deterministic given
// cfg.seed (each subproblem derives its stream as seed+k).
template <class T>
LinearModel<T> train_ovr(const Tensor<T>& x, const std::vector<int>& labels, const SvmConfig& cfg,
                         int classes = kClasses) {
    if (x.rank() != 2) throw shape_error("train_ovr expects [n,d] input, got " + x.shape().str());
    if (x.dim(0) == 0 || labels.empty()) throw domain_error("empty dataset");
    if (x.dim(0) != static_cast<index_t>(labels.size())) {
        throw domain_error("sample/label count mismatch");
    }
    if (cfg.lambda <= 0) throw domain_error("lambda must be > 0");
    if (cfg.epochs < 1) throw domain_error("epochs must be >= 1");

    LinearModel<T> model;
    model.weights = Tensor<T>{Shape{classes, x.dim(1)}};
    model.biases = Tensor<T>{Shape{classes}};

    int workers = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min(workers, classes));

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int worker = 0; worker < workers; ++worker) {
        pool.emplace_back([&, worker] {
            for (int k = worker; k < classes; k += workers) {
                detail::pegasos_binary(x, labels, k, cfg, model.weights.data() + index_t(k) * x.dim(1),
                                       model.biases.data() + k);
            }
        });
    }
    for (auto& th : pool) th.join();
    return model;
}

// scores[i][k] = w_k . x_i + b_k
template <class T>
Tensor<T> decision_scores(const LinearModel<T>& model, const Tensor<T>& x) {
    if (x.rank() != 2 || x.dim(1) != model.weights.dim(1)) {
        throw shape_error("decision_scores: " + x.shape().str() + " does not conform to weights " +
                          model.weights.shape().str());
    }
    const index_t n = x.dim(0), d = x.dim(1), c = model.weights.dim(0);
    // W^T copy so the product runs down contiguous rows.
    Tensor<T> wt{Shape{d, c}};
    for (index_t k = 0; k < c; ++k) {
        for (index_t j = 0; j < d; ++j) wt.at(j, k) = model.weights.at(k, j);
    }
    Tensor<T> scores{Shape{n, c}};
    gemm_nn(x.data(), wt.data(), scores.data(), n, d, c);
    for (index_t i = 0; i < n; ++i) {
        for (index_t k = 0; k < c; ++k) scores.at(i, k) += model.biases[k];
    }
    return scores;
}

template <class T>
std::vector<int> svm_predict(const LinearModel<T>& model, const Tensor<T>& x) {
    return argmax_rows(decision_scores(model, x));
}

// (lambda/2)||w||^2 + mean_i max(0, 1 - y_i (w.x_i + b)); y in {-1,+1}.
template <class T>
double hinge_objective(const T* w, T b, const Tensor<T>& x, const std::vector<double>& y, double lambda) {
    const index_t n = x.dim(0), d = x.dim(1);
    double norm2 = 0;
    for (index_t j = 0; j < d; ++j) norm2 += double(w[j]) * double(w[j]);
    double hinge = 0;
    for (index_t i = 0; i < n; ++i) {
        const T* xi = x.data() + i * d;
        double score = double(b);
        for (index_t j = 0; j < d; ++j) score += double(w[j]) * double(xi[j]);
        hinge += std::max(0.0, 1.0 - y[static_cast<std::size_t>(i)] * score);
    }
    return 0.5 * lambda * norm2 + hinge / double(n);
}

// ------------------------------------------------------------------
// Persistence: magic "DSVM", version u8, then weights and biases as
// little-endian 32-bit reals in row-major order.
// ------------------------------------------------------------------

namespace detail {

inline void put_f32_le(std::vector<std::uint8_t>& out, float v) {
    const std::uint32_t u = std::bit_cast<std::uint32_t>(v);
    out.push_back(std::uint8_t(u));
    out.push_back(std::uint8_t(u >> 8));
    out.push_back(std::uint8_t(u >> 16));
    out.push_back(std::uint8_t(u >> 24));
}

inline float get_f32_le(const std::uint8_t* p) {
    const std::uint32_t u = std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
                            (std::uint32_t(p[3]) << 24);
    return std::bit_cast<float>(u);
}

}  // namespace detail

template <class T>
std::vector<std::uint8_t> serialize_svm(const LinearModel<T>& model) {
    std::vector<std::uint8_t> out = {'D', 'S', 'V', 'M', 1};
    out.reserve(5 + 4 * static_cast<std::size_t>(model.weights.size() + model.biases.size()));
    for (index_t i = 0; i < model.weights.size(); ++i) detail::put_f32_le(out, static_cast<float>(model.weights[i]));
    for (index_t i = 0; i < model.biases.size(); ++i) detail::put_f32_le(out, static_cast<float>(model.biases[i]));
    return out;
}

template <class T>
LinearModel<T> deserialize_svm(const std::vector<std::uint8_t>& bytes, int classes = kClasses, index_t features = 784) {
    const std::size_t expected = 5 + 4 * static_cast<std::size_t>(classes) * (static_cast<std::size_t>(features) + 1);
    if (bytes.size() < 5 || bytes[0] != 'D' || bytes[1] != 'S' || bytes[2] != 'V' || bytes[3] != 'M') {
        throw format_error("bad DSVM magic");
    }
    if (bytes[4] != 1) throw format_error("unsupported DSVM version " + std::to_string(int(bytes[4])));
    if (bytes.size() != expected) {
        throw format_error("DSVM length " + std::to_string(bytes.size()) + " != expected " + std::to_string(expected));
    }
    LinearModel<T> model;
    model.weights = Tensor<T>{Shape{classes, features}};
    model.biases = Tensor<T>{Shape{classes}};
    const std::uint8_t* p = bytes.data() + 5;
    for (index_t i = 0; i < model.weights.size(); ++i, p += 4) model.weights[i] = static_cast<T>(detail::get_f32_le(p));
    for (index_t i = 0; i < model.biases.size(); ++i, p += 4) model.biases[i] = static_cast<T>(detail::get_f32_le(p));
    return model;
}

template <class T>
void save_svm(const LinearModel<T>& model, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot write " + path.string());
    const auto bytes = serialize_svm(model);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw io_error("short write to " + path.string());
}

template <class T>
LinearModel<T> load_svm(const std::filesystem::path& path, int classes = kClasses, index_t features = 784) {
    return deserialize_svm<T>(read_file(path), classes, features);
}

}  // namespace digitriad
