#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "digitriad/errors.hpp"
#include "digitriad/network.hpp"
#include "digitriad/training.hpp"

namespace digitriad {

// 10x10 count table; rows are true labels, columns predictions.
struct ConfusionMatrix {
    std::array<std::array<std::int64_t, kClasses>, kClasses> counts{};

    std::int64_t total() const {
        std::int64_t n = 0;
        for (const auto& row : counts) {
            for (std::int64_t v : row) n += v;
        }
        return n;
    }

    std::int64_t trace() const {
        std::int64_t n = 0;
        for (int i = 0; i < kClasses; ++i) n += counts[i][i];
        return n;
    }

    // Elementwise sum; associative and commutative, so shard merges are
    // order-independent.
    ConfusionMatrix& merge(const ConfusionMatrix& o) {
        for (int i = 0; i < kClasses; ++i) {
            for (int j = 0; j < kClasses; ++j) counts[i][j] += o.counts[i][j];
        }
        return *this;
    }
};

inline ConfusionMatrix confusion(const std::vector<int>& truth, const std::vector<int>& pred) {
    if (truth.size() != pred.size()) {
        throw domain_error("confusion: " + std::to_string(truth.size()) + " truths vs " +
                           std::to_string(pred.size()) + " predictions");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= kClasses || pred[i] < 0 || pred[i] >= kClasses) {
            throw domain_error("confusion: label outside 0..9 at index " + std::to_string(i));
        }
        cm.counts[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(pred[i])]++;
    }
    return cm;
}

inline double accuracy(const ConfusionMatrix& cm) {
    const std::int64_t n = cm.total();
    if (n == 0) throw domain_error("accuracy of an empty confusion matrix");
    return double(cm.trace()) / double(n);
}

template <class V>
struct Timed {
    V value;
    double seconds;
};

// Monotonic wall time around a thunk.
template <class F>
auto timed(F&& thunk) -> Timed<decltype(thunk())> {
    const auto t0 = std::chrono::steady_clock::now();
    auto value = thunk();
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(value), s};
}

// Eval-mode predictions over contiguous shards, one cloned stack per worker
// so forward scratch never crosses threads. Shard order is fixed, so the
// result is independent of scheduling.
template <class T>
std::vector<int> predict_labels_sharded(const LayerStack<T>& stack, const Tensor<T>& x, int shards) {
    if (shards < 1) throw domain_error("shard count must be >= 1");
    const index_t n = x.dim(0);
    if (shards == 1 || n < shards) {
        LayerStack<T> local(stack);
        return predict_labels(local, x);
    }
    std::vector<std::vector<int>> parts(static_cast<std::size_t>(shards));
    std::vector<std::thread> pool;
    const index_t chunk = (n + shards - 1) / shards;
    std::vector<index_t> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), index_t(0));
    for (int s = 0; s < shards; ++s) {
        pool.emplace_back([&, s] {
            const index_t lo = s * chunk;
            const index_t hi = std::min(n, lo + chunk);
            if (lo >= hi) return;
            LayerStack<T> local(stack);
            Tensor<T> xs = gather_rows(x, idx.data() + lo, hi - lo);
            parts[static_cast<std::size_t>(s)] = predict_labels(local, xs);
        });
    }
    for (auto& th : pool) th.join();
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(n));
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

// FNV-1a over parameter bytes; used to show evaluation leaves models untouched.
template <class T>
std::uint64_t param_digest(LayerStack<T>& stack) {
    std::uint64_t h = 1469598103934665603ULL;
    for (Tensor<T>* p : stack.params()) {
        const auto* bytes = reinterpret_cast<const std::uint8_t*>(p->data());
        const std::size_t n = static_cast<std::size_t>(p->size()) * sizeof(T);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ULL;
        }
    }
    return h;
}

// One model's results for the comparison report.
struct BenchReport {
    std::string model;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    double train_seconds = 0.0;
    int epochs = 0;
    int batch_size = 0;
    std::uint64_t seed = 0;
    ConfusionMatrix test_confusion;
    std::vector<EpochRecord> history;  // empty for the SVM
};

}  // namespace digitriad
