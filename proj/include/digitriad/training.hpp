#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "digitriad/loss.hpp"
#include "digitriad/network.hpp"
#include "digitriad/optimizer.hpp"
#include "digitriad/rng.hpp"
#include "digitriad/tensor.hpp"

namespace digitriad {

struct TrainConfig {
    int epochs = 30;
    int batch_size = 128;
    double learning_rate = 0.01;
    double momentum = 0.9;
    double lr_decay = 1.0;   // multiplier applied every lr_decay_every epochs
    int lr_decay_every = 0;  // 0 = constant learning rate
    std::uint64_t seed = 42;

    void validate() const {
        if (epochs < 1) throw domain_error("epochs must be >= 1");
        if (batch_size < 1) throw domain_error("batch size must be >= 1");
        if (learning_rate < 0) throw domain_error("learning rate must be >= 0");
        if (momentum < 0 || momentum >= 1) throw domain_error("momentum must be in [0,1)");
    }
};

struct EpochRecord {
    int epoch = 0;         // 1-based
    double loss = 0.0;     // mean training loss over the pass
    double accuracy = 0.0; // running training accuracy over the pass
    double seconds = 0.0;
};

// One full shuffled pass in mini-batches. Loss and accuracy are the running
// means over the pass (batches are scored before their update, under the
// train-mode forward that produced the gradients).
template <class T>
EpochRecord train_epoch(LayerStack<T>& stack, const Tensor<T>& x, const Tensor<T>& one_hot,
                        const std::vector<int>& labels, const TrainConfig& cfg, SgdMomentum<T>& opt, Rng& rng,
                        int epoch_index) {
    const auto t0 = std::chrono::steady_clock::now();
    const index_t n = x.dim(0);
    std::vector<index_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), index_t(0));
    rng.shuffle(order);

    const auto params = stack.params();
    const auto grads = stack.grads();

    double loss_sum = 0.0;
    index_t correct = 0;
    for (index_t start = 0; start < n; start += cfg.batch_size) {
        const index_t bs = std::min<index_t>(cfg.batch_size, n - start);
        Tensor<T> xb = gather_rows(x, order.data() + start, bs);
        Tensor<T> yb = gather_rows(one_hot, order.data() + start, bs);

        Tensor<T> logits = stack.forward(xb, Mode::train, &rng);
        LossResult<T> lr = softmax_cross_entropy(logits, yb);
        loss_sum += lr.loss * double(bs);

        const std::vector<int> pred = argmax_rows(logits);
        for (index_t i = 0; i < bs; ++i) {
            if (pred[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(order[start + i])]) ++correct;
        }

        stack.backward(lr.grad);
        opt.step(params, grads);
    }

    EpochRecord rec;
    rec.epoch = epoch_index;
    rec.loss = loss_sum / double(n);
    rec.accuracy = double(correct) / double(n);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

// Full training run: applies the step-decay schedule and reports one record
// per epoch. Takes the stream by reference so callers can continue the same
// stream that initialized the weights.
template <class T>
std::vector<EpochRecord> fit(LayerStack<T>& stack, const Tensor<T>& x, const Tensor<T>& one_hot,
                             const std::vector<int>& labels, const TrainConfig& cfg, Rng& rng,
                             const std::function<void(const EpochRecord&)>& on_epoch = nullptr) {
    cfg.validate();
    SgdMomentum<T> opt(cfg.learning_rate, cfg.momentum);
    opt.attach(stack.params());
    std::vector<EpochRecord> history;
    history.reserve(static_cast<std::size_t>(cfg.epochs));
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (cfg.lr_decay_every > 0 && epoch > 1 && (epoch - 1) % cfg.lr_decay_every == 0) {
            opt.set_learning_rate(opt.learning_rate() * cfg.lr_decay);
        }
        history.push_back(train_epoch(stack, x, one_hot, labels, cfg, opt, rng, epoch));
        if (on_epoch) on_epoch(history.back());
    }
    return history;
}

// Deterministic given cfg.seed alone.
template <class T>
std::vector<EpochRecord> fit(LayerStack<T>& stack, const Tensor<T>& x, const Tensor<T>& one_hot,
                             const std::vector<int>& labels, const TrainConfig& cfg,
                             const std::function<void(const EpochRecord&)>& on_epoch = nullptr) {
    Rng rng(cfg.seed);
    return fit(stack, x, one_hot, labels, cfg, rng, on_epoch);
}

// Eval-mode batched inference; argmax of logits (softmax is monotone).
template <class T>
std::vector<int> predict_labels(LayerStack<T>& stack, const Tensor<T>& x, index_t batch = 256) {
    const index_t n = x.dim(0);
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(n));
    std::vector<index_t> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), index_t(0));
    for (index_t start = 0; start < n; start += batch) {
        const index_t bs = std::min(batch, n - start);
        Tensor<T> xb = gather_rows(x, idx.data() + start, bs);
        const std::vector<int> pred = argmax_rows(stack.forward(xb, Mode::eval));
        out.insert(out.end(), pred.begin(), pred.end());
    }
    return out;
}

// Explicit softmax over the logits, for callers that want probabilities.
template <class T>
Tensor<T> predict_proba(LayerStack<T>& stack, const Tensor<T>& x) {
    return softmax(stack.forward(x, Mode::eval));
}

}  // namespace digitriad
