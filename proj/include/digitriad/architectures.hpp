#pragma once

#include <memory>
#include <string>

#include "digitriad/dataset.hpp"
#include "digitriad/layers.hpp"
#include "digitriad/network.hpp"
#include "digitriad/rng.hpp"

namespace digitriad {

// The two fixed classifier stacks. Weights draw from the given stream in
// declaration order: He-uniform ahead of ReLU, Glorot-uniform on the output
// layer, biases zero.

// 784 -> [Dense 512 + ReLU + Dropout 0.2] x4 -> Dense 10 (logits).
template <class T>
LayerStack<T> build_mlp(Rng& rng) {
    constexpr index_t kInput = 784;
    constexpr index_t kHidden = 512;
    constexpr double kHiddenDropout = 0.2;

    LayerStack<T> stack{Shape{kInput}};
    index_t in = kInput;
    for (int i = 0; i < 4; ++i) {
        auto dense = std::make_unique<DenseLayer<T>>(in, kHidden);
        he_uniform(dense->weights(), in, rng);
        stack.add(std::move(dense));
        stack.add(std::make_unique<ReluLayer<T>>());
        stack.add(std::make_unique<DropoutLayer<T>>(kHiddenDropout));
        in = kHidden;
    }
    auto head = std::make_unique<DenseLayer<T>>(kHidden, kClasses);
    glorot_uniform(head->weights(), kHidden, kClasses, rng);
    stack.add(std::move(head));
    return stack;
}

// 28x28x1 -> Conv 32x(3,3) s1 + ReLU -> Conv 64x(3,3) s1 + ReLU
//         -> MaxPool (2,2) s2 -> Dropout 0.25 -> Flatten
//         -> Dense 128 + ReLU -> Dropout 0.5 -> Dense 10 (logits).
// Valid padding throughout: 28 -> 26 -> 24 -> 12, flatten width 9216.
template <class T>
LayerStack<T> build_cnn(Rng& rng) {
    LayerStack<T> stack{Shape{kImageRows, kImageCols, 1}};

    auto conv1 = std::make_unique<Conv2DLayer<T>>(1, 32, 3, 3);
    he_uniform(conv1->filters(), 3 * 3 * 1, rng);
    stack.add(std::move(conv1));
    stack.add(std::make_unique<ReluLayer<T>>());

    auto conv2 = std::make_unique<Conv2DLayer<T>>(32, 64, 3, 3);
    he_uniform(conv2->filters(), 3 * 3 * 32, rng);
    stack.add(std::move(conv2));
    stack.add(std::make_unique<ReluLayer<T>>());

    stack.add(std::make_unique<MaxPool2DLayer<T>>(2, 2));
    stack.add(std::make_unique<DropoutLayer<T>>(0.25));
    stack.add(std::make_unique<FlattenLayer<T>>());

    auto fc = std::make_unique<DenseLayer<T>>(12 * 12 * 64, 128);
    he_uniform(fc->weights(), 12 * 12 * 64, rng);
    stack.add(std::move(fc));
    stack.add(std::make_unique<ReluLayer<T>>());
    stack.add(std::make_unique<DropoutLayer<T>>(0.5));

    auto head = std::make_unique<DenseLayer<T>>(128, kClasses);
    glorot_uniform(head->weights(), 128, kClasses, rng);
    stack.add(std::move(head));
    return stack;
}

template <class T>
LayerStack<T> build_architecture(const std::string& name, Rng& rng) {
    if (name == "mlp") return build_mlp<T>(rng);
    if (name == "cnn") return build_cnn<T>(rng);
    throw domain_error("unknown architecture '" + name + "' (expected mlp or cnn)");
}

}  // namespace digitriad
