#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "digitriad/errors.hpp"
#include "digitriad/idx.hpp"
#include "digitriad/tensor.hpp"

namespace digitriad {

constexpr int kClasses = 10;
constexpr index_t kImageRows = 28;
constexpr index_t kImageCols = 28;

enum class Role { train, test };

// Images in [0,1], integer labels, and their one-hot encoding.
template <class T>
struct LabeledDataset {
    Tensor<T> images;  // [n,rows,cols,1]
    std::vector<int> labels;
    Tensor<T> one_hot;  // [n,10]
    Role role = Role::train;

    index_t size() const { return images.dim(0); }
};

// v -> v/255 so features range over [0,1].
template <class T>
Tensor<T> normalize(const Tensor<T>& raw) {
    return raw.map([](T v) { return v / T(255); });
}

// Label k -> row of zeros with a single 1 at index k.
template <class T>
Tensor<T> one_hot(const std::vector<int>& labels, int classes = kClasses) {
    Tensor<T> out{Shape{static_cast<index_t>(labels.size()), classes}};
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= classes) {
            throw domain_error("label " + std::to_string(labels[i]) + " outside 0.." + std::to_string(classes - 1));
        }
        out.at(static_cast<index_t>(i), labels[i]) = T(1);
    }
    return out;
}

template <class T>
std::array<std::int64_t, kClasses> label_histogram(const LabeledDataset<T>& ds) {
    std::array<std::int64_t, kClasses> counts{};
    for (int l : ds.labels) counts[static_cast<std::size_t>(l)]++;
    return counts;
}

// [n,28,28,1] -> [n,784], pixel (r,c) at index 28r+c.
template <class T>
Tensor<T> flatten_for_mlp(const LabeledDataset<T>& ds) {
    const index_t n = ds.images.dim(0);
    const index_t d = ds.images.dim(1) * ds.images.dim(2) * ds.images.dim(3);
    return ds.images.reshape(Shape{n, d});
}

inline std::filesystem::path resolve_idx_file(const std::filesystem::path& dir, const std::string& name) {
    namespace fs = std::filesystem;
    const fs::path plain = dir / name;
    if (fs::exists(plain)) return plain;
    const fs::path gz = dir / (name + ".gz");
    if (fs::exists(gz)) return gz;
    throw io_error("neither " + plain.string() + " nor " + gz.string() + " exists");
}

template <class T>
LabeledDataset<T> make_dataset(const IdxImages& images, const std::vector<int>& labels, Role role) {
    if (images.count != static_cast<index_t>(labels.size())) {
        throw format_error("image count " + std::to_string(images.count) + " != label count " +
                           std::to_string(labels.size()));
    }
    LabeledDataset<T> ds;
    ds.images = normalize(idx_to_tensor<T>(images));
    ds.labels = labels;
    ds.one_hot = one_hot<T>(labels);
    ds.role = role;
    return ds;
}

// Loads one split from the four standard MNIST file names (raw or .gz).
template <class T>
LabeledDataset<T> load_dataset(const std::filesystem::path& data_dir, Role role) {
    const std::string img_name = role == Role::train ? "train-images-idx3-ubyte" : "t10k-images-idx3-ubyte";
    const std::string lab_name = role == Role::train ? "train-labels-idx1-ubyte" : "t10k-labels-idx1-ubyte";
    const IdxImages images = parse_idx_images(read_maybe_gzip(resolve_idx_file(data_dir, img_name)));
    const std::vector<int> labels = load_idx_labels(read_maybe_gzip(resolve_idx_file(data_dir, lab_name)));
    return make_dataset<T>(images, labels, role);
}

}  // namespace digitriad
