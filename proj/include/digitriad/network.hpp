#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <utility>
#include <vector>

#include "digitriad/errors.hpp"
#include "digitriad/layers.hpp"
#include "digitriad/tensor.hpp"

namespace digitriad {

// Ordered sequence of layers behind one forward/backward contract. The wiring
// is validated at construction time against the declared per-sample input
// shape, so a bad stack fails before any data flows.
template <class T>
class LayerStack {
  public:
    explicit LayerStack(Shape per_sample_input) : input_shape_(per_sample_input) {
        shapes_.push_back(per_sample_input);
    }

    LayerStack(const LayerStack& o) : input_shape_(o.input_shape_), shapes_(o.shapes_) {
        layers_.reserve(o.layers_.size());
        for (const auto& l : o.layers_) layers_.push_back(l->clone());
        refresh_input_grad_flags();
    }
    LayerStack& operator=(const LayerStack&) = delete;
    LayerStack(LayerStack&&) noexcept = default;
    LayerStack& operator=(LayerStack&&) noexcept = default;

    void add(std::unique_ptr<Layer<T>> layer) {
        shapes_.push_back(layer->output_shape(shapes_.back()));  // throws on bad wiring
        layers_.push_back(std::move(layer));
        refresh_input_grad_flags();
    }

    std::size_t depth() const { return layers_.size(); }
    Layer<T>& layer(std::size_t i) { return *layers_[i]; }
    const Shape& input_shape() const { return input_shape_; }
    const Shape& output_shape() const { return shapes_.back(); }

    Tensor<T> forward(const Tensor<T>& x, Mode mode, Rng* rng = nullptr) {
        check_batch(x);
        Tensor<T> cur = x;
        for (auto& l : layers_) cur = l->forward(cur, mode, rng);
        trained_forward_ = mode == Mode::train;
        return cur;
    }

    // Chain rule in reverse; fills every parameter gradient. Returns the input
    // gradient only when requested (costs one extra product on layer 0).
    Tensor<T> backward(const Tensor<T>& dloss, bool want_input_grad = false) {
        if (!trained_forward_) throw state_error("stack backward before train-mode forward");
        trained_forward_ = false;
        if (!layers_.empty()) layers_.front()->set_need_input_grad(want_input_grad);
        Tensor<T> dy = dloss;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) dy = (*it)->backward(dy);
        return dy;
    }

    std::vector<Tensor<T>*> params() {
        std::vector<Tensor<T>*> out;
        for (auto& l : layers_) {
            for (Tensor<T>* p : l->params()) out.push_back(p);
        }
        return out;
    }

    std::vector<Tensor<T>*> grads() {
        std::vector<Tensor<T>*> out;
        for (auto& l : layers_) {
            for (Tensor<T>* g : l->grads()) out.push_back(g);
        }
        return out;
    }

    index_t param_count() {
        index_t n = 0;
        for (Tensor<T>* p : params()) n += p->size();
        return n;
    }

    // ------------------------------------------------------------------
    // Persistence: magic "DNET", version u8, layer count u16 LE, then per
    // layer its type tag u8 and parameter payloads as little-endian 32-bit
    // reals in declaration order.
    // ------------------------------------------------------------------

    std::vector<std::uint8_t> serialize() {
        std::vector<std::uint8_t> out = {'D', 'N', 'E', 'T', 1};
        out.push_back(std::uint8_t(layers_.size() & 0xff));
        out.push_back(std::uint8_t(layers_.size() >> 8));
        for (auto& l : layers_) {
            out.push_back(static_cast<std::uint8_t>(l->tag()));
            for (Tensor<T>* p : l->params()) {
                for (index_t i = 0; i < p->size(); ++i) put_f32_le(out, static_cast<float>((*p)[i]));
            }
        }
        return out;
    }

    // Fills parameters from bytes; the stack must already have the matching
    // architecture (the format carries tags and payloads, not shapes).
    void deserialize(const std::vector<std::uint8_t>& bytes) {
        if (bytes.size() < 7 || bytes[0] != 'D' || bytes[1] != 'N' || bytes[2] != 'E' || bytes[3] != 'T') {
            throw format_error("bad DNET magic");
        }
        if (bytes[4] != 1) throw format_error("unsupported DNET version " + std::to_string(int(bytes[4])));
        const std::size_t count = std::size_t(bytes[5]) | (std::size_t(bytes[6]) << 8);
        if (count != layers_.size()) {
            throw format_error("DNET layer count " + std::to_string(count) + " != stack depth " +
                               std::to_string(layers_.size()));
        }
        std::size_t pos = 7;
        for (auto& l : layers_) {
            if (pos >= bytes.size()) throw format_error("DNET truncated at layer tag");
            if (bytes[pos] != static_cast<std::uint8_t>(l->tag())) {
                throw format_error("DNET tag mismatch: file " + std::to_string(int(bytes[pos])) + " vs stack " +
                                   std::string(l->name()));
            }
            ++pos;
            for (Tensor<T>* p : l->params()) {
                const std::size_t need = 4 * static_cast<std::size_t>(p->size());
                if (pos + need > bytes.size()) throw format_error("DNET truncated in parameter payload");
                for (index_t i = 0; i < p->size(); ++i, pos += 4) (*p)[i] = static_cast<T>(get_f32_le(&bytes[pos]));
            }
        }
        if (pos != bytes.size()) throw format_error("DNET trailing bytes");
    }

    void save(const std::filesystem::path& path) {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw io_error("cannot write " + path.string());
        const auto bytes = serialize();
        f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw io_error("short write to " + path.string());
    }

    void load(const std::filesystem::path& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw io_error("cannot open " + path.string());
        std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        deserialize(bytes);
    }

  private:
    static void put_f32_le(std::vector<std::uint8_t>& out, float v) {
        std::uint32_t u;
        std::memcpy(&u, &v, 4);
        out.push_back(std::uint8_t(u));
        out.push_back(std::uint8_t(u >> 8));
        out.push_back(std::uint8_t(u >> 16));
        out.push_back(std::uint8_t(u >> 24));
    }

    static float get_f32_le(const std::uint8_t* p) {
        const std::uint32_t u = std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
                                (std::uint32_t(p[3]) << 24);
        float v;
        std::memcpy(&v, &u, 4);
        return v;
    }

    void check_batch(const Tensor<T>& x) const {
        bool ok = x.rank() == input_shape_.rank() + 1;
        for (int i = 0; ok && i < input_shape_.rank(); ++i) ok = x.dim(i + 1) == input_shape_[i];
        if (!ok) {
            throw shape_error("stack forward: batch " + x.shape().str() + " vs per-sample input " +
                              input_shape_.str());
        }
    }

    void refresh_input_grad_flags() {
        for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i]->set_need_input_grad(i != 0);
    }

    Shape input_shape_;
    std::vector<Shape> shapes_;
    std::vector<std::unique_ptr<Layer<T>>> layers_;
    bool trained_forward_ = false;
};

}  // namespace digitriad
