#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "digitriad/errors.hpp"
#include "digitriad/rng.hpp"
#include "digitriad/tensor.hpp"

namespace digitriad {

enum class Mode { train, eval };

// ((N + 2P - F)/S) + 1, the activation-map size for one spatial dimension.
inline index_t conv_out_dim(index_t n, index_t p, index_t f, index_t s) {
    if (s < 1 || f < 1) throw geometry_error("filter and stride must be >= 1");
    const index_t span = n + 2 * p - f;
    if (span < 0) throw geometry_error("filter " + std::to_string(f) + " exceeds padded input " +
                                       std::to_string(n + 2 * p));
    if (span % s != 0) throw geometry_error("(" + std::to_string(n) + "+2*" + std::to_string(p) + "-" +
                                            std::to_string(f) + ") not divisible by stride " + std::to_string(s));
    return span / s + 1;
}

template <class T>
void fill_uniform(Tensor<T>& t, T lo, T hi, Rng& rng) {
    for (index_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
}

template <class T>
void he_uniform(Tensor<T>& t, index_t fan_in, Rng& rng) {
    const T limit = static_cast<T>(std::sqrt(6.0 / double(fan_in)));
    fill_uniform(t, -limit, limit, rng);
}

template <class T>
void glorot_uniform(Tensor<T>& t, index_t fan_in, index_t fan_out, Rng& rng) {
    const T limit = static_cast<T>(std::sqrt(6.0 / double(fan_in + fan_out)));
    fill_uniform(t, -limit, limit, rng);
}

enum class LayerTag : std::uint8_t { dense = 1, conv2d = 2, relu = 3, maxpool = 4, dropout = 5, flatten = 6 };

// Differentiable stage of a sequential network. forward in train mode caches
// whatever backward needs; backward fills the parameter gradients and returns
// the input gradient (skipped when need_input_grad is off, e.g. layer 0).
template <class T>
class Layer {
  public:
    virtual ~Layer() = default;
    virtual std::string_view name() const = 0;
    virtual LayerTag tag() const = 0;
    // Per-sample output shape; validates wiring and geometry.
    virtual Shape output_shape(const Shape& in) const = 0;
    virtual Tensor<T> forward(const Tensor<T>& x, Mode mode, Rng* rng) = 0;
    virtual Tensor<T> backward(const Tensor<T>& dy) = 0;
    virtual std::vector<Tensor<T>*> params() { return {}; }
    virtual std::vector<Tensor<T>*> grads() { return {}; }
    virtual std::unique_ptr<Layer<T>> clone() const = 0;

    void set_need_input_grad(bool v) { need_input_grad_ = v; }
    bool need_input_grad() const { return need_input_grad_; }

  protected:
    void require_cache(bool has, const char* what) const {
        if (!has) throw state_error(std::string(what) + ": backward before forward");
    }
    bool need_input_grad_ = true;
};

// Fully connected: y = x W + b with W [in,out].
template <class T>
class DenseLayer final : public Layer<T> {
  public:
    DenseLayer(index_t in, index_t out)
        : w_{Shape{in, out}}, b_{Shape{out}}, dw_{Shape{in, out}}, db_{Shape{out}} {}

    std::string_view name() const override { return "dense"; }
    LayerTag tag() const override { return LayerTag::dense; }

    Shape output_shape(const Shape& in) const override {
        if (in.rank() != 1 || in[0] != w_.dim(0)) {
            throw shape_error("dense expects input [" + std::to_string(w_.dim(0)) + "], got " + in.str());
        }
        return Shape{w_.dim(1)};
    }

    Tensor<T> forward(const Tensor<T>& x, Mode mode, Rng*) override {
        if (x.rank() != 2 || x.dim(1) != w_.dim(0)) {
            throw shape_error("dense forward: " + x.shape().str() + " vs W " + w_.shape().str());
        }
        const index_t n = x.dim(0), in = w_.dim(0), out = w_.dim(1);
        Tensor<T> y{Shape{n, out}};
        gemm_nn(x.data(), w_.data(), y.data(), n, in, out);
        for (index_t i = 0; i < n; ++i) {
            T* row = y.data() + i * out;
            for (index_t j = 0; j < out; ++j) row[j] += b_[j];
        }
        if (mode == Mode::train) {
            x_ = x;
            has_cache_ = true;
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) override {
        this->require_cache(has_cache_, "dense");
        has_cache_ = false;
        const index_t n = x_.dim(0), in = w_.dim(0), out = w_.dim(1);
        if (dy.rank() != 2 || dy.dim(0) != n || dy.dim(1) != out) {
            throw shape_error("dense backward: dy " + dy.shape().str());
        }
        // dW = x^T dy, db = column sums of dy.
        gemm_tn(x_.data(), dy.data(), dw_.data(), in, n, out);
        db_.fill(T(0));
        for (index_t i = 0; i < n; ++i) {
            const T* row = dy.data() + i * out;
            for (index_t j = 0; j < out; ++j) db_[j] += row[j];
        }
        if (!this->need_input_grad_) return Tensor<T>{};
        // dx = dy W^T.
        Tensor<T> wt{Shape{out, in}};
        for (index_t i = 0; i < in; ++i) {
            for (index_t j = 0; j < out; ++j) wt.at(j, i) = w_.at(i, j);
        }
        Tensor<T> dx{Shape{n, in}};
        gemm_nn(dy.data(), wt.data(), dx.data(), n, out, in);
        return dx;
    }

    std::vector<Tensor<T>*> params() override { return {&w_, &b_}; }
    std::vector<Tensor<T>*> grads() override { return {&dw_, &db_}; }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<DenseLayer>(*this); }

    Tensor<T>& weights() { return w_; }
    Tensor<T>& bias() { return b_; }

  private:
    Tensor<T> w_, b_, dw_, db_;
    Tensor<T> x_;
    bool has_cache_ = false;
};

enum class ConvImpl { im2col, direct };

// 2-d convolution over [n,h,w,c] with filters [f,kh,kw,c], zero padding.
// The direct nested-loop path is the reference; the im2col+matmul path is the
// default and must agree with it to 1e-6.
template <class T>
class Conv2DLayer final : public Layer<T> {
  public:
    Conv2DLayer(index_t in_channels, index_t filters, index_t kh, index_t kw, index_t stride = 1, index_t padding = 0,
                ConvImpl impl = ConvImpl::im2col)
        : filters_{Shape{filters, kh, kw, in_channels}},
          biases_{Shape{filters}},
          dfilters_{Shape{filters, kh, kw, in_channels}},
          dbiases_{Shape{filters}},
          stride_(stride),
          padding_(padding),
          impl_(impl) {
        if (kh < 1 || kw < 1) throw geometry_error("filter dims must be >= 1");
        if (stride < 1) throw geometry_error("stride must be >= 1");
        if (padding < 0) throw geometry_error("padding must be >= 0");
    }

    std::string_view name() const override { return "conv2d"; }
    LayerTag tag() const override { return LayerTag::conv2d; }

    Shape output_shape(const Shape& in) const override {
        if (in.rank() != 3 || in[2] != filters_.dim(3)) {
            throw shape_error("conv2d expects [h,w," + std::to_string(filters_.dim(3)) + "], got " + in.str());
        }
        const index_t oh = conv_out_dim(in[0], padding_, filters_.dim(1), stride_);
        const index_t ow = conv_out_dim(in[1], padding_, filters_.dim(2), stride_);
        return Shape{oh, ow, filters_.dim(0)};
    }

    Tensor<T> forward(const Tensor<T>& x, Mode mode, Rng*) override {
        check_input(x);
        const Geometry g = geometry(x);
        Tensor<T> y = impl_ == ConvImpl::im2col ? forward_im2col(x, g) : forward_direct(x, g);
        if (mode == Mode::train) {
            x_ = x;
            has_cache_ = true;
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) override {
        this->require_cache(has_cache_, "conv2d");
        has_cache_ = false;
        const Geometry g = geometry(x_);
        if (dy.rank() != 4 || dy.dim(0) != g.n || dy.dim(1) != g.oh || dy.dim(2) != g.ow || dy.dim(3) != g.f) {
            throw shape_error("conv2d backward: dy " + dy.shape().str());
        }
        return impl_ == ConvImpl::im2col ? backward_im2col(dy, g) : backward_direct(dy, g);
    }

    std::vector<Tensor<T>*> params() override { return {&filters_, &biases_}; }
    std::vector<Tensor<T>*> grads() override { return {&dfilters_, &dbiases_}; }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Conv2DLayer>(*this); }

    Tensor<T>& filters() { return filters_; }
    Tensor<T>& biases() { return biases_; }
    void set_impl(ConvImpl impl) { impl_ = impl; }
    index_t stride() const { return stride_; }
    index_t padding() const { return padding_; }

  private:
    struct Geometry {
        index_t n, h, w, c, f, kh, kw, oh, ow, k;  // k = kh*kw*c patch length
    };

    void check_input(const Tensor<T>& x) const {
        if (x.rank() != 4 || x.dim(3) != filters_.dim(3)) {
            throw shape_error("conv2d forward: " + x.shape().str() + " vs filters " + filters_.shape().str());
        }
    }

    Geometry geometry(const Tensor<T>& x) const {
        Geometry g;
        g.n = x.dim(0);
        g.h = x.dim(1);
        g.w = x.dim(2);
        g.c = x.dim(3);
        g.f = filters_.dim(0);
        g.kh = filters_.dim(1);
        g.kw = filters_.dim(2);
        g.oh = conv_out_dim(g.h, padding_, g.kh, stride_);
        g.ow = conv_out_dim(g.w, padding_, g.kw, stride_);
        g.k = g.kh * g.kw * g.c;
        return g;
    }

    // Patch rows ordered (n,oy,ox); columns ordered (dy,dx,c) to match the
    // row-major filter layout.
    void im2col(const Tensor<T>& x, const Geometry& g, std::vector<T>& cols) const {
        cols.assign(static_cast<std::size_t>(g.n * g.oh * g.ow * g.k), T(0));
#pragma omp parallel for schedule(static)
        for (index_t b = 0; b < g.n; ++b) {
            T* crow = cols.data() + b * g.oh * g.ow * g.k;
            for (index_t oy = 0; oy < g.oh; ++oy) {
                for (index_t ox = 0; ox < g.ow; ++ox) {
                    for (index_t dy = 0; dy < g.kh; ++dy) {
                        const index_t iy = oy * stride_ + dy - padding_;
                        for (index_t dx = 0; dx < g.kw; ++dx) {
                            const index_t ix = ox * stride_ + dx - padding_;
                            if (iy >= 0 && iy < g.h && ix >= 0 && ix < g.w) {
                                const T* src = x.data() + ((b * g.h + iy) * g.w + ix) * g.c;
                                for (index_t c = 0; c < g.c; ++c) crow[(dy * g.kw + dx) * g.c + c] = src[c];
                            }
                        }
                    }
                    crow += g.k;
                }
            }
        }
    }

    Tensor<T> forward_im2col(const Tensor<T>& x, const Geometry& g) {
        im2col(x, g, cols_);
        // F^T [k,f] so the product streams contiguous filter columns.
        std::vector<T> ft(static_cast<std::size_t>(g.k * g.f));
        for (index_t f = 0; f < g.f; ++f) {
            for (index_t q = 0; q < g.k; ++q) ft[static_cast<std::size_t>(q * g.f + f)] = filters_[f * g.k + q];
        }
        Tensor<T> y{Shape{g.n, g.oh, g.ow, g.f}};
        const index_t rows = g.n * g.oh * g.ow;
        gemm_nn(cols_.data(), ft.data(), y.data(), rows, g.k, g.f);
#pragma omp parallel for schedule(static)
        for (index_t r = 0; r < rows; ++r) {
            T* row = y.data() + r * g.f;
            for (index_t f = 0; f < g.f; ++f) row[f] += biases_[f];
        }
        return y;
    }

    Tensor<T> backward_im2col(const Tensor<T>& dy, const Geometry& g) {
        const index_t rows = g.n * g.oh * g.ow;
        dbiases_.fill(T(0));
        for (index_t r = 0; r < rows; ++r) {
            const T* row = dy.data() + r * g.f;
            for (index_t f = 0; f < g.f; ++f) dbiases_[f] += row[f];
        }
        // dF = dy^T cols.
        gemm_tn(dy.data(), cols_.data(), dfilters_.data(), g.f, rows, g.k);
        if (!this->need_input_grad_) return Tensor<T>{};
        // dcols = dy F, scattered back through the patch map.
        dcols_.assign(static_cast<std::size_t>(rows * g.k), T(0));
        gemm_nn(dy.data(), filters_.data(), dcols_.data(), rows, g.f, g.k);
        Tensor<T> dx{Shape{g.n, g.h, g.w, g.c}};
#pragma omp parallel for schedule(static)
        for (index_t b = 0; b < g.n; ++b) {
            const T* crow = dcols_.data() + b * g.oh * g.ow * g.k;
            for (index_t oy = 0; oy < g.oh; ++oy) {
                for (index_t ox = 0; ox < g.ow; ++ox) {
                    for (index_t dyk = 0; dyk < g.kh; ++dyk) {
                        const index_t iy = oy * stride_ + dyk - padding_;
                        for (index_t dxk = 0; dxk < g.kw; ++dxk) {
                            const index_t ix = ox * stride_ + dxk - padding_;
                            if (iy >= 0 && iy < g.h && ix >= 0 && ix < g.w) {
                                T* dst = dx.data() + ((b * g.h + iy) * g.w + ix) * g.c;
                                const T* src = crow + (dyk * g.kw + dxk) * g.c;
                                for (index_t c = 0; c < g.c; ++c) dst[c] += src[c];
                            }
                        }
                    }
                    crow += g.k;
                }
            }
        }
        return dx;
    }

    Tensor<T> forward_direct(const Tensor<T>& x, const Geometry& g) const {
        Tensor<T> y{Shape{g.n, g.oh, g.ow, g.f}};
        for (index_t b = 0; b < g.n; ++b) {
            for (index_t oy = 0; oy < g.oh; ++oy) {
                for (index_t ox = 0; ox < g.ow; ++ox) {
                    for (index_t f = 0; f < g.f; ++f) {
                        T acc = biases_[f];
                        for (index_t dy = 0; dy < g.kh; ++dy) {
                            const index_t iy = oy * stride_ + dy - padding_;
                            if (iy < 0 || iy >= g.h) continue;
                            for (index_t dx = 0; dx < g.kw; ++dx) {
                                const index_t ix = ox * stride_ + dx - padding_;
                                if (ix < 0 || ix >= g.w) continue;
                                for (index_t c = 0; c < g.c; ++c) {
                                    acc += x.at(b, iy, ix, c) * filters_.at(f, dy, dx, c);
                                }
                            }
                        }
                        y.at(b, oy, ox, f) = acc;
                    }
                }
            }
        }
        return y;
    }

    Tensor<T> backward_direct(const Tensor<T>& dy, const Geometry& g) {
        dfilters_.fill(T(0));
        dbiases_.fill(T(0));
        Tensor<T> dx{Shape{g.n, g.h, g.w, g.c}};
        for (index_t b = 0; b < g.n; ++b) {
            for (index_t oy = 0; oy < g.oh; ++oy) {
                for (index_t ox = 0; ox < g.ow; ++ox) {
                    for (index_t f = 0; f < g.f; ++f) {
                        const T gout = dy.at(b, oy, ox, f);
                        dbiases_[f] += gout;
                        for (index_t dyk = 0; dyk < g.kh; ++dyk) {
                            const index_t iy = oy * stride_ + dyk - padding_;
                            if (iy < 0 || iy >= g.h) continue;
                            for (index_t dxk = 0; dxk < g.kw; ++dxk) {
                                const index_t ix = ox * stride_ + dxk - padding_;
                                if (ix < 0 || ix >= g.w) continue;
                                for (index_t c = 0; c < g.c; ++c) {
                                    dfilters_.at(f, dyk, dxk, c) += x_.at(b, iy, ix, c) * gout;
                                    dx.at(b, iy, ix, c) += filters_.at(f, dyk, dxk, c) * gout;
                                }
                            }
                        }
                    }
                }
            }
        }
        if (!this->need_input_grad_) return Tensor<T>{};
        return dx;
    }

    Tensor<T> filters_, biases_, dfilters_, dbiases_;
    index_t stride_, padding_;
    ConvImpl impl_;
    Tensor<T> x_;
    std::vector<T> cols_, dcols_;
    bool has_cache_ = false;
};

// Non-overlapping window maximum; channel depth unchanged.
template <class T>
class MaxPool2DLayer final : public Layer<T> {
  public:
    explicit MaxPool2DLayer(index_t pool = 2, index_t stride = 2) : pool_(pool), stride_(stride) {
        if (pool < 1 || stride < 1) throw geometry_error("pool and stride must be >= 1");
    }

    std::string_view name() const override { return "maxpool"; }
    LayerTag tag() const override { return LayerTag::maxpool; }

    Shape output_shape(const Shape& in) const override {
        if (in.rank() != 3) throw shape_error("maxpool expects [h,w,c], got " + in.str());
        return Shape{conv_out_dim(in[0], 0, pool_, stride_), conv_out_dim(in[1], 0, pool_, stride_), in[2]};
    }

    Tensor<T> forward(const Tensor<T>& x, Mode mode, Rng*) override {
        if (x.rank() != 4) throw shape_error("maxpool forward: " + x.shape().str());
        const index_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
        const index_t oh = conv_out_dim(h, 0, pool_, stride_);
        const index_t ow = conv_out_dim(w, 0, pool_, stride_);
        Tensor<T> y{Shape{n, oh, ow, c}};
        argmax_.assign(static_cast<std::size_t>(y.size()), 0);
        in_shape_ = x.shape();
#pragma omp parallel for schedule(static)
        for (index_t b = 0; b < n; ++b) {
            for (index_t oy = 0; oy < oh; ++oy) {
                for (index_t ox = 0; ox < ow; ++ox) {
                    for (index_t ch = 0; ch < c; ++ch) {
                        index_t best = ((b * h + oy * stride_) * w + ox * stride_) * c + ch;
                        T bestv = x[best];
                        for (index_t py = 0; py < pool_; ++py) {
                            for (index_t px = 0; px < pool_; ++px) {
                                const index_t idx = ((b * h + oy * stride_ + py) * w + ox * stride_ + px) * c + ch;
                                if (x[idx] > bestv) {
                                    bestv = x[idx];
                                    best = idx;
                                }
                            }
                        }
                        const index_t o = ((b * oh + oy) * ow + ox) * c + ch;
                        y[o] = bestv;
                        argmax_[static_cast<std::size_t>(o)] = best;
                    }
                }
            }
        }
        has_cache_ = mode == Mode::train;
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) override {
        this->require_cache(has_cache_, "maxpool");
        has_cache_ = false;
        if (static_cast<std::size_t>(dy.size()) != argmax_.size()) {
            throw shape_error("maxpool backward: dy " + dy.shape().str());
        }
        Tensor<T> dx{in_shape_};
        for (index_t o = 0; o < dy.size(); ++o) dx[argmax_[static_cast<std::size_t>(o)]] += dy[o];
        return dx;
    }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<MaxPool2DLayer>(*this); }

  private:
    index_t pool_, stride_;
    Shape in_shape_;
    std::vector<index_t> argmax_;
    bool has_cache_ = false;
};

// max(0,x); the subgradient at exactly 0 is taken as 0.
template <class T>
class ReluLayer final : public Layer<T> {
  public:
    std::string_view name() const override { return "relu"; }
    LayerTag tag() const override { return LayerTag::relu; }

    Shape output_shape(const Shape& in) const override { return in; }

    Tensor<T> forward(const Tensor<T>& x, Mode mode, Rng*) override {
        Tensor<T> y = x.map([](T v) { return v > T(0) ? v : T(0); });
        if (mode == Mode::train) {
            x_ = x;
            has_cache_ = true;
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) override {
        this->require_cache(has_cache_, "relu");
        has_cache_ = false;
        if (dy.shape() != x_.shape()) throw shape_error("relu backward: dy " + dy.shape().str());
        Tensor<T> dx{x_.shape()};
        for (index_t i = 0; i < dx.size(); ++i) dx[i] = x_[i] > T(0) ? dy[i] : T(0);
        return dx;
    }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<ReluLayer>(*this); }

  private:
    Tensor<T> x_;
    bool has_cache_ = false;
};

// Inverted dropout: in train mode each element is zeroed with probability p
// and survivors are scaled by 1/(1-p); eval mode is the identity and draws
// nothing from the stream.
template <class T>
class DropoutLayer final : public Layer<T> {
  public:
    explicit DropoutLayer(double rate) : rate_(rate) {
        if (rate < 0.0 || rate >= 1.0) throw domain_error("dropout rate must be in [0,1)");
    }

    std::string_view name() const override { return "dropout"; }
    LayerTag tag() const override { return LayerTag::dropout; }

    Shape output_shape(const Shape& in) const override { return in; }

    Tensor<T> forward(const Tensor<T>& x, Mode mode, Rng* rng) override {
        if (mode == Mode::eval) return x;
        if (rng == nullptr) throw state_error("dropout train-mode forward needs an rng");
        const T keep_scale = static_cast<T>(1.0 / (1.0 - rate_));
        mask_.assign(static_cast<std::size_t>(x.size()), T(0));
        Tensor<T> y{x.shape()};
        for (index_t i = 0; i < x.size(); ++i) {
            const T m = rng->next_double() < rate_ ? T(0) : keep_scale;
            mask_[static_cast<std::size_t>(i)] = m;
            y[i] = x[i] * m;
        }
        has_cache_ = true;
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) override {
        this->require_cache(has_cache_, "dropout");
        has_cache_ = false;
        if (static_cast<std::size_t>(dy.size()) != mask_.size()) {
            throw shape_error("dropout backward: dy " + dy.shape().str());
        }
        Tensor<T> dx{dy.shape()};
        for (index_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * mask_[static_cast<std::size_t>(i)];
        return dx;
    }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<DropoutLayer>(*this); }

    double rate() const { return rate_; }

  private:
    double rate_;
    std::vector<T> mask_;
    bool has_cache_ = false;
};

// [n,d1,d2,d3] -> [n,d1*d2*d3]; pure reshape, data order untouched.
template <class T>
class FlattenLayer final : public Layer<T> {
  public:
    std::string_view name() const override { return "flatten"; }
    LayerTag tag() const override { return LayerTag::flatten; }

    Shape output_shape(const Shape& in) const override { return Shape{in.count()}; }

    Tensor<T> forward(const Tensor<T>& x, Mode mode, Rng*) override {
        in_shape_ = x.shape();
        has_cache_ = mode == Mode::train;
        return x.reshape(Shape{x.dim(0), x.size() / x.dim(0)});
    }

    Tensor<T> backward(const Tensor<T>& dy) override {
        this->require_cache(has_cache_, "flatten");
        has_cache_ = false;
        return dy.reshape(in_shape_);
    }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<FlattenLayer>(*this); }

  private:
    Shape in_shape_;
    bool has_cache_ = false;
};

}  // namespace digitriad
