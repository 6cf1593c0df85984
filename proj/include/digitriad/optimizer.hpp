#pragma once

#include <vector>

#include "digitriad/errors.hpp"
#include "digitriad/tensor.hpp"

namespace digitriad {

// SGD with classical momentum: v <- mu*v - eta*g; theta <- theta + v.
template <class T>
class SgdMomentum {
  public:
    SgdMomentum(double learning_rate, double momentum) : lr_(learning_rate), momentum_(momentum) {
        if (learning_rate < 0) throw domain_error("learning rate must be >= 0");
        if (momentum < 0 || momentum >= 1) throw domain_error("momentum must be in [0,1)");
    }

    void attach(const std::vector<Tensor<T>*>& params) {
        velocity_.clear();
        velocity_.reserve(params.size());
        for (Tensor<T>* p : params) velocity_.emplace_back(p->shape());
    }

    void step(const std::vector<Tensor<T>*>& params, const std::vector<Tensor<T>*>& grads) {
        if (velocity_.empty()) throw state_error("optimizer step before attach");
        if (params.size() != grads.size() || params.size() != velocity_.size()) {
            throw shape_error("optimizer: param/grad/velocity list lengths differ");
        }
        const T lr = static_cast<T>(lr_);
        const T mu = static_cast<T>(momentum_);
        for (std::size_t k = 0; k < params.size(); ++k) {
            Tensor<T>& p = *params[k];
            const Tensor<T>& g = *grads[k];
            Tensor<T>& v = velocity_[k];
            if (p.shape() != g.shape() || p.shape() != v.shape()) {
                throw shape_error("optimizer: gradient shape " + g.shape().str() + " vs parameter " +
                                  p.shape().str());
            }
            T* pd = p.data();
            const T* gd = g.data();
            T* vd = v.data();
            const index_t n = p.size();
            for (index_t i = 0; i < n; ++i) {
                vd[i] = mu * vd[i] - lr * gd[i];
                pd[i] += vd[i];
            }
        }
    }

    double learning_rate() const { return lr_; }
    void set_learning_rate(double lr) { lr_ = lr; }
    double momentum() const { return momentum_; }

  private:
    double lr_;
    double momentum_;
    std::vector<Tensor<T>> velocity_;
};

}  // namespace digitriad
