#pragma once

#include <cmath>
#include <span>
#include <unordered_map>
#include <vector>

#include "fact/gradcore/tensor.hpp"

namespace fact::gradcore {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected adaptive-moment optimizer. Moment buffers are keyed by
/// parameter identity and created lazily, zero initialized. A parameter
/// with any non-finite gradient coordinate is skipped for that step and a
/// warning counter incremented. Gradients are zeroed after each step.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(std::span<Tensor* const> params) {
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (Tensor* p : params) {
      Moments& mo = state_[p];
      if (mo.m.size() != p->value.size()) {
        mo.m.assign(p->value.size(), 0.0);
        mo.v.assign(p->value.size(), 0.0);
      }
      bool finite = true;
      for (double g : p->grad)
        if (!std::isfinite(g)) { finite = false; break; }
      if (!finite) {
        ++skipped_;
        p->zero_grad();
        continue;
      }
      for (std::size_t i = 0; i < p->value.size(); ++i) {
        const double g = p->grad[i];
        mo.m[i] = cfg_.beta1 * mo.m[i] + (1.0 - cfg_.beta1) * g;
        mo.v[i] = cfg_.beta2 * mo.v[i] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = mo.m[i] / bc1;
        const double vhat = mo.v[i] / bc2;
        p->value[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
      p->zero_grad();
    }
  }

  long step_count() const { return step_; }
  long skipped_updates() const { return skipped_; }

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  AdamConfig cfg_;
  std::unordered_map<Tensor*, Moments> state_;
  long step_ = 0;
  long skipped_ = 0;
};

}  // namespace fact::gradcore
