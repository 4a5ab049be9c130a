#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string>

#include "fact/gradcore/tensor.hpp"

namespace fact::gradcore {

/// Compares analytic gradients against central finite differences.
///
/// `build` must construct the loss from scratch on the given graph, reading
/// the current parameter values, and return the scalar loss node. Returns
/// the maximum over all parameter coordinates of
/// |analytic - numeric| / max(1, |analytic|, |numeric|).
inline double grad_check(const std::function<Tensor*(Graph&)>& build,
                         std::span<Tensor* const> params, double eps) {
  if (!(eps > 0.0 && eps <= 1e-2))
    throw validation_error("grad_check: eps must be in (0, 1e-2]");

  auto loss_value = [&] {
    Graph g;
    Tensor* loss = build(g);
    if (!loss->is_scalar())
      throw validation_error("grad_check: build must return a scalar loss");
    if (!std::isfinite(loss->value[0]))
      throw numeric_error("grad_check: non-finite loss");
    return loss->value[0];
  };

  for (Tensor* p : params) p->zero_grad();
  {
    Graph g;
    Tensor* loss = build(g);
    g.backward(loss);
  }

  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor* p = params[pi];
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + eps;
      const double up = loss_value();
      p->value[i] = saved - eps;
      const double down = loss_value();
      p->value[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw numeric_error("grad_check: non-finite loss perturbing parameter " +
                            std::to_string(pi) + " coordinate " +
                            std::to_string(i));
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = p->grad[i];
      const double rel = std::abs(analytic - numeric) /
                         std::max({1.0, std::abs(analytic), std::abs(numeric)});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace fact::gradcore
