#pragma once

#include <random>

#include "fact/gradcore/tensor.hpp"

namespace fact::models {

/// Two-layer regression head: V2 relu(V1 h + b1) + b2, scalar output.
struct RegressionHead {
  Tensor V1, b1, V2, b2;

  RegressionHead() = default;
  RegressionHead(std::size_t in, std::size_t mid)
      : V1({mid, in}), b1({mid}), V2({1, mid}), b2({1}) {}

  void init_uniform(double range, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-range, range);
    for (Tensor* t : params())
      for (double& v : t->value) v = u(rng);
  }

  std::vector<Tensor*> params() { return {&V1, &b1, &V2, &b2}; }

  Tensor* predict(Graph& g, Tensor* h) {
    if (h->size() != V1.cols())
      throw validation_error("regression head: input width " +
                             std::to_string(h->size()) + ", expected " +
                             std::to_string(V1.cols()));
    Tensor* mid =
        g.pointwise(gradcore::Nonlinearity::Relu, g.affine(&V1, h, &b1));
    return g.affine(&V2, mid, &b2);
  }
};

}  // namespace fact::models
