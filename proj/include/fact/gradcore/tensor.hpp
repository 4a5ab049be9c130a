#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fact/errors.hpp"

namespace fact::gradcore {

/// Dense row-major array of doubles with an accumulated gradient buffer.
///
/// Tensors are either parameters (owned by the caller, long lived) or
/// intermediate nodes (owned by a Graph, valid for one forward/backward
/// pass). Gradients accumulate across backward calls until zero_grad().
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;

  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    value.assign(size(), 0.0);
    grad.assign(size(), 0.0);
  }

  Tensor(std::vector<std::size_t> s, std::vector<double> v)
      : shape(std::move(s)), value(std::move(v)) {
    if (value.size() != size())
      throw validation_error("Tensor: value count does not match shape");
    grad.assign(size(), 0.0);
  }

  std::size_t size() const {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           std::multiplies<>());
  }

  std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  bool is_scalar() const { return size() == 1; }

  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

  bool value_finite() const {
    for (double v : value)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

enum class Nonlinearity { Sigmoid, Tanh, Relu };

inline double apply_nonlinearity(Nonlinearity k, double x) {
  switch (k) {
    case Nonlinearity::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Nonlinearity::Tanh: return std::tanh(x);
    case Nonlinearity::Relu: return x > 0.0 ? x : 0.0;
  }
  return 0.0;
}

/// Tape of primitive operations applied in order. A reverse sweep over the
/// tape propagates gradients from a scalar loss back to every operand,
/// including caller-owned parameter tensors.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Fresh intermediate tensor owned by this graph.
  Tensor* make(std::vector<std::size_t> shape) {
    nodes_.push_back(std::make_unique<Tensor>(std::move(shape)));
    return nodes_.back().get();
  }

  Tensor* make(std::vector<std::size_t> shape, std::vector<double> v) {
    nodes_.push_back(std::make_unique<Tensor>(std::move(shape), std::move(v)));
    return nodes_.back().get();
  }

  Tensor* pointwise(Nonlinearity k, Tensor* x) {
    Tensor* out = make(x->shape);
    for (std::size_t i = 0; i < x->value.size(); ++i)
      out->value[i] = apply_nonlinearity(k, x->value[i]);
    tape_.push_back([k, x, out] {
      for (std::size_t i = 0; i < x->value.size(); ++i) {
        double d = 0.0;
        switch (k) {
          case Nonlinearity::Sigmoid: {
            double y = out->value[i];
            d = y * (1.0 - y);
            break;
          }
          case Nonlinearity::Tanh: {
            double y = out->value[i];
            d = 1.0 - y * y;
            break;
          }
          case Nonlinearity::Relu:
            d = x->value[i] > 0.0 ? 1.0 : 0.0;
            break;
        }
        x->grad[i] += d * out->grad[i];
      }
    });
    return out;
  }

  /// W x + b for W: m x n, x: n, b: m.
  Tensor* affine(Tensor* W, Tensor* x, Tensor* b) {
    const std::size_t m = W->rows(), n = W->cols();
    if (x->size() != n)
      throw validation_error("affine: x has length " +
                             std::to_string(x->size()) + ", W expects " +
                             std::to_string(n));
    if (b->size() != m)
      throw validation_error("affine: b has length " +
                             std::to_string(b->size()) + ", W produces " +
                             std::to_string(m));
    Tensor* out = make({m});
    for (std::size_t i = 0; i < m; ++i) {
      double acc = b->value[i];
      const double* wrow = W->value.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) acc += wrow[j] * x->value[j];
      out->value[i] = acc;
    }
    tape_.push_back([W, x, b, out, m, n] {
      for (std::size_t i = 0; i < m; ++i) {
        const double go = out->grad[i];
        if (go == 0.0) continue;
        b->grad[i] += go;
        double* wgrow = W->grad.data() + i * n;
        const double* wrow = W->value.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) {
          wgrow[j] += go * x->value[j];
          x->grad[j] += go * wrow[j];
        }
      }
    });
    return out;
  }

  Tensor* hadamard(Tensor* a, Tensor* b) {
    if (a->shape != b->shape)
      throw validation_error("hadamard: operand shapes differ");
    Tensor* out = make(a->shape);
    for (std::size_t i = 0; i < a->value.size(); ++i)
      out->value[i] = a->value[i] * b->value[i];
    tape_.push_back([a, b, out] {
      for (std::size_t i = 0; i < a->value.size(); ++i) {
        a->grad[i] += b->value[i] * out->grad[i];
        b->grad[i] += a->value[i] * out->grad[i];
      }
    });
    return out;
  }

  Tensor* add(Tensor* a, Tensor* b) {
    if (a->shape != b->shape)
      throw validation_error("add: operand shapes differ");
    Tensor* out = make(a->shape);
    for (std::size_t i = 0; i < a->value.size(); ++i)
      out->value[i] = a->value[i] + b->value[i];
    tape_.push_back([a, b, out] {
      for (std::size_t i = 0; i < a->value.size(); ++i) {
        a->grad[i] += out->grad[i];
        b->grad[i] += out->grad[i];
      }
    });
    return out;
  }

  /// Concatenation along the single vector axis.
  Tensor* concat(Tensor* a, Tensor* b) {
    Tensor* out = make({a->size() + b->size()});
    std::copy(a->value.begin(), a->value.end(), out->value.begin());
    std::copy(b->value.begin(), b->value.end(),
              out->value.begin() + static_cast<std::ptrdiff_t>(a->size()));
    tape_.push_back([a, b, out] {
      const std::size_t na = a->size();
      for (std::size_t i = 0; i < na; ++i) a->grad[i] += out->grad[i];
      for (std::size_t i = 0; i < b->size(); ++i)
        b->grad[i] += out->grad[na + i];
    });
    return out;
  }

  /// Elementwise sum over a set of same-shape tensors. An empty set yields
  /// a zero tensor of the declared shape.
  Tensor* sum_over(std::span<Tensor* const> terms,
                   std::vector<std::size_t> shape_if_empty) {
    if (terms.empty()) return make(std::move(shape_if_empty));
    for (Tensor* t : terms)
      if (t->shape != terms[0]->shape)
        throw validation_error("sum_over: operand shapes differ");
    Tensor* out = make(terms[0]->shape);
    for (Tensor* t : terms)
      for (std::size_t i = 0; i < out->value.size(); ++i)
        out->value[i] += t->value[i];
    std::vector<Tensor*> held(terms.begin(), terms.end());
    tape_.push_back([held = std::move(held), out] {
      for (Tensor* t : held)
        for (std::size_t i = 0; i < out->value.size(); ++i)
          t->grad[i] += out->grad[i];
    });
    return out;
  }

  /// Reduce to a scalar by summation.
  Tensor* sum(Tensor* a) {
    Tensor* out = make({1});
    out->value[0] = std::accumulate(a->value.begin(), a->value.end(), 0.0);
    tape_.push_back([a, out] {
      for (std::size_t i = 0; i < a->value.size(); ++i)
        a->grad[i] += out->grad[0];
    });
    return out;
  }

  Tensor* scale(Tensor* a, double alpha) {
    Tensor* out = make(a->shape);
    for (std::size_t i = 0; i < a->value.size(); ++i)
      out->value[i] = alpha * a->value[i];
    tape_.push_back([a, out, alpha] {
      for (std::size_t i = 0; i < a->value.size(); ++i)
        a->grad[i] += alpha * out->grad[i];
    });
    return out;
  }

  /// Row r of a matrix tensor as a fresh vector node. Gradient accumulates
  /// back into the source row, which makes embedding lookups trainable.
  Tensor* row(Tensor* table, std::size_t r) {
    const std::size_t n = table->cols();
    if (r >= table->rows())
      throw validation_error("row: index " + std::to_string(r) +
                             " out of range for " +
                             std::to_string(table->rows()) + " rows");
    Tensor* out = make({n});
    std::copy(table->value.begin() + static_cast<std::ptrdiff_t>(r * n),
              table->value.begin() + static_cast<std::ptrdiff_t>((r + 1) * n),
              out->value.begin());
    tape_.push_back([table, out, r, n] {
      for (std::size_t i = 0; i < n; ++i)
        table->grad[r * n + i] += out->grad[i];
    });
    return out;
  }

  /// Smooth L1 loss with transition point 1: 0.5 d^2 for |d| < 1,
  /// |d| - 0.5 otherwise, d = pred - target.
  Tensor* smooth_l1(Tensor* pred, double target) {
    if (!pred->is_scalar())
      throw validation_error("smooth_l1: prediction must be scalar");
    const double d = pred->value[0] - target;
    Tensor* out = make({1});
    out->value[0] = std::abs(d) < 1.0 ? 0.5 * d * d : std::abs(d) - 0.5;
    tape_.push_back([pred, out, d] {
      const double dd = std::abs(d) < 1.0 ? d : (d > 0.0 ? 1.0 : -1.0);
      pred->grad[0] += dd * out->grad[0];
    });
    return out;
  }

  /// Reverse sweep from a scalar loss. Seeds the loss gradient with 1 and
  /// visits every taped operation exactly once, newest first. Parameter
  /// gradients accumulate; call zero_grad() between iterations.
  void backward(Tensor* loss) {
    if (!loss->is_scalar())
      throw validation_error("backward: loss must be a scalar");
    loss->grad[0] += 1.0;
    for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) (*it)();
  }

  std::size_t node_count() const { return nodes_.size(); }

 private:
  std::vector<std::unique_ptr<Tensor>> nodes_;
  std::vector<std::function<void()>> tape_;
};

inline double smooth_l1_value(double pred, double target) {
  const double d = pred - target;
  return std::abs(d) < 1.0 ? 0.5 * d * d : std::abs(d) - 0.5;
}

}  // namespace fact::gradcore
