#pragma once

#include <array>
#include <random>
#include <string>
#include <vector>

#include "fact/gradcore/tensor.hpp"

namespace fact::models {

using gradcore::Graph;
using gradcore::Nonlinearity;
using gradcore::Tensor;

enum class EncoderKind { Linear, Tree, Hybrid };

inline std::string encoder_kind_name(EncoderKind k) {
  switch (k) {
    case EncoderKind::Linear: return "L";
    case EncoderKind::Tree: return "T";
    case EncoderKind::Hybrid: return "H";
  }
  return "?";
}

inline EncoderKind encoder_kind_from_name(const std::string& s) {
  if (s == "L") return EncoderKind::Linear;
  if (s == "T") return EncoderKind::Tree;
  if (s == "H") return EncoderKind::Hybrid;
  throw validation_error("unknown encoder kind: " + s);
}

/// Token sequence with its dependency tree. head_of[i] is the parent index
/// of token i, -1 for the root. target_index is the predicate whose
/// factuality is judged.
struct SentenceInput {
  std::vector<std::string> tokens;
  std::vector<int> head_of;
  std::size_t target_index = 0;
};

/// Checks head_of is a single-rooted acyclic in-range tree.
inline void validate_tree(const std::vector<int>& head_of) {
  const int n = static_cast<int>(head_of.size());
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    if (head_of[i] == -1) {
      ++roots;
    } else if (head_of[i] < 0 || head_of[i] >= n) {
      throw validation_error("tree: head index out of range at token " +
                             std::to_string(i));
    }
  }
  if (roots != 1)
    throw validation_error("tree: expected exactly one root, found " +
                           std::to_string(roots));
  for (int i = 0; i < n; ++i) {
    int cur = i, steps = 0;
    while (cur != -1) {
      cur = head_of[static_cast<std::size_t>(cur)];
      if (++steps > n)
        throw validation_error("tree: cycle reachable from token " +
                               std::to_string(i));
    }
  }
}

/// The four gate weight matrices and biases of one (layer, direction) cell.
/// Each W is hidden x (hidden + input_width) and acts on [h; x].
struct CellParams {
  Tensor Wf, Wi, Wo, Wc;
  Tensor bf, bi, bo, bc;

  CellParams() = default;
  CellParams(std::size_t hidden, std::size_t input)
      : Wf({hidden, hidden + input}),
        Wi({hidden, hidden + input}),
        Wo({hidden, hidden + input}),
        Wc({hidden, hidden + input}),
        bf({hidden}),
        bi({hidden}),
        bo({hidden}),
        bc({hidden}) {}

  std::vector<Tensor*> params() {
    return {&Wf, &Wi, &Wo, &Wc, &bf, &bi, &bo, &bc};
  }
};

/// Stacked bidirectional encoder parameters. Layer 1 consumes embeddings of
/// width `input`; deeper layers consume the concatenated bidirectional
/// states of the layer below (width 2 * hidden).
struct EncoderParams {
  std::size_t layers = 2;
  std::size_t hidden = 64;
  std::size_t input = 50;
  Nonlinearity g = Nonlinearity::Tanh;
  // cells[l][d], d: 0 = forward/upward, 1 = backward/downward
  std::vector<std::array<CellParams, 2>> cells;

  EncoderParams() = default;

  EncoderParams(std::size_t layers_, std::size_t hidden_, std::size_t input_,
                Nonlinearity g_)
      : layers(layers_), hidden(hidden_), input(input_), g(g_) {
    for (std::size_t l = 0; l < layers; ++l) {
      const std::size_t in = l == 0 ? input : 2 * hidden;
      cells.push_back({CellParams(hidden, in), CellParams(hidden, in)});
    }
  }

  void init_uniform(double range, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-range, range);
    for (Tensor* t : params())
      for (double& v : t->value) v = u(rng);
  }

  std::vector<Tensor*> params() {
    std::vector<Tensor*> out;
    for (auto& layer : cells)
      for (auto& cell : layer)
        for (Tensor* t : cell.params()) out.push_back(t);
    return out;
  }
};

/// Hidden states per layer, direction, and position.
struct EncoderStates {
  // h[layer][dir][t]
  std::vector<std::array<std::vector<Tensor*>, 2>> h;

  /// [h_forward; h_backward] of the final layer at position t.
  Tensor* final_state(Graph& g, std::size_t t) const {
    const auto& top = h.back();
    return g.concat(top[0][t], top[1][t]);
  }
};

namespace detail {

inline void check_finite(const Tensor* t, const char* what, std::size_t pos,
                         std::size_t layer, std::size_t dir) {
  if (!t->value_finite())
    throw numeric_error(std::string("encoder: non-finite ") + what +
                        " at position " + std::to_string(pos) + ", layer " +
                        std::to_string(layer) + ", direction " +
                        std::to_string(dir));
}

/// One cell step with an arbitrary predecessor set (shared by the chain and
/// tree recurrences; the chain is the singleton/empty special case).
inline std::pair<Tensor*, Tensor*> cell_step(
    Graph& g, CellParams& cell, Nonlinearity nl, Tensor* x,
    const std::vector<Tensor*>& prev_h, const std::vector<Tensor*>& prev_c,
    std::size_t hidden) {
  Tensor* h_hat = g.sum_over(std::span<Tensor* const>(prev_h), {hidden});
  Tensor* hx = g.concat(h_hat, x);
  Tensor* i = g.pointwise(Nonlinearity::Sigmoid, g.affine(&cell.Wi, hx, &cell.bi));
  Tensor* o = g.pointwise(Nonlinearity::Sigmoid, g.affine(&cell.Wo, hx, &cell.bo));
  Tensor* c_hat = g.pointwise(nl, g.affine(&cell.Wc, hx, &cell.bc));
  std::vector<Tensor*> c_terms{g.hadamard(i, c_hat)};
  for (std::size_t k = 0; k < prev_h.size(); ++k) {
    Tensor* hk_x = g.concat(prev_h[k], x);
    Tensor* f_k =
        g.pointwise(Nonlinearity::Sigmoid, g.affine(&cell.Wf, hk_x, &cell.bf));
    c_terms.push_back(g.hadamard(f_k, prev_c[k]));
  }
  Tensor* c = g.sum_over(std::span<Tensor* const>(c_terms), {hidden});
  Tensor* h = g.hadamard(o, g.pointwise(nl, c));
  return {h, c};
}

/// Bidirectional input to layer l: the embeddings for l = 0, otherwise the
/// concatenated forward/backward states of layer l - 1.
inline std::vector<Tensor*> layer_input(Graph& g, const EncoderStates& states,
                                        const std::vector<Tensor*>& x,
                                        std::size_t l) {
  if (l == 0) return x;
  std::vector<Tensor*> in;
  in.reserve(x.size());
  for (std::size_t t = 0; t < x.size(); ++t)
    in.push_back(g.concat(states.h[l - 1][0][t], states.h[l - 1][1][t]));
  return in;
}

}  // namespace detail

/// Stacked bidirectional linear-chain LSTM. Boundary predecessor states are
/// zero vectors (an empty predecessor set).
inline EncoderStates lbilstm_encode(Graph& g, EncoderParams& params,
                                    const std::vector<Tensor*>& x) {
  if (x.empty()) throw validation_error("lbilstm_encode: empty sequence");
  const std::size_t n = x.size(), H = params.hidden;
  EncoderStates states;
  states.h.resize(params.layers);
  for (std::size_t l = 0; l < params.layers; ++l) {
    std::vector<Tensor*> in = detail::layer_input(g, states, x, l);
    for (std::size_t d = 0; d < 2; ++d) {
      auto& hs = states.h[l][d];
      hs.assign(n, nullptr);
      std::vector<Tensor*> cs(n, nullptr);
      for (std::size_t step = 0; step < n; ++step) {
        const std::size_t t = d == 0 ? step : n - 1 - step;
        std::vector<Tensor*> prev_h, prev_c;
        if (step > 0) {
          const std::size_t p = d == 0 ? t - 1 : t + 1;
          prev_h.push_back(hs[p]);
          prev_c.push_back(cs[p]);
        }
        auto [h, c] =
            detail::cell_step(g, params.cells[l][d], params.g, in[t], prev_h,
                              prev_c, H);
        detail::check_finite(h, "hidden state", t, l, d);
        hs[t] = h;
        cs[t] = c;
      }
    }
  }
  return states;
}

/// Stacked bidirectional child-sum tree LSTM. The upward direction combines
/// children; the downward direction combines parents (a singleton set, empty
/// at the root). Children are combined in ascending index order.
inline EncoderStates tbilstm_encode(Graph& g, EncoderParams& params,
                                    const std::vector<Tensor*>& x,
                                    const std::vector<int>& head_of) {
  if (x.empty()) throw validation_error("tbilstm_encode: empty sequence");
  if (head_of.size() != x.size())
    throw validation_error("tbilstm_encode: head_of length mismatch");
  validate_tree(head_of);

  const std::size_t n = x.size(), H = params.hidden;
  std::vector<std::vector<std::size_t>> children(n);
  std::size_t root = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (head_of[t] == -1)
      root = t;
    else
      children[static_cast<std::size_t>(head_of[t])].push_back(t);
  }

  // Children-before-parent order for the upward pass; reversed for downward.
  std::vector<std::size_t> order;
  order.reserve(n);
  std::vector<std::size_t> stack{root};
  while (!stack.empty()) {
    std::size_t t = stack.back();
    stack.pop_back();
    order.push_back(t);
    for (std::size_t c : children[t]) stack.push_back(c);
  }
  std::reverse(order.begin(), order.end());

  EncoderStates states;
  states.h.resize(params.layers);
  for (std::size_t l = 0; l < params.layers; ++l) {
    std::vector<Tensor*> in = detail::layer_input(g, states, x, l);
    for (std::size_t d = 0; d < 2; ++d) {
      auto& hs = states.h[l][d];
      hs.assign(n, nullptr);
      std::vector<Tensor*> cs(n, nullptr);
      const bool upward = d == 0;
      for (std::size_t step = 0; step < n; ++step) {
        const std::size_t t = upward ? order[step] : order[n - 1 - step];
        std::vector<Tensor*> prev_h, prev_c;
        if (upward) {
          for (std::size_t k : children[t]) {
            prev_h.push_back(hs[k]);
            prev_c.push_back(cs[k]);
          }
        } else if (head_of[t] != -1) {
          const auto p = static_cast<std::size_t>(head_of[t]);
          prev_h.push_back(hs[p]);
          prev_c.push_back(cs[p]);
        }
        auto [h, c] = detail::cell_step(g, params.cells[l][d], params.g, in[t],
                                        prev_h, prev_c, H);
        detail::check_finite(h, "hidden state", t, l, d);
        hs[t] = h;
        cs[t] = c;
      }
    }
  }
  return states;
}

}  // namespace fact::models
