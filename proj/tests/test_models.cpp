#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <random>

#include "fact/gradcore/grad_check.hpp"
#include "fact/models/model.hpp"

using namespace fact;
using namespace fact::models;
using gradcore::Graph;
using gradcore::Nonlinearity;
using gradcore::Tensor;

namespace {

std::vector<std::string> toy_vocab() {
  return {"someone", "knew", "that", "something", "happened", "."};
}

EncoderParams random_encoder(std::size_t layers, std::size_t hidden,
                             std::size_t input, Nonlinearity g,
                             std::uint64_t seed) {
  EncoderParams p(layers, hidden, input, g);
  std::mt19937_64 rng(seed);
  p.init_uniform(0.4, rng);
  return p;
}

std::vector<Tensor*> random_inputs(Graph& g, std::size_t n, std::size_t dim,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Tensor*> xs;
  for (std::size_t i = 0; i < n; ++i) {
    Tensor* x = g.make({dim});
    for (double& v : x->value) v = u(rng);
    xs.push_back(x);
  }
  return xs;
}

// Straight-line scalar reimplementation of the single-layer unidirectional
// recurrence, used as an independent oracle against lbilstm_encode.
std::vector<std::vector<double>> chain_oracle(const CellParams& cell,
                                              Nonlinearity g,
                                              const std::vector<std::vector<double>>& xs,
                                              std::size_t hidden) {
  auto sigma = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  auto nl = [g](double v) {
    return g == Nonlinearity::Tanh ? std::tanh(v) : (v > 0 ? v : 0.0);
  };
  const std::size_t in = xs[0].size();
  auto gate = [&](const Tensor& W, const Tensor& b,
                  const std::vector<double>& h_prev,
                  const std::vector<double>& x) {
    std::vector<double> out(hidden);
    for (std::size_t i = 0; i < hidden; ++i) {
      double acc = b.value[i];
      for (std::size_t j = 0; j < hidden; ++j)
        acc += W.value[i * (hidden + in) + j] * h_prev[j];
      for (std::size_t j = 0; j < in; ++j)
        acc += W.value[i * (hidden + in) + hidden + j] * x[j];
      out[i] = acc;
    }
    return out;
  };
  std::vector<double> h(hidden, 0.0), c(hidden, 0.0);
  std::vector<std::vector<double>> states;
  for (const auto& x : xs) {
    auto f = gate(cell.Wf, cell.bf, h, x);
    auto i = gate(cell.Wi, cell.bi, h, x);
    auto o = gate(cell.Wo, cell.bo, h, x);
    auto ch = gate(cell.Wc, cell.bc, h, x);
    std::vector<double> h_new(hidden), c_new(hidden);
    for (std::size_t k = 0; k < hidden; ++k) {
      c_new[k] = sigma(i[k]) * nl(ch[k]) + sigma(f[k]) * c[k];
      h_new[k] = sigma(o[k]) * nl(c_new[k]);
    }
    h = h_new;
    c = c_new;
    states.push_back(h);
  }
  return states;
}

}  // namespace

TEST_CASE("embed maps OOV and forced positions to the UNK row") {
  std::mt19937_64 rng(3);
  EmbeddingTable table(toy_vocab(), 4, rng);
  Graph g;

  SUBCASE("known tokens map to their own rows") {
    auto xs = embed(g, table, {"someone", "knew"});
    CHECK(xs[0]->value !=  xs[1]->value);
  }
  SUBCASE("unk_positions overrides the vocabulary") {
    auto xs = embed(g, table, {"someone", "knew", "that"}, {1});
    Tensor* unk = g.row(&table.vectors, table.unk_index);
    CHECK(xs[1]->value == unk->value);
    CHECK(xs[0]->value != unk->value);
  }
  SUBCASE("fully OOV sentence embeds to identical UNK rows") {
    auto xs = embed(g, table, {"zz1", "zz2", "zz3"});
    CHECK(xs[0]->value == xs[1]->value);
    CHECK(xs[1]->value == xs[2]->value);
  }
  SUBCASE("empty sequence rejected") {
    CHECK_THROWS_AS(embed(g, table, {}), validation_error);
  }
}

TEST_CASE("lbilstm: length-1 with tied direction weights is symmetric") {
  const std::size_t H = 3, E = 2;
  EncoderParams p = random_encoder(1, H, E, Nonlinearity::Tanh, 11);
  p.cells[0][1] = p.cells[0][0];  // tie directions
  Graph g;
  auto xs = random_inputs(g, 1, E, 5);
  EncoderStates s = lbilstm_encode(g, p, xs);
  for (std::size_t k = 0; k < H; ++k)
    CHECK(s.h[0][0][0]->value[k] ==
          doctest::Approx(s.h[0][1][0]->value[k]).epsilon(1e-15));
}

TEST_CASE("lbilstm: all-zero parameters give all-zero hidden states") {
  EncoderParams p(2, 3, 2, Nonlinearity::Tanh);
  Graph g;
  auto xs = random_inputs(g, 3, 2, 9);
  EncoderStates s = lbilstm_encode(g, p, xs);
  for (std::size_t l = 0; l < 2; ++l)
    for (std::size_t d = 0; d < 2; ++d)
      for (std::size_t t = 0; t < 3; ++t)
        for (double v : s.h[l][d][t]->value) CHECK(v == 0.0);
}

TEST_CASE("lbilstm matches the straight-line scalar oracle") {
  const std::size_t H = 4, E = 3, N = 3;
  EncoderParams p = random_encoder(1, H, E, Nonlinearity::Tanh, 21);
  Graph g;
  auto xs = random_inputs(g, N, E, 22);
  std::vector<std::vector<double>> raw;
  for (Tensor* x : xs) raw.push_back(x->value);

  EncoderStates s = lbilstm_encode(g, p, xs);
  auto expected = chain_oracle(p.cells[0][0], Nonlinearity::Tanh, raw, H);
  for (std::size_t t = 0; t < N; ++t)
    for (std::size_t k = 0; k < H; ++k)
      CHECK(std::abs(s.h[0][0][t]->value[k] - expected[t][k]) < 1e-12);

  // backward direction equals the oracle on the reversed sequence
  auto reversed = raw;
  std::reverse(reversed.begin(), reversed.end());
  auto expected_bwd = chain_oracle(p.cells[0][1], Nonlinearity::Tanh, reversed, H);
  for (std::size_t t = 0; t < N; ++t)
    for (std::size_t k = 0; k < H; ++k)
      CHECK(std::abs(s.h[0][1][N - 1 - t]->value[k] - expected_bwd[t][k]) <
            1e-12);
}

TEST_CASE("tbilstm: leaf nodes see an empty predecessor set") {
  // star tree: root 0 with children 1, 2
  EncoderParams p = random_encoder(1, 3, 2, Nonlinearity::Relu, 31);
  Graph g;
  auto xs = random_inputs(g, 3, 2, 32);
  EncoderStates s = tbilstm_encode(g, p, xs, {-1, 0, 0});

  // A leaf's upward state equals a single-node chain on the same input.
  Graph g2;
  Tensor* x1 = g2.make({2}, xs[1]->value);
  EncoderStates single = lbilstm_encode(g2, p, {x1});
  for (std::size_t k = 0; k < 3; ++k)
    CHECK(s.h[0][0][1]->value[k] ==
          doctest::Approx(single.h[0][0][0]->value[k]).epsilon(1e-15));
}

TEST_CASE("tbilstm chain-tree equivalence with the linear chain") {
  // chain tree where each node's child is its left neighbor
  const std::size_t H = 4, E = 3, N = 5;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    EncoderParams p = random_encoder(2, H, E, Nonlinearity::Tanh, seed);
    std::vector<int> head_of(N);
    for (std::size_t t = 0; t < N; ++t)
      head_of[t] = t + 1 < N ? static_cast<int>(t + 1) : -1;

    Graph g;
    auto xs = random_inputs(g, N, E, seed * 100);
    EncoderStates chain = lbilstm_encode(g, p, xs);
    EncoderStates tree = tbilstm_encode(g, p, xs, head_of);
    for (std::size_t l = 0; l < 2; ++l)
      for (std::size_t t = 0; t < N; ++t)
        for (std::size_t k = 0; k < H; ++k)
          CHECK(std::abs(tree.h[l][0][t]->value[k] -
                         chain.h[l][0][t]->value[k]) < 1e-12);
  }
}

TEST_CASE("tbilstm two-child node matches a hand-rolled cell evaluation") {
  const std::size_t H = 2, E = 2;
  EncoderParams p = random_encoder(1, H, E, Nonlinearity::Relu, 77);
  Graph g;
  auto xs = random_inputs(g, 3, E, 78);
  EncoderStates s = tbilstm_encode(g, p, xs, {-1, 0, 0});

  // children 1 and 2 are leaves; compute their states, then the root's.
  auto sigma = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  auto relu = [](double v) { return v > 0 ? v : 0.0; };
  const auto& cell = p.cells[0][0];
  auto gate = [&](const Tensor& W, const Tensor& b, const std::vector<double>& h,
                  const std::vector<double>& x) {
    std::vector<double> out(H);
    for (std::size_t i = 0; i < H; ++i) {
      double acc = b.value[i];
      for (std::size_t j = 0; j < H; ++j) acc += W.value[i * (H + E) + j] * h[j];
      for (std::size_t j = 0; j < E; ++j)
        acc += W.value[i * (H + E) + H + j] * x[j];
      out[i] = acc;
    }
    return out;
  };
  auto leaf = [&](const std::vector<double>& x) {
    std::vector<double> zero(H, 0.0);
    auto i = gate(cell.Wi, cell.bi, zero, x);
    auto o = gate(cell.Wo, cell.bo, zero, x);
    auto ch = gate(cell.Wc, cell.bc, zero, x);
    std::vector<double> h(H), c(H);
    for (std::size_t k = 0; k < H; ++k) {
      c[k] = sigma(i[k]) * relu(ch[k]);
      h[k] = sigma(o[k]) * relu(c[k]);
    }
    return std::pair{h, c};
  };
  auto [h1, c1] = leaf(xs[1]->value);
  auto [h2, c2] = leaf(xs[2]->value);
  std::vector<double> hhat(H);
  for (std::size_t k = 0; k < H; ++k) hhat[k] = h1[k] + h2[k];
  const auto& x0 = xs[0]->value;
  auto i0 = gate(cell.Wi, cell.bi, hhat, x0);
  auto o0 = gate(cell.Wo, cell.bo, hhat, x0);
  auto ch0 = gate(cell.Wc, cell.bc, hhat, x0);
  auto f01 = gate(cell.Wf, cell.bf, h1, x0);
  auto f02 = gate(cell.Wf, cell.bf, h2, x0);
  for (std::size_t k = 0; k < H; ++k) {
    const double c0 = sigma(i0[k]) * relu(ch0[k]) + sigma(f01[k]) * c1[k] +
                      sigma(f02[k]) * c2[k];
    const double h0 = sigma(o0[k]) * relu(c0);
    CHECK(std::abs(s.h[0][0][0]->value[k] - h0) < 1e-12);
  }
}

TEST_CASE("tbilstm sibling order invariance") {
  const std::size_t H = 3, E = 2, N = 4;
  EncoderParams p = random_encoder(2, H, E, Nonlinearity::Relu, 41);
  // root 3 with children 0, 1, 2 vs. a relabeled copy with inputs permuted
  Graph g;
  auto xs = random_inputs(g, N, E, 42);
  EncoderStates a = tbilstm_encode(g, p, xs, {3, 3, 3, -1});
  std::vector<Tensor*> permuted = {xs[2], xs[0], xs[1], xs[3]};
  EncoderStates b = tbilstm_encode(g, p, permuted, {3, 3, 3, -1});
  for (std::size_t k = 0; k < H; ++k)
    CHECK(std::abs(a.h[1][0][3]->value[k] - b.h[1][0][3]->value[k]) < 1e-12);
}

TEST_CASE("tbilstm rejects cyclic and multi-root trees before any math") {
  EncoderParams p(1, 2, 2, Nonlinearity::Relu);
  Graph g;
  auto xs = random_inputs(g, 3, 2, 50);
  CHECK_THROWS_AS(tbilstm_encode(g, p, xs, {1, 2, 0}), validation_error);
  CHECK_THROWS_AS(tbilstm_encode(g, p, xs, {-1, -1, 0}), validation_error);
}

TEST_CASE("non-finite activations are diagnosed with position info") {
  EncoderParams p(1, 2, 2, Nonlinearity::Relu);
  for (double& v : p.cells[0][0].Wc.value) v = 1e308;
  for (double& v : p.cells[0][0].Wi.value) v = 1e308;
  Graph g;
  Tensor* x = g.make({2}, {1e30, 1.0});
  CHECK_THROWS_AS(lbilstm_encode(g, p, {x}), numeric_error);
}

TEST_CASE("encode_at_target widths and indexing") {
  std::mt19937_64 rng(8);
  ModelConfig cfg;
  cfg.hidden = 5;
  cfg.embed_dim = 4;
  cfg.head_hidden = 6;

  SentenceInput input;
  input.tokens = {"someone", "knew", "that", "something", "happened", "."};
  input.head_of = {1, -1, 4, 4, 1, 1};
  input.target_index = 4;

  SUBCASE("L model output width is 2h") {
    cfg.kind = EncoderKind::Linear;
    FactualityModel m(cfg, toy_vocab(), {"a"}, rng);
    Graph g;
    CHECK(m.encode_at_target(g, input)->size() == 10);
  }
  SUBCASE("H model output width is 4h") {
    cfg.kind = EncoderKind::Hybrid;
    FactualityModel m(cfg, toy_vocab(), {"a"}, rng);
    Graph g;
    CHECK(m.encode_at_target(g, input)->size() == 20);
  }
  SUBCASE("target at the final token uses that position's states") {
    cfg.kind = EncoderKind::Linear;
    FactualityModel m(cfg, toy_vocab(), {"a"}, rng);
    Graph g;
    auto xs = embed(g, m.embedding, input.tokens);
    EncoderStates s = lbilstm_encode(g, *m.linear, xs);
    Tensor* direct = s.final_state(g, input.tokens.size() - 1);
    SentenceInput last = input;
    last.target_index = input.tokens.size() - 1;
    Tensor* via_model = m.encode_at_target(g, last);
    CHECK(via_model->value == direct->value);
  }
  SUBCASE("out-of-range target rejected") {
    cfg.kind = EncoderKind::Linear;
    FactualityModel m(cfg, toy_vocab(), {"a"}, rng);
    Graph g;
    SentenceInput bad = input;
    bad.target_index = 99;
    CHECK_THROWS_AS(m.encode_at_target(g, bad), validation_error);
  }
}

TEST_CASE("regression head") {
  SUBCASE("zero V1 passes only the output bias through") {
    RegressionHead head(2, 3);
    std::mt19937_64 rng(4);
    head.init_uniform(0.3, rng);
    for (double& v : head.V1.value) v = 0.0;
    for (double& v : head.b1.value) v = 0.0;
    head.b2.value[0] = -1.25;
    Graph g;
    Tensor* h = g.make({2}, {0.7, -0.3});
    CHECK(head.predict(g, h)->value[0] == doctest::Approx(-1.25));
  }
  SUBCASE("hand-set 2->2->1 head matches manual arithmetic") {
    RegressionHead head(2, 2);
    head.V1.value = {1.0, 2.0, -1.0, 0.5};
    head.b1.value = {0.5, -0.25};
    head.V2.value = {2.0, 3.0};
    head.b2.value = {0.1};
    Graph g;
    Tensor* h = g.make({2}, {1.0, -1.0});
    // V1 h + b1 = [1 - 2 + 0.5, -1 - 0.5 - 0.25] = [-0.5, -1.75] -> relu -> 0
    CHECK(head.predict(g, h)->value[0] == doctest::Approx(0.1));
    head.V1.value = {1.0, 2.0, -1.0, -0.5};
    Graph g2;
    Tensor* h2 = g2.make({2}, {1.0, -1.0});
    // V1 h + b1 = [-0.5, -0.25] -> relu -> [0, 0]... flip sign of row 1
    head.V1.value = {-1.0, -2.0, -1.0, -0.5};
    Graph g3;
    Tensor* h3 = g3.make({2}, {1.0, -1.0});
    // row0: -1 + 2 + 0.5 = 1.5; row1: -1 + 0.5 - 0.25 = -0.75 -> relu [1.5, 0]
    // out = 2 * 1.5 + 0.1 = 3.1
    CHECK(head.predict(g3, h3)->value[0] == doctest::Approx(3.1));
  }
  SUBCASE("width mismatch rejected") {
    RegressionHead head(3, 2);
    Graph g;
    Tensor* h = g.make({2}, {1.0, 2.0});
    CHECK_THROWS_AS(head.predict(g, h), validation_error);
  }
}

TEST_CASE("gradient flows to every parameter of the full model") {
  std::mt19937_64 rng(13);
  ModelConfig cfg;
  cfg.kind = EncoderKind::Hybrid;
  cfg.hidden = 3;
  cfg.embed_dim = 3;
  cfg.head_hidden = 4;
  FactualityModel m(cfg, toy_vocab(), {"a"}, rng);
  // keep the head's relu units active so the flow check is well-posed
  for (double& v : m.head_for("a").b1.value) v = 0.5;
  // the target must sit mid-chain with both a parent and children, or some
  // forget gates legitimately sit on unused paths
  SentenceInput input;
  input.tokens = {"someone", "knew", "that", "something", "happened"};
  input.head_of = {2, 2, 4, 4, -1};
  input.target_index = 2;

  for (auto* t : m.params()) t->zero_grad();
  Graph g;
  Tensor* h = m.encode_at_target(g, input);
  Tensor* loss = g.smooth_l1(m.head_for("a").predict(g, h), 2.0);
  g.backward(loss);
  for (auto* t : m.params()) {
    double norm = 0.0;
    for (double v : t->grad) norm += v * v;
    // embedding rows for unused vocabulary legitimately get no gradient
    if (t == &m.embedding.vectors) continue;
    CHECK(norm > 0.0);
  }
}

TEST_CASE("grad_check through encoders and head (small widths)") {
  std::mt19937_64 rng(17);
  ModelConfig cfg;
  cfg.hidden = 3;
  cfg.embed_dim = 3;
  cfg.head_hidden = 3;
  cfg.kind = EncoderKind::Tree;
  FactualityModel m(cfg, toy_vocab(), {"a"}, rng);
  SentenceInput input;
  input.tokens = {"someone", "knew", "that", "happened"};
  input.head_of = {1, -1, 3, 1};
  input.target_index = 3;

  auto params = m.params();
  const double disc = gradcore::grad_check(
      [&](Graph& g) {
        Tensor* h = m.encode_at_target(g, input);
        return g.smooth_l1(m.head_for("a").predict(g, h), 1.0);
      },
      params, 1e-5);
  CHECK(disc < 1e-4);
}

TEST_CASE("checkpoint round trip is value-exact") {
  std::mt19937_64 rng(23);
  ModelConfig cfg;
  cfg.kind = EncoderKind::Hybrid;
  cfg.hidden = 4;
  cfg.embed_dim = 3;
  cfg.head_hidden = 5;
  FactualityModel m(cfg, toy_vocab(), {"factbank", "uw"}, rng);
  const std::string path = "/tmp/fact_ckpt_test.json";
  m.save(path);
  FactualityModel loaded = FactualityModel::load(path);

  SentenceInput input;
  input.tokens = {"someone", "knew", "that", "something", "happened"};
  input.head_of = {1, -1, 4, 4, 1};
  input.target_index = 4;
  CHECK(m.predict("uw", input) == loaded.predict("uw", input));
  CHECK(m.embedding.vectors.value == loaded.embedding.vectors.value);
  CHECK(loaded.heads.size() == 2);
  std::remove(path.c_str());
}

TEST_CASE("UNK prediction depends only on the UNK row, not the vocabulary") {
  // Two models identical except for vocabulary entries never used in the
  // sentence produce identical predictions.
  std::mt19937_64 rng1(31);
  ModelConfig cfg;
  cfg.kind = EncoderKind::Linear;
  cfg.hidden = 3;
  cfg.embed_dim = 3;
  cfg.head_hidden = 3;
  std::vector<std::string> vocab_a = {"someone", "happened"};
  FactualityModel a(cfg, vocab_a, {"d"}, rng1);

  FactualityModel b = a;  // deep copy, then rename an unrelated vocab entry
  auto node = b.embedding.vocab.extract("happened");
  node.key() = "elapsed";
  b.embedding.vocab.insert(std::move(node));

  SentenceInput input;
  input.tokens = {"someone", "visited"};  // "visited" is OOV for both
  input.head_of = {1, -1};
  input.target_index = 1;
  CHECK(a.predict("d", input) == b.predict("d", input));
}
