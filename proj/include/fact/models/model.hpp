#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fact/models/embedding.hpp"
#include "fact/models/encoder.hpp"
#include "fact/models/head.hpp"

namespace fact::models {

struct ModelConfig {
  EncoderKind kind = EncoderKind::Linear;
  std::size_t layers = 2;
  std::size_t hidden = 64;
  std::size_t embed_dim = 50;
  std::size_t head_hidden = 64;
  double init_range = 0.1;
};

/// A factuality model: one embedding table, one or two stacked biLSTM
/// encoders (both for the hybrid), and one regression head per dataset tag.
/// Encoder and embedding parameters are shared across all heads.
struct FactualityModel {
  ModelConfig config;
  EmbeddingTable embedding;
  std::optional<EncoderParams> linear;  // g = tanh
  std::optional<EncoderParams> tree;    // g = relu
  std::map<std::string, RegressionHead> heads;

  FactualityModel() = default;

  FactualityModel(ModelConfig cfg, const std::vector<std::string>& vocab_tokens,
                  const std::vector<std::string>& head_tags,
                  std::mt19937_64& rng)
      : config(cfg), embedding(vocab_tokens, cfg.embed_dim, rng) {
    if (cfg.kind != EncoderKind::Tree) {
      linear.emplace(cfg.layers, cfg.hidden, cfg.embed_dim,
                     gradcore::Nonlinearity::Tanh);
      linear->init_uniform(cfg.init_range, rng);
    }
    if (cfg.kind != EncoderKind::Linear) {
      tree.emplace(cfg.layers, cfg.hidden, cfg.embed_dim,
                   gradcore::Nonlinearity::Relu);
      tree->init_uniform(cfg.init_range, rng);
    }
    for (const auto& tag : head_tags) {
      RegressionHead head(state_width(), cfg.head_hidden);
      head.init_uniform(cfg.init_range, rng);
      heads.emplace(tag, std::move(head));
    }
  }

  /// Width of the encoder state fed to the heads: 2h for L/T, 4h for H.
  std::size_t state_width() const {
    return (config.kind == EncoderKind::Hybrid ? 4 : 2) * config.hidden;
  }

  /// Final-layer bidirectional state at the target token. For the hybrid,
  /// the linear-chain and tree states are concatenated.
  Tensor* encode_at_target(Graph& g, const SentenceInput& input,
                           const std::set<std::size_t>& unk_positions = {}) {
    if (input.target_index >= input.tokens.size())
      throw validation_error("encode_at_target: target index out of range");
    std::vector<Tensor*> x = embed(g, embedding, input.tokens, unk_positions);
    Tensor* state = nullptr;
    if (linear) {
      EncoderStates s = lbilstm_encode(g, *linear, x);
      state = s.final_state(g, input.target_index);
    }
    if (tree) {
      EncoderStates s = tbilstm_encode(g, *tree, x, input.head_of);
      Tensor* ts = s.final_state(g, input.target_index);
      state = state ? g.concat(state, ts) : ts;
    }
    return state;
  }

  /// Scalar factuality prediction through the given dataset head.
  double predict(const std::string& head_tag, const SentenceInput& input,
                 const std::set<std::size_t>& unk_positions = {}) {
    Graph g;
    Tensor* h = encode_at_target(g, input, unk_positions);
    return head_for(head_tag).predict(g, h)->value[0];
  }

  RegressionHead& head_for(const std::string& tag) {
    auto it = heads.find(tag);
    if (it == heads.end())
      throw validation_error("no regression head for dataset tag: " + tag);
    return it->second;
  }

  /// All trainable tensors, in a deterministic order.
  std::vector<Tensor*> params() {
    std::vector<Tensor*> out{&embedding.vectors};
    if (linear)
      for (Tensor* t : linear->params()) out.push_back(t);
    if (tree)
      for (Tensor* t : tree->params()) out.push_back(t);
    for (auto& [tag, head] : heads)
      for (Tensor* t : head.params()) out.push_back(t);
    return out;
  }

  // -- checkpointing ---------------------------------------------------

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "factuality-checkpoint";
    j["version"] = 1;
    j["kind"] = encoder_kind_name(config.kind);
    j["layers"] = config.layers;
    j["hidden"] = config.hidden;
    j["embed_dim"] = config.embed_dim;
    j["head_hidden"] = config.head_hidden;
    j["unk_index"] = embedding.unk_index;
    j["vocab"] = embedding.vocab;
    nlohmann::json tensors = nlohmann::json::object();
    const_cast<FactualityModel*>(this)->visit_named(
        [&tensors](const std::string& name, Tensor& t) {
          tensors[name] = {{"shape", t.shape}, {"values", t.value}};
        });
    j["tensors"] = std::move(tensors);
    nlohmann::json tags = nlohmann::json::array();
    for (const auto& [tag, head] : heads) tags.push_back(tag);
    j["heads"] = std::move(tags);
    return j;
  }

  static FactualityModel from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "factuality-checkpoint")
      throw io_error("checkpoint: unrecognized format");
    FactualityModel m;
    m.config.kind = encoder_kind_from_name(j.at("kind").get<std::string>());
    m.config.layers = j.at("layers").get<std::size_t>();
    m.config.hidden = j.at("hidden").get<std::size_t>();
    m.config.embed_dim = j.at("embed_dim").get<std::size_t>();
    m.config.head_hidden = j.at("head_hidden").get<std::size_t>();
    m.embedding.unk_index = j.at("unk_index").get<std::size_t>();
    m.embedding.vocab =
        j.at("vocab").get<std::unordered_map<std::string, std::size_t>>();
    m.embedding.vectors =
        Tensor({m.embedding.vocab.size() + 1, m.config.embed_dim});
    if (m.config.kind != EncoderKind::Tree)
      m.linear.emplace(m.config.layers, m.config.hidden, m.config.embed_dim,
                       gradcore::Nonlinearity::Tanh);
    if (m.config.kind != EncoderKind::Linear)
      m.tree.emplace(m.config.layers, m.config.hidden, m.config.embed_dim,
                     gradcore::Nonlinearity::Relu);
    for (const auto& tag : j.at("heads"))
      m.heads.emplace(tag.get<std::string>(),
                      RegressionHead(m.state_width(), m.config.head_hidden));
    const auto& tensors = j.at("tensors");
    m.visit_named([&tensors](const std::string& name, Tensor& t) {
      const auto& entry = tensors.at(name);
      auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      auto values = entry.at("values").get<std::vector<double>>();
      t = Tensor(std::move(shape), std::move(values));
    });
    return m;
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open checkpoint for writing: " + path);
    out << to_json().dump(1) << "\n";
  }

  static FactualityModel load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open checkpoint: " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
  }

 private:
  template <typename Fn>
  void visit_named(Fn&& fn) {
    fn("embedding.vectors", embedding.vectors);
    auto visit_encoder = [&fn](const std::string& prefix, EncoderParams& p) {
      static const char* dir_names[2] = {"fwd", "bwd"};
      static const char* gate_names[8] = {"Wf", "Wi", "Wo", "Wc",
                                          "bf", "bi", "bo", "bc"};
      for (std::size_t l = 0; l < p.cells.size(); ++l)
        for (std::size_t d = 0; d < 2; ++d) {
          auto ts = p.cells[l][d].params();
          for (std::size_t k = 0; k < ts.size(); ++k)
            fn(prefix + "." + std::to_string(l) + "." + dir_names[d] + "." +
                   gate_names[k],
               *ts[k]);
        }
    };
    if (linear) visit_encoder("linear", *linear);
    if (tree) visit_encoder("tree", *tree);
    for (auto& [tag, head] : heads) {
      fn("head." + tag + ".V1", head.V1);
      fn("head." + tag + ".b1", head.b1);
      fn("head." + tag + ".V2", head.V2);
      fn("head." + tag + ".b2", head.b2);
    }
  }
};

}  // namespace fact::models
