#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fact/gradcore/adam.hpp"
#include "fact/models/model.hpp"
#include "fact/prediction_matrix.hpp"
#include "fact/probe/stats.hpp"

namespace fact::trainer {

using models::EncoderKind;
using models::FactualityModel;
using models::SentenceInput;

/// One training/evaluation item: a sentence, its gold factuality, and the
/// corpus it came from (which selects the regression head).
struct FactualityExample {
  std::string sentence_id;
  SentenceInput input;
  double gold = 0.0;
  std::string dataset_tag;
};

using Corpora = std::map<std::string, std::vector<FactualityExample>>;

struct TrainConfig {
  std::size_t epochs = 20;
  double learning_rate = 1e-3;
  std::size_t batch_size = 1;
  std::uint64_t seed = 1;
  EncoderKind kind = EncoderKind::Linear;
  bool shuffle = true;
  models::ModelConfig model;
};

/// Multi-task training: one tied encoder (per encoder kind in use) and one
/// regression head per corpus. Examples from all corpora are pooled and
/// uniformly interleaved each epoch; the loss is smooth L1 at the example's
/// own dataset head. Deterministic given the seed.
inline FactualityModel train_multitask(Corpora& corpora, const TrainConfig& cfg,
                                       std::ostream* log = nullptr) {
  if (corpora.empty())
    throw validation_error("train_multitask: no corpora given");
  for (const auto& [tag, examples] : corpora)
    if (examples.empty())
      throw validation_error("train_multitask: corpus '" + tag + "' is empty");

  std::vector<std::string> vocab_tokens, head_tags;
  std::vector<const FactualityExample*> pool;
  for (const auto& [tag, examples] : corpora) {
    head_tags.push_back(tag);
    for (const auto& ex : examples) {
      pool.push_back(&ex);
      for (const auto& tok : ex.input.tokens) vocab_tokens.push_back(tok);
    }
  }

  std::mt19937_64 rng(cfg.seed);
  models::ModelConfig mc = cfg.model;
  mc.kind = cfg.kind;
  FactualityModel model(mc, vocab_tokens, head_tags, rng);
  std::vector<gradcore::Tensor*> params = model.params();

  gradcore::AdamConfig acfg;
  acfg.lr = cfg.learning_rate;
  gradcore::Adam opt(acfg);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) std::shuffle(pool.begin(), pool.end(), rng);
    std::map<std::string, std::pair<double, std::size_t>> epoch_loss;
    std::size_t in_batch = 0;
    for (std::size_t step = 0; step < pool.size(); ++step) {
      const FactualityExample& ex = *pool[step];
      gradcore::Graph g;
      gradcore::Tensor* h = model.encode_at_target(g, ex.input);
      gradcore::Tensor* pred = model.head_for(ex.dataset_tag).predict(g, h);
      gradcore::Tensor* loss = g.smooth_l1(pred, ex.gold);
      if (!std::isfinite(loss->value[0]))
        throw numeric_error("training diverged at epoch " +
                            std::to_string(epoch) + ", step " +
                            std::to_string(step) + " (sentence " +
                            ex.sentence_id + ")");
      g.backward(loss);
      auto& [sum, count] = epoch_loss[ex.dataset_tag];
      sum += loss->value[0];
      ++count;
      if (++in_batch >= cfg.batch_size || step + 1 == pool.size()) {
        opt.step(params);
        in_batch = 0;
      }
    }
    if (log) {
      for (const auto& [tag, sc] : epoch_loss) {
        nlohmann::json entry = {
            {"epoch", epoch},
            {"corpus", tag},
            {"mean_loss", sc.first / static_cast<double>(sc.second)}};
        *log << entry.dump() << "\n";
      }
    }
  }
  return model;
}

/// One prediction column per trained head, one row per example.
inline PredictionMatrix predict_all(FactualityModel& model,
                                    const std::vector<FactualityExample>& data) {
  PredictionMatrix m;
  for (const auto& ex : data) m.row_ids.push_back(ex.sentence_id);
  m.values.resize(data.size());
  for (const auto& [tag, head] : model.heads) {
    std::vector<double> col;
    col.reserve(data.size());
    for (const auto& ex : data) col.push_back(model.predict(tag, ex.input));
    m.add_column(tag, col);
  }
  return m;
}

/// Like predict_all, but the embedding-verb token of every sentence is
/// forced to the UNK embedding. verb_position_fn yields that token's index.
inline PredictionMatrix predict_unk_ablated(
    FactualityModel& model, const std::vector<FactualityExample>& data,
    const std::function<std::size_t(const FactualityExample&)>& verb_position_fn) {
  PredictionMatrix m;
  for (const auto& ex : data) m.row_ids.push_back(ex.sentence_id);
  m.values.resize(data.size());
  std::vector<std::set<std::size_t>> unk_positions;
  unk_positions.reserve(data.size());
  for (const auto& ex : data) {
    const std::size_t pos = verb_position_fn(ex);
    if (pos >= ex.input.tokens.size())
      throw validation_error("predict_unk_ablated: verb position " +
                             std::to_string(pos) +
                             " out of range for sentence " + ex.sentence_id);
    unk_positions.push_back({pos});
  }
  for (const auto& [tag, head] : model.heads) {
    std::vector<double> col;
    col.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
      col.push_back(model.predict(tag, data[i].input, unk_positions[i]));
    m.add_column(tag, col);
  }
  return m;
}

struct EvalResult {
  std::optional<double> pearson_r;  // empty when gold is constant
  std::string pearson_error;
  double mae = 0.0;
};

inline EvalResult evaluate(std::span<const double> predictions,
                           std::span<const double> gold) {
  if (predictions.size() != gold.size() || gold.size() < 2)
    throw validation_error("evaluate: need equal-length inputs of size >= 2");
  EvalResult r;
  r.mae = probe::mean_absolute_error(predictions, gold);
  try {
    r.pearson_r = probe::pearson(predictions, gold);
  } catch (const numeric_error& e) {
    r.pearson_error = e.what();
  }
  return r;
}

// -- corpus TSV ---------------------------------------------------------------

inline const char* kCorpusHeader =
    "sentence_id\tdataset_tag\ttokens\thead_of\ttarget_index\tgold";

inline void write_corpus_tsv(const std::string& path,
                             const std::vector<FactualityExample>& examples) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open for writing: " + path);
  out << kCorpusHeader << "\n";
  out.precision(17);
  for (const auto& ex : examples) {
    out << ex.sentence_id << '\t' << ex.dataset_tag << '\t';
    for (std::size_t i = 0; i < ex.input.tokens.size(); ++i)
      out << (i ? " " : "") << ex.input.tokens[i];
    out << '\t';
    for (std::size_t i = 0; i < ex.input.head_of.size(); ++i)
      out << (i ? "," : "") << ex.input.head_of[i];
    out << '\t' << ex.input.target_index << '\t' << ex.gold << "\n";
  }
}

inline std::vector<FactualityExample> load_corpus_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open corpus file: " + path);
  std::vector<FactualityExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != kCorpusHeader)
        throw io_error(path + ":1: unexpected corpus header");
      continue;
    }
    std::vector<std::string> fields;
    {
      std::istringstream ss(line);
      std::string f;
      while (std::getline(ss, f, '\t')) fields.push_back(f);
    }
    if (fields.size() != 6)
      throw io_error(path + ":" + std::to_string(line_no) +
                     ": expected 6 fields");
    try {
      FactualityExample ex;
      ex.sentence_id = fields[0];
      ex.dataset_tag = fields[1];
      {
        std::istringstream ss(fields[2]);
        std::string tok;
        while (std::getline(ss, tok, ' ')) ex.input.tokens.push_back(tok);
      }
      {
        std::istringstream ss(fields[3]);
        std::string h;
        while (std::getline(ss, h, ',')) ex.input.head_of.push_back(std::stoi(h));
      }
      ex.input.target_index = std::stoul(fields[4]);
      ex.gold = std::stod(fields[5]);
      if (!std::isfinite(ex.gold))
        throw validation_error("non-finite gold value");
      models::validate_tree(ex.input.head_of);
      out.push_back(std::move(ex));
    } catch (const std::exception& e) {
      throw io_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline Corpora group_by_tag(std::vector<FactualityExample> examples) {
  Corpora corpora;
  for (auto& ex : examples) corpora[ex.dataset_tag].push_back(std::move(ex));
  return corpora;
}

}  // namespace fact::trainer
