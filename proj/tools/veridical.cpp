// Batch command-line surface for the factuality pipeline. Every subcommand
// reads and writes plain files and drops a manifest next to its outputs, so
// runs are scriptable and diffable.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "fact/probe/cca.hpp"
#include "fact/probe/error_regression.hpp"
#include "fact/probe/nested_cv.hpp"
#include "fact/probe/probe_matrices.hpp"
#include "fact/probe/stats.hpp"
#include "fact/trainer/trainer.hpp"
#include "fact/verdata/dataset.hpp"
#include "fact/verdata/normalize.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using nlohmann::json;

/// Relative output paths can be redirected with VERIDICAL_OUT_DIR.
std::string out_path(const std::string& path) {
  const char* dir = std::getenv("VERIDICAL_OUT_DIR");
  if (!dir || !*dir || std::filesystem::path(path).is_absolute()) return path;
  return (std::filesystem::path(dir) / path).string();
}

void write_manifest(const std::string& beside, const std::string& subcommand,
                    std::uint64_t seed, const json& options) {
  json manifest = {{"subcommand", subcommand},
                   {"version", kVersion},
                   {"seed", seed},
                   {"options", options}};
  const std::string path = beside + ".manifest.json";
  std::ofstream out(path);
  if (!out) throw fact::io_error("cannot write manifest: " + path);
  out << manifest.dump(1) << "\n";
}

std::vector<fact::trainer::FactualityExample> examples_from_dataset(
    const std::vector<fact::verdata::DatasetRow>& rows,
    const std::string& tag) {
  std::vector<fact::trainer::FactualityExample> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    fact::trainer::FactualityExample ex;
    ex.sentence_id = row.sentence_id;
    ex.input = fact::verdata::sentence_input_for(row);
    ex.gold = row.gold_factuality;
    ex.dataset_tag = tag;
    out.push_back(std::move(ex));
  }
  return out;
}

/// Loads training examples from either a corpus TSV or a templated dataset
/// TSV, distinguished by header. Dataset rows all get the given tag.
std::vector<fact::trainer::FactualityExample> load_examples_any(
    const std::string& path, const std::string& tag) {
  std::ifstream probe(path);
  if (!probe) throw fact::io_error("cannot open file: " + path);
  std::string header;
  std::getline(probe, header);
  probe.close();
  if (header == fact::verdata::kDatasetHeader)
    return examples_from_dataset(fact::verdata::load_megaveridicality(path), tag);
  return fact::trainer::load_corpus_tsv(path);
}

int cmd_generate(const std::string& verbs_path, const std::string& out) {
  auto pairs = fact::verdata::load_verb_inventory(verbs_path);
  auto sentences = fact::verdata::generate_dataset(pairs);
  std::vector<fact::verdata::DatasetRow> rows;
  rows.reserve(sentences.size());
  for (const auto& s : sentences)
    rows.push_back(fact::verdata::dataset_row_from(
        s, fact::verdata::rule_gold(fact::verdata::verb_class(s.verb),
                                    s.polarity)));
  const std::string path = out_path(out);
  fact::verdata::write_dataset_tsv(path, rows);
  write_manifest(path, "generate", 0,
                 {{"verbs", verbs_path}, {"out", out}, {"pairs", pairs.size()}});
  std::cout << "wrote " << rows.size() << " sentences to " << path << "\n";
  return 0;
}

int cmd_normalize(const std::string& annotations_path, const std::string& out,
                  bool raw_mean_fallback) {
  auto records = fact::verdata::load_annotations_tsv(annotations_path);
  fact::verdata::NormalizeOptions opts;
  opts.raw_mean_fallback = raw_mean_fallback;
  auto items = fact::verdata::normalize_responses(records, opts);
  const std::string path = out_path(out);
  std::ofstream file(path);
  if (!file) throw fact::io_error("cannot open for writing: " + path);
  file.precision(17);
  file << "sentence_id\tfactuality\n";
  for (const auto& item : items)
    file << item.sentence_id << "\t" << item.factuality << "\n";
  write_manifest(path, "normalize", 0,
                 {{"annotations", annotations_path},
                  {"out", out},
                  {"raw_mean_fallback", raw_mean_fallback}});
  std::cout << "normalized " << items.size() << " sentences to " << path
            << "\n";
  return 0;
}

int cmd_train(const std::string& data_path, const std::string& tag,
              const std::string& out, const std::string& kind,
              std::size_t epochs, double lr, std::uint64_t seed,
              std::size_t layers, std::size_t hidden, std::size_t embed_dim,
              const std::string& log_path) {
  auto examples = load_examples_any(data_path, tag);
  auto corpora = fact::trainer::group_by_tag(std::move(examples));
  fact::trainer::TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.learning_rate = lr;
  cfg.seed = seed;
  cfg.kind = fact::models::encoder_kind_from_name(kind);
  cfg.model.layers = layers;
  cfg.model.hidden = hidden;
  cfg.model.embed_dim = embed_dim;
  cfg.model.head_hidden = hidden;

  std::ofstream log;
  if (!log_path.empty()) {
    log.open(out_path(log_path));
    if (!log) throw fact::io_error("cannot open for writing: " + log_path);
  }
  auto model =
      fact::trainer::train_multitask(corpora, cfg, log.is_open() ? &log : nullptr);
  const std::string path = out_path(out);
  model.save(path);
  write_manifest(path, "train", seed,
                 {{"data", data_path},
                  {"out", out},
                  {"kind", kind},
                  {"epochs", epochs},
                  {"learning_rate", lr},
                  {"layers", layers},
                  {"hidden", hidden},
                  {"embed_dim", embed_dim}});
  std::cout << "trained " << kind << " model (" << corpora.size()
            << " heads) to " << path << "\n";
  return 0;
}

int cmd_predict(const std::string& checkpoint, const std::string& data_path,
                const std::string& tag, const std::string& out) {
  auto model = fact::models::FactualityModel::load(checkpoint);
  auto examples = load_examples_any(data_path, tag);
  auto preds = fact::trainer::predict_all(model, examples);
  const std::string path = out_path(out);
  fact::write_predictions_tsv(path, preds);
  write_manifest(path, "predict", 0,
                 {{"checkpoint", checkpoint}, {"data", data_path}, {"out", out}});
  std::cout << "wrote " << preds.row_ids.size() << " x "
            << preds.column_names.size() << " predictions to " << path << "\n";
  return 0;
}

int cmd_ablate_unk(const std::string& checkpoint, const std::string& data_path,
                   const std::string& out) {
  auto model = fact::models::FactualityModel::load(checkpoint);
  auto rows = fact::verdata::load_megaveridicality(data_path);
  auto examples = examples_from_dataset(rows, "all");
  std::map<std::string, std::size_t> verb_position;
  for (const auto& row : rows) verb_position[row.sentence_id] = row.verb_index;
  auto preds = fact::trainer::predict_unk_ablated(
      model, examples, [&](const fact::trainer::FactualityExample& ex) {
        return verb_position.at(ex.sentence_id);
      });
  const std::string path = out_path(out);
  fact::write_predictions_tsv(path, preds);
  write_manifest(path, "ablate-unk", 0,
                 {{"checkpoint", checkpoint}, {"data", data_path}, {"out", out}});
  std::cout << "wrote " << preds.row_ids.size() << " x "
            << preds.column_names.size() << " ablated predictions to " << path
            << "\n";
  return 0;
}

int cmd_ensemble(const std::string& pred_path, const std::string& gold_path,
                 const std::string& grid_name, std::uint64_t seed,
                 const std::string& out) {
  auto preds = fact::load_predictions_tsv(pred_path);
  auto gold_examples = load_examples_any(gold_path, "gold");
  std::map<std::string, double> gold_by_id;
  for (const auto& ex : gold_examples) gold_by_id[ex.sentence_id] = ex.gold;

  const auto n = static_cast<Eigen::Index>(preds.row_ids.size());
  Eigen::MatrixXd P(n, static_cast<Eigen::Index>(preds.column_names.size()));
  Eigen::VectorXd gold(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& id = preds.row_ids[static_cast<std::size_t>(i)];
    auto it = gold_by_id.find(id);
    if (it == gold_by_id.end())
      throw fact::validation_error("ensemble: no gold value for sentence " + id);
    gold[i] = it->second;
    for (std::size_t j = 0; j < preds.column_names.size(); ++j)
      P(i, static_cast<Eigen::Index>(j)) =
          preds.values[static_cast<std::size_t>(i)][j];
  }

  std::vector<double> grid;
  if (grid_name != "default") {
    std::istringstream ss(grid_name);
    std::string tok;
    while (std::getline(ss, tok, ',')) grid.push_back(std::stod(tok));
  }
  auto report = fact::probe::nested_cv(P, gold, grid, 10, 10, seed);

  json jfolds = json::array();
  for (const auto& f : report.folds)
    jfolds.push_back({{"lambda", f.lambda},
                      {"pearson_r", f.pearson_r},
                      {"valid", f.valid},
                      {"test_size", f.test_indices.size()}});
  json jreport = {{"mean_r", report.mean_r},
                  {"ci_low", report.ci_low},
                  {"ci_high", report.ci_high},
                  {"invalid_folds", report.invalid_folds},
                  {"grid", report.grid},
                  {"folds", jfolds}};
  const std::string path = out_path(out);
  std::ofstream file(path);
  if (!file) throw fact::io_error("cannot open for writing: " + path);
  file << jreport.dump(1) << "\n";
  write_manifest(path, "ensemble", seed,
                 {{"pred", pred_path},
                  {"gold", gold_path},
                  {"grid", grid_name},
                  {"out", out}});

  std::cout << "lambda grid searched:";
  for (double l : report.grid) std::cout << " " << l;
  std::cout << "\nmean outer r " << report.mean_r << "  95% CI ["
            << report.ci_low << ", " << report.ci_high << "]\n";
  return 0;
}

int cmd_cca(const std::string& checkpoint, const std::string& data_path,
            std::size_t components, const std::string& out) {
  auto model = fact::models::FactualityModel::load(checkpoint);
  auto rows = fact::verdata::load_megaveridicality(data_path);
  if (rows.empty()) throw fact::validation_error("cca: empty dataset");
  std::vector<fact::probe::ProbeItem> items;
  items.reserve(rows.size());
  for (const auto& row : rows) {
    fact::probe::ProbeItem item;
    item.input = fact::verdata::sentence_input_for(row);
    item.verb_index = row.verb_index;
    items.push_back(std::move(item));
  }
  auto [X, Y] = fact::probe::extract_probe_matrices(model, items);
  auto result = fact::probe::cca(X, Y, components);

  const std::string path = out_path(out);
  std::ofstream file(path);
  if (!file) throw fact::io_error("cannot open for writing: " + path);
  file.precision(17);
  file << "component,correlation\n";
  for (std::size_t i = 0; i < result.correlations.size(); ++i)
    file << (i + 1) << "," << result.correlations[i] << "\n";
  write_manifest(path, "cca", 0,
                 {{"checkpoint", checkpoint},
                  {"data", data_path},
                  {"components", components},
                  {"out", out}});
  std::cout << "wrote " << result.correlations.size()
            << " canonical correlations to " << path << "\n";
  return 0;
}

int cmd_analyze(const std::string& pred_path, const std::string& data_path,
                const std::string& column, std::size_t top_n,
                const std::string& out) {
  auto preds = fact::load_predictions_tsv(pred_path);
  auto rows = fact::verdata::load_megaveridicality(data_path);
  std::map<std::string, const fact::verdata::DatasetRow*> by_id;
  for (const auto& row : rows) by_id[row.sentence_id] = &row;

  const std::vector<double> col = preds.column(preds.column_index(column));
  std::vector<fact::probe::ErrorObservation> obs;
  std::vector<std::string> ids, texts;
  std::vector<double> gold, predicted;
  for (std::size_t i = 0; i < preds.row_ids.size(); ++i) {
    auto it = by_id.find(preds.row_ids[i]);
    if (it == by_id.end())
      throw fact::validation_error("analyze: no dataset row for sentence " +
                                   preds.row_ids[i]);
    const auto& row = *it->second;
    fact::probe::ErrorObservation o;
    o.abs_error = std::abs(row.gold_factuality - col[i]);
    o.factuality = row.gold_factuality;
    o.polarity = row.polarity;
    o.frame_id = row.frame_id;
    o.verb = row.verb;
    obs.push_back(std::move(o));
    ids.push_back(row.sentence_id);
    texts.push_back(row.sentence);
    gold.push_back(row.gold_factuality);
    predicted.push_back(col[i]);
  }

  auto report = fact::probe::error_regression(obs);
  auto worst = fact::probe::top_errors(ids, texts, gold, predicted, top_n);

  json jfixed = json::array();
  for (const auto& c : report.fixed_effects)
    jfixed.push_back({{"name", c.name}, {"beta", c.beta}, {"se", c.se},
                      {"t", c.t}});
  json jworst = json::array();
  for (const auto& w : worst)
    jworst.push_back({{"sentence_id", w.sentence_id},
                      {"sentence", w.sentence},
                      {"gold", w.gold},
                      {"predicted", w.predicted},
                      {"abs_error", w.abs_error}});
  json jreport = {{"fixed_effects", jfixed},
                  {"lrt_stat", report.lrt_stat},
                  {"lrt_df", report.lrt_df},
                  {"lrt_p", report.lrt_p},
                  {"mixed_converged", report.mixed_converged},
                  {"verb_intercept_sd", report.verb_intercept_sd},
                  {"polarity_slope_sd", report.polarity_slope_sd},
                  {"intercept_slope_corr", report.intercept_slope_corr},
                  {"residual_sd", report.residual_sd},
                  {"marginal_r2", report.marginal_r2},
                  {"conditional_r2", report.conditional_r2},
                  {"worst_errors", jworst}};
  const std::string path = out_path(out);
  std::ofstream file(path);
  if (!file) throw fact::io_error("cannot open for writing: " + path);
  file << jreport.dump(1) << "\n";
  write_manifest(path, "analyze", 0,
                 {{"pred", pred_path},
                  {"data", data_path},
                  {"column", column},
                  {"top", top_n},
                  {"out", out}});

  std::cout << "three-way interaction LRT: chi2(" << report.lrt_df << ") = "
            << report.lrt_stat << ", p = " << report.lrt_p << "\n"
            << "verb intercept sd " << report.verb_intercept_sd
            << ", polarity slope sd " << report.polarity_slope_sd
            << ", corr " << report.intercept_slope_corr << "\n"
            << "marginal R2 " << report.marginal_r2 << ", conditional R2 "
            << report.conditional_r2 << "\n";
  for (const auto& w : worst)
    std::cout << w.sentence << "\tgold " << w.gold << "\tpred " << w.predicted
              << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"event factuality pipeline"};
  app.require_subcommand(1);

  std::string verbs, annotations, data, checkpoint, pred, gold_path, out;
  std::string kind = "L", grid = "default", column, log_path, tag = "mega";
  std::size_t epochs = 20, layers = 2, hidden = 64, embed_dim = 50;
  std::size_t components = 50, top_n = 20;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  bool raw_mean_fallback = false;

  auto* generate = app.add_subcommand("generate", "render the templated dataset");
  generate->add_option("--verbs", verbs, "verb inventory TSV")->required();
  generate->add_option("--out", out, "output dataset TSV")->required();

  auto* normalize =
      app.add_subcommand("normalize", "ordinal-normalize annotator responses");
  normalize->add_option("--annotations", annotations, "annotation TSV")
      ->required();
  normalize->add_option("--out", out, "output TSV")->required();
  normalize->add_flag("--raw-mean-fallback", raw_mean_fallback,
                      "fall back to z-scored raw means on degenerate data");

  auto* train = app.add_subcommand("train", "train a multi-task regressor");
  train->add_option("--data", data, "corpus or dataset TSV")->required();
  train->add_option("--tag", tag, "dataset tag for untagged dataset TSVs");
  train->add_option("--out", out, "checkpoint path")->required();
  train->add_option("--kind", kind, "encoder kind: L, T, or H");
  train->add_option("--epochs", epochs, "training epochs");
  train->add_option("--lr", lr, "learning rate");
  train->add_option("--seed", seed, "random seed");
  train->add_option("--layers", layers, "encoder layers");
  train->add_option("--hidden", hidden, "hidden width");
  train->add_option("--embed-dim", embed_dim, "embedding width");
  train->add_option("--log", log_path, "per-epoch loss log (JSON lines)");

  auto* predict = app.add_subcommand("predict", "predict at every head");
  predict->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  predict->add_option("--data", data, "corpus or dataset TSV")->required();
  predict->add_option("--tag", tag, "dataset tag for untagged dataset TSVs");
  predict->add_option("--out", out, "predictions TSV")->required();

  auto* ablate = app.add_subcommand(
      "ablate-unk", "predict with the embedding verb forced to UNK");
  ablate->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  ablate->add_option("--data", data, "dataset TSV")->required();
  ablate->add_option("--out", out, "predictions TSV")->required();

  auto* ensemble =
      app.add_subcommand("ensemble", "nested cross-validated ridge ensembling");
  ensemble->add_option("--pred", pred, "predictions TSV")->required();
  ensemble->add_option("--gold", gold_path, "corpus or dataset TSV with gold values")
      ->required();
  ensemble->add_option("--grid", grid,
                       "'default' or comma-separated lambda values");
  ensemble->add_option("--seed", seed, "random seed");
  ensemble->add_option("--out", out, "report JSON")->required();

  auto* cca_cmd = app.add_subcommand(
      "cca", "canonical correlations between embeddings and hidden states");
  cca_cmd->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  cca_cmd->add_option("--data", data, "dataset TSV")->required();
  cca_cmd->add_option("--components", components, "component count");
  cca_cmd->add_option("--out", out, "output CSV")->required();

  auto* analyze = app.add_subcommand(
      "analyze", "error regression, mixed model, and worst-error report");
  analyze->add_option("--pred", pred, "predictions TSV")->required();
  analyze->add_option("--data", data, "dataset TSV")->required();
  analyze->add_option("--column", column, "prediction column to analyze")
      ->required();
  analyze->add_option("--top", top_n, "worst-error rows to report");
  analyze->add_option("--out", out, "report JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(verbs, out);
    if (normalize->parsed()) return cmd_normalize(annotations, out, raw_mean_fallback);
    if (train->parsed())
      return cmd_train(data, tag, out, kind, epochs, lr, seed, layers, hidden,
                       embed_dim, log_path);
    if (predict->parsed()) return cmd_predict(checkpoint, data, tag, out);
    if (ablate->parsed()) return cmd_ablate_unk(checkpoint, data, out);
    if (ensemble->parsed()) return cmd_ensemble(pred, gold_path, grid, seed, out);
    if (cca_cmd->parsed()) return cmd_cca(checkpoint, data, components, out);
    if (analyze->parsed()) return cmd_analyze(pred, data, column, top_n, out);
  } catch (const fact::io_error& e) {
    std::cerr << "error\tio\t" << e.what() << "\n";
    return 2;
  } catch (const fact::validation_error& e) {
    std::cerr << "error\tvalidation\t" << e.what() << "\n";
    return 3;
  } catch (const fact::numeric_error& e) {
    std::cerr << "error\tnumeric\t" << e.what() << "\n";
    return 4;
  }
  return 0;
}
