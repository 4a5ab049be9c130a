#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "fact/errors.hpp"
#include "fact/verdata/dataset.hpp"

namespace fact::verdata {

/// One annotator's ordinal response to one sentence.
enum class Response { No = 0, MaybeOrMaybeNot = 1, Yes = 2 };

inline std::string response_name(Response r) {
  switch (r) {
    case Response::No: return "no";
    case Response::MaybeOrMaybeNot: return "maybe-or-maybe-not";
    case Response::Yes: return "yes";
  }
  return "?";
}

inline Response response_from_name(const std::string& s) {
  if (s == "no") return Response::No;
  if (s == "maybe-or-maybe-not") return Response::MaybeOrMaybeNot;
  if (s == "yes") return Response::Yes;
  throw validation_error("unknown response level: " + s);
}

struct AnnotationRecord {
  std::string sentence_id;
  std::string annotator_id;
  Response response = Response::MaybeOrMaybeNot;
};

struct NormalizedItem {
  std::string sentence_id;
  double factuality = 0.0;
};

struct NormalizeOptions {
  /// Fall back to z-scored raw means when the responses are degenerate
  /// (a single level observed overall).
  bool raw_mean_fallback = false;
  std::size_t iterations = 4000;
  double learning_rate = 0.05;
  /// Ridge penalty on per-sentence latent means (identifiability).
  double mean_penalty = 1.0;
  /// Ridge penalty on annotator intercepts (random-intercept stand-in).
  double annotator_penalty = 1.0;
};

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Flat-vector Adam ascent, local to the normalization fit.
struct FlatAdam {
  std::vector<double> m, v;
  long t = 0;
  double lr;
  explicit FlatAdam(std::size_t n, double lr_) : m(n, 0.0), v(n, 0.0), lr(lr_) {}
  void ascend(std::vector<double>& x, const std::vector<double>& g) {
    ++t;
    const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(t));
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      x[i] += lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + 1e-8);
    }
  }
};

}  // namespace detail

/// Fits a cumulative-link (proportional-odds, logit) model with a latent
/// mean per sentence and a penalized intercept per annotator, by penalized
/// maximum likelihood. Returns z-scored latent means, one per sentence, in
/// order of first appearance.
inline std::vector<NormalizedItem> normalize_responses(
    const std::vector<AnnotationRecord>& records,
    const NormalizeOptions& opts = {}) {
  if (records.empty())
    throw validation_error("normalize_responses: no annotation records");

  std::unordered_map<std::string, std::size_t> sent_ids, annot_ids;
  std::vector<std::string> sent_order;
  std::vector<std::size_t> obs_sent, obs_annot;
  std::vector<int> obs_y;
  bool levels_seen[3] = {false, false, false};
  for (const auto& r : records) {
    auto [sit, snew] = sent_ids.emplace(r.sentence_id, sent_ids.size());
    if (snew) sent_order.push_back(r.sentence_id);
    auto [ait, anew] = annot_ids.emplace(r.annotator_id, annot_ids.size());
    obs_sent.push_back(sit->second);
    obs_annot.push_back(ait->second);
    obs_y.push_back(static_cast<int>(r.response));
    levels_seen[static_cast<int>(r.response)] = true;
  }

  const std::size_t S = sent_ids.size(), A = annot_ids.size();
  const int levels = levels_seen[0] + levels_seen[1] + levels_seen[2];

  auto zscore = [&](std::vector<double> theta) {
    double mean = 0.0;
    for (double t : theta) mean += t;
    mean /= static_cast<double>(theta.size());
    double var = 0.0;
    for (double t : theta) var += (t - mean) * (t - mean);
    var /= static_cast<double>(theta.size());
    const double sd = std::sqrt(var);
    std::vector<NormalizedItem> out;
    out.reserve(S);
    for (std::size_t s = 0; s < S; ++s)
      out.push_back({sent_order[s],
                     sd > 0.0 ? (theta[s] - mean) / sd : 0.0});
    return out;
  };

  if (levels < 2) {
    if (!opts.raw_mean_fallback)
      throw numeric_error(
          "normalize_responses: single response level observed; the latent "
          "scale is unidentified (set raw_mean_fallback to use raw means)");
    std::vector<double> means(S, 0.0);
    std::vector<double> counts(S, 0.0);
    for (std::size_t i = 0; i < obs_y.size(); ++i) {
      means[obs_sent[i]] += obs_y[i];
      counts[obs_sent[i]] += 1.0;
    }
    for (std::size_t s = 0; s < S; ++s) means[s] /= counts[s];
    return zscore(std::move(means));
  }

  // Parameter layout: theta[0..S), u[S..S+A), c0, log_gap.
  const std::size_t n_params = S + A + 2;
  std::vector<double> x(n_params, 0.0);
  x[S + A] = -1.0;  // c0
  x[S + A + 1] = std::log(2.0);  // c1 = c0 + exp(log_gap)

  detail::FlatAdam opt(n_params, opts.learning_rate);
  std::vector<double> grad(n_params, 0.0);
  for (std::size_t iter = 0; iter < opts.iterations; ++iter) {
    std::fill(grad.begin(), grad.end(), 0.0);
    const double c0 = x[S + A];
    const double gap = std::exp(x[S + A + 1]);
    const double c1 = c0 + gap;
    for (std::size_t i = 0; i < obs_y.size(); ++i) {
      const double eta = x[obs_sent[i]] + x[S + obs_annot[i]];
      const double f0 = detail::sigmoid(c0 - eta);
      const double f1 = detail::sigmoid(c1 - eta);
      double d_eta = 0.0, d_c0 = 0.0, d_c1 = 0.0;
      switch (obs_y[i]) {
        case 0:
          d_c0 = 1.0 - f0;
          d_eta = -(1.0 - f0);
          break;
        case 1: {
          const double p = std::max(f1 - f0, 1e-12);
          d_c1 = f1 * (1.0 - f1) / p;
          d_c0 = -f0 * (1.0 - f0) / p;
          d_eta = -(d_c0 + d_c1);
          break;
        }
        case 2:
          d_c1 = -f1;
          d_eta = f1;
          break;
      }
      grad[obs_sent[i]] += d_eta;
      grad[S + obs_annot[i]] += d_eta;
      grad[S + A] += d_c0 + d_c1;
      grad[S + A + 1] += d_c1 * gap;
    }
    for (std::size_t s = 0; s < S; ++s) grad[s] -= opts.mean_penalty * x[s];
    for (std::size_t a = 0; a < A; ++a)
      grad[S + a] -= opts.annotator_penalty * x[S + a];
    opt.ascend(x, grad);
  }

  for (std::size_t s = 0; s < S; ++s)
    if (!std::isfinite(x[s]))
      throw numeric_error("normalize_responses: fit diverged");
  return zscore(std::vector<double>(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(S)));
}

// -- annotation TSV -----------------------------------------------------------

inline const char* kAnnotationHeader = "sentence_id\tannotator_id\tresponse";

inline void write_annotations_tsv(const std::string& path,
                                  const std::vector<AnnotationRecord>& records) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open for writing: " + path);
  out << kAnnotationHeader << "\n";
  for (const auto& r : records)
    out << r.sentence_id << '\t' << r.annotator_id << '\t'
        << response_name(r.response) << "\n";
}

inline std::vector<AnnotationRecord> load_annotations_tsv(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open annotation file: " + path);
  std::vector<AnnotationRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line == kAnnotationHeader) continue;
    auto fields = tsv::split(line, '\t');
    if (fields.size() != 3)
      throw io_error(path + ":" + std::to_string(line_no) +
                     ": expected 3 fields");
    records.push_back({fields[0], fields[1], response_from_name(fields[2])});
  }
  return records;
}

}  // namespace fact::verdata
