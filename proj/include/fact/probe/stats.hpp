#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fact/errors.hpp"

namespace fact::probe {

inline double mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) /
         static_cast<double>(x.size());
}

inline double variance(std::span<const double> x) {
  const double m = mean(x);
  double acc = 0.0;
  for (double v : x) acc += (v - m) * (v - m);
  return acc / static_cast<double>(x.size());
}

/// Pearson product-moment correlation.
inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw validation_error("pearson: length mismatch");
  if (x.size() < 2)
    throw validation_error("pearson: need at least two observations");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw numeric_error("pearson: undefined for a zero-variance argument");
  return sxy / std::sqrt(sxx * syy);
}

inline double mean_absolute_error(std::span<const double> pred,
                                  std::span<const double> gold) {
  if (pred.size() != gold.size())
    throw validation_error("mae: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    acc += std::abs(pred[i] - gold[i]);
  return acc / static_cast<double>(pred.size());
}

/// One row of the worst-prediction report.
struct ErrorRankEntry {
  std::string sentence_id;
  std::string sentence;
  double gold = 0.0;
  double predicted = 0.0;
  double abs_error = 0.0;
};

/// Top-n sentences by absolute prediction error, descending. n larger than
/// the dataset yields the full table.
inline std::vector<ErrorRankEntry> top_errors(
    const std::vector<std::string>& sentence_ids,
    const std::vector<std::string>& sentences, std::span<const double> gold,
    std::span<const double> predicted, std::size_t n) {
  if (sentence_ids.size() != gold.size() || gold.size() != predicted.size() ||
      sentences.size() != gold.size())
    throw validation_error("top_errors: input lengths differ");
  std::vector<ErrorRankEntry> entries;
  entries.reserve(gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i)
    entries.push_back({sentence_ids[i], sentences[i], gold[i], predicted[i],
                       std::abs(gold[i] - predicted[i])});
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) {
                     return a.abs_error > b.abs_error;
                   });
  if (entries.size() > n) entries.resize(n);
  return entries;
}

}  // namespace fact::probe
