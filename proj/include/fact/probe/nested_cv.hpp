#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "fact/probe/ridge.hpp"
#include "fact/probe/stats.hpp"

namespace fact::probe {

struct OuterFoldResult {
  double lambda = 0.0;
  double pearson_r = 0.0;
  bool valid = true;
  std::vector<std::size_t> test_indices;
  /// Inner fold id per outer-training row, aligned with train_indices.
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> inner_fold_of;
};

struct NestedCvReport {
  std::vector<OuterFoldResult> folds;
  double mean_r = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t invalid_folds = 0;
  std::vector<double> grid;
};

namespace detail {

inline double mse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

inline Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X,
                                 const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), X.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) =
        X.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

inline Eigen::VectorXd take(const Eigen::VectorXd& y,
                            const std::vector<std::size_t>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = y[static_cast<Eigen::Index>(idx[i])];
  return out;
}

/// Balanced fold assignment over a shuffled index order.
inline std::vector<std::vector<std::size_t>> make_folds(
    std::vector<std::size_t> indices, std::size_t k, std::mt19937_64& rng) {
  std::shuffle(indices.begin(), indices.end(), rng);
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < indices.size(); ++i)
    folds[i % k].push_back(indices[i]);
  return folds;
}

}  // namespace detail

/// 10-fold/10-fold nested cross-validation of a ridge ensemble. The inner
/// folds pick the lambda minimizing mean validation MSE (ties broken toward
/// the smaller lambda); each outer fold reports Pearson r on its held-out
/// test split. The confidence interval is a 1,000-iteration bootstrap over
/// the outer-fold r values.
inline NestedCvReport nested_cv(const Eigen::MatrixXd& P,
                                const Eigen::VectorXd& gold,
                                std::vector<double> grid = {},
                                std::size_t k_outer = 10,
                                std::size_t k_inner = 10,
                                std::uint64_t seed = 1) {
  if (grid.empty()) grid = default_lambda_grid();
  std::sort(grid.begin(), grid.end());
  const auto n = static_cast<std::size_t>(P.rows());
  if (n != static_cast<std::size_t>(gold.size()))
    throw validation_error("nested_cv: row count mismatch");
  if (n < k_outer)
    throw validation_error("nested_cv: fewer rows than outer folds");

  NestedCvReport report;
  report.grid = grid;

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  auto outer_folds = detail::make_folds(all, k_outer, rng);

  for (std::size_t f = 0; f < k_outer; ++f) {
    OuterFoldResult fold;
    fold.test_indices = outer_folds[f];
    for (std::size_t g = 0; g < k_outer; ++g)
      if (g != f)
        fold.train_indices.insert(fold.train_indices.end(),
                                  outer_folds[g].begin(),
                                  outer_folds[g].end());

    // Inner CV over the outer-training rows only.
    std::mt19937_64 inner_rng(seed * 0x9E3779B97F4A7C15ull + f + 1);
    std::vector<std::size_t> local(fold.train_indices.size());
    std::iota(local.begin(), local.end(), 0);
    auto inner_folds = detail::make_folds(local, k_inner, inner_rng);
    fold.inner_fold_of.assign(fold.train_indices.size(), 0);
    for (std::size_t g = 0; g < k_inner; ++g)
      for (std::size_t i : inner_folds[g]) fold.inner_fold_of[i] = g;

    double best_mse = std::numeric_limits<double>::infinity();
    double best_lambda = grid.front();
    for (double lambda : grid) {
      double acc = 0.0;
      std::size_t used = 0;
      for (std::size_t g = 0; g < k_inner; ++g) {
        std::vector<std::size_t> tr, va;
        for (std::size_t i = 0; i < local.size(); ++i)
          (fold.inner_fold_of[i] == g ? va : tr)
              .push_back(fold.train_indices[i]);
        if (tr.size() < 2 || va.empty()) continue;
        RidgeModel m =
            ridge_fit(detail::take_rows(P, tr), detail::take(gold, tr), lambda);
        acc += detail::mse(m.predict(detail::take_rows(P, va)),
                           detail::take(gold, va));
        ++used;
      }
      if (used == 0) continue;
      const double mean_mse = acc / static_cast<double>(used);
      if (mean_mse < best_mse) {  // strict: ties keep the smaller lambda
        best_mse = mean_mse;
        best_lambda = lambda;
      }
    }
    fold.lambda = best_lambda;

    RidgeModel final_model = ridge_fit(detail::take_rows(P, fold.train_indices),
                                       detail::take(gold, fold.train_indices),
                                       best_lambda);
    const Eigen::VectorXd pred =
        final_model.predict(detail::take_rows(P, fold.test_indices));
    const Eigen::VectorXd truth = detail::take(gold, fold.test_indices);
    try {
      std::vector<double> pv(pred.data(), pred.data() + pred.size());
      std::vector<double> tv(truth.data(), truth.data() + truth.size());
      fold.pearson_r = pearson(pv, tv);
    } catch (const std::exception&) {
      fold.valid = false;
      ++report.invalid_folds;
    }
    report.folds.push_back(std::move(fold));
  }

  std::vector<double> rs;
  for (const auto& f : report.folds)
    if (f.valid) rs.push_back(f.pearson_r);
  if (rs.empty())
    throw numeric_error("nested_cv: no valid outer fold");
  report.mean_r = mean(rs);

  // Bootstrap the mean of the outer-fold correlations.
  constexpr std::size_t kBootstrap = 1000;
  std::mt19937_64 boot_rng(seed * 0xD1B54A32D192ED03ull + 17);
  std::uniform_int_distribution<std::size_t> pick(0, rs.size() - 1);
  std::vector<double> boot_means;
  boot_means.reserve(kBootstrap);
  for (std::size_t b = 0; b < kBootstrap; ++b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rs.size(); ++i) acc += rs[pick(boot_rng)];
    boot_means.push_back(acc / static_cast<double>(rs.size()));
  }
  std::sort(boot_means.begin(), boot_means.end());
  report.ci_low = boot_means[static_cast<std::size_t>(0.025 * kBootstrap)];
  report.ci_high = boot_means[static_cast<std::size_t>(0.975 * kBootstrap) - 1];
  return report;
}

}  // namespace fact::probe
