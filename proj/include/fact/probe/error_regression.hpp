#pragma once

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fact/probe/stats.hpp"
#include "fact/verdata/frames.hpp"

namespace fact::probe {

/// One observation of the error analysis: a sentence's absolute ensemble
/// error and its covariates.
struct ErrorObservation {
  double abs_error = 0.0;
  double factuality = 0.0;
  verdata::Polarity polarity = verdata::Polarity::Positive;
  std::string frame_id;
  std::string verb;
};

struct Coefficient {
  std::string name;
  double beta = 0.0;
  double se = 0.0;
  double t = 0.0;
};

struct ErrorRegressionReport {
  std::vector<Coefficient> fixed_effects;
  double lrt_stat = 0.0;
  std::size_t lrt_df = 0;
  double lrt_p = 1.0;
  bool mixed_converged = false;
  double verb_intercept_sd = 0.0;
  double polarity_slope_sd = 0.0;
  double intercept_slope_corr = 0.0;
  double residual_sd = 0.0;
  double marginal_r2 = 0.0;
  double conditional_r2 = 0.0;
};

namespace detail {

inline const std::string kReferenceFrame = "NP was _ed that S";

/// Non-reference frame levels in canonical order, each owning one sum-coded
/// contrast column; the reference level codes -1 on all of them.
inline std::vector<std::string> contrast_frames() {
  std::vector<std::string> out;
  for (const auto& f : verdata::enumerate_frames())
    if (f.id != kReferenceFrame) out.push_back(f.id);
  return out;
}

/// Full sum-coded design: intercept, polarity, factuality, 8 frame
/// contrasts, and all two- and three-way interactions (36 columns).
/// Column names are returned alongside.
inline std::pair<Eigen::MatrixXd, std::vector<std::string>> build_design(
    const std::vector<ErrorObservation>& obs) {
  const auto frames = contrast_frames();
  const std::size_t n = obs.size();
  const std::size_t p = 3 + 3 * frames.size() + 1 + frames.size();
  Eigen::MatrixXd X(n, p);
  std::vector<std::string> names;
  names.reserve(p);
  names.push_back("(Intercept)");
  names.push_back("polarity");
  names.push_back("factuality");
  for (const auto& f : frames) names.push_back(f);
  names.push_back("polarity:factuality");
  for (const auto& f : frames) names.push_back("polarity:" + f);
  for (const auto& f : frames) names.push_back("factuality:" + f);
  for (const auto& f : frames) names.push_back("polarity:factuality:" + f);

  for (std::size_t i = 0; i < n; ++i) {
    const double pol =
        obs[i].polarity == verdata::Polarity::Positive ? 1.0 : -1.0;
    const double fac = obs[i].factuality;
    std::vector<double> frame_code(frames.size(), 0.0);
    if (obs[i].frame_id == kReferenceFrame) {
      std::fill(frame_code.begin(), frame_code.end(), -1.0);
    } else {
      bool found = false;
      for (std::size_t j = 0; j < frames.size(); ++j)
        if (frames[j] == obs[i].frame_id) {
          frame_code[j] = 1.0;
          found = true;
        }
      if (!found)
        throw validation_error("error_regression: unknown frame id " +
                               obs[i].frame_id);
    }
    std::size_t c = 0;
    auto ei = static_cast<Eigen::Index>(i);
    X(ei, c++) = 1.0;
    X(ei, c++) = pol;
    X(ei, c++) = fac;
    for (double fc : frame_code) X(ei, static_cast<Eigen::Index>(c++)) = fc;
    X(ei, c++) = pol * fac;
    for (double fc : frame_code)
      X(ei, static_cast<Eigen::Index>(c++)) = pol * fc;
    for (double fc : frame_code)
      X(ei, static_cast<Eigen::Index>(c++)) = fac * fc;
    for (double fc : frame_code)
      X(ei, static_cast<Eigen::Index>(c++)) = pol * fac * fc;
  }
  return {std::move(X), std::move(names)};
}

inline double ols_rss(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      Eigen::VectorXd* beta_out = nullptr) {
  Eigen::VectorXd beta =
      X.colPivHouseholderQr().solve(y);
  const double rss = (y - X * beta).squaredNorm();
  if (beta_out) *beta_out = std::move(beta);
  return rss;
}

/// Compact Nelder-Mead over a small fixed dimension.
template <typename Fn>
inline bool nelder_mead(std::vector<double>& x, Fn&& f,
                        std::size_t max_iter = 500, double tol = 1e-8) {
  const std::size_t d = x.size();
  std::vector<std::vector<double>> simplex(d + 1, x);
  std::vector<double> fv(d + 1);
  for (std::size_t i = 0; i < d; ++i) simplex[i + 1][i] += 0.5;
  for (std::size_t i = 0; i <= d; ++i) fv[i] = f(simplex[i]);

  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    std::vector<std::size_t> order(d + 1);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    if (std::abs(fv[order[d]] - fv[order[0]]) <
        tol * (1.0 + std::abs(fv[order[0]]))) {
      x = simplex[order[0]];
      return true;
    }
    std::vector<double> centroid(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        centroid[j] += simplex[order[i]][j] / static_cast<double>(d);
    auto combine = [&](double t) {
      std::vector<double> p(d);
      for (std::size_t j = 0; j < d; ++j)
        p[j] = centroid[j] + t * (simplex[order[d]][j] - centroid[j]);
      return p;
    };
    auto reflected = combine(-1.0);
    double fr = f(reflected);
    if (fr < fv[order[0]]) {
      auto expanded = combine(-2.0);
      double fe = f(expanded);
      if (fe < fr) {
        simplex[order[d]] = expanded;
        fv[order[d]] = fe;
      } else {
        simplex[order[d]] = reflected;
        fv[order[d]] = fr;
      }
    } else if (fr < fv[order[d - 1]]) {
      simplex[order[d]] = reflected;
      fv[order[d]] = fr;
    } else {
      auto contracted = combine(0.5);
      double fc = f(contracted);
      if (fc < fv[order[d]]) {
        simplex[order[d]] = contracted;
        fv[order[d]] = fc;
      } else {
        for (std::size_t i = 1; i <= d; ++i) {
          for (std::size_t j = 0; j < d; ++j)
            simplex[order[i]][j] =
                0.5 * (simplex[order[i]][j] + simplex[order[0]][j]);
          fv[order[i]] = f(simplex[order[i]]);
        }
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i <= d; ++i)
    if (fv[i] < fv[best]) best = i;
  x = simplex[best];
  return false;
}

}  // namespace detail

/// Regresses standardized log absolute error against factuality, matrix
/// polarity, and frame under sum coding, with all two- and three-way
/// interactions. The three-way block is tested by a likelihood-ratio
/// comparison of nested Gaussian fits (df = 8 for the 9-frame design). A
/// mixed-effects variant adds a per-verb random intercept and a correlated
/// by-verb polarity slope, fit by direct profiled maximum likelihood over
/// the three covariance parameters.
inline ErrorRegressionReport error_regression(
    const std::vector<ErrorObservation>& obs) {
  {
    std::set<std::string> frames_seen;
    std::set<verdata::Polarity> pol_seen;
    for (const auto& o : obs) {
      frames_seen.insert(o.frame_id);
      pol_seen.insert(o.polarity);
    }
    if (frames_seen.size() != verdata::enumerate_frames().size())
      throw validation_error("error_regression: all 9 frames must be present");
    if (pol_seen.size() != 2)
      throw validation_error("error_regression: both polarities must be present");
  }

  const auto n = static_cast<Eigen::Index>(obs.size());
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i)
    y[i] = std::log(obs[static_cast<std::size_t>(i)].abs_error + 1e-6);
  const double y_mean = y.mean();
  const double y_sd = std::sqrt((y.array() - y_mean).square().sum() /
                                static_cast<double>(n));
  if (y_sd == 0.0)
    throw numeric_error("error_regression: constant response");
  y = (y.array() - y_mean) / y_sd;

  auto [X, names] = detail::build_design(obs);
  const Eigen::Index p = X.cols();
  if (n <= p)
    throw validation_error("error_regression: not enough observations");

  ErrorRegressionReport report;

  // Fixed-effects fit with coefficient standard errors.
  Eigen::VectorXd beta;
  const double rss_full = detail::ols_rss(X, y, &beta);
  const double sigma2 = rss_full / static_cast<double>(n - p);
  const Eigen::MatrixXd xtx_inv =
      (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  for (Eigen::Index j = 0; j < p; ++j) {
    Coefficient c;
    c.name = names[static_cast<std::size_t>(j)];
    c.beta = beta[j];
    c.se = std::sqrt(sigma2 * xtx_inv(j, j));
    c.t = c.se > 0.0 ? c.beta / c.se : 0.0;
    report.fixed_effects.push_back(std::move(c));
  }
  report.residual_sd = std::sqrt(sigma2);

  // LRT for the three-way interaction block (the trailing 8 columns).
  const Eigen::Index q = 8;
  const double rss_reduced = detail::ols_rss(X.leftCols(p - q), y);
  report.lrt_stat =
      static_cast<double>(n) * std::log(rss_reduced / rss_full);
  report.lrt_df = static_cast<std::size_t>(q);
  boost::math::chi_squared chi2(static_cast<double>(q));
  report.lrt_p = boost::math::cdf(boost::math::complement(
      chi2, std::max(report.lrt_stat, 0.0)));

  // Mixed-effects variant: per-verb random intercept + polarity slope.
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < obs.size(); ++i)
    groups[obs[i].verb].push_back(i);

  struct Group {
    Eigen::MatrixXd X, Z;
    Eigen::VectorXd y;
  };
  std::vector<Group> gs;
  for (const auto& [verb, idx] : groups) {
    Group g;
    const auto m = static_cast<Eigen::Index>(idx.size());
    g.X.resize(m, p);
    g.Z.resize(m, 2);
    g.y.resize(m);
    for (Eigen::Index r = 0; r < m; ++r) {
      const std::size_t i = idx[static_cast<std::size_t>(r)];
      g.X.row(r) = X.row(static_cast<Eigen::Index>(i));
      g.Z(r, 0) = 1.0;
      g.Z(r, 1) = obs[i].polarity == verdata::Polarity::Positive ? 1.0 : -1.0;
      g.y[r] = y[static_cast<Eigen::Index>(i)];
    }
    gs.push_back(std::move(g));
  }

  // phi = (log l11, l21, log l22) parameterizing D = L L' with
  // V = sigma^2 (Z D Z' + I); sigma^2 and beta are profiled out.
  Eigen::VectorXd beta_mixed = beta;
  double sigma2_mixed = sigma2;
  Eigen::Matrix2d D_best = Eigen::Matrix2d::Zero();
  auto deviance = [&](const std::vector<double>& phi, Eigen::VectorXd* beta_out,
                      double* sigma2_out, Eigen::Matrix2d* D_out) {
    Eigen::Matrix2d L;
    L << std::exp(phi[0]), 0.0, phi[1], std::exp(phi[2]);
    const Eigen::Matrix2d D = L * L.transpose();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd bvec = Eigen::VectorXd::Zero(p);
    double logdet = 0.0;
    std::vector<Eigen::LLT<Eigen::MatrixXd>> solvers;
    solvers.reserve(gs.size());
    for (const auto& g : gs) {
      Eigen::MatrixXd V =
          g.Z * D * g.Z.transpose() +
          Eigen::MatrixXd::Identity(g.y.size(), g.y.size());
      Eigen::LLT<Eigen::MatrixXd> llt(V);
      if (llt.info() != Eigen::Success)
        return std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < g.y.size(); ++i)
        logdet += 2.0 * std::log(llt.matrixL()(i, i));
      const Eigen::MatrixXd Vinv_X = llt.solve(g.X);
      A += g.X.transpose() * Vinv_X;
      bvec += Vinv_X.transpose() * g.y;
      solvers.push_back(std::move(llt));
    }
    const Eigen::VectorXd b_hat = A.ldlt().solve(bvec);
    double rss_gls = 0.0;
    for (std::size_t gi = 0; gi < gs.size(); ++gi) {
      const Eigen::VectorXd r = gs[gi].y - gs[gi].X * b_hat;
      rss_gls += r.dot(solvers[gi].solve(r));
    }
    const double s2 = rss_gls / static_cast<double>(n);
    if (!(s2 > 0.0) || !std::isfinite(s2))
      return std::numeric_limits<double>::infinity();
    if (beta_out) *beta_out = b_hat;
    if (sigma2_out) *sigma2_out = s2;
    if (D_out) *D_out = D;
    return static_cast<double>(n) * std::log(2.0 * M_PI * s2) + logdet +
           static_cast<double>(n);
  };

  std::vector<double> phi = {std::log(0.3), 0.0, std::log(0.3)};
  const bool converged = detail::nelder_mead(
      phi, [&](const std::vector<double>& v) {
        return deviance(v, nullptr, nullptr, nullptr);
      });
  const double final_dev = deviance(phi, &beta_mixed, &sigma2_mixed, &D_best);
  report.mixed_converged = converged && std::isfinite(final_dev);

  if (report.mixed_converged) {
    const Eigen::Matrix2d G = sigma2_mixed * D_best;
    report.verb_intercept_sd = std::sqrt(std::max(G(0, 0), 0.0));
    report.polarity_slope_sd = std::sqrt(std::max(G(1, 1), 0.0));
    const double denom = report.verb_intercept_sd * report.polarity_slope_sd;
    report.intercept_slope_corr = denom > 0.0 ? G(0, 1) / denom : 0.0;

    // Nakagawa variance decomposition over the realized design.
    const Eigen::VectorXd fitted = X * beta_mixed;
    const double var_f =
        (fitted.array() - fitted.mean()).square().sum() / static_cast<double>(n);
    double var_r = 0.0;
    for (const auto& g : gs)
      var_r += ((g.Z * G).cwiseProduct(g.Z)).sum();
    var_r /= static_cast<double>(n);
    const double total = var_f + var_r + sigma2_mixed;
    report.marginal_r2 = var_f / total;
    report.conditional_r2 = (var_f + var_r) / total;
  }
  return report;
}

}  // namespace fact::probe
