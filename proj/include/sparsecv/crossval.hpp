#ifndef SPARSECV_CROSSVAL_HPP
#define SPARSECV_CROSSVAL_HPP

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "sparsecv/datagen.hpp"
#include "sparsecv/penalty.hpp"
#include "sparsecv/problem.hpp"
#include "sparsecv/solver.hpp"

namespace sparsecv {

enum class CvMethod { APPROX, LITERAL_LOO, KFOLD };

struct CvPointResult {
  double lambda = 0.0;
  double epsilon_cv = 0.0;
  std::vector<double> per_sample_terms;  // (1/2) Theta_mu (y_mu - a_mu^T x)^2
  double error_bar = 0.0;                // stddev(terms) / sqrt(M)
  CvMethod method = CvMethod::APPROX;
  bool hessian_ok = true;        // APPROX only: Hessian PD and all denominators > 0
  bool folds_converged = true;   // literal methods only
  Eigen::Index k_active = 0;     // ||x_hat||_0 of the full-data fit
};

struct CvCurve {
  std::vector<CvPointResult> points;   // descending lambda
  std::vector<bool> stable_mask;
  std::optional<double> lambda_c;      // largest lambda flagged irregular
};

namespace detail {

inline void finalize_terms(CvPointResult& r) {
  const std::size_t m = r.per_sample_terms.size();
  double mean = 0.0;
  for (double t : r.per_sample_terms) mean += t;
  mean /= m;
  double var = 0.0;
  for (double t : r.per_sample_terms) var += (t - mean) * (t - mean);
  var = m > 1 ? var / (m - 1) : 0.0;
  r.epsilon_cv = mean;
  r.error_bar = std::sqrt(var / m);
}

}  // namespace detail

// Approximate LOO error from the full-data fit alone:
//   eps ~= (1/2M) sum_mu Theta_mu (y_mu - a_mu^T x)^2,
//   Theta_mu = (1 - b_mu^T G^{-1} b_mu)^{-2},
//   G = A_S^T A_S + diag(d^2 J(x_S)), b_mu = (a_mu)_S.
// A non-positive-definite G or a nonpositive denominator flips hessian_ok;
// the value is still reported and feeds the instability detector.
inline CvPointResult approx_loo(const RegressionProblem& problem, const Estimate& est,
                                const PenaltySpec& spec) {
  const Eigen::Index M = problem.m();
  CvPointResult r;
  r.lambda = spec.lambda;
  r.method = CvMethod::APPROX;
  r.k_active = est.k();
  const Vector resid = problem.y - problem.A * est.x_hat;

  if (est.active_set.empty()) {  // LOO estimator is also zero: Theta = 1
    r.per_sample_terms.resize(M);
    for (Eigen::Index mu = 0; mu < M; ++mu)
      r.per_sample_terms[mu] = 0.5 * resid[mu] * resid[mu];
    detail::finalize_terms(r);
    return r;
  }

  const Eigen::Index K = est.k();
  Matrix As(M, K);
  Vector curv(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const Eigen::Index j = est.active_set[k];
    As.col(k) = problem.A.col(j);
    curv[k] = penalty_curvature(est.x_hat[j], spec);
  }
  Matrix G = As.transpose() * As;
  G.diagonal() += curv;

  Eigen::LDLT<Matrix> ldlt(G);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) r.hessian_ok = false;

  const Matrix P = ldlt.solve(As.transpose());            // K x M
  const Vector quad = (As.transpose().cwiseProduct(P)).colwise().sum();  // b^T G^-1 b

  r.per_sample_terms.resize(M);
  for (Eigen::Index mu = 0; mu < M; ++mu) {
    const double t = 1.0 - quad[mu];
    double theta;
    if (t <= 0.0) {
      r.hessian_ok = false;
      theta = (t == 0.0) ? std::numeric_limits<double>::infinity() : 1.0 / (t * t);
    } else {
      theta = 1.0 / (t * t);
      if (theta < 1.0 - 1e-9) r.hessian_ok = false;  // quad < 0: G not PD
    }
    r.per_sample_terms[mu] = 0.5 * theta * resid[mu] * resid[mu];
    if (!std::isfinite(r.per_sample_terms[mu])) r.hessian_ok = false;
  }
  detail::finalize_terms(r);
  return r;
}

// Literal LOO: refit on the M-1 remaining rows for each mu, warm-started
// from the full-data solution.
inline CvPointResult literal_loo(const RegressionProblem& problem,
                                 const PenaltySpec& spec, const Vector& warm_start,
                                 const CdOptions& opts = {}) {
  const Eigen::Index M = problem.m(), N = problem.n();
  if (M < 2) throw std::invalid_argument("literal_loo: need M >= 2");
  CvPointResult r;
  r.lambda = spec.lambda;
  r.method = CvMethod::LITERAL_LOO;
  r.per_sample_terms.resize(M);
  Eigen::Index full_k = 0;
  for (Eigen::Index i = 0; i < N; ++i)
    if (warm_start[i] != 0.0) ++full_k;
  r.k_active = full_k;

  for (Eigen::Index mu = 0; mu < M; ++mu) {
    Matrix Aloo(M - 1, N);
    Vector yloo(M - 1);
    Eigen::Index row = 0;
    for (Eigen::Index nu = 0; nu < M; ++nu) {
      if (nu == mu) continue;
      Aloo.row(row) = problem.A.row(nu);
      yloo[row] = problem.y[nu];
      ++row;
    }
    RegressionProblem sub(std::move(yloo), std::move(Aloo));
    CdOptions fold_opts = opts;
    fold_opts.seed = opts.seed * 1000003ull + static_cast<std::uint64_t>(mu);
    const Estimate fit = coordinate_descent(sub, spec, warm_start, fold_opts);
    if (!fit.converged) r.folds_converged = false;
    const double pred_err = problem.y[mu] - problem.A.row(mu).dot(fit.x_hat);
    r.per_sample_terms[mu] = 0.5 * pred_err * pred_err;
  }
  detail::finalize_terms(r);
  return r;
}

// k-fold CV with a seeded random equal partition; k = M reproduces the
// literal LOO semantics.
inline CvPointResult kfold_cv(const RegressionProblem& problem, const PenaltySpec& spec,
                              Eigen::Index k, std::uint64_t partition_seed,
                              const Vector& warm_start, const CdOptions& opts = {}) {
  const Eigen::Index M = problem.m(), N = problem.n();
  if (k < 2 || k > M) throw std::invalid_argument("kfold_cv: need 2 <= k <= M");
  CvPointResult r;
  r.lambda = spec.lambda;
  r.method = CvMethod::KFOLD;
  r.per_sample_terms.resize(M);
  Eigen::Index full_k = 0;
  for (Eigen::Index i = 0; i < N; ++i)
    if (warm_start[i] != 0.0) ++full_k;
  r.k_active = full_k;

  std::vector<Eigen::Index> perm(M);
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::mt19937_64 rng(partition_seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> fold_of(M);
  for (Eigen::Index i = 0; i < M; ++i) fold_of[perm[i]] = static_cast<int>(i % k);

  for (int f = 0; f < static_cast<int>(k); ++f) {
    Eigen::Index train_rows = 0;
    for (Eigen::Index mu = 0; mu < M; ++mu)
      if (fold_of[mu] != f) ++train_rows;
    Matrix At(train_rows, N);
    Vector yt(train_rows);
    Eigen::Index row = 0;
    for (Eigen::Index mu = 0; mu < M; ++mu) {
      if (fold_of[mu] == f) continue;
      At.row(row) = problem.A.row(mu);
      yt[row] = problem.y[mu];
      ++row;
    }
    RegressionProblem sub(std::move(yt), std::move(At));
    CdOptions fold_opts = opts;
    fold_opts.seed = opts.seed * 1000003ull + static_cast<std::uint64_t>(f);
    const Estimate fit = coordinate_descent(sub, spec, warm_start, fold_opts);
    if (!fit.converged) r.folds_converged = false;
    for (Eigen::Index mu = 0; mu < M; ++mu) {
      if (fold_of[mu] != f) continue;
      const double pred_err = problem.y[mu] - problem.A.row(mu).dot(fit.x_hat);
      r.per_sample_terms[mu] = 0.5 * pred_err * pred_err;
    }
  }
  detail::finalize_terms(r);
  return r;
}

// Instability detection along a descending-lambda curve. A point is
// irregular when its CV error differs from any of its `window` larger-lambda
// neighbours by more than k_detect times that neighbour's error bar, or when
// its Hessian flag is down. Everything at or below the largest irregular
// lambda is marked unstable (one cut; re-entrant stable windows discarded).
inline CvCurve detect_instability(std::vector<CvPointResult> points,
                                  double k_detect = 3.0, int window = 2) {
  for (std::size_t j = 1; j < points.size(); ++j)
    if (!(points[j].lambda < points[j - 1].lambda))
      throw std::invalid_argument("detect_instability: points must be descending in lambda");
  CvCurve curve;
  curve.points = std::move(points);
  const std::size_t n = curve.points.size();
  std::size_t first_irregular = n;
  for (std::size_t j = 0; j < n; ++j) {
    const CvPointResult& p = curve.points[j];
    bool irregular =
        (p.method == CvMethod::APPROX && !p.hessian_ok) || !std::isfinite(p.epsilon_cv);
    for (int back = 1; !irregular && back <= window && back <= static_cast<int>(j);
         ++back) {
      const CvPointResult& nb = curve.points[j - back];
      if (!std::isfinite(nb.epsilon_cv)) continue;
      if (std::abs(p.epsilon_cv - nb.epsilon_cv) > k_detect * nb.error_bar)
        irregular = true;
    }
    if (irregular) {
      first_irregular = j;
      break;
    }
  }
  curve.stable_mask.assign(n, true);
  if (first_irregular < n) {
    curve.lambda_c = curve.points[first_irregular].lambda;
    for (std::size_t j = first_irregular; j < n; ++j) curve.stable_mask[j] = false;
  }
  return curve;
}

// ((eps_approx - eps_literal) / eps_literal)^2
inline double normalized_mse(double approx, double literal) {
  if (!(literal > 0.0)) throw std::invalid_argument("normalized_mse: literal must be > 0");
  const double d = (approx - literal) / literal;
  return d * d;
}

struct OneStdErrorSelection {
  double a = 0.0;
  double lambda = 0.0;
  Eigen::Index k = 0;
  double epsilon_cv = 0.0;
  std::size_t curve_index = 0;  // into the supplied list
  std::size_t point_index = 0;
};

// One-standard-error rule over a family of curves (one per switching
// parameter a): among stable points with CV error within one error bar of
// the global stable minimum, pick the sparsest; ties go to larger lambda,
// then larger a. The error bar used is the one of the minimum point.
inline OneStdErrorSelection one_std_error_select(
    const std::vector<double>& a_values, const std::vector<CvCurve>& curves) {
  if (a_values.size() != curves.size())
    throw std::invalid_argument("one_std_error_select: size mismatch");
  bool found = false;
  double best_eps = 0.0, best_bar = 0.0;
  for (std::size_t c = 0; c < curves.size(); ++c) {
    for (std::size_t j = 0; j < curves[c].points.size(); ++j) {
      if (!curves[c].stable_mask[j]) continue;
      const CvPointResult& p = curves[c].points[j];
      if (!std::isfinite(p.epsilon_cv)) continue;
      if (!found || p.epsilon_cv < best_eps) {
        found = true;
        best_eps = p.epsilon_cv;
        best_bar = p.error_bar;
      }
    }
  }
  if (!found) throw std::runtime_error("one_std_error_select: no stable points");
  const double threshold = best_eps + best_bar;

  OneStdErrorSelection sel;
  bool have = false;
  for (std::size_t c = 0; c < curves.size(); ++c) {
    for (std::size_t j = 0; j < curves[c].points.size(); ++j) {
      if (!curves[c].stable_mask[j]) continue;
      const CvPointResult& p = curves[c].points[j];
      if (!std::isfinite(p.epsilon_cv) || p.epsilon_cv > threshold) continue;
      const bool better =
          !have || p.k_active < sel.k ||
          (p.k_active == sel.k &&
           (p.lambda > sel.lambda ||
            (p.lambda == sel.lambda && a_values[c] > sel.a)));
      if (better) {
        have = true;
        sel.a = a_values[c];
        sel.lambda = p.lambda;
        sel.k = p.k_active;
        sel.epsilon_cv = p.epsilon_cv;
        sel.curve_index = c;
        sel.point_index = j;
      }
    }
  }
  return sel;
}

struct GeneralizationCheck {
  double mc_error = 0.0;      // Monte-Carlo extra-sample error
  double mc_std_error = 0.0;
  double predicted = 0.0;     // eps_x / alpha + sigma_D2 / 2
};

// Monte-Carlo check of the generalisation identity: fresh rows are drawn
// from the same generative process as the training design.
inline GeneralizationCheck generalization_gap_check(const RegressionProblem& problem,
                                                    const Estimate& est,
                                                    const EnsembleParams& ensemble,
                                                    long n_fresh, std::uint64_t seed) {
  if (!problem.x0)
    throw std::invalid_argument("generalization_gap_check: ground truth required");
  const Eigen::Index M = problem.m(), N = problem.n();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  const double row_sd = 1.0 / std::sqrt(static_cast<double>(M));
  const double sig_D = std::sqrt(ensemble.sigma_D2);
  const Vector diff = est.x_hat - *problem.x0;

  double sum = 0.0, sum2 = 0.0;
  Vector a_new(N);
  for (long t = 0; t < n_fresh; ++t) {
    for (Eigen::Index i = 0; i < N; ++i) a_new[i] = row_sd * unit(rng);
    const double err = sig_D * unit(rng) - a_new.dot(diff);  // y_new - a_new^T x_hat
    const double term = 0.5 * err * err;
    sum += term;
    sum2 += term * term;
  }
  GeneralizationCheck out;
  out.mc_error = sum / n_fresh;
  const double var = std::max(0.0, sum2 / n_fresh - out.mc_error * out.mc_error);
  out.mc_std_error = std::sqrt(var / n_fresh);
  out.predicted = input_mse(problem, est) / problem.alpha() + 0.5 * ensemble.sigma_D2;
  return out;
}

}  // namespace sparsecv

#endif  // SPARSECV_CROSSVAL_HPP
