#ifndef SPARSECV_DATAGEN_HPP
#define SPARSECV_DATAGEN_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sparsecv/problem.hpp"

namespace sparsecv {

// Generative ensemble: y = A x0 + noise, A_{mu i} iid N(0, 1/M),
// x0 iid Bernoulli(rho0) x N(0, sigma_x2).
struct EnsembleParams {
  double alpha = 0.5;
  double rho0 = 0.2;
  double sigma_x2 = 5.0;   // default 1/rho0: unit signal power per component
  double sigma_D2 = 0.1;

  static EnsembleParams make(double alpha, double rho0, double sigma_D2,
                             double sigma_x2 = -1.0) {
    EnsembleParams e;
    e.alpha = alpha;
    e.rho0 = rho0;
    e.sigma_D2 = sigma_D2;
    e.sigma_x2 = (sigma_x2 > 0.0) ? sigma_x2 : 1.0 / rho0;
    e.validate();
    return e;
  }
  void validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("ensemble: alpha must be > 0");
    if (!(rho0 > 0.0 && rho0 <= 1.0))
      throw std::invalid_argument("ensemble: rho0 must be in (0,1]");
    if (!(sigma_x2 > 0.0)) throw std::invalid_argument("ensemble: sigma_x2 must be > 0");
    if (!(sigma_D2 >= 0.0)) throw std::invalid_argument("ensemble: sigma_D2 must be >= 0");
  }
};

struct SyntheticInstance {
  RegressionProblem problem;
  EnsembleParams ensemble;
  std::uint64_t seed = 0;
};

// M = round(alpha N), half away from zero.
inline Eigen::Index rows_for(double alpha, Eigen::Index N) {
  return static_cast<Eigen::Index>(std::llround(alpha * static_cast<double>(N)));
}

// PRNG is std::mt19937_64 throughout; cross-language reproduction goes
// through exported CSV fixtures, not through the bitstream.
inline SyntheticInstance gen_instance(Eigen::Index N, const EnsembleParams& ensemble,
                                      std::uint64_t seed) {
  ensemble.validate();
  const Eigen::Index M = rows_for(ensemble.alpha, N);
  if (N < 1 || M < 1) throw std::invalid_argument("gen_instance: need N >= 1, alpha N >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  Matrix A(M, N);
  const double col_sd = 1.0 / std::sqrt(static_cast<double>(M));
  for (Eigen::Index j = 0; j < N; ++j)
    for (Eigen::Index i = 0; i < M; ++i) A(i, j) = col_sd * unit(rng);

  Vector x0 = Vector::Zero(N);
  const double sig_x = std::sqrt(ensemble.sigma_x2);
  for (Eigen::Index i = 0; i < N; ++i)
    if (uni(rng) < ensemble.rho0) x0[i] = sig_x * unit(rng);

  Vector y = A * x0;
  const double sig_D = std::sqrt(ensemble.sigma_D2);
  for (Eigen::Index mu = 0; mu < M; ++mu) y[mu] += sig_D * unit(rng);

  SyntheticInstance inst;
  inst.problem = RegressionProblem(std::move(y), std::move(A), std::move(x0));
  inst.ensemble = ensemble;
  inst.seed = seed;
  return inst;
}

// Affine transform record so fitted coefficients can be mapped back to the
// original variables: original prediction uses x_orig_j = x_std_j / col_scale_j,
// intercept = y_mean - sum_j col_mean_j x_orig_j.
struct StandardizeTransform {
  double y_mean = 0.0;
  std::vector<double> col_mean;
  std::vector<double> col_scale;              // ell_2 norm after centering
  std::vector<Eigen::Index> dropped_columns;  // zero variance after centering
  std::vector<Eigen::Index> kept_columns;     // original index per kept column
};

// Center y, center each column of A and rescale it to unit ell_2 norm.
// Zero-variance columns are dropped and recorded.
inline std::pair<RegressionProblem, StandardizeTransform> standardize(
    const RegressionProblem& problem) {
  const Eigen::Index M = problem.m(), N = problem.n();
  StandardizeTransform tf;
  tf.y_mean = problem.y.mean();
  Vector y = problem.y.array() - tf.y_mean;

  std::vector<Eigen::Index> kept;
  tf.col_mean.resize(N);
  tf.col_scale.assign(N, 1.0);
  Matrix centered(M, N);
  for (Eigen::Index j = 0; j < N; ++j) {
    tf.col_mean[j] = problem.A.col(j).mean();
    centered.col(j) = problem.A.col(j).array() - tf.col_mean[j];
    const double norm = centered.col(j).norm();
    if (norm <= 1e-14 * std::sqrt(static_cast<double>(M))) {
      tf.dropped_columns.push_back(j);
    } else {
      tf.col_scale[j] = norm;
      kept.push_back(j);
    }
  }
  Matrix A(M, kept.size());
  std::optional<Vector> x0;
  if (problem.x0) x0 = Vector(kept.size());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const Eigen::Index j = kept[k];
    A.col(k) = centered.col(j) / tf.col_scale[j];
    if (x0) (*x0)[k] = (*problem.x0)[j];
  }
  tf.kept_columns = std::move(kept);
  return {RegressionProblem(std::move(y), std::move(A), std::move(x0)), tf};
}

// Empirical support-recovery rates against the true signal.
// TP is absent (second member false) when x0 has no nonzero component.
struct TpFp {
  double tp = 0.0;
  double fp = 0.0;
  bool tp_defined = true;
};

inline TpFp empirical_tp_fp(const Estimate& est, const Vector& x0) {
  if (x0.size() != est.x_hat.size())
    throw std::invalid_argument("empirical_tp_fp: dimension mismatch");
  Eigen::Index true_pos = 0, false_pos = 0, support = 0;
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    const bool est_on = est.x_hat[i] != 0.0;
    if (x0[i] != 0.0) {
      ++support;
      if (est_on) ++true_pos;
    } else if (est_on) {
      ++false_pos;
    }
  }
  TpFp r;
  r.tp_defined = support > 0;
  if (r.tp_defined) r.tp = static_cast<double>(true_pos) / support;
  const Eigen::Index comp = x0.size() - support;
  r.fp = comp > 0 ? static_cast<double>(false_pos) / comp : 0.0;
  return r;
}

// Distance of an ROC point from the ideal (TP,FP) = (1,0) corner.
inline double roc_r(double tp, double fp) {
  if (!(tp >= 0.0 && tp <= 1.0 && fp >= 0.0 && fp <= 1.0))
    throw std::invalid_argument("roc_r: TP, FP must be in [0,1]");
  return (tp - 1.0) * (tp - 1.0) + fp * fp;
}

}  // namespace sparsecv

#endif  // SPARSECV_DATAGEN_HPP
