#ifndef SPARSECV_SOLVER_HPP
#define SPARSECV_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "sparsecv/penalty.hpp"
#include "sparsecv/problem.hpp"

namespace sparsecv {

struct CdOptions {
  double delta = 1e-10;     // component-wise convergence threshold
  long max_sweeps = 100000;
  std::uint64_t seed = 0;   // coordinate-permutation PRNG seed
};

namespace detail {

// One exact coordinate minimization. residual must hold y - A x on entry and
// is updated in place. Returns |new - old| for the touched coordinate.
inline double cd_update_inplace(const RegressionProblem& problem, Vector& x,
                                Vector& residual, Eigen::Index i,
                                const PenaltySpec& spec) {
  const double c = problem.column_sq_norms[i];
  const double old = x[i];
  if (c <= 0.0) {  // zero column: coordinate pinned at 0
    if (old != 0.0) {
      residual += problem.A.col(i) * old;
      x[i] = 0.0;
    }
    return std::abs(old);
  }
  const double h = problem.A.col(i).dot(residual) + c * old;
  const double next = scalar_prox(h / c, 1.0 / c, spec).theta_hat;
  if (next != old) {
    residual -= problem.A.col(i) * (next - old);
    x[i] = next;
  }
  return std::abs(next - old);
}

}  // namespace detail

// Exact minimizer of the coordinate subproblem
// min_{x_i} (c_i/2) x_i^2 - h_i x_i + J(x_i), c_i = a_i^T a_i.
inline double cd_update_coordinate(const RegressionProblem& problem, const Vector& x,
                                   Eigen::Index i, const PenaltySpec& spec) {
  const double c = problem.column_sq_norms[i];
  if (c <= 0.0) return 0.0;
  const double h =
      problem.A.col(i).dot(problem.y - problem.A * x) + c * x[i];
  return scalar_prox(h / c, 1.0 / c, spec).theta_hat;
}

// Randomized-order coordinate descent with incremental residual updates.
// A fresh uniform permutation of the coordinates is drawn every sweep.
inline Estimate coordinate_descent(const RegressionProblem& problem,
                                   const PenaltySpec& spec, Vector x_init,
                                   const CdOptions& opts = {}) {
  if (!(opts.delta > 0.0)) throw std::invalid_argument("cd: delta must be > 0");
  if (opts.max_sweeps < 1) throw std::invalid_argument("cd: max_sweeps must be >= 1");
  if (x_init.size() != problem.n())
    throw std::invalid_argument("cd: x_init length must match cols of A");

  Estimate est;
  est.x_hat = std::move(x_init);
  Vector residual = problem.y - problem.A * est.x_hat;

  std::mt19937_64 rng(opts.seed);
  std::vector<Eigen::Index> order(problem.n());
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  for (long sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    std::shuffle(order.begin(), order.end(), rng);
    double max_delta = 0.0;
    for (Eigen::Index i : order)
      max_delta = std::max(
          max_delta, detail::cd_update_inplace(problem, est.x_hat, residual, i, spec));
    est.iterations = sweep + 1;
    est.max_coord_delta = max_delta;
    if (max_delta < opts.delta) {
      est.converged = true;
      break;
    }
  }
  est.refresh_active_set();
  return est;
}

// Descending geometric lambda grid, glmnet-style:
// lambda_1 = ceil(max_j |a_j^T y|), lambda_L = eps_ratio * lambda_1.
inline std::vector<double> lambda_grid(const RegressionProblem& problem, int L = 100,
                                       double eps_ratio = 0.01) {
  if (L < 2) throw std::invalid_argument("lambda_grid: L must be >= 2");
  if (!(eps_ratio > 0.0 && eps_ratio < 1.0))
    throw std::invalid_argument("lambda_grid: eps_ratio must be in (0,1)");
  const double max_corr = (problem.A.transpose() * problem.y).cwiseAbs().maxCoeff();
  if (!(max_corr > 0.0)) throw std::invalid_argument("lambda_grid: A^T y is all zero");
  const double lam1 = std::ceil(max_corr);
  const double ratio = std::pow(eps_ratio, 1.0 / (L - 1));
  std::vector<double> grid(L);
  for (int k = 0; k < L; ++k) grid[k] = lam1 * std::pow(ratio, k);
  grid[L - 1] = eps_ratio * lam1;
  return grid;
}

// Lambda annealing: solve the path from large to small lambda, warm-starting
// each point from the previous solution (k = 1 starts from zero).
inline SolutionPath solve_path(const RegressionProblem& problem, PenaltyKind kind,
                               double spec_a, const std::vector<double>& grid,
                               const CdOptions& opts = {}) {
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (!(grid[k] < grid[k - 1]))
      throw std::invalid_argument("solve_path: grid must be strictly decreasing");
  SolutionPath path;
  path.lambdas = grid;
  path.kind = kind;
  path.spec_a = spec_a;
  path.seed = opts.seed;
  Vector warm = Vector::Zero(problem.n());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    PenaltySpec spec{kind, grid[k], spec_a};
    PenaltySpec::validated(spec);
    CdOptions point_opts = opts;
    point_opts.seed = opts.seed + k;  // fresh permutation stream per point
    Estimate est = coordinate_descent(problem, spec, warm, point_opts);
    warm = est.x_hat;
    path.estimates.push_back(std::move(est));
  }
  return path;
}

}  // namespace sparsecv

#endif  // SPARSECV_SOLVER_HPP
