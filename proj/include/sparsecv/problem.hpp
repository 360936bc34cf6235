#ifndef SPARSECV_PROBLEM_HPP
#define SPARSECV_PROBLEM_HPP

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sparsecv/penalty.hpp"

namespace sparsecv {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Dataset D_M = {y, A}, optionally carrying the ground-truth signal.
struct RegressionProblem {
  Vector y;        // length M
  Matrix A;        // M x N, column-major so column access is cheap
  std::optional<Vector> x0;
  Vector column_sq_norms;  // a_i^T a_i per column

  RegressionProblem() = default;
  RegressionProblem(Vector y_, Matrix A_, std::optional<Vector> x0_ = std::nullopt)
      : y(std::move(y_)), A(std::move(A_)), x0(std::move(x0_)) {
    if (A.rows() < 1 || A.cols() < 1)
      throw std::invalid_argument("problem: need M >= 1 and N >= 1");
    if (y.size() != A.rows())
      throw std::invalid_argument("problem: y length must match rows of A");
    if (x0 && x0->size() != A.cols())
      throw std::invalid_argument("problem: x0 length must match cols of A");
    if (!y.allFinite() || !A.allFinite())
      throw std::invalid_argument("problem: NaN/Inf entries");
    column_sq_norms = A.colwise().squaredNorm();
  }

  Eigen::Index m() const { return A.rows(); }
  Eigen::Index n() const { return A.cols(); }
  double alpha() const { return static_cast<double>(A.rows()) / A.cols(); }
};

struct Estimate {
  Vector x_hat;
  std::vector<Eigen::Index> active_set;  // sorted, exact-zero test
  long iterations = 0;                   // full sweeps
  bool converged = false;
  double max_coord_delta = 0.0;

  void refresh_active_set() {
    active_set.clear();
    for (Eigen::Index i = 0; i < x_hat.size(); ++i)
      if (x_hat[i] != 0.0) active_set.push_back(i);
  }
  Eigen::Index k() const { return static_cast<Eigen::Index>(active_set.size()); }
};

// Warm-started path over a descending lambda grid.
struct SolutionPath {
  std::vector<double> lambdas;
  std::vector<Estimate> estimates;
  PenaltyKind kind = PenaltyKind::LASSO;
  double spec_a = 0.0;
  std::uint64_t seed = 0;
};

// (1/2M) ||y - A x_hat||^2
inline double output_mse(const RegressionProblem& problem, const Estimate& est) {
  return (problem.y - problem.A * est.x_hat).squaredNorm() / (2.0 * problem.m());
}

// (1/2N) ||x_hat - x0||^2
inline double input_mse(const Estimate& est, const Vector& x0) {
  if (x0.size() != est.x_hat.size())
    throw std::invalid_argument("input_mse: dimension mismatch");
  return (est.x_hat - x0).squaredNorm() / (2.0 * x0.size());
}

inline double input_mse(const RegressionProblem& problem, const Estimate& est) {
  if (!problem.x0) throw std::invalid_argument("input_mse: problem has no ground truth");
  return input_mse(est, *problem.x0);
}

}  // namespace sparsecv

#endif  // SPARSECV_PROBLEM_HPP
