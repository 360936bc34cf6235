#include <doctest.h>

#include <cmath>
#include <random>

#include "sparsecv/datagen.hpp"
#include "sparsecv/penalty.hpp"
#include "sparsecv/problem.hpp"
#include "sparsecv/solver.hpp"

using namespace sparsecv;

namespace {

double full_objective(const RegressionProblem& p, const Vector& x,
                      const PenaltySpec& spec) {
  double obj = 0.5 * (p.y - p.A * x).squaredNorm();
  for (Eigen::Index i = 0; i < x.size(); ++i) obj += penalty_value(x[i], spec);
  return obj;
}

RegressionProblem small_problem(std::uint64_t seed, Eigen::Index M = 30,
                                Eigen::Index N = 60) {
  EnsembleParams e = EnsembleParams::make(static_cast<double>(M) / N, 0.2, 0.05);
  return gen_instance(N, e, seed).problem;
}

}  // namespace

TEST_CASE("coordinate_descent: converged solution is coordinate-wise stationary") {
  const RegressionProblem p = small_problem(101);
  for (const PenaltySpec& spec :
       {PenaltySpec::lasso(0.05), PenaltySpec::scad(0.05, 3.0),
        PenaltySpec::mcp(0.05, 2.5)}) {
    CdOptions opts;
    opts.seed = 7;
    const Estimate est = coordinate_descent(p, spec, Vector::Zero(p.n()), opts);
    CHECK(est.converged);
    for (Eigen::Index i = 0; i < p.n(); ++i) {
      const double best = cd_update_coordinate(p, est.x_hat, i, spec);
      CHECK(std::abs(best - est.x_hat[i]) <= 1e-7);
    }
  }
}

TEST_CASE("coordinate_descent: objective is monotone nonincreasing over sweeps") {
  const RegressionProblem p = small_problem(55);
  const PenaltySpec spec = PenaltySpec::scad(0.1, 3.0);
  Vector x = Vector::Zero(p.n());
  Vector residual = p.y - p.A * x;
  std::mt19937_64 rng(9);
  std::vector<Eigen::Index> order(p.n());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  double prev = full_objective(p, x, spec);
  for (int sweep = 0; sweep < 25; ++sweep) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index i : order) detail::cd_update_inplace(p, x, residual, i, spec);
    const double cur = full_objective(p, x, spec);
    CHECK(cur <= prev + 1e-10 * (1.0 + std::abs(prev)));
    prev = cur;
  }
  // the incremental residual stays consistent with the from-scratch residual
  CHECK((residual - (p.y - p.A * x)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("coordinate_descent: deterministic under a fixed seed") {
  const RegressionProblem p = small_problem(77);
  const PenaltySpec spec = PenaltySpec::mcp(0.08, 2.0);
  CdOptions opts;
  opts.seed = 42;
  const Estimate a = coordinate_descent(p, spec, Vector::Zero(p.n()), opts);
  const Estimate b = coordinate_descent(p, spec, Vector::Zero(p.n()), opts);
  CHECK(a.iterations == b.iterations);
  CHECK((a.x_hat - b.x_hat).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("coordinate_descent: large lambda yields the zero solution") {
  const RegressionProblem p = small_problem(13);
  const double lam_max = (p.A.transpose() * p.y).cwiseAbs().maxCoeff();
  const Estimate est =
      coordinate_descent(p, PenaltySpec::lasso(lam_max * 1.01), Vector::Zero(p.n()));
  CHECK(est.converged);
  CHECK(est.k() == 0);
}

TEST_CASE("coordinate_descent: tiny lambda recovers OLS on an overdetermined system") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> unit(0.0, 1.0);
  const Eigen::Index M = 40, N = 5;
  Matrix A(M, N);
  for (Eigen::Index j = 0; j < N; ++j)
    for (Eigen::Index i = 0; i < M; ++i) A(i, j) = unit(rng);
  Vector y(M);
  for (Eigen::Index i = 0; i < M; ++i) y[i] = unit(rng);
  const RegressionProblem p(y, A);
  const Vector ols = (A.transpose() * A).ldlt().solve(A.transpose() * y);
  CdOptions opts;
  opts.delta = 1e-13;
  const Estimate est =
      coordinate_descent(p, PenaltySpec::lasso(1e-12), Vector::Zero(N), opts);
  CHECK(est.converged);
  CHECK((est.x_hat - ols).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("coordinate_descent: zero columns stay pinned at zero") {
  Matrix A = Matrix::Zero(6, 3);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (Eigen::Index i = 0; i < 6; ++i) A(i, 0) = unit(rng);  // cols 1,2 all-zero
  Vector y(6);
  for (Eigen::Index i = 0; i < 6; ++i) y[i] = unit(rng);
  const RegressionProblem p(y, A);
  Vector init(3);
  init << 0.0, 5.0, -3.0;
  const Estimate est = coordinate_descent(p, PenaltySpec::lasso(0.01), init);
  CHECK(est.converged);
  CHECK(est.x_hat[1] == 0.0);
  CHECK(est.x_hat[2] == 0.0);
}

TEST_CASE("coordinate_descent: argument validation") {
  const RegressionProblem p = small_problem(2, 10, 20);
  CdOptions bad;
  bad.delta = 0.0;
  CHECK_THROWS(coordinate_descent(p, PenaltySpec::lasso(0.1), Vector::Zero(20), bad));
  CHECK_THROWS(coordinate_descent(p, PenaltySpec::lasso(0.1), Vector::Zero(3)));
}

TEST_CASE("lambda_grid: endpoints, monotonicity, geometric spacing") {
  const RegressionProblem p = small_problem(21);
  const auto grid = lambda_grid(p, 100, 0.01);
  REQUIRE(grid.size() == 100);
  const double max_corr = (p.A.transpose() * p.y).cwiseAbs().maxCoeff();
  CHECK(grid.front() == std::ceil(max_corr));
  CHECK(grid.back() == doctest::Approx(0.01 * grid.front()).epsilon(1e-14));
  for (std::size_t k = 1; k < grid.size(); ++k) CHECK(grid[k] < grid[k - 1]);
  // constant ratio
  const double r0 = grid[1] / grid[0];
  for (std::size_t k = 2; k < grid.size(); ++k)
    CHECK(grid[k] / grid[k - 1] == doctest::Approx(r0).epsilon(1e-10));
  CHECK_THROWS(lambda_grid(p, 1, 0.01));
  CHECK_THROWS(lambda_grid(p, 10, 1.5));
}

TEST_CASE("solve_path: warm starts reproduce cold-started per-point solutions") {
  const RegressionProblem p = small_problem(31, 25, 50);
  const auto grid = lambda_grid(p, 20, 0.05);
  CdOptions opts;
  opts.seed = 5;
  const SolutionPath path = solve_path(p, PenaltyKind::LASSO, 0.0, grid, opts);
  REQUIRE(path.estimates.size() == grid.size());
  // convex objective: cold start from zero must land on the same minimizer
  for (std::size_t k = 0; k < grid.size(); k += 5) {
    const Estimate cold =
        coordinate_descent(p, PenaltySpec::lasso(grid[k]), Vector::Zero(p.n()));
    CHECK((cold.x_hat - path.estimates[k].x_hat).cwiseAbs().maxCoeff() < 1e-7);
  }
  // sparsity is (weakly) increasing as lambda decreases for most of the path
  CHECK(path.estimates.front().k() <= path.estimates.back().k());
}

TEST_CASE("solve_path: deterministic and grid-validated") {
  const RegressionProblem p = small_problem(47, 20, 40);
  const auto grid = lambda_grid(p, 10, 0.1);
  CdOptions opts;
  opts.seed = 11;
  const SolutionPath a = solve_path(p, PenaltyKind::SCAD, 3.0, grid, opts);
  const SolutionPath b = solve_path(p, PenaltyKind::SCAD, 3.0, grid, opts);
  for (std::size_t k = 0; k < grid.size(); ++k)
    CHECK((a.estimates[k].x_hat - b.estimates[k].x_hat).cwiseAbs().maxCoeff() == 0.0);
  std::vector<double> bad_grid = {1.0, 2.0};
  CHECK_THROWS(solve_path(p, PenaltyKind::LASSO, 0.0, bad_grid));
}

TEST_CASE("solve_path: SCAD with huge a tracks the LASSO path") {
  const RegressionProblem p = small_problem(61, 25, 50);
  const auto grid = lambda_grid(p, 15, 0.05);
  CdOptions opts;
  opts.seed = 3;
  const SolutionPath scad = solve_path(p, PenaltyKind::SCAD, 1e8, grid, opts);
  const SolutionPath lasso = solve_path(p, PenaltyKind::LASSO, 0.0, grid, opts);
  for (std::size_t k = 0; k < grid.size(); ++k)
    CHECK((scad.estimates[k].x_hat - lasso.estimates[k].x_hat).cwiseAbs().maxCoeff() <
          1e-5);
}

TEST_CASE("output_mse and input_mse definitions") {
  const RegressionProblem p = small_problem(9, 12, 24);
  Estimate est;
  est.x_hat = Vector::Zero(p.n());
  est.refresh_active_set();
  CHECK(output_mse(p, est) == doctest::Approx(p.y.squaredNorm() / (2.0 * p.m())));
  CHECK(input_mse(p, est) ==
        doctest::Approx(p.x0->squaredNorm() / (2.0 * p.n())));
}
