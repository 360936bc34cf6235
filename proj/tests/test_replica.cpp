#include <doctest.h>

#include <cmath>
#include <random>

#include "sparsecv/penalty.hpp"
#include "sparsecv/quadrature.hpp"
#include "sparsecv/replica.hpp"

using namespace sparsecv;

namespace {

// Quadrature oracle for the per-sigma field moments: the effective scalar
// estimator is x*(h) = scalar_prox(h/Qh, 1/Qh), integrated against h = sigma z.
detail::FieldMoments moments_oracle(double sigma, double Qh, const PenaltySpec& spec) {
  detail::FieldMoments fm;
  if (sigma <= 0.0) return fm;
  const double lam = spec.lambda, a = spec.a;
  std::vector<double> bounds;  // branch boundaries in |h|
  bounds.push_back(lam);
  if (spec.kind == PenaltyKind::SCAD) {
    bounds.push_back(lam * (1.0 + Qh));
    bounds.push_back(a * lam * Qh);
  } else if (spec.kind == PenaltyKind::MCP) {
    bounds.push_back(a * lam * Qh);
  }
  std::vector<double> cuts;
  for (double b : bounds) {
    cuts.push_back(b / sigma);
    cuts.push_back(-b / sigma);
  }
  auto xstar = [&](double z) {
    return scalar_prox(sigma * z / Qh, 1.0 / Qh, spec).theta_hat;
  };
  auto deriv = [&](double z) {
    const double ah = std::abs(sigma * z);
    if (ah <= lam) return 0.0;
    if (spec.kind == PenaltyKind::LASSO) return 1.0 / Qh;
    if (spec.kind == PenaltyKind::SCAD) {
      if (ah <= lam * (1.0 + Qh)) return 1.0 / Qh;
      if (ah <= a * lam * Qh) return 1.0 / (Qh - 1.0 / (a - 1.0));
      return 1.0 / Qh;
    }
    // MCP
    if (ah <= a * lam * Qh) return 1.0 / (Qh - 1.0 / a);
    return 1.0 / Qh;
  };
  fm.d_avg = piecewise_gaussian_expectation(deriv, cuts, 14.0, 96);
  fm.sq_avg = piecewise_gaussian_expectation(
      [&](double z) { const double v = xstar(z); return v * v; }, cuts, 14.0, 96);
  fm.d2_avg = piecewise_gaussian_expectation(
      [&](double z) { const double v = deriv(z); return v * v; }, cuts, 14.0, 96);
  fm.zero_frac_c = std::erfc(lam / (std::sqrt(2.0) * sigma));
  return fm;
}

EnsembleParams reference_ensemble() { return EnsembleParams::make(0.5, 0.2, 0.1); }

}  // namespace

TEST_CASE("sigma_mixture: values and validation") {
  EnsembleParams e = reference_ensemble();
  const SigmaMixture mix = sigma_mixture(e, 0.09, 0.8);
  CHECK(mix.sigma_minus == doctest::Approx(0.3));
  CHECK(mix.sigma_plus == doctest::Approx(std::sqrt(0.09 + 0.64 * 5.0)));
  CHECK(mix.rho_weight == doctest::Approx(0.2));
  CHECK_THROWS(sigma_mixture(e, -0.1, 0.8));
}

TEST_CASE("xi closed forms match the quadrature oracle (SCAD)") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> sig_d(0.05, 3.0);
  std::uniform_real_distribution<double> lam_d(0.05, 3.0);
  std::uniform_real_distribution<double> a_d(2.2, 10.0);
  std::uniform_real_distribution<double> qh_d(0.3, 1.0);
  int tested = 0;
  for (int t = 0; t < 200 && tested < 120; ++t) {
    const double sigma = sig_d(rng), lam = lam_d(rng), a = a_d(rng);
    const double Qh = qh_d(rng);
    if (Qh - 1.0 / (a - 1.0) < 0.01) continue;  // away from the existence edge
    const PenaltySpec spec = PenaltySpec::scad(lam, a);
    const detail::FieldMoments got = detail::scad_moments(sigma, Qh, spec);
    const detail::FieldMoments ref = moments_oracle(sigma, Qh, spec);
    CHECK(got.d_avg == doctest::Approx(ref.d_avg).epsilon(1e-8));
    CHECK(got.sq_avg == doctest::Approx(ref.sq_avg).epsilon(1e-8));
    CHECK(got.d2_avg == doctest::Approx(ref.d2_avg).epsilon(1e-8));
    CHECK(got.zero_frac_c == doctest::Approx(ref.zero_frac_c).epsilon(1e-12));
    ++tested;
  }
  REQUIRE(tested >= 100);
}

TEST_CASE("LASSO closed-form moments match the quadrature oracle") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> sig_d(0.05, 3.0);
  std::uniform_real_distribution<double> lam_d(0.05, 3.0);
  std::uniform_real_distribution<double> qh_d(0.2, 1.0);
  for (int t = 0; t < 60; ++t) {
    const PenaltySpec spec = PenaltySpec::lasso(lam_d(rng));
    const double sigma = sig_d(rng), Qh = qh_d(rng);
    const detail::FieldMoments got = detail::lasso_moments(sigma, Qh, spec);
    const detail::FieldMoments ref = moments_oracle(sigma, Qh, spec);
    CHECK(got.d_avg == doctest::Approx(ref.d_avg).epsilon(1e-8));
    CHECK(got.sq_avg == doctest::Approx(ref.sq_avg).epsilon(1e-8));
    CHECK(got.d2_avg == doctest::Approx(ref.d2_avg).epsilon(1e-8));
  }
}

TEST_CASE("MCP quadrature moments match the scalar-prox oracle") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> sig_d(0.05, 3.0);
  std::uniform_real_distribution<double> lam_d(0.05, 3.0);
  std::uniform_real_distribution<double> a_d(1.2, 8.0);
  std::uniform_real_distribution<double> qh_d(0.3, 1.0);
  int tested = 0;
  for (int t = 0; t < 150 && tested < 60; ++t) {
    const double a = a_d(rng), Qh = qh_d(rng);
    if (Qh - 1.0 / a < 0.01) continue;
    const PenaltySpec spec = PenaltySpec::mcp(lam_d(rng), a);
    const double sigma = sig_d(rng);
    const detail::FieldMoments got = detail::mcp_moments(sigma, Qh, spec);
    const detail::FieldMoments ref = moments_oracle(sigma, Qh, spec);
    CHECK(got.d_avg == doctest::Approx(ref.d_avg).epsilon(1e-8));
    CHECK(got.sq_avg == doctest::Approx(ref.sq_avg).epsilon(1e-8));
    CHECK(got.d2_avg == doctest::Approx(ref.d2_avg).epsilon(1e-8));
    ++tested;
  }
  REQUIRE(tested >= 50);
}

TEST_CASE("SCAD moments with huge a reduce to the LASSO moments") {
  const PenaltySpec scad = PenaltySpec::scad(0.7, 1e8);
  const PenaltySpec lasso = PenaltySpec::lasso(0.7);
  for (double sigma : {0.2, 0.8, 2.0}) {
    for (double Qh : {0.4, 0.9}) {
      const detail::FieldMoments s = detail::scad_moments(sigma, Qh, scad);
      const detail::FieldMoments l = detail::lasso_moments(sigma, Qh, lasso);
      CHECK(s.d_avg == doctest::Approx(l.d_avg).epsilon(1e-6));
      CHECK(s.sq_avg == doctest::Approx(l.sq_avg).epsilon(1e-6));
      CHECK(s.d2_avg == doctest::Approx(l.d2_avg).epsilon(1e-6));
    }
  }
}

TEST_CASE("solve_eos: large lambda gives the trivial fixed point") {
  EnsembleParams e = reference_ensemble();
  const PenaltySpec spec = PenaltySpec::scad(50.0, 3.0);
  const RsSolution sol = solve_eos(e, spec);
  REQUIRE(sol.status == RsStatus::CONVERGED);
  CHECK(std::abs(sol.params.chi) < 1e-6);
  CHECK(std::abs(sol.params.Q) < 1e-6);
  CHECK(std::abs(sol.params.m) < 1e-6);
  // everything is shrunk to zero: eps_x = rho0 sigma_x2 / 2, TP and FP tiny
  CHECK(sol.observables.eps_x == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(sol.observables.tp < 1e-3);
  CHECK(sol.observables.fp < 1e-6);
  CHECK(sol.at_stable);
}

TEST_CASE("solve_eos: converged point is a genuine fixed point with valid conjugates") {
  EnsembleParams e = reference_ensemble();
  for (const PenaltySpec& spec :
       {PenaltySpec::scad(1.0, 3.0), PenaltySpec::scad(0.4, 5.0),
        PenaltySpec::mcp(0.8, 3.0), PenaltySpec::lasso(0.6)}) {
    EosOptions opts;
    const RsSolution sol = solve_eos_annealed(e, spec, opts);
    REQUIRE(sol.status == RsStatus::CONVERGED);
    const OrderParams& fix = sol.params;
    const EosRhsResult rhs = eos_rhs(fix, e, spec);
    REQUIRE(rhs.exists);
    CHECK(std::abs(rhs.next.chi - fix.chi) < 10.0 * opts.tol);
    CHECK(std::abs(rhs.next.Q - fix.Q) < 1e-8);
    CHECK(std::abs(rhs.next.m - fix.m) < 1e-8);
    // conjugate identities
    CHECK(fix.Qh == doctest::Approx(1.0 / (1.0 + fix.chi / e.alpha)).epsilon(1e-12));
    CHECK(fix.mh == doctest::Approx(fix.Qh).epsilon(1e-12));
    CHECK(fix.Qh > 0.0);
    CHECK(fix.Qh <= 1.0);
    CHECK(fix.chih >= 0.0);
    // observable identities
    CHECK(sol.observables.eps_y == doctest::Approx(0.5 * fix.chih).epsilon(1e-12));
    CHECK(sol.observables.eps_x ==
          doctest::Approx(0.5 * (e.rho0 * e.sigma_x2 - 2.0 * fix.m + fix.Q))
              .epsilon(1e-12));
    CHECK(sol.observables.rho_hat ==
          doctest::Approx((1.0 - e.rho0) * sol.observables.fp +
                          e.rho0 * sol.observables.tp)
              .epsilon(1e-12));
    CHECK(sol.observables.r ==
          doctest::Approx(std::pow(sol.observables.tp - 1.0, 2) +
                          std::pow(sol.observables.fp, 2))
              .epsilon(1e-12));
  }
}

TEST_CASE("solve_eos: existence limits a >= 2 (SCAD) and a >= 1 (MCP)") {
  EnsembleParams e = reference_ensemble();
  // Qh <= 1 always, so a < 2 puts 1/(a-1) > 1 above any attainable Qh
  CHECK(solve_eos(e, PenaltySpec::scad(1.0, 1.5)).status == RsStatus::NON_EXISTENT);
  CHECK(solve_eos(e, PenaltySpec::scad(1.0, 1.99)).status == RsStatus::NON_EXISTENT);
  CHECK(solve_eos(e, PenaltySpec::mcp(1.0, 0.9)).status == RsStatus::NON_EXISTENT);
  // comfortably inside the admissible region both solve
  CHECK(solve_eos(e, PenaltySpec::scad(1.0, 4.0)).status == RsStatus::CONVERGED);
  CHECK(solve_eos(e, PenaltySpec::mcp(1.0, 4.0)).status == RsStatus::CONVERGED);
}

TEST_CASE("solve_eos_annealed: rescues cold starts that transiently cross the boundary") {
  EnsembleParams e = reference_ensemble();
  const PenaltySpec spec = PenaltySpec::scad(1.0, 3.0);
  // the cold-started trajectory overshoots into the non-existent region ...
  CHECK(solve_eos(e, spec).status == RsStatus::NON_EXISTENT);
  // ... but the physical branch reached by lambda continuation exists
  const RsSolution annealed = solve_eos_annealed(e, spec);
  REQUIRE(annealed.status == RsStatus::CONVERGED);
  std::vector<double> grid;
  for (double l = 5.0; l > 0.999; l *= 0.97) grid.push_back(l);
  grid.push_back(1.0);
  const LambdaSweep sweep = sweep_lambda(e, PenaltyKind::SCAD, 3.0, grid);
  const RsSolution& cont = sweep.solutions.back();
  REQUIRE(cont.status == RsStatus::CONVERGED);
  CHECK(annealed.params.chi == doctest::Approx(cont.params.chi).epsilon(1e-6));
  CHECK(annealed.params.Q == doctest::Approx(cont.params.Q).epsilon(1e-6));
  // genuinely non-existent points stay non-existent under annealing
  CHECK(solve_eos_annealed(e, PenaltySpec::scad(1.0, 1.5)).status ==
        RsStatus::NON_EXISTENT);
}

TEST_CASE("solve_eos: SCAD with huge a lands on the LASSO fixed point") {
  EnsembleParams e = reference_ensemble();
  const RsSolution s = solve_eos(e, PenaltySpec::scad(0.8, 1e8));
  const RsSolution l = solve_eos(e, PenaltySpec::lasso(0.8));
  REQUIRE(s.status == RsStatus::CONVERGED);
  REQUIRE(l.status == RsStatus::CONVERGED);
  CHECK(s.params.chi == doctest::Approx(l.params.chi).epsilon(1e-6));
  CHECK(s.params.Q == doctest::Approx(l.params.Q).epsilon(1e-6));
  CHECK(s.params.m == doctest::Approx(l.params.m).epsilon(1e-6));
  CHECK(s.observables.eps_x == doctest::Approx(l.observables.eps_x).epsilon(1e-6));
  CHECK(s.at_lhs == doctest::Approx(l.at_lhs).epsilon(1e-5));
}

TEST_CASE("at_condition: matches the closed-form spectral expression (SCAD)") {
  EnsembleParams e = reference_ensemble();
  const PenaltySpec spec = PenaltySpec::scad(1.0, 3.0);
  const RsSolution sol = solve_eos_annealed(e, spec);
  REQUIRE(sol.status == RsStatus::CONVERGED);
  const OrderParams& fix = sol.params;
  const double kappa = 1.0 / (spec.a - 1.0);
  const SigmaMixture mix = sigma_mixture(e, fix.chih, fix.Qh);
  double rho_hat = 0.0, xi4bar = 0.0;
  for (auto [sigma, w] : {std::pair{mix.sigma_minus, 1.0 - e.rho0},
                          std::pair{mix.sigma_plus, e.rho0}}) {
    const XiBundle xi = xi_closed_form(sigma, fix.Qh, spec);
    rho_hat += w * xi.rho_hat_contrib;
    xi4bar += w * xi.xi4;
  }
  const double denom = 1.0 + fix.chi / e.alpha;
  const double lhs_closed =
      (rho_hat / (fix.Qh * fix.Qh) +
       (1.0 / std::pow(fix.Qh - kappa, 2) - 1.0 / (fix.Qh * fix.Qh)) * xi4bar) /
      (e.alpha * denom * denom);
  CHECK(sol.at_lhs == doctest::Approx(lhs_closed).epsilon(1e-10));
  CHECK(sol.at_stable == (sol.at_lhs < 1.0));
}

TEST_CASE("sweep_lambda: continuation, instability onset, grid validation") {
  EnsembleParams e = reference_ensemble();
  std::vector<double> grid;
  for (int k = 0; k < 40; ++k) grid.push_back(3.0 * std::pow(0.82, k));
  const LambdaSweep sweep = sweep_lambda(e, PenaltyKind::SCAD, 3.0, grid);
  REQUIRE(sweep.solutions.size() == grid.size());
  // warm-started points agree with cold starts wherever both converge
  for (std::size_t k = 0; k < grid.size(); k += 10) {
    if (sweep.solutions[k].status != RsStatus::CONVERGED) continue;
    const RsSolution cold = solve_eos(e, PenaltySpec::scad(grid[k], 3.0));
    if (cold.status != RsStatus::CONVERGED) continue;
    CHECK(sweep.solutions[k].params.chi ==
          doctest::Approx(cold.params.chi).epsilon(1e-6));
  }
  // once lambda is small enough at a = 3 the solution destabilises or vanishes
  CHECK((sweep.first_at_unstable_lambda || sweep.first_non_existent_lambda));

  std::vector<double> bad = {1.0, 2.0};
  CHECK_THROWS(sweep_lambda(e, PenaltyKind::SCAD, 3.0, bad));
}

TEST_CASE("at_crossing_lambda: bisection brackets the stability edge") {
  EnsembleParams e = reference_ensemble();
  // locate the edge at a = 3 from the sweep above
  std::vector<double> grid;
  for (int k = 0; k < 60; ++k) grid.push_back(3.0 * std::pow(0.85, k));
  const LambdaSweep sweep = sweep_lambda(e, PenaltyKind::SCAD, 3.0, grid);
  double lam_hi = 0.0, lam_lo = 0.0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const bool ok_k = sweep.solutions[k].status == RsStatus::CONVERGED &&
                      sweep.solutions[k].at_stable;
    const bool ok_n = sweep.solutions[k + 1].status == RsStatus::CONVERGED &&
                      sweep.solutions[k + 1].at_stable;
    if (ok_k && !ok_n) {
      lam_hi = grid[k];
      lam_lo = grid[k + 1];
      break;
    }
  }
  REQUIRE(lam_hi > 0.0);
  const double lam_c = at_crossing_lambda(e, PenaltyKind::SCAD, 3.0, lam_hi, lam_lo);
  CHECK(lam_c <= lam_hi);
  CHECK(lam_c >= lam_lo);
  // the returned edge is stable; nudging just below is not
  const RsSolution at_edge = solve_eos_annealed(e, PenaltySpec::scad(lam_c, 3.0));
  CHECK((at_edge.status == RsStatus::CONVERGED && at_edge.at_stable));
  CHECK_THROWS(at_crossing_lambda(e, PenaltyKind::SCAD, 3.0, lam_lo * 0.5, lam_lo * 0.25));
}

TEST_CASE("phase_boundaries: reference-ensemble structure") {
  EnsembleParams e = reference_ensemble();
  std::vector<double> lgrid;
  for (int k = 0; k < 12; ++k) lgrid.push_back(2.0 * std::pow(0.7, k));
  std::vector<double> agrid;
  for (double a = 2.05; a < 12.0; a *= 1.25) agrid.push_back(a);
  const PhaseBoundaries pb =
      phase_boundaries(e, PenaltyKind::SCAD, lgrid, agrid, 1e-3);
  REQUIRE(pb.rs_line.size() == lgrid.size());
  REQUIRE(pb.at_line.size() == lgrid.size());
  REQUIRE(!pb.imse_line.empty());
  CHECK(pb.have_global);
  // the AT boundary can never sit below the RS existence boundary
  for (std::size_t k = 0; k < lgrid.size(); ++k)
    CHECK(pb.at_line[k].a >= pb.rs_line[k].a - 1e-6);
  // per-a minima are genuine minima of their sweeps and beat the trivial value
  for (const ImsePoint& pt : pb.imse_line) CHECK(pt.eps_x_min < 0.5);
  CHECK(pb.global_eps_x_min <=
        std::min_element(pb.imse_line.begin(), pb.imse_line.end(),
                         [](const ImsePoint& x, const ImsePoint& y) {
                           return x.eps_x_min < y.eps_x_min;
                         })
            ->eps_x_min + 1e-12);
}
