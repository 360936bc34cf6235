#ifndef SPARSECV_REPLICA_HPP
#define SPARSECV_REPLICA_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sparsecv/datagen.hpp"
#include "sparsecv/penalty.hpp"
#include "sparsecv/quadrature.hpp"

namespace sparsecv {

// RS order parameters (chi, Q, m) and their conjugates. At any fixed point
// Qh = mh = 1/(1 + chi/alpha).
struct OrderParams {
  double chi = 0.0;
  double Q = 0.0;
  double m = 0.0;
  double Qh = 1.0;
  double chih = 0.0;
  double mh = 1.0;
};

enum class RsStatus { CONVERGED, NON_EXISTENT, MAX_ITER };

struct RsObservables {
  double eps_x = 0.0;
  double eps_y = 0.0;
  double tp = 0.0;
  double fp = 0.0;
  double r = 1.0;
  double rho_hat = 0.0;
};

struct RsSolution {
  OrderParams params;
  RsObservables observables;
  RsStatus status = RsStatus::MAX_ITER;
  double at_lhs = 0.0;
  bool at_stable = false;
  double lambda = 0.0;
};

struct SigmaMixture {
  double sigma_minus = 0.0;  // sqrt(chih)
  double sigma_plus = 0.0;   // sqrt(chih + mh^2 sigma_x2)
  double rho_weight = 0.0;   // weight of the sigma_plus atom
};

inline SigmaMixture sigma_mixture(const EnsembleParams& ensemble, double chih,
                                  double mh) {
  if (!(chih >= 0.0)) throw std::invalid_argument("sigma_mixture: chih must be >= 0");
  SigmaMixture mix;
  mix.sigma_minus = std::sqrt(chih);
  mix.sigma_plus = std::sqrt(chih + mh * mh * ensemble.sigma_x2);
  mix.rho_weight = ensemble.rho0;
  return mix;
}

// Closed-form per-sigma building blocks of the SCAD equations of state.
struct XiBundle {
  double theta1 = 0.0;
  double theta2 = 0.0;
  double theta3 = 0.0;
  double rho_hat_contrib = 0.0;  // erfc(theta1)
  double xi1 = 0.0;
  double xi2 = 0.0;
  double xi3 = 0.0;
  double xi4 = 0.0;
};

// SCAD only; existence requires Qh - 1/(a-1) > 0. sigma = 0 degenerates to
// the zero-field limit (thetas -> inf, all contributions vanish).
inline XiBundle xi_closed_form(double sigma, double Qh, const PenaltySpec& spec) {
  if (spec.kind != PenaltyKind::SCAD)
    throw std::invalid_argument("xi_closed_form: SCAD only");
  const double lam = spec.lambda, a = spec.a;
  const double kappa = 1.0 / (a - 1.0);
  XiBundle xi;
  if (sigma <= 0.0) {
    xi.theta1 = xi.theta2 = xi.theta3 = std::numeric_limits<double>::infinity();
    return xi;
  }
  const double inv = 1.0 / (std::sqrt(2.0) * sigma);
  xi.theta1 = lam * inv;
  xi.theta2 = lam * (1.0 + Qh) * inv;
  xi.theta3 = a * lam * Qh * inv;
  const double e1 = std::exp(-xi.theta1 * xi.theta1);
  const double e2 = std::exp(-xi.theta2 * xi.theta2);
  const double e3 = std::exp(-xi.theta3 * xi.theta3);
  const double erfc1 = std::erfc(xi.theta1);
  const double erfc2 = std::erfc(xi.theta2);
  const double erfc3 = std::erfc(xi.theta3);
  const double inv_sqrt_pi = 0.5641895835477563;
  const double s2 = sigma * sigma;

  xi.rho_hat_contrib = erfc1;
  xi.xi4 = erfc2 - erfc3;
  xi.xi1 = (s2 / Qh) *
           (-2.0 * xi.theta1 * inv_sqrt_pi * (e1 + (Qh - 1.0) * e2) +
            (1.0 + 2.0 * xi.theta1 * xi.theta1) * (erfc1 - erfc2));
  // theta_tilde = a lam / (sqrt(2) sigma (a-1)) = theta3 / (Qh (a-1))
  const double tt = xi.theta3 * kappa / Qh;
  xi.xi2 = (s2 / (Qh - kappa)) *
           (2.0 * inv_sqrt_pi *
                (xi.theta2 * e2 - xi.theta3 * e3 - 2.0 * tt * (e2 - e3)) +
            (1.0 + 2.0 * tt * tt) * xi.xi4);
  xi.xi3 = (s2 / Qh) * (2.0 * xi.theta3 * inv_sqrt_pi * e3 + erfc3);
  return xi;
}

namespace detail {

// Per-sigma Gaussian-field moments of the effective one-dimensional
// estimator x*(h; Qh^{-1}) at h = sigma z:
//   d_avg  = int Dz dx*/dh,  sq_avg = int Dz (x*)^2,  d2_avg = int Dz (dx*/dh)^2.
struct FieldMoments {
  double d_avg = 0.0;
  double sq_avg = 0.0;
  double d2_avg = 0.0;
  double zero_frac_c = 0.0;  // erfc(theta1): P(|h| > lambda)
};

inline FieldMoments scad_moments(double sigma, double Qh, const PenaltySpec& spec) {
  FieldMoments fm;
  if (sigma <= 0.0) return fm;
  const double kappa = 1.0 / (spec.a - 1.0);
  const XiBundle xi = xi_closed_form(sigma, Qh, spec);
  fm.zero_frac_c = xi.rho_hat_contrib;
  fm.d_avg = (xi.rho_hat_contrib + kappa / (Qh - kappa) * xi.xi4) / Qh;
  fm.sq_avg = xi.xi1 / Qh + xi.xi2 / (Qh - kappa) + xi.xi3 / Qh;
  fm.d2_avg = fm.zero_frac_c / (Qh * Qh) +
              (1.0 / ((Qh - kappa) * (Qh - kappa)) - 1.0 / (Qh * Qh)) * xi.xi4;
  return fm;
}

inline FieldMoments lasso_moments(double sigma, double Qh, const PenaltySpec& spec) {
  FieldMoments fm;
  if (sigma <= 0.0) return fm;
  const double lam = spec.lambda;
  const double t1 = lam / (std::sqrt(2.0) * sigma);
  const double erfc1 = std::erfc(t1);
  const double inv_sqrt_pi = 0.5641895835477563;
  fm.zero_frac_c = erfc1;
  fm.d_avg = erfc1 / Qh;
  fm.sq_avg = (sigma * sigma / (Qh * Qh)) *
              ((1.0 + 2.0 * t1 * t1) * erfc1 -
               2.0 * t1 * inv_sqrt_pi * std::exp(-t1 * t1));
  fm.d2_avg = erfc1 / (Qh * Qh);
  return fm;
}

// MCP moments by quadrature of the defining integrals, split at the analytic
// branch boundaries of x*.
inline FieldMoments mcp_moments(double sigma, double Qh, const PenaltySpec& spec) {
  FieldMoments fm;
  if (sigma <= 0.0) return fm;
  const double lam = spec.lambda, a = spec.a;
  const double inv_firm = 1.0 / (Qh - 1.0 / a);
  const double z1 = lam / sigma;           // |h| = lambda
  const double z3 = a * lam * Qh / sigma;  // |h| = a lambda Qh
  auto xstar = [&](double z) {
    const double h = sigma * z, ah = std::abs(h);
    if (ah <= lam) return 0.0;
    const double sgn = h >= 0.0 ? 1.0 : -1.0;
    if (ah <= a * lam * Qh) return (h - sgn * lam) * inv_firm;
    return h / Qh;
  };
  auto deriv = [&](double z) {
    const double ah = std::abs(sigma * z);
    if (ah <= lam) return 0.0;
    if (ah <= a * lam * Qh) return inv_firm;
    return 1.0 / Qh;
  };
  const std::vector<double> cuts = {-z3, -z1, z1, z3};
  fm.d_avg = piecewise_gaussian_expectation(deriv, cuts);
  fm.sq_avg = piecewise_gaussian_expectation(
      [&](double z) { const double v = xstar(z); return v * v; }, cuts);
  fm.d2_avg = piecewise_gaussian_expectation(
      [&](double z) { const double v = deriv(z); return v * v; }, cuts);
  fm.zero_frac_c = std::erfc(z1 / std::sqrt(2.0));
  return fm;
}

inline FieldMoments field_moments(double sigma, double Qh, const PenaltySpec& spec) {
  switch (spec.kind) {
    case PenaltyKind::LASSO: return lasso_moments(sigma, Qh, spec);
    case PenaltyKind::SCAD: return scad_moments(sigma, Qh, spec);
    case PenaltyKind::MCP: return mcp_moments(sigma, Qh, spec);
  }
  return {};
}

// Qh - 1/(a-1) for SCAD, Qh - 1/a for MCP; LASSO always exists.
inline double existence_margin(double Qh, const PenaltySpec& spec) {
  switch (spec.kind) {
    case PenaltyKind::LASSO: return 1.0;
    case PenaltyKind::SCAD: return Qh - 1.0 / (spec.a - 1.0);
    case PenaltyKind::MCP: return Qh - 1.0 / spec.a;
  }
  return 1.0;
}

}  // namespace detail

struct EosRhsResult {
  OrderParams next;
  bool exists = true;
};

// One evaluation of the right-hand sides of the equations of state.
// Conjugates are derived from the incoming (chi, Q, m); the returned struct
// carries both the new (chi, Q, m) and the conjugates used to produce them.
inline EosRhsResult eos_rhs(const OrderParams& order, const EnsembleParams& ensemble,
                            const PenaltySpec& spec) {
  EosRhsResult out;
  const double alpha = ensemble.alpha;
  const double denom = 1.0 + order.chi / alpha;
  const double Qh = 1.0 / denom;
  const double chih = (order.Q - 2.0 * order.m + ensemble.rho0 * ensemble.sigma_x2 +
                       alpha * ensemble.sigma_D2) /
                      (alpha * denom * denom);
  if (!(chih >= 0.0) || !std::isfinite(chih) || detail::existence_margin(Qh, spec) < 1e-12) {
    out.exists = false;
    return out;
  }
  const SigmaMixture mix = sigma_mixture(ensemble, chih, Qh);
  const detail::FieldMoments fm_minus = detail::field_moments(mix.sigma_minus, Qh, spec);
  const detail::FieldMoments fm_plus = detail::field_moments(mix.sigma_plus, Qh, spec);
  const double rho = mix.rho_weight;

  out.next.chi = (1.0 - rho) * fm_minus.d_avg + rho * fm_plus.d_avg;
  out.next.Q = (1.0 - rho) * fm_minus.sq_avg + rho * fm_plus.sq_avg;
  out.next.m = ensemble.rho0 * ensemble.sigma_x2 * Qh * fm_plus.d_avg;
  out.next.Qh = Qh;
  out.next.mh = Qh;
  out.next.chih = chih;
  if (!std::isfinite(out.next.chi) || !std::isfinite(out.next.Q) ||
      !std::isfinite(out.next.m)) {
    out.exists = false;
  }
  return out;
}

// eps_x, eps_y, TP, FP, R, rho_hat from a fixed point.
inline RsObservables observables(const OrderParams& order, const EnsembleParams& ensemble,
                                 const PenaltySpec& spec) {
  RsObservables obs;
  obs.eps_x = 0.5 * (ensemble.rho0 * ensemble.sigma_x2 - 2.0 * order.m + order.Q);
  obs.eps_y = 0.5 * order.chih;
  const SigmaMixture mix = sigma_mixture(ensemble, order.chih, order.mh);
  auto support_prob = [&](double sigma) {
    if (sigma <= 0.0) return 0.0;
    return std::erfc(spec.lambda / (std::sqrt(2.0) * sigma));
  };
  obs.tp = support_prob(mix.sigma_plus);
  obs.fp = support_prob(mix.sigma_minus);
  obs.r = (obs.tp - 1.0) * (obs.tp - 1.0) + obs.fp * obs.fp;
  obs.rho_hat = (1.0 - ensemble.rho0) * obs.fp + ensemble.rho0 * obs.tp;
  return obs;
}

// AT stability: LHS of the de Almeida-Thouless inequality (stable iff < 1).
inline std::pair<double, bool> at_condition(const OrderParams& order,
                                            const EnsembleParams& ensemble,
                                            const PenaltySpec& spec) {
  const double alpha = ensemble.alpha;
  const double denom = 1.0 + order.chi / alpha;
  const SigmaMixture mix = sigma_mixture(ensemble, order.chih, order.Qh);
  const detail::FieldMoments fm_minus =
      detail::field_moments(mix.sigma_minus, order.Qh, spec);
  const detail::FieldMoments fm_plus =
      detail::field_moments(mix.sigma_plus, order.Qh, spec);
  const double avg_d2 =
      (1.0 - mix.rho_weight) * fm_minus.d2_avg + mix.rho_weight * fm_plus.d2_avg;
  const double lhs = avg_d2 / (alpha * denom * denom);
  return {lhs, lhs < 1.0};
}

struct EosOptions {
  double damping = 0.5;
  double tol = 1e-10;
  long max_iter = 100000;
};

inline OrderParams default_eos_init(const EnsembleParams& ensemble) {
  // chi = 0 keeps Qh = 1 at the first iterate, so the existence test does
  // not spuriously fire before the iteration has moved anywhere.
  OrderParams init;
  init.chi = 0.0;
  init.Q = ensemble.rho0 * ensemble.sigma_x2;
  init.m = 0.5 * ensemble.rho0 * ensemble.sigma_x2;
  return init;
}

// Damped fixed-point iteration on (chi, Q, m).
inline RsSolution solve_eos(const EnsembleParams& ensemble, const PenaltySpec& spec,
                            const OrderParams& init, const EosOptions& opts = {}) {
  if (!(opts.damping > 0.0 && opts.damping <= 1.0))
    throw std::invalid_argument("solve_eos: damping must be in (0,1]");
  if (!(opts.tol > 0.0)) throw std::invalid_argument("solve_eos: tol must be > 0");
  RsSolution sol;
  sol.lambda = spec.lambda;
  OrderParams cur = init;
  for (long it = 0; it < opts.max_iter; ++it) {
    const EosRhsResult rhs = eos_rhs(cur, ensemble, spec);
    if (!rhs.exists) {
      sol.status = RsStatus::NON_EXISTENT;
      sol.params = cur;
      return sol;
    }
    const double d = opts.damping;
    const double dchi = d * (rhs.next.chi - cur.chi);
    const double dQ = d * (rhs.next.Q - cur.Q);
    const double dm = d * (rhs.next.m - cur.m);
    cur.chi += dchi;
    cur.Q += dQ;
    cur.m += dm;
    cur.Qh = rhs.next.Qh;
    cur.mh = rhs.next.mh;
    cur.chih = rhs.next.chih;
    const double change =
        std::max({std::abs(dchi), std::abs(dQ), std::abs(dm)});
    if (change < opts.tol) {
      // refresh conjugates at the converged point
      const double denom = 1.0 + cur.chi / ensemble.alpha;
      cur.Qh = cur.mh = 1.0 / denom;
      cur.chih = (cur.Q - 2.0 * cur.m + ensemble.rho0 * ensemble.sigma_x2 +
                  ensemble.alpha * ensemble.sigma_D2) /
                 (ensemble.alpha * denom * denom);
      if (detail::existence_margin(cur.Qh, spec) < 0.0) {
        sol.status = RsStatus::NON_EXISTENT;
        sol.params = cur;
        return sol;
      }
      sol.status = RsStatus::CONVERGED;
      sol.params = cur;
      sol.observables = observables(cur, ensemble, spec);
      const auto [lhs, stable] = at_condition(cur, ensemble, spec);
      sol.at_lhs = lhs;
      sol.at_stable = stable;
      return sol;
    }
  }
  sol.status = RsStatus::MAX_ITER;
  sol.params = cur;
  return sol;
}

inline RsSolution solve_eos(const EnsembleParams& ensemble, const PenaltySpec& spec,
                            const EosOptions& opts = {}) {
  return solve_eos(ensemble, spec, default_eos_init(ensemble), opts);
}

// A cold start can transiently cross the existence boundary even when a fixed
// point exists on the physical branch. When that happens, anneal down from a
// large lambda (where the trivial fixed point is a safe start) and carry the
// converged order parameters as warm starts.
inline RsSolution solve_eos_annealed(const EnsembleParams& ensemble,
                                     const PenaltySpec& spec,
                                     const EosOptions& opts = {}, int steps = 40,
                                     double lambda_factor = 64.0) {
  RsSolution direct = solve_eos(ensemble, spec, opts);
  if (direct.status == RsStatus::CONVERGED) return direct;
  OrderParams warm = default_eos_init(ensemble);
  bool have_warm = false;
  for (int k = steps; k >= 0; --k) {
    PenaltySpec step = spec;
    step.lambda =
        spec.lambda * std::pow(lambda_factor, static_cast<double>(k) / steps);
    const RsSolution sol =
        solve_eos(ensemble, step, have_warm ? warm : default_eos_init(ensemble), opts);
    if (k == 0) return sol;
    if (sol.status == RsStatus::CONVERGED) {
      warm = sol.params;
      have_warm = true;
    }
  }
  return direct;
}

struct LambdaSweep {
  std::vector<RsSolution> solutions;               // one per grid lambda
  std::optional<double> first_non_existent_lambda;
  std::optional<double> first_at_unstable_lambda;
};

// Continuation in lambda: each point is warm-started from the previous
// converged fixed point.
inline LambdaSweep sweep_lambda(const EnsembleParams& ensemble, PenaltyKind kind,
                                double spec_a, const std::vector<double>& grid,
                                bool continuation = true, const EosOptions& opts = {}) {
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (!(grid[k] < grid[k - 1]))
      throw std::invalid_argument("sweep_lambda: grid must be strictly decreasing");
  LambdaSweep sweep;
  OrderParams warm = default_eos_init(ensemble);
  bool have_warm = false;
  for (double lam : grid) {
    PenaltySpec spec = PenaltySpec::validated({kind, lam, spec_a});
    const OrderParams init =
        (continuation && have_warm) ? warm : default_eos_init(ensemble);
    RsSolution sol = solve_eos(ensemble, spec, init, opts);
    if (sol.status == RsStatus::CONVERGED) {
      warm = sol.params;
      have_warm = true;
      if (!sol.at_stable && !sweep.first_at_unstable_lambda)
        sweep.first_at_unstable_lambda = lam;
    } else if (sol.status == RsStatus::NON_EXISTENT &&
               !sweep.first_non_existent_lambda) {
      sweep.first_non_existent_lambda = lam;
    }
    sweep.solutions.push_back(std::move(sol));
  }
  return sweep;
}

namespace detail {

// Solvability + stability probe used by the boundary bisections. Without a
// warm start, falls back to lambda annealing so that transient existence
// violations of the cold start do not misplace the boundaries.
inline RsSolution probe(const EnsembleParams& ensemble, PenaltyKind kind, double lam,
                        double a, const OrderParams* warm, const EosOptions& opts) {
  PenaltySpec spec = PenaltySpec::validated({kind, lam, a});
  if (warm) return solve_eos(ensemble, spec, *warm, opts);
  return solve_eos_annealed(ensemble, spec, opts);
}

}  // namespace detail

// Locates the AT crossing in lambda between a stable solution at lam_hi and
// an unstable/non-existent point at lam_lo, to rel_tol relative precision.
inline double at_crossing_lambda(const EnsembleParams& ensemble, PenaltyKind kind,
                                 double spec_a, double lam_hi, double lam_lo,
                                 double rel_tol = 1e-4, const EosOptions& opts = {}) {
  RsSolution hi_sol = detail::probe(ensemble, kind, lam_hi, spec_a, nullptr, opts);
  if (hi_sol.status != RsStatus::CONVERGED || !hi_sol.at_stable)
    throw std::invalid_argument("at_crossing_lambda: lam_hi must be stable");
  OrderParams warm = hi_sol.params;
  while ((lam_hi - lam_lo) > rel_tol * lam_hi) {
    const double mid = std::sqrt(lam_hi * lam_lo);  // bisect in log-lambda
    RsSolution mid_sol = detail::probe(ensemble, kind, mid, spec_a, &warm, opts);
    if (mid_sol.status == RsStatus::CONVERGED && mid_sol.at_stable) {
      lam_hi = mid;
      warm = mid_sol.params;
    } else {
      lam_lo = mid;
    }
  }
  return lam_hi;
}

struct BoundaryPoint {
  double lambda = 0.0;
  double a = 0.0;
  bool bracketed = false;  // false when the whole a range is on one side
};

struct ImsePoint {
  double a = 0.0;
  double lambda_imse = 0.0;   // argmin_lambda eps_x given a
  double eps_x_min = 0.0;
  bool stable_at_min = false;
  double r_min = 0.0;         // min_lambda R over stable converged points
  double lambda_r_min = 0.0;
  bool has_r = false;
};

struct PhaseBoundaries {
  std::vector<BoundaryPoint> at_line;   // a_AT(lambda)
  std::vector<BoundaryPoint> rs_line;   // a_RS(lambda)
  std::vector<ImsePoint> imse_line;     // per a
  double global_eps_x_min = std::numeric_limits<double>::infinity();
  double global_lambda = 0.0;
  double global_a = 0.0;
  bool global_stable = false;
  bool have_global = false;
  bool minimum_at_lasso_limit = false;  // eps_x still decreasing at largest a
};

// Traces a_AT(lambda), a_RS(lambda) by bisection in a, and the a_IMSE line by
// lambda sweeps per a. a_grid must be ascending, lambda_grid descending.
inline PhaseBoundaries phase_boundaries(const EnsembleParams& ensemble, PenaltyKind kind,
                                        const std::vector<double>& lambda_grid,
                                        const std::vector<double>& a_grid,
                                        double rel_tol = 1e-4,
                                        const EosOptions& opts = {}) {
  if (a_grid.size() < 2) throw std::invalid_argument("phase_boundaries: a_grid too small");
  PhaseBoundaries pb;
  const double a_lo_edge = a_grid.front(), a_hi_edge = a_grid.back();

  for (double lam : lambda_grid) {
    auto status_at = [&](double a) {
      return detail::probe(ensemble, kind, lam, a, nullptr, opts);
    };
    // existence boundary
    {
      double good = std::numeric_limits<double>::quiet_NaN();
      double bad = std::numeric_limits<double>::quiet_NaN();
      for (auto it = a_grid.rbegin(); it != a_grid.rend(); ++it) {
        const RsSolution s = status_at(*it);
        if (s.status == RsStatus::CONVERGED)
          good = *it;
        else {
          bad = *it;
          break;
        }
      }
      BoundaryPoint bp{lam, a_lo_edge, false};
      if (std::isnan(good)) {
        bp.a = a_hi_edge;  // nothing exists in range
      } else if (!std::isnan(bad)) {
        double lo = bad, hi = good;
        while (hi - lo > rel_tol * hi) {
          const double mid = 0.5 * (lo + hi);
          if (status_at(mid).status == RsStatus::CONVERGED)
            hi = mid;
          else
            lo = mid;
        }
        bp.a = hi;
        bp.bracketed = true;
      }
      pb.rs_line.push_back(bp);
    }
    // AT boundary
    {
      double good = std::numeric_limits<double>::quiet_NaN();
      double bad = std::numeric_limits<double>::quiet_NaN();
      for (auto it = a_grid.rbegin(); it != a_grid.rend(); ++it) {
        const RsSolution s = status_at(*it);
        if (s.status == RsStatus::CONVERGED && s.at_stable)
          good = *it;
        else {
          bad = *it;
          break;
        }
      }
      BoundaryPoint bp{lam, a_lo_edge, false};
      if (std::isnan(good)) {
        bp.a = a_hi_edge;
      } else if (!std::isnan(bad)) {
        double lo = bad, hi = good;
        while (hi - lo > rel_tol * hi) {
          const double mid = 0.5 * (lo + hi);
          const RsSolution s = status_at(mid);
          if (s.status == RsStatus::CONVERGED && s.at_stable)
            hi = mid;
          else
            lo = mid;
        }
        bp.a = hi;
        bp.bracketed = true;
      }
      pb.at_line.push_back(bp);
    }
  }

  // a_IMSE line: lambda sweep with continuation at each a
  for (double a : a_grid) {
    const LambdaSweep sweep = sweep_lambda(ensemble, kind, a, lambda_grid, true, opts);
    ImsePoint pt;
    pt.a = a;
    pt.eps_x_min = std::numeric_limits<double>::infinity();
    pt.r_min = std::numeric_limits<double>::infinity();
    for (const RsSolution& s : sweep.solutions) {
      if (s.status != RsStatus::CONVERGED) continue;
      if (s.observables.eps_x < pt.eps_x_min) {
        pt.eps_x_min = s.observables.eps_x;
        pt.lambda_imse = s.lambda;
        pt.stable_at_min = s.at_stable;
      }
      if (s.at_stable && s.observables.r < pt.r_min) {
        pt.r_min = s.observables.r;
        pt.lambda_r_min = s.lambda;
        pt.has_r = true;
      }
      if (s.observables.eps_x < pb.global_eps_x_min) {
        pb.global_eps_x_min = s.observables.eps_x;
        pb.global_lambda = s.lambda;
        pb.global_a = a;
        pb.global_stable = s.at_stable;
        pb.have_global = true;
      }
    }
    if (std::isfinite(pt.eps_x_min)) pb.imse_line.push_back(pt);
  }

  // "minimum at the LASSO limit": per-a minimum of eps_x strictly decreasing
  // across the top decade of the a grid.
  if (!pb.imse_line.empty()) {
    const double a_top = pb.imse_line.back().a;
    bool decreasing = true;
    double prev = std::numeric_limits<double>::infinity();
    int counted = 0;
    for (const ImsePoint& pt : pb.imse_line) {
      if (pt.a < a_top / 10.0) continue;
      if (counted > 0 && !(pt.eps_x_min < prev)) decreasing = false;
      prev = pt.eps_x_min;
      ++counted;
    }
    pb.minimum_at_lasso_limit = decreasing && counted >= 2;
  }
  return pb;
}

}  // namespace sparsecv

#endif  // SPARSECV_REPLICA_HPP
