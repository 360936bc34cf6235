#ifndef SPARSECV_PENALTY_HPP
#define SPARSECV_PENALTY_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace sparsecv {

enum class PenaltyKind { LASSO, SCAD, MCP };

// eta = {lambda, a}: lambda is the amplitude parameter, a the switching
// parameter. LASSO ignores a (kept at 0 by the factory functions).
struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::LASSO;
  double lambda = 0.0;
  double a = 0.0;

  static PenaltySpec lasso(double lambda) { return validated({PenaltyKind::LASSO, lambda, 0.0}); }
  static PenaltySpec scad(double lambda, double a) { return validated({PenaltyKind::SCAD, lambda, a}); }
  static PenaltySpec mcp(double lambda, double a) { return validated({PenaltyKind::MCP, lambda, a}); }

  PenaltySpec with_lambda(double l) const {
    PenaltySpec s = *this;
    s.lambda = l;
    return validated(s);
  }

  static PenaltySpec validated(PenaltySpec s) {
    if (!(s.lambda >= 0.0)) throw std::invalid_argument("penalty: lambda must be >= 0");
    if (s.kind == PenaltyKind::SCAD && !(s.a > 1.0))
      throw std::invalid_argument("penalty: SCAD requires a > 1");
    if (s.kind == PenaltyKind::MCP && !(s.a > 0.0))
      throw std::invalid_argument("penalty: MCP requires a > 0");
    return s;
  }
};

enum class ProxBranch { ZERO, SOFT, TRANSITION, OLS };

struct ScalarProxResult {
  double theta_hat = 0.0;
  ProxBranch branch = ProxBranch::ZERO;
  double objective = 0.0;
};

// J(theta; eta)
inline double penalty_value(double theta, const PenaltySpec& spec) {
  const double t = std::abs(theta);
  const double lam = spec.lambda, a = spec.a;
  switch (spec.kind) {
    case PenaltyKind::LASSO:
      return lam * t;
    case PenaltyKind::SCAD:
      if (t <= lam) return lam * t;
      if (t <= a * lam) return -(t * t - 2.0 * a * lam * t + lam * lam) / (2.0 * (a - 1.0));
      return (a + 1.0) * lam * lam / 2.0;
    case PenaltyKind::MCP:
      if (t <= a * lam) return lam * t - t * t / (2.0 * a);
      return a * lam * lam / 2.0;
  }
  return 0.0;
}

// d^2 J / d theta^2, defined branchwise. At a branch boundary the value of
// the open interval to the LEFT (|theta| slightly smaller) is returned.
inline double penalty_curvature(double theta, const PenaltySpec& spec) {
  const double t = std::abs(theta);
  const double lam = spec.lambda, a = spec.a;
  switch (spec.kind) {
    case PenaltyKind::LASSO:
      return 0.0;
    case PenaltyKind::SCAD:
      return (t > lam && t <= a * lam) ? 1.0 / (1.0 - a) : 0.0;
    case PenaltyKind::MCP:
      return (t <= a * lam) ? -1.0 / a : 0.0;
  }
  return 0.0;
}

// One-dimensional objective (theta - w)^2 / (2 sigma_w2) + J(theta).
inline double prox_objective(double theta, double w, double sigma_w2,
                             const PenaltySpec& spec) {
  const double d = theta - w;
  return d * d / (2.0 * sigma_w2) + penalty_value(theta, spec);
}

// Candidate minimizers of the 1-D objective: zero, the branch boundaries,
// and the interior stationary point of each analytic branch (where its
// denominator permits). Fallback route for scalar_prox when the piecewise
// closed form degenerates; also usable for independent verification.
inline std::vector<double> candidate_stationary_points(double w, double sigma_w2,
                                                       const PenaltySpec& spec) {
  if (!(sigma_w2 > 0.0)) throw std::invalid_argument("prox: sigma_w2 must be > 0");
  const double lam = spec.lambda, a = spec.a;
  const double x = w / sigma_w2;  // field
  std::vector<double> cand;
  cand.push_back(0.0);
  auto push_both = [&cand](double v) {
    cand.push_back(v);
    cand.push_back(-v);
  };
  switch (spec.kind) {
    case PenaltyKind::LASSO:
      push_both(std::abs(w) - lam * sigma_w2);
      break;
    case PenaltyKind::SCAD: {
      push_both(lam);
      push_both(a * lam);
      cand.push_back(w - lam * sigma_w2);  // l1 branch stationary points
      cand.push_back(w + lam * sigma_w2);
      const double denom = 1.0 / sigma_w2 - 1.0 / (a - 1.0);
      if (std::abs(denom) > 1e-300) {
        cand.push_back((x - a * lam / (a - 1.0)) / denom);
        cand.push_back((x + a * lam / (a - 1.0)) / denom);
      }
      cand.push_back(w);  // flat branch
      break;
    }
    case PenaltyKind::MCP: {
      push_both(a * lam);
      const double denom = 1.0 / sigma_w2 - 1.0 / a;
      if (std::abs(denom) > 1e-300) {
        cand.push_back((x - lam) / denom);
        cand.push_back((x + lam) / denom);
      }
      cand.push_back(w);
      break;
    }
  }
  return cand;
}

namespace detail {

inline ProxBranch classify_branch(double theta_hat, const PenaltySpec& spec) {
  const double t = std::abs(theta_hat);
  if (t == 0.0) return ProxBranch::ZERO;
  switch (spec.kind) {
    case PenaltyKind::LASSO:
      return ProxBranch::SOFT;
    case PenaltyKind::SCAD:
      if (t <= spec.lambda) return ProxBranch::SOFT;
      if (t <= spec.a * spec.lambda) return ProxBranch::TRANSITION;
      return ProxBranch::OLS;
    case PenaltyKind::MCP:
      if (t <= spec.a * spec.lambda) return ProxBranch::TRANSITION;
      return ProxBranch::OLS;
  }
  return ProxBranch::ZERO;
}

inline ScalarProxResult prox_by_enumeration(double w, double sigma_w2,
                                            const PenaltySpec& spec) {
  if (w < 0.0) {  // canonicalize so the result is exactly odd in w
    ScalarProxResult r = prox_by_enumeration(-w, sigma_w2, spec);
    r.theta_hat = -r.theta_hat;
    return r;
  }
  const std::vector<double> cand = candidate_stationary_points(w, sigma_w2, spec);
  double best_theta = 0.0;
  double best_obj = prox_objective(0.0, w, sigma_w2, spec);
  for (double c : cand) {
    if (!std::isfinite(c)) continue;
    const double obj = prox_objective(c, w, sigma_w2, spec);
    if (obj < best_obj - 1e-15 * (1.0 + std::abs(best_obj)) ||
        (std::abs(obj - best_obj) <= 1e-15 * (1.0 + std::abs(best_obj)) &&
         std::abs(c) < std::abs(best_theta))) {
      best_obj = obj;
      best_theta = c;
    }
  }
  return {best_theta, classify_branch(best_theta, spec), best_obj};
}

}  // namespace detail

// Global minimizer of (theta - w)^2 / (2 sigma_w2) + J(theta; eta).
// Uses the piecewise closed form where the effective 1-D problem is convex,
// otherwise enumerates candidate stationary points.
inline ScalarProxResult scalar_prox(double w, double sigma_w2,
                                    const PenaltySpec& spec) {
  if (!(sigma_w2 > 0.0)) throw std::invalid_argument("prox: sigma_w2 must be > 0");
  const double lam = spec.lambda, a = spec.a;
  const double x = w / sigma_w2;
  const double ax = std::abs(x);
  const double sgn = (x >= 0.0) ? 1.0 : -1.0;
  const double inv_s2 = 1.0 / sigma_w2;
  double theta = 0.0;
  ProxBranch branch = ProxBranch::ZERO;
  switch (spec.kind) {
    case PenaltyKind::LASSO:
      if (ax > lam) {
        theta = sigma_w2 * (x - sgn * lam);
        branch = ProxBranch::SOFT;
      }
      break;
    case PenaltyKind::SCAD: {
      const double denom = inv_s2 - 1.0 / (a - 1.0);
      if (denom <= 0.0) return detail::prox_by_enumeration(w, sigma_w2, spec);
      if (ax <= lam) {
        // zero branch
      } else if (ax <= lam * (1.0 + inv_s2)) {
        theta = sigma_w2 * (x - sgn * lam);
        branch = ProxBranch::SOFT;
      } else if (ax <= a * lam * inv_s2) {
        theta = (x - sgn * a * lam / (a - 1.0)) / denom;
        branch = ProxBranch::TRANSITION;
      } else {
        theta = w;
        branch = ProxBranch::OLS;
      }
      break;
    }
    case PenaltyKind::MCP: {
      const double denom = inv_s2 - 1.0 / a;
      if (denom <= 0.0) return detail::prox_by_enumeration(w, sigma_w2, spec);
      if (ax <= lam) {
        // zero branch
      } else if (ax <= a * lam * inv_s2) {
        theta = (x - sgn * lam) / denom;
        branch = ProxBranch::TRANSITION;
      } else {
        theta = w;
        branch = ProxBranch::OLS;
      }
      break;
    }
  }
  return {theta, branch, prox_objective(theta, w, sigma_w2, spec)};
}

// Brute-force reference minimizer: grid scan over
// [-grid_halfwidth, grid_halfwidth] refined by ternary search. Test oracle;
// deliberately independent of the closed-form route above.
inline double scalar_prox_oracle(double w, double sigma_w2, const PenaltySpec& spec,
                                 double grid_halfwidth = 10.0, double step = 1e-6) {
  if (!(step > 0.0)) throw std::invalid_argument("oracle: step must be > 0");
  const double coarse = std::max(step * 100.0, grid_halfwidth / 4.0e4);
  double best = -grid_halfwidth;
  double best_obj = prox_objective(best, w, sigma_w2, spec);
  for (double t = -grid_halfwidth; t <= grid_halfwidth; t += coarse) {
    const double obj = prox_objective(t, w, sigma_w2, spec);
    if (obj < best_obj) {
      best_obj = obj;
      best = t;
    }
  }
  // also scan the kink locations: the minimum may sit exactly on one
  for (double t : {0.0, spec.lambda, -spec.lambda, spec.a * spec.lambda,
                   -spec.a * spec.lambda, w}) {
    const double obj = prox_objective(t, w, sigma_w2, spec);
    if (obj < best_obj) {
      best_obj = obj;
      best = t;
    }
  }
  // local ternary refinement around the best coarse cell
  double lo = best - coarse, hi = best + coarse;
  while (hi - lo > step * 0.25) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (prox_objective(m1, w, sigma_w2, spec) <= prox_objective(m2, w, sigma_w2, spec))
      hi = m2;
    else
      lo = m1;
  }
  double refined = 0.5 * (lo + hi);
  // keep the exact kink if it is at least as good
  for (double t : {0.0, best}) {
    if (prox_objective(t, w, sigma_w2, spec) <=
        prox_objective(refined, w, sigma_w2, spec))
      refined = t;
  }
  return refined;
}

}  // namespace sparsecv

#endif  // SPARSECV_PENALTY_HPP
