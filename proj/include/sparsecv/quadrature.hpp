#ifndef SPARSECV_QUADRATURE_HPP
#define SPARSECV_QUADRATURE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace sparsecv {

// Nodes/weights for integral(f(t) w(t) dt) with the respective weight.
struct QuadRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Hermite rule: integral f(t) exp(-t^2) dt = sum w_i f(t_i).
// Nodes are the Hermite polynomial roots, obtained by Newton iteration
// on the three-term recurrence starting from a cosine-spaced guess.
inline QuadRule gauss_hermite(std::size_t n) {
  if (n == 0) throw std::invalid_argument("gauss_hermite: n must be positive");
  QuadRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double pim4 = 0.7511255444649425;  // pi^{-1/4}
  const std::size_t m = (n + 1) / 2;
  double z = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    // initial guesses (Numerical-Recipes style)
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * rule.nodes[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * rule.nodes[1];
    } else {
      z = 2.0 * z - rule.nodes[i - 2];
    }
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = pim4;
      double p2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 -
             std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    rule.nodes[i] = z;
    rule.nodes[n - 1 - i] = -z;
    rule.weights[i] = 2.0 / (pp * pp);
    rule.weights[n - 1 - i] = rule.weights[i];
  }
  return rule;
}

// E_z[f(z)], z ~ N(0,1), by an n-node Gauss-Hermite rule.
inline double gauss_hermite_expectation(const std::function<double(double)>& f,
                                        std::size_t n = 200) {
  static thread_local std::size_t cached_n = 0;
  static thread_local QuadRule cached;
  if (cached_n != n) {
    cached = gauss_hermite(n);
    cached_n = n;
  }
  const double inv_sqrt_pi = 0.5641895835477563;
  double acc = 0.0;
  for (std::size_t i = 0; i < cached.nodes.size(); ++i)
    acc += cached.weights[i] * f(std::sqrt(2.0) * cached.nodes[i]);
  return acc * inv_sqrt_pi;
}

// Gauss-Legendre rule on [-1,1].
inline QuadRule gauss_legendre(std::size_t n) {
  QuadRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const std::size_t m = (n + 1) / 2;
  for (std::size_t i = 0; i < m; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.weights[n - 1 - i] = rule.weights[i];
  }
  return rule;
}

// E_z[f(z)], z ~ N(0,1), where f is only piecewise smooth: the line is cut
// at the supplied breakpoints and each segment is handled by Gauss-Legendre.
// Accurate to near machine precision for the kinked integrands arising from
// piecewise thresholding rules, where a plain Hermite rule converges slowly.
inline double piecewise_gaussian_expectation(
    const std::function<double(double)>& f, std::vector<double> breakpoints,
    double cutoff = 12.0, std::size_t nodes_per_segment = 64) {
  static thread_local std::size_t cached_n = 0;
  static thread_local QuadRule cached;
  if (cached_n != nodes_per_segment) {
    cached = gauss_legendre(nodes_per_segment);
    cached_n = nodes_per_segment;
  }
  std::vector<double> cuts;
  cuts.push_back(-cutoff);
  for (double b : breakpoints) {
    if (std::isfinite(b) && std::abs(b) < cutoff) cuts.push_back(b);
  }
  cuts.push_back(cutoff);
  std::sort(cuts.begin(), cuts.end());
  const double norm = 0.3989422804014327;  // 1/sqrt(2*pi)
  double acc = 0.0;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double lo = cuts[s], hi = cuts[s + 1];
    if (hi - lo < 1e-300) continue;
    const double c = 0.5 * (hi + lo), h = 0.5 * (hi - lo);
    double seg = 0.0;
    for (std::size_t i = 0; i < cached.nodes.size(); ++i) {
      const double z = c + h * cached.nodes[i];
      seg += cached.weights[i] * f(z) * std::exp(-0.5 * z * z);
    }
    acc += seg * h;
  }
  return acc * norm;
}

}  // namespace sparsecv

#endif  // SPARSECV_QUADRATURE_HPP
