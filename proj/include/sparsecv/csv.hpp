#ifndef SPARSECV_CSV_HPP
#define SPARSECV_CSV_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sparsecv/crossval.hpp"
#include "sparsecv/datagen.hpp"
#include "sparsecv/problem.hpp"
#include "sparsecv/replica.hpp"

namespace sparsecv {
namespace csv {

// All numeric output uses 17 significant digits so write -> read round-trips
// are bit-lossless for doubles.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Matrix file: header line "rows,cols", then row-major data lines.
inline void write_matrix(const std::filesystem::path& file, const Matrix& m) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("csv: cannot open " + file.string());
  out << m.rows() << "," << m.cols() << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ",";
      out << fmt(m(i, j));
    }
    out << "\n";
  }
}

inline Matrix read_matrix(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("csv: cannot open " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty file " + file.string());
  Eigen::Index rows = 0, cols = 0;
  if (std::sscanf(line.c_str(), "%ld,%ld", &rows, &cols) != 2 || rows < 1 || cols < 1)
    throw std::runtime_error("csv: bad header in " + file.string());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!std::getline(in, line))
      throw std::runtime_error("csv: truncated data in " + file.string());
    std::stringstream ss(line);
    std::string cell;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!std::getline(ss, cell, ','))
        throw std::runtime_error("csv: short row in " + file.string());
      m(i, j) = std::stod(cell);
    }
  }
  return m;
}

inline void write_vector(const std::filesystem::path& file, const Vector& v) {
  write_matrix(file, v);
}

inline Vector read_vector(const std::filesystem::path& file) {
  const Matrix m = read_matrix(file);
  if (m.cols() != 1) throw std::runtime_error("csv: expected single column in " + file.string());
  return m.col(0);
}

// Instance layout in a directory: y.csv, A.csv, optional x0.csv, meta.json.
inline void write_instance(const std::filesystem::path& dir, const RegressionProblem& problem,
                           const std::optional<EnsembleParams>& ensemble = std::nullopt,
                           std::optional<std::uint64_t> seed = std::nullopt) {
  std::filesystem::create_directories(dir);
  write_vector(dir / "y.csv", problem.y);
  write_matrix(dir / "A.csv", problem.A);
  if (problem.x0) write_vector(dir / "x0.csv", *problem.x0);
  nlohmann::json meta;
  meta["m"] = problem.m();
  meta["n"] = problem.n();
  meta["has_x0"] = static_cast<bool>(problem.x0);
  if (ensemble) {
    meta["ensemble"] = {{"alpha", ensemble->alpha},
                        {"rho0", ensemble->rho0},
                        {"sigma_x2", ensemble->sigma_x2},
                        {"sigma_D2", ensemble->sigma_D2}};
  }
  if (seed) meta["seed"] = *seed;
  std::ofstream out(dir / "meta.json");
  out << meta.dump(2) << "\n";
}

inline RegressionProblem read_instance(const std::filesystem::path& dir) {
  Vector y = read_vector(dir / "y.csv");
  Matrix A = read_matrix(dir / "A.csv");
  std::optional<Vector> x0;
  if (std::filesystem::exists(dir / "x0.csv")) x0 = read_vector(dir / "x0.csv");
  return RegressionProblem(std::move(y), std::move(A), std::move(x0));
}

inline void write_transform(const std::filesystem::path& file,
                            const StandardizeTransform& tf) {
  nlohmann::json j;
  j["y_mean"] = tf.y_mean;
  j["col_mean"] = tf.col_mean;
  j["col_scale"] = tf.col_scale;
  j["dropped_columns"] = tf.dropped_columns;
  j["kept_columns"] = tf.kept_columns;
  std::ofstream out(file);
  out << j.dump(2) << "\n";
}

inline void write_path(const std::filesystem::path& file, const RegressionProblem& problem,
                       const SolutionPath& path, bool with_coefficients = false) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("csv: cannot open " + file.string());
  out << "lambda,K,eps_y,converged,sweeps,max_coord_delta";
  if (with_coefficients)
    for (Eigen::Index i = 0; i < problem.n(); ++i) out << ",x" << i;
  out << "\n";
  for (std::size_t k = 0; k < path.lambdas.size(); ++k) {
    const Estimate& est = path.estimates[k];
    out << fmt(path.lambdas[k]) << "," << est.k() << ","
        << fmt(output_mse(problem, est)) << "," << (est.converged ? 1 : 0) << ","
        << est.iterations << "," << fmt(est.max_coord_delta);
    if (with_coefficients)
      for (Eigen::Index i = 0; i < problem.n(); ++i) out << "," << fmt(est.x_hat[i]);
    out << "\n";
  }
}

// Optional literal columns are written when a parallel list of literal
// results (same lambda order) is supplied.
inline void write_cv_curve(const std::filesystem::path& file, const CvCurve& curve,
                           const std::vector<CvPointResult>* literal = nullptr) {
  if (literal && literal->size() != curve.points.size())
    throw std::invalid_argument("write_cv_curve: literal size mismatch");
  std::ofstream out(file);
  if (!out) throw std::runtime_error("csv: cannot open " + file.string());
  out << "lambda,cv_error,error_bar,stable,hessian_ok,K";
  if (literal) out << ",literal_cv_error,literal_error_bar,literal_converged";
  out << "\n";
  for (std::size_t j = 0; j < curve.points.size(); ++j) {
    const CvPointResult& p = curve.points[j];
    out << fmt(p.lambda) << "," << fmt(p.epsilon_cv) << "," << fmt(p.error_bar) << ","
        << (curve.stable_mask[j] ? 1 : 0) << "," << (p.hessian_ok ? 1 : 0) << ","
        << p.k_active;
    if (literal) {
      const CvPointResult& l = (*literal)[j];
      out << "," << fmt(l.epsilon_cv) << "," << fmt(l.error_bar) << ","
          << (l.folds_converged ? 1 : 0);
    }
    out << "\n";
  }
}

inline const char* status_name(RsStatus s) {
  switch (s) {
    case RsStatus::CONVERGED: return "converged";
    case RsStatus::NON_EXISTENT: return "non_existent";
    case RsStatus::MAX_ITER: return "max_iter";
  }
  return "?";
}

inline void write_phase_grid(const std::filesystem::path& file,
                             const std::vector<std::pair<double, RsSolution>>& cells) {
  // pair.first carries the a value; the solution carries its lambda
  std::ofstream out(file);
  if (!out) throw std::runtime_error("csv: cannot open " + file.string());
  out << "lambda,a,status,at_lhs,eps_x,eps_y,TP,FP,R,rho_hat\n";
  for (const auto& [a, sol] : cells) {
    out << fmt(sol.lambda) << "," << fmt(a) << "," << status_name(sol.status) << ","
        << fmt(sol.at_lhs) << "," << fmt(sol.observables.eps_x) << ","
        << fmt(sol.observables.eps_y) << "," << fmt(sol.observables.tp) << ","
        << fmt(sol.observables.fp) << "," << fmt(sol.observables.r) << ","
        << fmt(sol.observables.rho_hat) << "\n";
  }
}

inline void write_boundaries(const std::filesystem::path& file, const PhaseBoundaries& pb) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("csv: cannot open " + file.string());
  out << "line,lambda,a,extra\n";
  for (const BoundaryPoint& p : pb.at_line)
    out << "AT," << fmt(p.lambda) << "," << fmt(p.a) << "," << (p.bracketed ? 1 : 0) << "\n";
  for (const BoundaryPoint& p : pb.rs_line)
    out << "RS," << fmt(p.lambda) << "," << fmt(p.a) << "," << (p.bracketed ? 1 : 0) << "\n";
  for (const ImsePoint& p : pb.imse_line)
    out << "IMSE," << fmt(p.lambda_imse) << "," << fmt(p.a) << "," << fmt(p.eps_x_min)
        << "\n";
  if (pb.have_global)
    out << "GLOBAL_MIN," << fmt(pb.global_lambda) << "," << fmt(pb.global_a) << ","
        << fmt(pb.global_eps_x_min) << "\n";
  if (pb.minimum_at_lasso_limit) out << "LASSO_LIMIT_MIN,nan,nan,1\n";
}

}  // namespace csv
}  // namespace sparsecv

#endif  // SPARSECV_CSV_HPP
