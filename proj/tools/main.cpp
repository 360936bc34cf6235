// sparsecv command-line front end.
//
// Subcommands:
//   gen    synthesize an instance from the Bernoulli-Gauss ensemble
//   fit    solve a lambda-annealed solution path on a stored instance
//   cv     approximate (and optionally literal) CV with instability detection
//   phase  empirical or theoretical (lambda, a) phase diagrams
//   bench  approximate-vs-literal CV accuracy and timing across sizes
//
// Exit codes: 0 success, 1 usage error, 2 numerical failure.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <mutex>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sparsecv/crossval.hpp"
#include "sparsecv/csv.hpp"
#include "sparsecv/datagen.hpp"
#include "sparsecv/replica.hpp"
#include "sparsecv/solver.hpp"
#include "sparsecv/util.hpp"

namespace fs = std::filesystem;
using namespace sparsecv;

namespace {

PenaltyKind parse_kind(const std::string& kind) {
  if (kind == "lasso") return PenaltyKind::LASSO;
  if (kind == "scad") return PenaltyKind::SCAD;
  if (kind == "mcp") return PenaltyKind::MCP;
  throw CLI::ValidationError("--kind", "must be lasso, scad, or mcp");
}

// "L:eps" (grid built from data or --lambda-max) or an explicit
// comma-separated descending list.
struct GridSpec {
  bool explicit_list = false;
  std::vector<double> values;
  int L = 100;
  double eps = 0.01;
};

GridSpec parse_grid_spec(const std::string& text) {
  GridSpec g;
  if (text.find(',') != std::string::npos) {
    g.explicit_list = true;
    std::stringstream ss(text);
    for (std::string cell; std::getline(ss, cell, ',');)
      g.values.push_back(std::stod(cell));
    for (std::size_t k = 1; k < g.values.size(); ++k)
      if (!(g.values[k] < g.values[k - 1]))
        throw CLI::ValidationError("--lambda-grid", "list must be strictly decreasing");
    return g;
  }
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw CLI::ValidationError("--lambda-grid", "expected L:eps or a comma list");
  g.L = std::stoi(text.substr(0, colon));
  g.eps = std::stod(text.substr(colon + 1));
  if (g.L < 2 || !(g.eps > 0.0 && g.eps < 1.0))
    throw CLI::ValidationError("--lambda-grid", "need L >= 2 and eps in (0,1)");
  return g;
}

std::vector<double> geometric_grid(double top, int L, double eps) {
  std::vector<double> grid(L);
  const double ratio = std::pow(eps, 1.0 / (L - 1));
  for (int k = 0; k < L; ++k) grid[k] = top * std::pow(ratio, k);
  grid[L - 1] = top * eps;
  return grid;
}

std::vector<double> resolve_grid(const GridSpec& g, const RegressionProblem& p) {
  if (g.explicit_list) return g.values;
  return lambda_grid(p, g.L, g.eps);
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

struct CvRun {
  CvCurve curve;
  std::vector<CvPointResult> literal;  // parallel to curve.points when present
  SolutionPath path;
};

CvRun run_cv(const RegressionProblem& p, PenaltyKind kind, double a,
             const std::vector<double>& grid, const CdOptions& cd, bool literal,
             Eigen::Index kfold, double k_detect, int window) {
  CvRun run;
  run.path = solve_path(p, kind, a, grid, cd);
  std::vector<CvPointResult> points(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const PenaltySpec spec = PenaltySpec::validated({kind, grid[k], a});
    points[k] = approx_loo(p, run.path.estimates[k], spec);
  }
  run.curve = detect_instability(points, k_detect, window);
  if (literal) {
    run.literal.resize(grid.size());
    parallel_for(grid.size(), [&](std::size_t k) {
      const PenaltySpec spec = PenaltySpec::validated({kind, grid[k], a});
      const Vector& warm = run.path.estimates[k].x_hat;
      run.literal[k] = (kfold > 0)
                           ? kfold_cv(p, spec, kfold, cd.seed + k, warm, cd)
                           : literal_loo(p, spec, warm, cd);
    });
  }
  return run;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse regression with nonconvex penalties: paths, CV, phase diagrams"};
  app.require_subcommand(1);

  // shared options
  std::string kind_name = "scad";
  double a = 3.0;
  std::string grid_text = "100:0.01";
  double delta = 1e-10;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string data_dir;

  // ensemble
  long n = 100;
  double alpha = 0.5, rho0 = 0.2, sigma_d2 = 0.1, sigma_x2 = -1.0;

  auto add_penalty = [&](CLI::App* cmd) {
    cmd->add_option("--kind", kind_name, "penalty kind: lasso|scad|mcp");
    cmd->add_option("--a", a, "switching parameter a (scad/mcp)");
  };
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--lambda-grid", grid_text, "L:eps or explicit descending list");
    cmd->add_option("--delta", delta, "CD convergence threshold");
    cmd->add_option("--seed", seed, "PRNG seed");
    cmd->add_option("--out", out_dir, "output directory");
  };
  auto add_ensemble = [&](CLI::App* cmd) {
    cmd->add_option("--n", n, "number of columns N");
    cmd->add_option("--alpha", alpha, "row/column ratio M/N");
    cmd->add_option("--rho0", rho0, "signal density");
    cmd->add_option("--sigma-d2", sigma_d2, "noise variance");
    cmd->add_option("--sigma-x2", sigma_x2, "signal variance (default 1/rho0)");
  };

  // gen
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic instance");
  add_ensemble(gen);
  gen->add_option("--seed", seed, "PRNG seed");
  gen->add_option("--out", out_dir, "output directory");

  // fit
  CLI::App* fit = app.add_subcommand("fit", "solve a lambda-annealed path");
  fit->add_option("--data", data_dir, "instance directory (y.csv, A.csv)")->required();
  add_penalty(fit);
  add_common(fit);
  bool standardize_flag = false, coefs_flag = false;
  fit->add_flag("--standardize", standardize_flag, "center/rescale before fitting");
  fit->add_flag("--coefs", coefs_flag, "write coefficients into the path CSV");

  // cv
  CLI::App* cv = app.add_subcommand("cv", "cross-validation with instability detection");
  cv->add_option("--data", data_dir, "instance directory")->required();
  std::vector<double> a_list;
  cv->add_option("--kind", kind_name, "penalty kind: lasso|scad|mcp");
  cv->add_option("--a", a_list, "switching parameter(s); several enable selection");
  add_common(cv);
  bool literal_flag = false, select_flag = false;
  long kfold = 0;
  double k_detect = 3.0;
  int window = 2;
  cv->add_flag("--literal", literal_flag, "also run literal CV");
  cv->add_option("--kfold", kfold, "fold count for literal CV (0 = LOO)");
  cv->add_option("--k-detect", k_detect, "instability threshold multiplier");
  cv->add_option("--window", window, "larger-lambda neighbours compared");
  cv->add_flag("--select", select_flag, "apply the one-standard-error rule");
  cv->add_flag("--standardize", standardize_flag, "center/rescale before fitting");

  // phase
  CLI::App* phase = app.add_subcommand("phase", "(lambda, a) phase diagrams");
  std::string mode = "theory";
  phase->add_option("--mode", mode, "empirical|theory");
  phase->add_option("--data", data_dir, "instance directory (empirical mode)");
  add_penalty(phase);
  add_ensemble(phase);
  add_common(phase);
  std::vector<double> a_grid;
  double lambda_max = 10.0;
  phase->add_option("--a-grid", a_grid, "ascending a values");
  phase->add_option("--lambda-max", lambda_max, "top of the lambda grid (theory mode)");
  phase->add_option("--k-detect", k_detect, "instability threshold multiplier");
  phase->add_option("--window", window, "larger-lambda neighbours compared");

  // bench
  CLI::App* bench = app.add_subcommand("bench", "approximate-vs-literal CV benchmark");
  std::vector<long> n_list = {50, 100, 200};
  long n_seeds = 10;
  double bench_lambda = 1.0;
  add_penalty(bench);
  add_ensemble(bench);
  bench->add_option("--n-list", n_list, "problem sizes N");
  bench->add_option("--seeds", n_seeds, "instances per size");
  bench->add_option("--lambda", bench_lambda, "evaluation lambda");
  bench->add_option("--delta", delta, "CD convergence threshold");
  bench->add_option("--seed", seed, "base PRNG seed");
  bench->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    fs::create_directories(out_dir);
    CdOptions cd;
    cd.delta = delta;
    cd.seed = seed;

    if (gen->parsed()) {
      const EnsembleParams e = EnsembleParams::make(alpha, rho0, sigma_d2, sigma_x2);
      const SyntheticInstance inst = gen_instance(n, e, seed);
      csv::write_instance(out_dir, inst.problem, e, seed);
      std::printf("gen: wrote M=%ld N=%ld instance to %s\n",
                  static_cast<long>(inst.problem.m()),
                  static_cast<long>(inst.problem.n()), out_dir.c_str());
      return 0;
    }

    if (fit->parsed()) {
      RegressionProblem p = csv::read_instance(data_dir);
      if (standardize_flag) {
        auto [stdp, tf] = standardize(p);
        csv::write_transform(fs::path(out_dir) / "transform.json", tf);
        p = std::move(stdp);
      }
      const PenaltyKind kind = parse_kind(kind_name);
      const auto grid = resolve_grid(parse_grid_spec(grid_text), p);
      const SolutionPath path = solve_path(p, kind, a, grid, cd);
      csv::write_path(fs::path(out_dir) / "path.csv", p, path, coefs_flag);
      std::printf("fit: %zu lambda points -> %s/path.csv\n", grid.size(),
                  out_dir.c_str());
      return 0;
    }

    if (cv->parsed()) {
      RegressionProblem p = csv::read_instance(data_dir);
      if (standardize_flag) {
        auto [stdp, tf] = standardize(p);
        csv::write_transform(fs::path(out_dir) / "transform.json", tf);
        p = std::move(stdp);
      }
      const PenaltyKind kind = parse_kind(kind_name);
      if (a_list.empty()) a_list.push_back(kind == PenaltyKind::LASSO ? 0.0 : a);
      const auto grid = resolve_grid(parse_grid_spec(grid_text), p);
      std::vector<CvCurve> curves;
      for (std::size_t c = 0; c < a_list.size(); ++c) {
        CvRun run = run_cv(p, kind, a_list[c], grid, cd, literal_flag, kfold,
                           k_detect, window);
        std::ostringstream name;
        name << "cv_a" << a_list[c] << ".csv";
        csv::write_cv_curve(fs::path(out_dir) / name.str(), run.curve,
                            literal_flag ? &run.literal : nullptr);
        if (run.curve.lambda_c)
          std::printf("cv: a=%g lambda_c=%.6g\n", a_list[c], *run.curve.lambda_c);
        else
          std::printf("cv: a=%g fully stable\n", a_list[c]);
        curves.push_back(std::move(run.curve));
      }
      if (select_flag) {
        const OneStdErrorSelection sel = one_std_error_select(a_list, curves);
        nlohmann::json j;
        j["a"] = sel.a;
        j["lambda"] = sel.lambda;
        j["K"] = sel.k;
        j["cv_error"] = sel.epsilon_cv;
        std::ofstream out(fs::path(out_dir) / "selection.json");
        out << j.dump(2) << "\n";
        std::printf("cv: one-SE selection a=%g lambda=%.6g K=%ld\n", sel.a,
                    sel.lambda, static_cast<long>(sel.k));
      }
      return 0;
    }

    if (phase->parsed()) {
      const PenaltyKind kind = parse_kind(kind_name);
      if (mode == "theory") {
        const EnsembleParams e = EnsembleParams::make(alpha, rho0, sigma_d2, sigma_x2);
        const GridSpec gs = parse_grid_spec(grid_text);
        const std::vector<double> lgrid =
            gs.explicit_list ? gs.values : geometric_grid(lambda_max, gs.L, gs.eps);
        if (a_grid.empty()) {
          const double a_min = kind == PenaltyKind::MCP ? 1.05 : 2.05;
          for (double v = a_min; v < 40.0; v *= 1.15) a_grid.push_back(v);
        }
        const PhaseBoundaries pb = phase_boundaries(e, kind, lgrid, a_grid);
        csv::write_boundaries(fs::path(out_dir) / "boundaries.csv", pb);
        std::vector<std::pair<double, RsSolution>> cells;
        for (double av : a_grid) {
          const LambdaSweep sweep = sweep_lambda(e, kind, av, lgrid);
          for (const RsSolution& s : sweep.solutions) cells.emplace_back(av, s);
        }
        csv::write_phase_grid(fs::path(out_dir) / "phase_grid.csv", cells);
        std::printf("phase: %zu boundary rows, %zu grid cells -> %s\n",
                    pb.at_line.size() + pb.rs_line.size() + pb.imse_line.size(),
                    cells.size(), out_dir.c_str());
      } else if (mode == "empirical") {
        if (data_dir.empty())
          throw CLI::ValidationError("--data", "required in empirical mode");
        const RegressionProblem p = csv::read_instance(data_dir);
        const auto grid = resolve_grid(parse_grid_spec(grid_text), p);
        if (a_grid.empty()) {
          const double a_min = kind == PenaltyKind::MCP ? 1.05 : 2.05;
          for (double v = a_min; v < 40.0; v *= 1.15) a_grid.push_back(v);
        }
        std::ofstream grid_out(fs::path(out_dir) / "phase_empirical.csv");
        grid_out << "lambda,a,stable,cv_error,error_bar,K\n";
        std::ofstream cve_out(fs::path(out_dir) / "cve.csv");
        cve_out << "a,lambda_cve,cv_error,lambda_c\n";
        std::vector<CvRun> runs(a_grid.size());
        parallel_for(a_grid.size(), [&](std::size_t c) {
          runs[c] = run_cv(p, kind, a_grid[c], grid, cd, false, 0, k_detect, window);
        });
        for (std::size_t c = 0; c < a_grid.size(); ++c) {
          const CvCurve& curve = runs[c].curve;
          double best = std::numeric_limits<double>::infinity();
          double best_lam = 0.0;
          for (std::size_t k = 0; k < curve.points.size(); ++k) {
            const CvPointResult& pt = curve.points[k];
            grid_out << csv::fmt(pt.lambda) << "," << csv::fmt(a_grid[c]) << ","
                     << (curve.stable_mask[k] ? 1 : 0) << ","
                     << csv::fmt(pt.epsilon_cv) << "," << csv::fmt(pt.error_bar)
                     << "," << pt.k_active << "\n";
            if (curve.stable_mask[k] && pt.epsilon_cv < best) {
              best = pt.epsilon_cv;
              best_lam = pt.lambda;
            }
          }
          cve_out << csv::fmt(a_grid[c]) << "," << csv::fmt(best_lam) << ","
                  << csv::fmt(best) << ","
                  << (curve.lambda_c ? csv::fmt(*curve.lambda_c) : "nan") << "\n";
        }
        std::printf("phase: empirical sweep over %zu a values -> %s\n",
                    a_grid.size(), out_dir.c_str());
      } else {
        throw CLI::ValidationError("--mode", "must be empirical or theory");
      }
      return 0;
    }

    if (bench->parsed()) {
      const PenaltyKind kind = parse_kind(kind_name);
      const EnsembleParams e = EnsembleParams::make(alpha, rho0, sigma_d2, sigma_x2);
      const PenaltySpec spec = PenaltySpec::validated({kind, bench_lambda, a});
      std::ofstream out(fs::path(out_dir) / "bench.csv");
      out << "N,nmse_median,nmse_q14,nmse_q86,cd_seconds,approx_seconds,"
             "literal_seconds\n";
      using clock = std::chrono::steady_clock;
      for (long nn : n_list) {
        std::vector<double> nmse(n_seeds);
        double t_cd = 0.0, t_approx = 0.0, t_literal = 0.0;
        std::mutex time_mutex;
        parallel_for(n_seeds, [&](std::size_t s) {
          const SyntheticInstance inst =
              gen_instance(nn, e, seed + 1000 * s + static_cast<std::uint64_t>(nn));
          CdOptions local = cd;
          local.seed = seed + s;
          const auto t0 = clock::now();
          const Estimate est = coordinate_descent(inst.problem, spec,
                                                  Vector::Zero(nn), local);
          const auto t1 = clock::now();
          const CvPointResult ap = approx_loo(inst.problem, est, spec);
          const auto t2 = clock::now();
          const CvPointResult lit = literal_loo(inst.problem, spec, est.x_hat, local);
          const auto t3 = clock::now();
          nmse[s] = normalized_mse(ap.epsilon_cv, lit.epsilon_cv);
          std::lock_guard<std::mutex> lk(time_mutex);
          t_cd += std::chrono::duration<double>(t1 - t0).count();
          t_approx += std::chrono::duration<double>(t2 - t1).count();
          t_literal += std::chrono::duration<double>(t3 - t2).count();
        });
        out << nn << "," << csv::fmt(quantile(nmse, 0.5)) << ","
            << csv::fmt(quantile(nmse, 0.14)) << ","
            << csv::fmt(quantile(nmse, 0.86)) << "," << csv::fmt(t_cd / n_seeds)
            << "," << csv::fmt(t_approx / n_seeds) << ","
            << csv::fmt(t_literal / n_seeds) << "\n";
        std::printf("bench: N=%ld median nmse=%.3g\n", nn, quantile(nmse, 0.5));
      }
      return 0;
    }
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  }
  return 0;
}
