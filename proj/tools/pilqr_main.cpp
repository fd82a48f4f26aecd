#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pilqr/io.hpp"
#include "pilqr/linalg.hpp"
#include "pilqr/projection.hpp"
#include "pilqr/riccati.hpp"
#include "pilqr/solver.hpp"
#include "pilqr/systems.hpp"

namespace {

using nlohmann::json;
using namespace pilqr;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitAbort = 2;

struct RunConfig {
  std::string problem;
  double horizon_seconds = 3.0;
  double dt = 0.01;
  unsigned seed = 1;
  std::string output_dir = ".";
  std::string initial_policy = "zero";  // "zero" or "lqr"
  SolverSettings settings;
  // bench only
  std::vector<double> dts;
  int repetitions = 100;
  bool parallel = false;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path);
  }
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("malformed JSON in " + path + ": " + e.what());
  }
  if (!doc.is_object()) {
    throw ConfigError("config root must be a JSON object");
  }

  RunConfig cfg;
  const std::vector<std::string> known = {
      "problem",        "horizon_seconds",      "dt",
      "seed",           "output_dir",           "initial_policy",
      "sigma",          "alpha_decay",          "max_linesearch_steps",
      "max_iterations", "merit_rel_tol",        "ise_max",
      "validation_mode", "fixed_iterations",    "dts",
      "repetitions",    "parallel"};
  for (const auto& item : doc.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw ConfigError("unknown config key: " + item.key());
    }
  }

  try {
    if (!doc.contains("problem")) {
      throw ConfigError("config needs a problem name");
    }
    cfg.problem = doc.at("problem").get<std::string>();
    cfg.horizon_seconds = doc.value("horizon_seconds", cfg.horizon_seconds);
    cfg.dt = doc.value("dt", cfg.dt);
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.output_dir = doc.value("output_dir", cfg.output_dir);
    cfg.initial_policy = doc.value("initial_policy", cfg.initial_policy);
    if (doc.contains("sigma")) {
      cfg.settings.sigma = doc.at("sigma").get<double>();
    }
    cfg.settings.alpha_decay = doc.value("alpha_decay", cfg.settings.alpha_decay);
    cfg.settings.max_linesearch_steps =
        doc.value("max_linesearch_steps", cfg.settings.max_linesearch_steps);
    cfg.settings.max_iterations = doc.value("max_iterations", cfg.settings.max_iterations);
    cfg.settings.merit_rel_tol = doc.value("merit_rel_tol", cfg.settings.merit_rel_tol);
    cfg.settings.ise_max = doc.value("ise_max", cfg.settings.ise_max);
    cfg.settings.validation_mode = doc.value("validation_mode", cfg.settings.validation_mode);
    cfg.settings.fixed_iteration_count =
        doc.value("fixed_iterations", cfg.settings.fixed_iteration_count);
    if (doc.contains("dts")) {
      cfg.dts = doc.at("dts").get<std::vector<double>>();
    }
    cfg.repetitions = doc.value("repetitions", cfg.repetitions);
    cfg.parallel = doc.value("parallel", cfg.parallel);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }

  if (const char* env = std::getenv("PILQR_OUTPUT_DIR")) {
    cfg.output_dir = env;
  }
  if (cfg.initial_policy != "zero" && cfg.initial_policy != "lqr") {
    throw ConfigError("initial_policy must be 'zero' or 'lqr'");
  }
  return cfg;
}

int steps_from(double horizon_seconds, double dt) {
  if (!(dt > 0.0) || !(horizon_seconds > 0.0)) {
    throw ConfigError("horizon_seconds and dt must be positive");
  }
  const double ratio = horizon_seconds / dt;
  const int N = static_cast<int>(std::llround(ratio));
  if (N < 1 || std::abs(ratio - N) > 1e-6 * std::max(1.0, ratio)) {
    throw ConfigError("horizon_seconds / dt must be a whole number of steps >= 1");
  }
  return N;
}

Policy initial_policy_for(const OcpDefinition& ocp, const std::string& kind) {
  if (kind == "lqr") {
    return make_lqr_initial_policy(ocp, Vector::Zero(ocp.input_dim));
  }
  return make_zero_policy(ocp);
}

int cmd_solve(const std::string& config_path) {
  RunConfig cfg = load_config(config_path);
  const int N = steps_from(cfg.horizon_seconds, cfg.dt);
  const OcpDefinition ocp = make_catalog_system(cfg.problem, N, cfg.dt, cfg.seed);
  const Policy init = initial_policy_for(ocp, cfg.initial_policy);

  cfg.settings.observer = [](const IterationReport& r) {
    std::cout << "iter " << r.iteration << "  merit " << r.merit << "  cost " << r.cost
              << "  ise " << r.ise << "  alpha " << r.alpha << (r.stalled ? "  (stall)" : "")
              << "\n";
  };

  const auto t0 = std::chrono::steady_clock::now();
  const SolveResult res = solve(ocp, init, cfg.settings);
  const auto t1 = std::chrono::steady_clock::now();
  const double wall = std::chrono::duration<double>(t1 - t0).count();

  for (const std::string& w : res.warnings) {
    std::cerr << "warning: " << w << "\n";
  }

  std::filesystem::create_directories(cfg.output_dir);
  const std::filesystem::path dir(cfg.output_dir);
  write_trajectory_csv((dir / "trajectory.csv").string(), res.trajectory, cfg.dt);
  write_iterations_csv((dir / "iterations.csv").string(), res.reports);

  RunSummary summary;
  summary.problem = cfg.problem;
  summary.horizon = N;
  summary.dt = cfg.dt;
  summary.converged = res.status == SolveStatus::Converged;
  summary.iterations = static_cast<int>(res.reports.size());
  summary.wall_time_s = wall;
  summary.cost = evaluate_total_cost(ocp, res.trajectory);
  summary.ise = constraint_ise(ocp, res.trajectory);
  summary.merit = merit(ocp, res.trajectory, res.sigma_used);
  summary.sigma = res.sigma_used;
  summary.status = to_string(res.status);
  write_summary_csv((dir / "summary.csv").string(), summary);

  std::cout << "status " << summary.status << "  iterations " << summary.iterations << "  cost "
            << summary.cost << "  ise " << summary.ise << "  wall " << wall << " s\n";
  return summary.converged ? kExitOk : kExitAbort;
}

int cmd_bench(const std::string& config_path) {
  RunConfig cfg = load_config(config_path);
  if (cfg.dts.empty()) {
    cfg.dts.push_back(cfg.dt);
  }
  if (cfg.repetitions < 3) {
    std::cerr << "warning: fewer than 3 repetitions; statistics will be noisy\n";
  }
  if (cfg.repetitions < 1) {
    throw ConfigError("repetitions must be >= 1");
  }

  std::vector<BenchRow> rows;
  for (const double dt : cfg.dts) {
    const int N = steps_from(cfg.horizon_seconds, dt);
    const OcpDefinition ocp = make_catalog_system(cfg.problem, N, dt, cfg.seed);
    const Policy init = initial_policy_for(ocp, cfg.initial_policy);
    const SolverSettings& settings = cfg.settings;

    const auto timed_solve = [&]() {
      const auto t0 = std::chrono::steady_clock::now();
      const SolveResult res = solve(ocp, init, settings);
      const auto t1 = std::chrono::steady_clock::now();
      (void)res;
      return std::chrono::duration<double>(t1 - t0).count();
    };

    timed_solve();  // warm-up, not recorded
    std::vector<double> times(static_cast<std::size_t>(cfg.repetitions));
    if (cfg.parallel) {
      std::vector<std::future<double>> futures;
      futures.reserve(times.size());
      for (std::size_t i = 0; i < times.size(); ++i) {
        futures.push_back(std::async(std::launch::async, timed_solve));
      }
      for (std::size_t i = 0; i < times.size(); ++i) {
        times[i] = futures[i].get();
      }
    } else {
      for (double& t : times) {
        t = timed_solve();
      }
    }

    double mean = 0.0;
    for (const double t : times) {
      mean += t;
    }
    mean /= static_cast<double>(times.size());
    double var = 0.0;
    for (const double t : times) {
      var += (t - mean) * (t - mean);
    }
    var = times.size() > 1 ? var / static_cast<double>(times.size() - 1) : 0.0;

    rows.push_back({N, dt, mean, std::sqrt(var), cfg.repetitions});
    std::cout << "N " << N << "  mean " << mean << " s  stddev " << std::sqrt(var) << " s over "
              << cfg.repetitions << " runs\n";
  }

  std::sort(rows.begin(), rows.end(),
            [](const BenchRow& a, const BenchRow& b) { return a.horizon < b.horizon; });

  std::filesystem::create_directories(cfg.output_dir);
  const std::filesystem::path dir(cfg.output_dir);
  write_bench_csv((dir / "bench.csv").string(), rows);

  bool distinct = false;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    distinct = distinct || rows[i].horizon != rows.front().horizon;
  }
  if (rows.size() < 2 || !distinct) {
    std::cout << "single horizon point; linear fit skipped\n";
    return kExitOk;
  }

  std::vector<double> xs, ys;
  for (const BenchRow& r : rows) {
    xs.push_back(static_cast<double>(r.horizon));
    ys.push_back(r.mean_s);
  }
  const LinearFit fit = linear_fit(xs, ys);
  std::cout << "linear fit: time = " << fit.slope << " * N + " << fit.intercept
            << "   R^2 = " << fit.r2 << "\n";
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::cout << "ratio N=" << rows[i].horizon << " / N=" << rows[i - 1].horizon << ": "
              << rows[i].mean_s / rows[i - 1].mean_s << "\n";
  }
  return kExitOk;
}

struct CheckRow {
  std::string name;
  bool pass = false;
  std::string detail;
};

double jacobian_error(const Matrix& analytic, const Matrix& fd) {
  const double scale = 1.0 + (fd.size() > 0 ? fd.cwiseAbs().maxCoeff() : 0.0);
  return (analytic - fd).cwiseAbs().maxCoeff() / scale;
}

int cmd_validate(const std::string& problem, unsigned seed) {
  if (problem.empty()) {
    std::cerr << "error: empty problem name\n";
    return kExitConfig;
  }
  OcpDefinition ocp;
  try {
    ocp = problem == "random_lq" ? make_random_constrained_lq(seed)
                                 : make_catalog_system(problem, 300, 0.01, seed);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  std::vector<CheckRow> table;
  bool degree_ok = true;

  try {
    validate_definition(ocp);
    table.push_back({"definition", true, ""});
  } catch (const std::exception& e) {
    table.push_back({"definition", false, e.what()});
  }

  // relative degree along the zero-policy rollout
  TrajectoryPair traj;
  LqApproximation lin;
  try {
    traj = rollout_policy(ocp, make_zero_policy(ocp));
    lin = linearize_and_quadratize(ocp, traj);
    RelativeDegreeReport worst;
    for (int n = 0; n < ocp.horizon && worst.ok; ++n) {
      const bool last = n + 1 == ocp.horizon;
      const Matrix& C_next = last ? lin.terminal_C : lin.constraints[n + 1].C;
      const Vector& d_next = last ? lin.terminal_d : lin.constraints[n + 1].d;
      const PreviewStack stack =
          build_preview_stack(lin.stages[n], lin.constraints[n], C_next, d_next);
      worst = check_relative_degree(stack, n);
    }
    degree_ok = worst.ok;
    table.push_back({"relative-degree", worst.ok, worst.ok ? "" : worst.message});
  } catch (const std::exception& e) {
    degree_ok = false;
    table.push_back({"relative-degree", false, e.what()});
  }

  // analytic Jacobians vs central differences at trajectory points
  if (ocp.dynamics_jacobians && !traj.states.empty()) {
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      const int n = (k * ocp.horizon) / 5;
      const Vector& x = traj.states[n];
      const Vector& u = traj.inputs[n];
      Matrix A, B;
      ocp.dynamics_jacobians(x, u, n, A, B);
      const Matrix A_fd = finite_difference_jacobian(
          [&](const Vector& xi) { return ocp.dynamics(xi, u, n); }, x, gradient_step(x));
      const Matrix B_fd = finite_difference_jacobian(
          [&](const Vector& ui) { return ocp.dynamics(x, ui, n); }, u, gradient_step(u));
      worst = std::max({worst, jacobian_error(A, A_fd), jacobian_error(B, B_fd)});
    }
    table.push_back({"dynamics-jacobians", worst <= 1e-5,
                     "max relative deviation " + format_double(worst)});
  }

  if (degree_ok) {
    // projection invariants on the first linearization
    double worst = 0.0;
    for (int n = 0; n < ocp.horizon; ++n) {
      const bool last = n + 1 == ocp.horizon;
      const Matrix& C_next = last ? lin.terminal_C : lin.constraints[n + 1].C;
      const Vector& d_next = last ? lin.terminal_d : lin.constraints[n + 1].d;
      const PreviewStack stack =
          build_preview_stack(lin.stages[n], lin.constraints[n], C_next, d_next);
      const ProjectionStage ps = compute_projection(stack);
      worst = std::max(worst, (ps.proj * ps.proj - ps.proj).cwiseAbs().maxCoeff());
      worst = std::max(worst, (ps.proj - ps.proj.transpose()).cwiseAbs().maxCoeff());
      if (ps.E_stack.rows() > 0) {
        const double scale = 1.0 + ps.E_stack.cwiseAbs().maxCoeff();
        worst = std::max(worst, (ps.E_stack * ps.proj).cwiseAbs().maxCoeff() / scale);
      }
    }
    table.push_back(
        {"projection-invariants", worst <= 1e-9, "max residual " + format_double(worst)});

    // full solve with every admissibility check enabled
    try {
      SolverSettings settings;
      settings.validation_mode = true;
      if (problem == "point_mass_surface") {
        settings.sigma = 0.5;
      } else if (problem == "random_lq") {
        // exact-penalty weight above the largest constraint multiplier seen
        // across the random family
        settings.sigma = 500.0;
      }
      const SolveResult res = solve(ocp, make_zero_policy(ocp), settings);
      const double ise = constraint_ise(ocp, res.trajectory);
      const bool pass = res.status == SolveStatus::Converged && ise < settings.ise_max;
      table.push_back({"solve", pass,
                       "status " + to_string(res.status) + ", ise " + format_double(ise)});

      if (problem == "random_lq") {
        const LqApproximation lin2 = linearize_and_quadratize(ocp, traj);
        std::vector<ProjectionStage> projections;
        std::vector<ProjectedStage> stages;
        for (int n = 0; n < ocp.horizon; ++n) {
          const bool last = n + 1 == ocp.horizon;
          const Matrix& C_next = last ? lin2.terminal_C : lin2.constraints[n + 1].C;
          const Vector& d_next = last ? lin2.terminal_d : lin2.constraints[n + 1].d;
          const PreviewStack stack =
              build_preview_stack(lin2.stages[n], lin2.constraints[n], C_next, d_next);
          projections.push_back(compute_projection(stack));
          stages.push_back(project_stage(lin2.stages[n], projections.back()));
        }
        const std::vector<ValueStage> values =
            backward_pass(stages, lin2.terminal_q, lin2.terminal_q_vec, lin2.terminal_Q);
        const Policy policy = assemble_policy(projections, values, traj, 1.0);
        const TrajectoryPair updated = rollout_policy(ocp, policy);
        const KktSolution oracle = dense_kkt_oracle(lin2, Vector::Zero(ocp.state_dim));
        double num = 0.0, den = 0.0;
        for (int n = 0; n <= ocp.horizon; ++n) {
          const Vector ours = updated.states[n] - traj.states[n];
          num += (ours - oracle.dx[n]).squaredNorm();
          den += oracle.dx[n].squaredNorm();
        }
        for (int n = 0; n < ocp.horizon; ++n) {
          const Vector ours = updated.inputs[n] - traj.inputs[n];
          num += (ours - oracle.du[n]).squaredNorm();
          den += oracle.du[n].squaredNorm();
        }
        const double rel = std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
        table.push_back({"oracle-equivalence", oracle.solvable && rel <= 1e-6,
                         "relative deviation " + format_double(rel)});
      }
    } catch (const std::exception& e) {
      table.push_back({"solve", false, e.what()});
    }
  }

  bool all_pass = true;
  for (const CheckRow& row : table) {
    all_pass = all_pass && row.pass;
    std::cout << (row.pass ? "PASS  " : "FAIL  ") << row.name;
    if (!row.detail.empty()) {
      std::cout << "  (" << row.detail << ")";
    }
    std::cout << "\n";
  }
  return all_pass ? kExitOk : kExitAbort;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"projection-based equality-constrained iLQR"};
  app.require_subcommand(1);

  std::string solve_config, bench_config, validate_problem;
  unsigned seed = 1;

  CLI::App* solve_cmd = app.add_subcommand("solve", "solve a catalog problem from a config file");
  solve_cmd->add_option("config", solve_config, "JSON config file")->required();
  CLI::App* bench_cmd =
      app.add_subcommand("bench", "time solves over a dt sweep at a fixed horizon");
  bench_cmd->add_option("config", bench_config, "JSON config file")->required();
  CLI::App* validate_cmd =
      app.add_subcommand("validate", "run the invariant and oracle checks for one problem");
  validate_cmd->add_option("problem", validate_problem, "catalog problem name")->required();
  validate_cmd->add_option("--seed", seed, "random seed for seeded problems");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (solve_cmd->parsed()) {
      return cmd_solve(solve_config);
    }
    if (bench_cmd->parsed()) {
      return cmd_bench(bench_config);
    }
    return cmd_validate(validate_problem, seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAbort;
  }
}
