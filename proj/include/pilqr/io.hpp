#pragma once

#include <string>
#include <vector>

#include "pilqr/solver.hpp"

namespace pilqr {

// All files are plain CSV with a mandatory header row; numbers are printed
// with enough digits (%.17g) to round-trip exactly.

// One row per time index: n, t, x components, u components. The terminal row
// has empty input cells.
void write_trajectory_csv(const std::string& path, const TrajectoryPair& traj, double dt);
TrajectoryPair read_trajectory_csv(const std::string& path, int state_dim, int input_dim);

// iteration, merit, cost, ise, alpha
void write_iterations_csv(const std::string& path, const std::vector<IterationReport>& reports);

struct RunSummary {
  std::string problem;
  int horizon = 0;
  double dt = 0.0;
  bool converged = false;
  int iterations = 0;
  double wall_time_s = 0.0;
  double cost = 0.0;
  double ise = 0.0;
  double merit = 0.0;
  double sigma = 0.0;
  std::string status;
};

void write_summary_csv(const std::string& path, const RunSummary& summary);
RunSummary read_summary_csv(const std::string& path);

struct BenchRow {
  int horizon = 0;
  double dt = 0.0;
  double mean_s = 0.0;
  double stddev_s = 0.0;
  int repetitions = 0;
};

// N, dt, mean seconds, std dev, repetitions (rows sorted by N)
void write_bench_csv(const std::string& path, const std::vector<BenchRow>& rows);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Ordinary least squares y ~ slope x + intercept with the coefficient of
// determination. Needs at least two distinct x values.
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

std::string format_double(double value);  // shortest round-trip form

}  // namespace pilqr
