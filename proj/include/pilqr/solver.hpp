#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pilqr/riccati.hpp"

namespace pilqr {

struct IterationReport {
  int iteration = 0;
  double merit = 0.0;
  double cost = 0.0;
  double ise = 0.0;
  double alpha = 0.0;
  double max_violation = 0.0;  // largest constraint entry anywhere on the trajectory
  bool converged = false;
  bool stalled = false;
};

using IterationObserver = std::function<void(const IterationReport&)>;

struct SolverSettings {
  std::optional<double> sigma;    // merit weight; defaults to 1 when unset
  double alpha_decay = 2.0;       // line-search backoff factor
  int max_linesearch_steps = 12;  // candidates alpha = decay^-k, k = 0..steps
  int max_iterations = 100;
  double merit_rel_tol = 1e-6;
  double ise_max = 1e-3;
  bool validation_mode = false;   // admissibility checks at every step + extra screens
  int fast_check_stride = 25;     // admissibility sampling stride outside validation mode
  int fixed_iteration_count = 0;  // >0: run exactly this many iterations (benchmarking)
  IterationObserver observer;     // called once per completed iteration
};

enum class SolveStatus {
  Converged,
  MaxIterations,
  Stalled,                  // two consecutive line-search stalls
  RelativeDegreeViolation,  // constraint unreachable through the discretized dynamics
};

std::string to_string(SolveStatus status);

struct SolveResult {
  Policy policy;
  TrajectoryPair trajectory;
  std::vector<IterationReport> reports;
  SolveStatus status = SolveStatus::MaxIterations;
  std::vector<std::string> warnings;
  double sigma_used = 0.0;
};

// Cost plus sigma-weighted L1 norm of the previewed constraint residuals
// (state-input residuals at each step, pure-state residuals previewed from the
// following step, the terminal residual in the last stack). The pure-state
// residual at step 0 is fixed by x0 and carries no weight here.
double merit(const OcpDefinition& ocp, const TrajectoryPair& traj, double sigma);

struct LineSearchResult {
  Policy policy;
  TrajectoryPair trajectory;
  IterationReport report;
  bool stalled = false;          // nothing beat the alpha = 0 reference merit
  double reference_merit = 0.0;  // merit of the feedback-only (alpha = 0) rollout
};

// Backtracking line search over alpha = 1, 1/decay, 1/decay^2, ... Accepts the
// first candidate whose merit beats the alpha = 0 reference; diverging
// candidates count as infinite merit. When nothing is accepted the best-seen
// candidate is returned with the stall flag set.
LineSearchResult line_search(const OcpDefinition& ocp, const TrajectoryPair& nominal,
                             const std::vector<ProjectionStage>& projections,
                             const std::vector<ValueStage>& values,
                             const SolverSettings& settings, double sigma);

// Full outer iteration: rollout, linearize, project, backward pass, line
// search, until the merit change is below merit_rel_tol with ISE below
// ise_max. The initial policy must keep the first rollout finite.
SolveResult solve(const OcpDefinition& ocp, const Policy& initial_policy,
                  const SolverSettings& settings = {});

// Infinite-horizon LQR feedback about (x0, u_ss) as a generic stabilizing
// initial policy: gains from iterating the discrete Riccati equation on the
// linearization, weights from the stage cost when available (identity
// fallback). Feedforward is u_ss everywhere.
Policy make_lqr_initial_policy(const OcpDefinition& ocp, const Vector& u_ss);

// Open-loop zero-input policy (enough for the catalog's stable systems).
Policy make_zero_policy(const OcpDefinition& ocp);

}  // namespace pilqr
