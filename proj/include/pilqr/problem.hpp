#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pilqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thrown when a forward simulation produces a non-finite state.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Nominal state/input trajectories. states has one more entry than inputs.
struct TrajectoryPair {
  std::vector<Vector> states;
  std::vector<Vector> inputs;

  int horizon() const { return static_cast<int>(inputs.size()); }
};

using DynamicsFn = std::function<Vector(const Vector& x, const Vector& u, int n)>;
using DynamicsJacobianFn =
    std::function<void(const Vector& x, const Vector& u, int n, Matrix& dfdx, Matrix& dfdu)>;
using StageCostFn = std::function<double(const Vector& x, const Vector& u, int n)>;
using TerminalCostFn = std::function<double(const Vector& x)>;
using StateInputConstraintFn = std::function<Vector(const Vector& x, const Vector& u, int n)>;
using StateConstraintFn = std::function<Vector(const Vector& x, int n)>;
using TerminalConstraintFn = std::function<Vector(const Vector& x)>;

/// Second-order expansion of a stage cost about one point.
struct StageCostExpansion {
  double value = 0.0;
  Vector dx;   // gradient w.r.t. state
  Vector du;   // gradient w.r.t. input
  Matrix dxx;  // state Hessian
  Matrix duu;  // input Hessian
  Matrix dux;  // mixed d2/du dx, input_dim x state_dim
};

struct TerminalCostExpansion {
  double value = 0.0;
  Vector dx;
  Matrix dxx;
};

using StageCostExpansionFn =
    std::function<StageCostExpansion(const Vector& x, const Vector& u, int n)>;
using TerminalCostExpansionFn = std::function<TerminalCostExpansion(const Vector& x)>;
using StateInputConstraintJacobianFn =
    std::function<void(const Vector& x, const Vector& u, int n, Matrix& dgdx, Matrix& dgdu)>;
using StateConstraintJacobianFn = std::function<void(const Vector& x, int n, Matrix& dgdx)>;
using TerminalConstraintJacobianFn = std::function<void(const Vector& x, Matrix& dgdx)>;

/// Discrete-time equality-constrained optimal control problem
///
///   min  phi(x_N) + sum_n L(x_n, u_n, n)
///   s.t. x_{n+1} = f(x_n, u_n, n),  x_0 fixed,
///        g1(x_n, u_n, n) = 0,  g2(x_n, n) = 0,  g3(x_N) = 0.
///
/// Cost callables must be non-negative and deterministic. Constraint callables
/// may be empty (no constraint of that family); their output dimension must be
/// constant per step index. The analytic-derivative callables are optional;
/// when absent the linearizer falls back to central finite differences.
struct OcpDefinition {
  int state_dim = 0;
  int input_dim = 0;
  int horizon = 0;  // number of steps N; states run 0..N
  double dt = 0.0;  // only used by continuous-dynamics adapters and the ISE weighting
  Vector x0;

  DynamicsFn dynamics;
  StageCostFn stage_cost;
  TerminalCostFn terminal_cost;
  StateInputConstraintFn g1;  // may be null
  StateConstraintFn g2;       // may be null
  TerminalConstraintFn g3;    // may be null

  DynamicsJacobianFn dynamics_jacobians;
  StageCostExpansionFn stage_cost_expansion;
  TerminalCostExpansionFn terminal_cost_expansion;
  StateInputConstraintJacobianFn g1_jacobians;
  StateConstraintJacobianFn g2_jacobian;
  TerminalConstraintJacobianFn g3_jacobian;
};

/// Checks structural consistency (dims, callables, horizon). Throws
/// std::invalid_argument on violation.
void validate_definition(const OcpDefinition& ocp);

/// Throws std::invalid_argument unless traj dimensions match ocp.
void validate_trajectory(const OcpDefinition& ocp, const TrajectoryPair& traj);

/// phi(x_N) + sum_n L(x_n, u_n, n). Throws on dimension mismatch or a
/// non-finite cost value (the error names the offending step).
double evaluate_total_cost(const OcpDefinition& ocp, const TrajectoryPair& traj);

/// Integrated square error of all equality constraints:
///   sum_n (|g1_n|^2 + |g2_n|^2) * dt + |g3(x_N)|^2.
/// Zero iff every constraint is satisfied exactly.
double constraint_ise(const OcpDefinition& ocp, const TrajectoryPair& traj);

/// Raw constraint values along a trajectory, for reporting and the merit term.
struct ConstraintRecord {
  int step = 0;
  Vector g1;  // state-input violation at step
  Vector g2;  // pure-state violation at step
};

struct ConstraintStack {
  std::vector<ConstraintRecord> stage;  // entries 0..N-1
  Vector terminal;                      // g3(x_N)
};

ConstraintStack evaluate_constraint_stack(const OcpDefinition& ocp, const TrajectoryPair& traj);

}  // namespace pilqr
