#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pilqr/policy.hpp"
#include "pilqr/problem.hpp"

namespace pilqr {

// Taylor coefficients of one stage about (x_hat, u_hat):
//   x_next ~ A dx + B du (deviation coordinates)
//   L ~ q + q_vec'dx + r'du + 1/2 dx'Q dx + 1/2 du'R du + du'P dx
struct LqStage {
  Matrix A;
  Matrix B;
  double q = 0.0;
  Vector q_vec;
  Matrix Q;
  Vector r;
  Matrix R;
  Matrix P;  // p x m cross term
};

// Linearized constraints of one stage, sign convention D dx + E du = e with
// e = -g1(x_hat, u_hat, n) so the linear model drives the residual to zero.
// E has full row rank (rank-deficient rows are re-expressed as pure-state
// rows and appended to C); C has full row rank after dependent-row removal.
struct ConstraintStage {
  Matrix D;
  Matrix E;
  Vector e;
  Matrix C;
  Vector d;
};

struct LqApproximation {
  std::vector<LqStage> stages;               // length N
  std::vector<ConstraintStage> constraints;  // length N
  double terminal_q = 0.0;
  Vector terminal_q_vec;
  Matrix terminal_Q;
  Matrix terminal_C;  // linearized g3, full row rank
  Vector terminal_d;  // -g3(x_hat_N)
  std::vector<std::string> warnings;

  int horizon() const { return static_cast<int>(stages.size()); }
};

using ContinuousDynamicsFn = std::function<Vector(const Vector&, const Vector&)>;
using ContinuousJacobianFn =
    std::function<void(const Vector&, const Vector&, Matrix&, Matrix&)>;

// Continuous-time vector field x_dot = f(x, u); Jacobians optional (finite
// differences are used when absent).
struct ContinuousModel {
  ContinuousDynamicsFn f;
  ContinuousJacobianFn jacobians;
};

// Bridges a continuous model to the discrete OcpDefinition interface with a
// fixed-step RK4 map and zero-order-hold input.
struct ContinuousModelAdapter {
  ContinuousModel model;
  double dt = 0.0;
};

struct SensitivityStep {
  Vector x_next;
  Matrix A;  // dx_next / dx
  Matrix B;  // dx_next / du
};

// One RK4 step together with its exact discrete sensitivities, obtained by
// chaining the variational equations through all four stages.
SensitivityStep integrate_step_with_sensitivities(const ContinuousModelAdapter& adapter,
                                                  const Vector& x, const Vector& u, int n = 0);

// Discrete-interface callables backed by the adapter (for OcpDefinition).
DynamicsFn make_discrete_dynamics(const ContinuousModelAdapter& adapter);
DynamicsJacobianFn make_discrete_jacobians(const ContinuousModelAdapter& adapter);

// Forward-simulates the policy through the nonlinear dynamics.
// Throws DivergenceError naming the step if a state goes non-finite.
TrajectoryPair rollout_policy(const OcpDefinition& ocp, const Policy& policy);

// Per-step Taylor coefficients of cost, dynamics, and constraints about the
// given trajectory. Analytic derivatives are used when the problem supplies
// them, central finite differences otherwise. R must come out positive
// definite and Q positive semi-definite.
LqApproximation linearize_and_quadratize(const OcpDefinition& ocp, const TrajectoryPair& traj);

// Central-difference Jacobian of fn about point with absolute step h.
Matrix finite_difference_jacobian(const std::function<Vector(const Vector&)>& fn,
                                  const Vector& point, double h);

// Step scales used by the fallback derivative providers.
double gradient_step(const Vector& at);  // 1e-6 * (1 + max-norm)
double hessian_step(const Vector& at);   // 1e-4 * (1 + max-norm)

}  // namespace pilqr
