#include "pilqr/problem.hpp"

#include <cmath>

namespace pilqr {

void validate_definition(const OcpDefinition& ocp) {
  if (ocp.state_dim <= 0 || ocp.input_dim <= 0) {
    throw std::invalid_argument("[problem] state_dim and input_dim must be positive");
  }
  if (ocp.horizon < 1) {
    throw std::invalid_argument("[problem] horizon must be >= 1");
  }
  if (ocp.x0.size() != ocp.state_dim) {
    throw std::invalid_argument("[problem] x0 dimension does not match state_dim");
  }
  if (!ocp.dynamics || !ocp.stage_cost || !ocp.terminal_cost) {
    throw std::invalid_argument("[problem] dynamics, stage_cost and terminal_cost are required");
  }
}

void validate_trajectory(const OcpDefinition& ocp, const TrajectoryPair& traj) {
  if (static_cast<int>(traj.inputs.size()) != ocp.horizon ||
      static_cast<int>(traj.states.size()) != ocp.horizon + 1) {
    throw std::invalid_argument("[problem] trajectory length does not match horizon");
  }
  for (int n = 0; n <= ocp.horizon; ++n) {
    if (traj.states[n].size() != ocp.state_dim) {
      throw std::invalid_argument("[problem] state dimension mismatch at step " +
                                  std::to_string(n));
    }
  }
  for (int n = 0; n < ocp.horizon; ++n) {
    if (traj.inputs[n].size() != ocp.input_dim) {
      throw std::invalid_argument("[problem] input dimension mismatch at step " +
                                  std::to_string(n));
    }
  }
}

double evaluate_total_cost(const OcpDefinition& ocp, const TrajectoryPair& traj) {
  validate_trajectory(ocp, traj);
  double total = 0.0;
  for (int n = 0; n < ocp.horizon; ++n) {
    const double c = ocp.stage_cost(traj.states[n], traj.inputs[n], n);
    if (!std::isfinite(c)) {
      throw std::runtime_error("[problem] non-finite stage cost at step " + std::to_string(n));
    }
    total += c;
  }
  const double terminal = ocp.terminal_cost(traj.states[ocp.horizon]);
  if (!std::isfinite(terminal)) {
    throw std::runtime_error("[problem] non-finite terminal cost");
  }
  return total + terminal;
}

ConstraintStack evaluate_constraint_stack(const OcpDefinition& ocp, const TrajectoryPair& traj) {
  validate_trajectory(ocp, traj);
  ConstraintStack out;
  out.stage.resize(ocp.horizon);
  for (int n = 0; n < ocp.horizon; ++n) {
    ConstraintRecord& rec = out.stage[n];
    rec.step = n;
    rec.g1 = ocp.g1 ? ocp.g1(traj.states[n], traj.inputs[n], n) : Vector(0);
    rec.g2 = ocp.g2 ? ocp.g2(traj.states[n], n) : Vector(0);
    if (!rec.g1.allFinite() || !rec.g2.allFinite()) {
      throw std::runtime_error("[problem] non-finite constraint value at step " +
                               std::to_string(n));
    }
  }
  out.terminal = ocp.g3 ? ocp.g3(traj.states[ocp.horizon]) : Vector(0);
  if (!out.terminal.allFinite()) {
    throw std::runtime_error("[problem] non-finite terminal constraint value");
  }
  return out;
}

double constraint_ise(const OcpDefinition& ocp, const TrajectoryPair& traj) {
  const ConstraintStack stack = evaluate_constraint_stack(ocp, traj);
  double ise = 0.0;
  for (const ConstraintRecord& rec : stack.stage) {
    ise += (rec.g1.squaredNorm() + rec.g2.squaredNorm()) * ocp.dt;
  }
  ise += stack.terminal.squaredNorm();
  return ise;
}

}  // namespace pilqr
