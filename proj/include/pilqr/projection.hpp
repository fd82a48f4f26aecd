#pragma once

#include <string>
#include <vector>

#include "pilqr/linalg.hpp"
#include "pilqr/rollout.hpp"

namespace pilqr {

// Previewed stacked constraint at step n: the pure-state constraint at n+1 is
// rewritten through the dynamics (M = C_next B, N_mat = C_next A) and stacked
// under the state-input constraint:
//   [D; N_mat] dx + [E; M] du = [e; d_next]
struct PreviewStack {
  Matrix M;
  Matrix N_mat;
  Matrix E_stack;  // [E; M]
  Matrix D_stack;  // [D; N_mat]
  Vector rhs;      // [e; d_next]
  Matrix C_next;   // kept for the relative-degree check
};

struct RelativeDegreeReport {
  bool ok = true;
  int step = -1;
  std::string matrix;  // which factor lost rank: "M" or "C_next"
  int rank = 0;
  int rows = 0;
  std::string message;
};

// Minimum-norm constraint-restoring split of the control at one step:
//   du = eps + U dx + proj w,  w free.
struct ProjectionStage {
  Matrix M;
  Matrix N_mat;
  Matrix E_stack;
  Matrix D_stack;
  Vector rhs;
  Vector eps;   // [E;M]^+ rhs
  Matrix U;     // -[E;M]^+ [D;N]
  Matrix proj;  // nullspace projector of [E;M]
  int rank = 0;
  bool full_row_rank = true;
  double restoration_residual = 0.0;  // |[E;M] eps - rhs|_inf when inconsistent
};

// Projected affine system and cost weights after eliminating the constrained
// input directions:
//   dx_next = A_t dx + B_t w + g_t
//   cost    = q_t + qv_t'dx + r_t'w + 1/2 dx'Q_t dx + 1/2 w'R_t w + w'P_t dx
struct ProjectedStage {
  Matrix A_t;
  Matrix B_t;
  Vector g_t;
  double q_t = 0.0;
  Vector qv_t;
  Matrix Q_t;
  Vector r_t;
  Matrix R_t;
  Matrix P_t;
};

// Stacks the previewed constraint for step n. cons_next_C/d is the pure-state
// constraint at n+1 (the terminal one for n = N-1; empty when absent).
PreviewStack build_preview_stack(const LqStage& lq, const ConstraintStage& cons_n,
                                 const Matrix& cons_next_C, const Vector& cons_next_d);

// Relative degree one requires both M and C_next to have full row rank.
RelativeDegreeReport check_relative_degree(const PreviewStack& stack, int step,
                                           double rank_tol = kDefaultRankTol);

// Pseudo-inverse split of the stacked system. A rank-deficient stack is not an
// error: eps becomes the least-squares restoring action, full_row_rank is
// cleared and the residual recorded (transient inconsistency can occur far
// from the solution).
ProjectionStage compute_projection(const PreviewStack& stack, double rank_tol = kDefaultRankTol);

// Applies the control split to the stage dynamics and cost.
ProjectedStage project_stage(const LqStage& lq, const ProjectionStage& ps);

}  // namespace pilqr
