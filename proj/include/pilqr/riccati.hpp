#pragma once

#include <string>
#include <vector>

#include "pilqr/policy.hpp"
#include "pilqr/projection.hpp"

namespace pilqr {

// Quadratic value function V_n(dx) = s0 + s_vec'dx + 1/2 dx'S dx together with
// the stage quantities of the recursion. The terminal entry carries only
// S, s_vec, s0 (h, G, H, l, L stay empty).
struct ValueStage {
  Matrix S;
  Vector s_vec;
  double s0 = 0.0;
  Vector h;
  Matrix G;
  Matrix H;
  Vector l;
  Matrix L;
};

struct SingularityReport {
  bool ok = true;
  int step = -1;
  std::string condition;  // "input-hessian-negative" or "kernel-containment"
  double measure = 0.0;   // offending eigenvalue or kernel-image norm
  std::string message;
};

struct RiccatiOptions {
  bool check_conditions = true;
  int check_stride = 1;          // 1 checks every step (validation mode)
  double condition_tol = 1e-8;
  double value_psd_tol = 1e-6;   // floor on eigenvalues of S
  bool check_value_psd = false;  // extra S >= 0 screen (validation mode)
};

// Admissibility of one projected stage: H = R_t + B_t'S_next B_t must be PSD
// and every kernel vector of H must be annihilated by G' = (P_t + B_t'S_next A_t)'.
SingularityReport check_singular_conditions(const ProjectedStage& stage, const Matrix& S_next,
                                            double tol = 1e-8);

// Backward sweep over the projected stages. Returns N+1 value stages, entry N
// holding the terminal condition. Throws std::runtime_error naming the step on
// an admissibility or PSD failure (when the corresponding check is enabled).
std::vector<ValueStage> backward_pass(const std::vector<ProjectedStage>& stages,
                                      double terminal_q, const Vector& terminal_q_vec,
                                      const Matrix& terminal_Q,
                                      const RiccatiOptions& options = {});

// Combined affine controller
//   u_n = u_hat_n + alpha (eps_n + proj_n l_n) + (U_n + proj_n L_n)(x - x_hat_n).
Policy assemble_policy(const std::vector<ProjectionStage>& projections,
                       const std::vector<ValueStage>& values, const TrajectoryPair& nominal,
                       double alpha);

}  // namespace pilqr
