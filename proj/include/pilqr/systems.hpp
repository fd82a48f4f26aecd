#pragma once

#include <string>
#include <vector>

#include "pilqr/rollout.hpp"

namespace pilqr {

// ---------------------------------------------------------------------------
// benchmark problem catalog

enum class DoubleIntegratorVariant {
  Unconstrained,  // plain LQ tracking to the origin
  StateInput,     // one affine row coupling inputs and velocity
  PureState,      // keeps the position difference px - py at zero
};

// Planar double integrator, 4 states (px, py, vx, vy), 2 force inputs,
// exact zero-order-hold discretization.
OcpDefinition make_double_integrator(DoubleIntegratorVariant variant, int N, double dt);

// Same plant under explicit-Euler discretization: the position-level
// constraint cannot be reached within one step (relative-degree violation
// demonstrator; not part of the public catalog listing).
OcpDefinition make_double_integrator_euler(int N, double dt);

// 3D point mass (6 states, 3 force inputs) pulled toward an off-surface
// target while constrained to y sin(2 pi x) - x cos(2 pi y) - z = 0.
OcpDefinition make_point_mass_surface(int N, double dt);

// Two-link planar arm (4 states, 2 torques), point masses at the link tips,
// viscous joint damping, optional gravity. The end effector is constrained to
// the line through its initial position perpendicular to the radial
// direction; the joint-space target pulls it off that line.
struct PlanarArmParams {
  double l1 = 1.0;
  double l2 = 1.0;
  double m1 = 1.0;
  double m2 = 1.0;
  double damping = 0.4;
  double gravity = 0.0;
};
OcpDefinition make_planar_arm(int N, double dt, const PlanarArmParams& params = {});

// Planar-arm helpers shared with the tests.
Vector planar_arm_end_effector(const Vector& theta, const PlanarArmParams& params = {});
Matrix planar_arm_end_effector_jacobian(const Vector& theta, const PlanarArmParams& params = {});

// Seeded random constrained LQ problem with guaranteed relative degree 1:
// stable A, full-row-rank constraint rows, joint PSD cost with positive
// definite input block, x0-compliant pure-state constraint. m, p, N <= 0 are
// drawn from the seed (m in 2..6, p in 1..4, N in 3..25).
OcpDefinition make_random_constrained_lq(unsigned seed, int m = 0, int p = 0, int N = 0);

struct SystemCatalogEntry {
  std::string name;
  std::string summary;
  bool uses_seed = false;
};

// Public problem listing (every entry passes the relative-degree check).
const std::vector<SystemCatalogEntry>& system_catalog();

// Resolves a catalog name (plus the non-listed relative-degree demonstrator
// "double_integrator_euler"). Throws std::invalid_argument on unknown names.
OcpDefinition make_catalog_system(const std::string& name, int N, double dt, unsigned seed = 1);

// ---------------------------------------------------------------------------
// dense KKT oracle

// Exact minimizer of one LQ approximation: decision variables are the state
// and input deviations, constraints are the dynamics rows, the state-input
// rows, the pure-state rows at steps 1..N-1, and the terminal rows; solved as
// one dense KKT system with no Riccati structure. dx0 is the (given) initial
// deviation.
struct KktSolution {
  std::vector<Vector> dx;  // N+1 entries, dx[0] == dx0
  std::vector<Vector> du;  // N entries
  double objective = 0.0;  // quadratic objective value at the minimizer
  bool solvable = false;
  double kkt_residual = 0.0;
};

KktSolution dense_kkt_oracle(const LqApproximation& lin, const Vector& dx0);

}  // namespace pilqr
