#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <string>

#include "pilqr/projection.hpp"
#include "pilqr/solver.hpp"
#include "pilqr/systems.hpp"
#include "test_helpers.hpp"

using namespace pilqr;
using pilqr::testing::ProjectedChain;
using pilqr::testing::project_all;
using pilqr::testing::rel_err;
using pilqr::testing::TestRng;

namespace {

// one-stage scalar LQ approximation for oracle hand checks
LqApproximation single_stage_lq(double A, double B, double R, double r, double QN, double qvN) {
  LqApproximation lin;
  LqStage st;
  st.A = Matrix::Constant(1, 1, A);
  st.B = Matrix::Constant(1, 1, B);
  st.q = 0.0;
  st.q_vec = Vector::Zero(1);
  st.Q = Matrix::Zero(1, 1);
  st.r = Vector::Constant(1, r);
  st.R = Matrix::Constant(1, 1, R);
  st.P = Matrix::Zero(1, 1);
  lin.stages.push_back(st);
  ConstraintStage cons;
  cons.D = Matrix::Zero(0, 1);
  cons.E = Matrix::Zero(0, 1);
  cons.e = Vector::Zero(0);
  cons.C = Matrix::Zero(0, 1);
  cons.d = Vector::Zero(0);
  lin.constraints.push_back(cons);
  lin.terminal_q = 0.0;
  lin.terminal_q_vec = Vector::Constant(1, qvN);
  lin.terminal_Q = Matrix::Constant(1, 1, QN);
  lin.terminal_C = Matrix::Zero(0, 1);
  lin.terminal_d = Vector::Zero(0);
  return lin;
}

double fd_check_dynamics(const OcpDefinition& ocp, const Vector& x, const Vector& u) {
  Matrix A(ocp.state_dim, ocp.state_dim), B(ocp.state_dim, ocp.input_dim);
  ocp.dynamics_jacobians(x, u, 0, A, B);
  const Matrix A_fd = finite_difference_jacobian(
      [&](const Vector& xx) { return ocp.dynamics(xx, u, 0); }, x, gradient_step(x));
  const Matrix B_fd = finite_difference_jacobian(
      [&](const Vector& uu) { return ocp.dynamics(x, uu, 0); }, u, gradient_step(u));
  return std::max(rel_err(A, A_fd), rel_err(B, B_fd));
}

double fd_check_constraints(const OcpDefinition& ocp, const Vector& x, const Vector& u) {
  double worst = 0.0;
  if (ocp.g1) {
    Matrix Dx(0, 0), Du(0, 0);
    ocp.g1_jacobians(x, u, 0, Dx, Du);
    const Matrix Dx_fd = finite_difference_jacobian(
        [&](const Vector& xx) { return ocp.g1(xx, u, 0); }, x, gradient_step(x));
    const Matrix Du_fd = finite_difference_jacobian(
        [&](const Vector& uu) { return ocp.g1(x, uu, 0); }, u, gradient_step(u));
    worst = std::max({worst, rel_err(Dx, Dx_fd), rel_err(Du, Du_fd)});
  }
  if (ocp.g2) {
    Matrix Cx(0, 0);
    ocp.g2_jacobian(x, 0, Cx);
    const Matrix C_fd = finite_difference_jacobian(
        [&](const Vector& xx) { return ocp.g2(xx, 0); }, x, gradient_step(x));
    worst = std::max(worst, rel_err(Cx, C_fd));
  }
  if (ocp.g3) {
    Matrix Cx(0, 0);
    ocp.g3_jacobian(x, Cx);
    const Matrix C_fd = finite_difference_jacobian(
        [&](const Vector& xx) { return ocp.g3(xx); }, x, gradient_step(x));
    worst = std::max(worst, rel_err(Cx, C_fd));
  }
  return worst;
}

}  // namespace

TEST_CASE("the catalog lists six problems and every name resolves") {
  const std::vector<SystemCatalogEntry>& catalog = system_catalog();
  REQUIRE(catalog.size() == 6);

  std::set<std::string> names;
  for (const SystemCatalogEntry& entry : catalog) {
    names.insert(entry.name);
    CHECK(!entry.summary.empty());
    CHECK(entry.uses_seed == (entry.name == "random_lq"));
    const OcpDefinition ocp = make_catalog_system(entry.name, 10, 0.01, 3);
    CHECK_NOTHROW(validate_definition(ocp));
    CHECK(ocp.horizon == 10);
  }
  const std::set<std::string> expected = {
      "double_integrator",       "double_integrator_state_input", "double_integrator_pure_state",
      "point_mass_surface",      "planar_arm",                    "random_lq"};
  CHECK(names == expected);

  // the relative-degree demonstrator resolves without being listed
  CHECK_NOTHROW(make_catalog_system("double_integrator_euler", 10, 0.01));
  CHECK_THROWS_AS(make_catalog_system("no_such_problem", 10, 0.01), std::invalid_argument);
}

TEST_CASE("initial states satisfy the pure-state constraints") {
  for (const std::string name : {"double_integrator_pure_state", "point_mass_surface", "planar_arm"}) {
    const OcpDefinition ocp = make_catalog_system(name, 10, 0.01);
    REQUIRE(ocp.g2);
    CHECK(ocp.g2(ocp.x0, 0).cwiseAbs().maxCoeff() <= 1e-12);
  }
  for (unsigned seed = 1; seed <= 10; ++seed) {
    const OcpDefinition ocp = make_random_constrained_lq(seed);
    if (ocp.g2) {
      CHECK(ocp.g2(ocp.x0, 0).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("double integrator discretization") {
  const double dt = 0.07;
  const OcpDefinition ocp = make_double_integrator(DoubleIntegratorVariant::Unconstrained, 5, dt);

  SUBCASE("hand-propagated hold step") {
    const Vector x = (Vector(4) << 0.2, -0.4, 1.0, 0.5).finished();
    const Vector u = (Vector(2) << 0.3, -0.6).finished();
    const Vector next = ocp.dynamics(x, u, 0);
    CHECK(next(0) == doctest::Approx(0.2 + 1.0 * dt + 0.5 * 0.3 * dt * dt).epsilon(1e-15));
    CHECK(next(1) == doctest::Approx(-0.4 + 0.5 * dt + 0.5 * -0.6 * dt * dt).epsilon(1e-15));
    CHECK(next(2) == doctest::Approx(1.0 + 0.3 * dt).epsilon(1e-15));
    CHECK(next(3) == doctest::Approx(0.5 + -0.6 * dt).epsilon(1e-15));
  }

  SUBCASE("matches an RK4 step of the continuous plant exactly") {
    ContinuousModel model;
    model.f = [](const Vector& x, const Vector& u) {
      Vector dx(4);
      dx.head(2) = x.tail(2);
      dx.tail(2) = u;
      return dx;
    };
    const ContinuousModelAdapter adapter{model, dt};

    TestRng rng(11);
    for (int trial = 0; trial < 5; ++trial) {
      const Vector x = rng.vector(4);
      const Vector u = rng.vector(2);
      const SensitivityStep step = integrate_step_with_sensitivities(adapter, x, u);
      CHECK(rel_err(step.x_next, ocp.dynamics(x, u, 0)) <= 1e-11);
      Matrix A(4, 4), B(4, 2);
      ocp.dynamics_jacobians(x, u, 0, A, B);
      CHECK(rel_err(step.A, A) <= 1e-11);
      CHECK(rel_err(step.B, B) <= 1e-11);
    }
  }

  SUBCASE("the Euler variant cannot reach the position constraint in one step") {
    const OcpDefinition euler = make_double_integrator_euler(5, dt);
    Matrix A(4, 4), B(4, 2);
    euler.dynamics_jacobians(euler.x0, Vector::Zero(2), 0, A, B);
    Matrix C(1, 4);
    euler.g2_jacobian(euler.x0, 0, C);
    CHECK((C * B).cwiseAbs().maxCoeff() == 0.0);  // M = C B vanishes identically
  }
}

TEST_CASE("planar arm kinematics helpers") {
  const PlanarArmParams params;

  SUBCASE("stretched-out pose") {
    const Vector theta = Vector::Zero(2);
    const Vector ee = planar_arm_end_effector(theta, params);
    CHECK(ee(0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(ee(1) == doctest::Approx(0.0).epsilon(1e-15));
  }

  SUBCASE("jacobian matches finite differences") {
    TestRng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
      const Vector theta = rng.vector(2) * 1.5;
      const Matrix J = planar_arm_end_effector_jacobian(theta, params);
      const Matrix J_fd = finite_difference_jacobian(
          [&](const Vector& t) { return planar_arm_end_effector(t, params); }, theta, 1e-6);
      CHECK(rel_err(J, J_fd) <= 1e-6);
    }
  }
}

TEST_CASE("catalog derivatives agree with finite differences") {
  const std::vector<std::string> names = {
      "double_integrator",  "double_integrator_state_input", "double_integrator_pure_state",
      "point_mass_surface", "planar_arm",                    "random_lq",
      "double_integrator_euler"};
  TestRng rng(23);
  for (const std::string& name : names) {
    const OcpDefinition ocp = make_catalog_system(name, 10, 0.01, 4);
    for (int trial = 0; trial < 3; ++trial) {
      const Vector x = ocp.x0 + 0.3 * rng.vector(ocp.state_dim);
      const Vector u = 0.3 * rng.vector(ocp.input_dim);
      CHECK(fd_check_dynamics(ocp, x, u) <= 1e-5);
      CHECK(fd_check_constraints(ocp, x, u) <= 1e-5);
    }
  }
}

TEST_CASE("surface constraint formula") {
  const OcpDefinition ocp = make_point_mass_surface(5, 0.01);
  TestRng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector x = rng.vector(6);
    const double want = x(1) * std::sin(2.0 * M_PI * x(0)) - x(0) * std::cos(2.0 * M_PI * x(1)) - x(2);
    CHECK(ocp.g2(x, 0)(0) == doctest::Approx(want).epsilon(1e-14));
    CHECK(ocp.g3(x)(0) == doctest::Approx(want).epsilon(1e-14));
  }
}

TEST_CASE("dense KKT oracle") {
  SUBCASE("hand-checked unconstrained stage") {
    // dx0 = 0, dx1 = 2 du: J(du) = 0.5 du + 0.5 du^2 - 2 du + 6 du^2, minimized
    // at du = 1.5/13
    const LqApproximation lin = single_stage_lq(1.0, 2.0, 1.0, 0.5, 3.0, -1.0);
    const KktSolution sol = dense_kkt_oracle(lin, Vector::Zero(1));
    REQUIRE(sol.solvable);
    CHECK(sol.kkt_residual <= 1e-10);
    CHECK(sol.du[0](0) == doctest::Approx(1.5 / 13.0).epsilon(1e-12));
    CHECK(sol.dx[1](0) == doctest::Approx(3.0 / 13.0).epsilon(1e-12));
    CHECK(sol.objective == doctest::Approx(-2.25 / 26.0).epsilon(1e-12));
  }

  SUBCASE("a state-input row pins the input") {
    LqApproximation lin = single_stage_lq(1.0, 2.0, 1.0, 0.5, 3.0, -1.0);
    lin.constraints[0].D = Matrix::Zero(1, 1);
    lin.constraints[0].E = Matrix::Identity(1, 1);
    lin.constraints[0].e = Vector::Constant(1, 0.07);
    const KktSolution sol = dense_kkt_oracle(lin, Vector::Zero(1));
    REQUIRE(sol.solvable);
    CHECK(sol.du[0](0) == doctest::Approx(0.07).epsilon(1e-12));
    CHECK(sol.dx[1](0) == doctest::Approx(0.14).epsilon(1e-12));
  }

  SUBCASE("a terminal row pins the final state") {
    LqApproximation lin = single_stage_lq(1.0, 2.0, 1.0, 0.5, 3.0, -1.0);
    lin.terminal_C = Matrix::Identity(1, 1);
    lin.terminal_d = Vector::Constant(1, 0.1);
    const KktSolution sol = dense_kkt_oracle(lin, Vector::Zero(1));
    REQUIRE(sol.solvable);
    CHECK(sol.dx[1](0) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(sol.du[0](0) == doctest::Approx(0.05).epsilon(1e-12));
  }

  SUBCASE("conflicting rows are flagged unsolvable") {
    LqApproximation lin = single_stage_lq(1.0, 2.0, 1.0, 0.5, 3.0, -1.0);
    lin.constraints[0].D = Matrix::Zero(1, 1);
    lin.constraints[0].E = Matrix::Identity(1, 1);
    lin.constraints[0].e = Vector::Constant(1, 0.07);  // forces dx1 = 0.14
    lin.terminal_C = Matrix::Identity(1, 1);
    lin.terminal_d = Vector::Constant(1, 0.1);  // demands dx1 = 0.1
    const KktSolution sol = dense_kkt_oracle(lin, Vector::Zero(1));
    CHECK(!sol.solvable);
  }

  SUBCASE("agrees with one projected backward/forward pass on an LQ problem") {
    const OcpDefinition ocp =
        make_double_integrator(DoubleIntegratorVariant::StateInput, 8, 0.1);
    const TrajectoryPair nominal = rollout_policy(ocp, make_zero_policy(ocp));
    const LqApproximation lin = linearize_and_quadratize(ocp, nominal);

    const KktSolution oracle = dense_kkt_oracle(lin, Vector::Zero(4));
    REQUIRE(oracle.solvable);

    const ProjectedChain chain = project_all(lin);
    const std::vector<ValueStage> values =
        backward_pass(chain.stages, lin.terminal_q, lin.terminal_q_vec, lin.terminal_Q);
    const Policy policy = assemble_policy(chain.projections, values, nominal, 1.0);
    const TrajectoryPair traj = rollout_policy(ocp, policy);

    for (int n = 0; n <= ocp.horizon; ++n) {
      const Vector dx = traj.states[static_cast<std::size_t>(n)] -
                        nominal.states[static_cast<std::size_t>(n)];
      CHECK(rel_err(dx, oracle.dx[static_cast<std::size_t>(n)]) <= 1e-9);
    }
    for (int n = 0; n < ocp.horizon; ++n) {
      const Vector du = traj.inputs[static_cast<std::size_t>(n)] -
                        nominal.inputs[static_cast<std::size_t>(n)];
      CHECK(rel_err(du, oracle.du[static_cast<std::size_t>(n)]) <= 1e-9);
    }
    // exact quadratic model: the objective is the realized cost change
    const double achieved = evaluate_total_cost(ocp, traj) - evaluate_total_cost(ocp, nominal);
    CHECK(std::abs(oracle.objective - achieved) <= 1e-9 * std::max(1.0, std::abs(achieved)));
  }
}

TEST_CASE("random constrained LQ generator") {
  SUBCASE("identical problems from identical seeds") {
    const OcpDefinition a = make_random_constrained_lq(7);
    const OcpDefinition b = make_random_constrained_lq(7);
    CHECK(a.state_dim == b.state_dim);
    CHECK(a.input_dim == b.input_dim);
    CHECK(a.horizon == b.horizon);
    CHECK((a.x0 - b.x0).cwiseAbs().maxCoeff() == 0.0);
    const Vector x = Vector::LinSpaced(a.state_dim, -1.0, 1.0);
    const Vector u = Vector::LinSpaced(a.input_dim, 0.5, 1.5);
    CHECK((a.dynamics(x, u, 0) - b.dynamics(x, u, 0)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.stage_cost(x, u, 0) == b.stage_cost(x, u, 0));
    CHECK(static_cast<bool>(a.g1) == static_cast<bool>(b.g1));
  }

  SUBCASE("drawn dimensions stay inside the advertised bounds") {
    for (unsigned seed = 1; seed <= 15; ++seed) {
      const OcpDefinition ocp = make_random_constrained_lq(seed);
      CHECK(ocp.state_dim >= 2);
      CHECK(ocp.state_dim <= 6);
      CHECK(ocp.input_dim >= 1);
      CHECK(ocp.input_dim <= 4);
      CHECK(ocp.horizon >= 3);
      CHECK(ocp.horizon <= 25);
      CHECK_NOTHROW(validate_definition(ocp));
    }
  }

  SUBCASE("requested dimensions are honored") {
    const OcpDefinition ocp = make_random_constrained_lq(3, 4, 2, 10);
    CHECK(ocp.state_dim == 4);
    CHECK(ocp.input_dim == 2);
    CHECK(ocp.horizon == 10);
  }

  SUBCASE("every instance has relative degree one") {
    for (unsigned seed = 1; seed <= 10; ++seed) {
      const OcpDefinition ocp = make_random_constrained_lq(seed);
      const TrajectoryPair nominal = rollout_policy(ocp, make_zero_policy(ocp));
      const LqApproximation lin = linearize_and_quadratize(ocp, nominal);
      for (int n = 0; n < lin.horizon(); ++n) {
        const bool last = n + 1 == lin.horizon();
        const Matrix& C_next =
            last ? lin.terminal_C : lin.constraints[static_cast<std::size_t>(n) + 1].C;
        const Vector& d_next =
            last ? lin.terminal_d : lin.constraints[static_cast<std::size_t>(n) + 1].d;
        const PreviewStack stack = build_preview_stack(
            lin.stages[static_cast<std::size_t>(n)], lin.constraints[static_cast<std::size_t>(n)],
            C_next, d_next);
        CHECK(check_relative_degree(stack, n).ok);
        CHECK(compute_projection(stack).full_row_rank);
      }
    }
  }
}

TEST_CASE("planar arm solve keeps the end effector near the line") {
  const OcpDefinition ocp = make_planar_arm(300, 0.01);
  const SolveResult res = solve(ocp, make_zero_policy(ocp));
  REQUIRE(res.status == SolveStatus::Converged);

  const PlanarArmParams params;
  const Vector p0 = planar_arm_end_effector(ocp.x0.head(2), params);
  const Vector normal = p0.normalized();
  double worst = 0.0;
  for (const Vector& x : res.trajectory.states) {
    const Vector ee = planar_arm_end_effector(x.head(2), params);
    worst = std::max(worst, std::abs(normal.dot(ee - p0)));
  }
  CHECK(worst <= 5e-3);

  // the joint target pulls the arm away, so it must actually move
  CHECK((res.trajectory.states.back().head(2) - ocp.x0.head(2)).norm() > 0.05);
}
