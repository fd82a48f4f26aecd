#include "pilqr/systems.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>
#include <random>
#include <stdexcept>

#include "pilqr/linalg.hpp"

namespace pilqr {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// mt19937 output is standardized; deriving doubles by hand keeps the problems
// bit-identical across standard libraries.
struct Rng {
  std::mt19937 gen;
  explicit Rng(unsigned seed) : gen(seed) {}

  double uniform01() { return (static_cast<double>(gen()) + 0.5) * (1.0 / 4294967296.0); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(gen() % static_cast<unsigned>(hi - lo + 1));
  }
  Matrix matrix(int rows, int cols) {
    Matrix out(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        out(i, j) = normal();
      }
    }
    return out;
  }
  Vector vector(int size) {
    Vector out(size);
    for (int i = 0; i < size; ++i) {
      out(i) = normal();
    }
    return out;
  }
};

StageCostExpansionFn quadratic_stage_expansion(const Matrix& Wxx, const Matrix& Wuu,
                                               const Matrix& Wux, const Vector& x_ref,
                                               const Vector& u_ref) {
  return [=](const Vector& x, const Vector& u, int /*n*/) {
    const Vector ex = x - x_ref;
    const Vector eu = u - u_ref;
    StageCostExpansion out;
    out.dx = Wxx * ex + Wux.transpose() * eu;
    out.du = Wuu * eu + Wux * ex;
    out.value = 0.5 * ex.dot(Wxx * ex) + 0.5 * eu.dot(Wuu * eu) + eu.dot(Wux * ex);
    out.dxx = Wxx;
    out.duu = Wuu;
    out.dux = Wux;
    return out;
  };
}

StageCostFn quadratic_stage_cost(const Matrix& Wxx, const Matrix& Wuu, const Matrix& Wux,
                                 const Vector& x_ref, const Vector& u_ref) {
  return [=](const Vector& x, const Vector& u, int /*n*/) {
    const Vector ex = x - x_ref;
    const Vector eu = u - u_ref;
    return 0.5 * ex.dot(Wxx * ex) + 0.5 * eu.dot(Wuu * eu) + eu.dot(Wux * ex);
  };
}

TerminalCostFn quadratic_terminal_cost(const Matrix& Wf, const Vector& x_ref) {
  return [=](const Vector& x) {
    const Vector ex = x - x_ref;
    return 0.5 * ex.dot(Wf * ex);
  };
}

TerminalCostExpansionFn quadratic_terminal_expansion(const Matrix& Wf, const Vector& x_ref) {
  return [=](const Vector& x) {
    const Vector ex = x - x_ref;
    TerminalCostExpansion out;
    out.value = 0.5 * ex.dot(Wf * ex);
    out.dx = Wf * ex;
    out.dxx = Wf;
    return out;
  };
}

void set_linear_dynamics(OcpDefinition& ocp, const Matrix& A, const Matrix& B,
                         const Vector& offset) {
  ocp.dynamics = [A, B, offset](const Vector& x, const Vector& u, int /*n*/) {
    return (A * x + B * u + offset).eval();
  };
  ocp.dynamics_jacobians = [A, B](const Vector&, const Vector&, int, Matrix& dfdx,
                                  Matrix& dfdu) {
    dfdx = A;
    dfdu = B;
  };
}

OcpDefinition base_double_integrator(int N, double dt, const Matrix& A, const Matrix& B,
                                     const Vector& x0) {
  OcpDefinition ocp;
  ocp.state_dim = 4;
  ocp.input_dim = 2;
  ocp.horizon = N;
  ocp.dt = dt;
  ocp.x0 = x0;
  set_linear_dynamics(ocp, A, B, Vector::Zero(4));

  Matrix Wxx = Matrix::Zero(4, 4);
  Wxx.diagonal() << 1.0, 1.0, 0.1, 0.1;
  Wxx *= dt;
  const Matrix Wuu = 0.1 * Matrix::Identity(2, 2) * dt;
  const Matrix Wux = Matrix::Zero(2, 4);
  const Vector x_ref = Vector::Zero(4);
  const Vector u_ref = Vector::Zero(2);
  Matrix Wf(4, 4);
  Wf.setZero();
  Wf.diagonal() << 10.0, 10.0, 1.0, 1.0;

  ocp.stage_cost = quadratic_stage_cost(Wxx, Wuu, Wux, x_ref, u_ref);
  ocp.stage_cost_expansion = quadratic_stage_expansion(Wxx, Wuu, Wux, x_ref, u_ref);
  ocp.terminal_cost = quadratic_terminal_cost(Wf, x_ref);
  ocp.terminal_cost_expansion = quadratic_terminal_expansion(Wf, x_ref);
  return ocp;
}

Matrix zoh_A(double dt) {
  Matrix A = Matrix::Identity(4, 4);
  A(0, 2) = dt;
  A(1, 3) = dt;
  return A;
}

Matrix zoh_B(double dt) {
  Matrix B = Matrix::Zero(4, 2);
  B(0, 0) = 0.5 * dt * dt;
  B(1, 1) = 0.5 * dt * dt;
  B(2, 0) = dt;
  B(3, 1) = dt;
  return B;
}

}  // namespace

OcpDefinition make_double_integrator(DoubleIntegratorVariant variant, int N, double dt) {
  const Vector x0 = variant == DoubleIntegratorVariant::PureState
                        ? (Vector(4) << 1.0, 1.0, 0.0, 0.0).finished()
                        : (Vector(4) << 1.0, 0.5, 0.0, 0.0).finished();
  OcpDefinition ocp = base_double_integrator(N, dt, zoh_A(dt), zoh_B(dt), x0);

  if (variant == DoubleIntegratorVariant::StateInput) {
    // one affine row coupling both forces and the x-velocity
    const Matrix D = (Matrix(1, 4) << 0.0, 0.0, 0.3, 0.0).finished();
    const Matrix E = (Matrix(1, 2) << 1.0, 1.0).finished();
    const Vector offset = (Vector(1) << 0.5).finished();
    ocp.g1 = [D, E, offset](const Vector& x, const Vector& u, int /*n*/) {
      return (D * x + E * u - offset).eval();
    };
    ocp.g1_jacobians = [D, E](const Vector&, const Vector&, int, Matrix& dgdx, Matrix& dgdu) {
      dgdx = D;
      dgdu = E;
    };
  } else if (variant == DoubleIntegratorVariant::PureState) {
    const Matrix C = (Matrix(1, 4) << 1.0, -1.0, 0.0, 0.0).finished();
    ocp.g2 = [C](const Vector& x, int /*n*/) { return (C * x).eval(); };
    ocp.g2_jacobian = [C](const Vector&, int, Matrix& dgdx) { dgdx = C; };
    ocp.g3 = [C](const Vector& x) { return (C * x).eval(); };
    ocp.g3_jacobian = [C](const Vector&, Matrix& dgdx) { dgdx = C; };
  }
  return ocp;
}

OcpDefinition make_double_integrator_euler(int N, double dt) {
  Matrix B = Matrix::Zero(4, 2);
  B(2, 0) = dt;
  B(3, 1) = dt;  // explicit Euler: inputs reach velocities only
  OcpDefinition ocp =
      base_double_integrator(N, dt, zoh_A(dt), B, (Vector(4) << 1.0, 1.0, 0.0, 0.0).finished());
  const Matrix C = (Matrix(1, 4) << 1.0, -1.0, 0.0, 0.0).finished();
  ocp.g2 = [C](const Vector& x, int /*n*/) { return (C * x).eval(); };
  ocp.g2_jacobian = [C](const Vector&, int, Matrix& dgdx) { dgdx = C; };
  ocp.g3 = [C](const Vector& x) { return (C * x).eval(); };
  ocp.g3_jacobian = [C](const Vector&, Matrix& dgdx) { dgdx = C; };
  return ocp;
}

OcpDefinition make_point_mass_surface(int N, double dt) {
  OcpDefinition ocp;
  ocp.state_dim = 6;
  ocp.input_dim = 3;
  ocp.horizon = N;
  ocp.dt = dt;
  ocp.x0 = Vector::Zero(6);  // the origin lies on the surface

  ContinuousModel model;
  model.f = [](const Vector& x, const Vector& u) {
    Vector dx(6);
    dx.head(3) = x.tail(3);
    dx.tail(3) = u;  // unit mass
    return dx;
  };
  model.jacobians = [](const Vector&, const Vector&, Matrix& Jx, Matrix& Ju) {
    Jx = Matrix::Zero(6, 6);
    Jx.topRightCorner(3, 3) = Matrix::Identity(3, 3);
    Ju = Matrix::Zero(6, 3);
    Ju.bottomRows(3) = Matrix::Identity(3, 3);
  };
  const ContinuousModelAdapter adapter{model, dt};
  ocp.dynamics = make_discrete_dynamics(adapter);
  ocp.dynamics_jacobians = make_discrete_jacobians(adapter);

  Vector target = Vector::Zero(6);
  target.head(3) << 0.6, 0.8, 0.0;  // off the surface

  Matrix Wxx = Matrix::Zero(6, 6);
  Wxx.diagonal() << 20.0, 20.0, 5.0, 1.0, 1.0, 1.0;
  Wxx *= dt;
  Matrix Wuu = 0.02 * Matrix::Identity(3, 3) * dt;
  const Matrix Wux = Matrix::Zero(3, 6);
  Matrix Wf = Matrix::Zero(6, 6);
  Wf.diagonal() << 200.0, 200.0, 50.0, 10.0, 10.0, 10.0;

  ocp.stage_cost = quadratic_stage_cost(Wxx, Wuu, Wux, target, Vector::Zero(3));
  ocp.stage_cost_expansion = quadratic_stage_expansion(Wxx, Wuu, Wux, target, Vector::Zero(3));
  ocp.terminal_cost = quadratic_terminal_cost(Wf, target);
  ocp.terminal_cost_expansion = quadratic_terminal_expansion(Wf, target);

  const auto surface = [](const Vector& x) {
    return x(1) * std::sin(kTwoPi * x(0)) - x(0) * std::cos(kTwoPi * x(1)) - x(2);
  };
  const auto surface_grad = [](const Vector& x) {
    Matrix row = Matrix::Zero(1, 6);
    row(0, 0) = kTwoPi * x(1) * std::cos(kTwoPi * x(0)) - std::cos(kTwoPi * x(1));
    row(0, 1) = std::sin(kTwoPi * x(0)) + kTwoPi * x(0) * std::sin(kTwoPi * x(1));
    row(0, 2) = -1.0;
    return row;
  };

  ocp.g2 = [surface](const Vector& x, int /*n*/) {
    return (Vector(1) << surface(x)).finished();
  };
  ocp.g2_jacobian = [surface_grad](const Vector& x, int /*n*/, Matrix& dgdx) {
    dgdx = surface_grad(x);
  };
  ocp.g3 = [surface](const Vector& x) { return (Vector(1) << surface(x)).finished(); };
  ocp.g3_jacobian = [surface_grad](const Vector& x, Matrix& dgdx) { dgdx = surface_grad(x); };
  return ocp;
}

Vector planar_arm_end_effector(const Vector& theta, const PlanarArmParams& params) {
  const double c1 = std::cos(theta(0));
  const double s1 = std::sin(theta(0));
  const double c12 = std::cos(theta(0) + theta(1));
  const double s12 = std::sin(theta(0) + theta(1));
  return (Vector(2) << params.l1 * c1 + params.l2 * c12, params.l1 * s1 + params.l2 * s12)
      .finished();
}

Matrix planar_arm_end_effector_jacobian(const Vector& theta, const PlanarArmParams& params) {
  const double c1 = std::cos(theta(0));
  const double s1 = std::sin(theta(0));
  const double c12 = std::cos(theta(0) + theta(1));
  const double s12 = std::sin(theta(0) + theta(1));
  Matrix J(2, 2);
  J << -params.l1 * s1 - params.l2 * s12, -params.l2 * s12,  //
      params.l1 * c1 + params.l2 * c12, params.l2 * c12;
  return J;
}

OcpDefinition make_planar_arm(int N, double dt, const PlanarArmParams& params) {
  OcpDefinition ocp;
  ocp.state_dim = 4;
  ocp.input_dim = 2;
  ocp.horizon = N;
  ocp.dt = dt;
  ocp.x0 = (Vector(4) << 0.3, 0.8, 0.0, 0.0).finished();

  const double a = (params.m1 + params.m2) * params.l1 * params.l1;
  const double beta = params.m2 * params.l1 * params.l2;
  const double gamma = params.m2 * params.l2 * params.l2;
  const double damping = params.damping;
  const double grav = params.gravity;
  const double m1 = params.m1;
  const double m2 = params.m2;
  const double l1 = params.l1;
  const double l2 = params.l2;

  ContinuousModel model;
  model.f = [=](const Vector& x, const Vector& u) {
    const double c2 = std::cos(x(1));
    const double s2 = std::sin(x(1));
    const double w1 = x(2);
    const double w2 = x(3);
    Matrix M(2, 2);
    M << a + gamma + 2.0 * beta * c2, gamma + beta * c2,  //
        gamma + beta * c2, gamma;
    Vector cor(2);
    cor << -beta * s2 * w2 * (2.0 * w1 + w2), beta * s2 * w1 * w1;
    Vector grav_vec(2);
    grav_vec << (m1 + m2) * grav * l1 * std::cos(x(0)) + m2 * grav * l2 * std::cos(x(0) + x(1)),
        m2 * grav * l2 * std::cos(x(0) + x(1));
    const Vector w = u - cor - grav_vec - damping * x.tail(2);
    Vector dx(4);
    dx.head(2) = x.tail(2);
    dx.tail(2) = M.inverse() * w;
    return dx;
  };
  model.jacobians = [=](const Vector& x, const Vector& u, Matrix& Jx, Matrix& Ju) {
    const double c2 = std::cos(x(1));
    const double s2 = std::sin(x(1));
    const double w1 = x(2);
    const double w2 = x(3);
    Matrix M(2, 2);
    M << a + gamma + 2.0 * beta * c2, gamma + beta * c2,  //
        gamma + beta * c2, gamma;
    const Matrix Minv = M.inverse();

    Vector cor(2);
    cor << -beta * s2 * w2 * (2.0 * w1 + w2), beta * s2 * w1 * w1;
    Vector grav_vec(2);
    grav_vec << (m1 + m2) * grav * l1 * std::cos(x(0)) + m2 * grav * l2 * std::cos(x(0) + x(1)),
        m2 * grav * l2 * std::cos(x(0) + x(1));
    const Vector w = u - cor - grav_vec - damping * x.tail(2);
    const Vector fq = Minv * w;

    Matrix dM_dt2(2, 2);
    dM_dt2 << -2.0 * beta * s2, -beta * s2,  //
        -beta * s2, 0.0;
    Vector dcor_dt2(2);
    dcor_dt2 << -beta * c2 * w2 * (2.0 * w1 + w2), beta * c2 * w1 * w1;
    Matrix dcor_dw(2, 2);
    dcor_dw << -2.0 * beta * s2 * w2, -2.0 * beta * s2 * (w1 + w2),  //
        2.0 * beta * s2 * w1, 0.0;
    const double gs12 = m2 * grav * l2 * std::sin(x(0) + x(1));
    Matrix dgrav_dt(2, 2);
    dgrav_dt << -(m1 + m2) * grav * l1 * std::sin(x(0)) - gs12, -gs12,  //
        -gs12, -gs12;

    const Vector dfq_dt1 = Minv * (-dgrav_dt.col(0));
    const Vector dfq_dt2 = Minv * (-dcor_dt2 - dgrav_dt.col(1) - dM_dt2 * fq);
    const Matrix dfq_dw = Minv * (-dcor_dw - damping * Matrix::Identity(2, 2));

    Jx = Matrix::Zero(4, 4);
    Jx.topRightCorner(2, 2) = Matrix::Identity(2, 2);
    Jx.block(2, 0, 2, 1) = dfq_dt1;
    Jx.block(2, 1, 2, 1) = dfq_dt2;
    Jx.bottomRightCorner(2, 2) = dfq_dw;
    Ju = Matrix::Zero(4, 2);
    Ju.bottomRows(2) = Minv;
  };

  const ContinuousModelAdapter adapter{model, dt};
  ocp.dynamics = make_discrete_dynamics(adapter);
  ocp.dynamics_jacobians = make_discrete_jacobians(adapter);

  Vector x_ref = Vector::Zero(4);
  x_ref.head(2) << -0.1, 1.2;  // joint target pulling the end effector off the line
  Matrix Wxx = Matrix::Zero(4, 4);
  Wxx.diagonal() << 5.0, 5.0, 0.5, 0.5;
  Wxx *= dt;
  const Matrix Wuu = 0.05 * Matrix::Identity(2, 2) * dt;
  const Matrix Wux = Matrix::Zero(2, 4);
  Matrix Wf = Matrix::Zero(4, 4);
  Wf.diagonal() << 50.0, 50.0, 5.0, 5.0;

  ocp.stage_cost = quadratic_stage_cost(Wxx, Wuu, Wux, x_ref, Vector::Zero(2));
  ocp.stage_cost_expansion = quadratic_stage_expansion(Wxx, Wuu, Wux, x_ref, Vector::Zero(2));
  ocp.terminal_cost = quadratic_terminal_cost(Wf, x_ref);
  ocp.terminal_cost_expansion = quadratic_terminal_expansion(Wf, x_ref);

  // end effector stays on the line through its initial position, normal to
  // the radial direction
  const Vector p0 = planar_arm_end_effector(ocp.x0.head(2), params);
  const Vector normal = p0.normalized();
  const auto line = [params, p0, normal](const Vector& x) {
    return normal.dot(planar_arm_end_effector(x.head(2), params) - p0);
  };
  const auto line_grad = [params, normal](const Vector& x) {
    Matrix row = Matrix::Zero(1, 4);
    row.leftCols(2) =
        normal.transpose() * planar_arm_end_effector_jacobian(x.head(2), params);
    return row;
  };

  ocp.g2 = [line](const Vector& x, int /*n*/) { return (Vector(1) << line(x)).finished(); };
  ocp.g2_jacobian = [line_grad](const Vector& x, int /*n*/, Matrix& dgdx) {
    dgdx = line_grad(x);
  };
  ocp.g3 = [line](const Vector& x) { return (Vector(1) << line(x)).finished(); };
  ocp.g3_jacobian = [line_grad](const Vector& x, Matrix& dgdx) { dgdx = line_grad(x); };
  return ocp;
}

OcpDefinition make_random_constrained_lq(unsigned seed, int m_in, int p_in, int N_in) {
  for (unsigned attempt = 0; attempt < 64; ++attempt) {
    Rng rng(seed * 7919u + attempt * 104729u + 17u);
    const int m = m_in > 0 ? m_in : rng.uniform_int(2, 6);
    const int p = p_in > 0 ? p_in : rng.uniform_int(1, 4);
    const int N = N_in > 0 ? N_in : rng.uniform_int(3, 25);

    Matrix A = rng.matrix(m, m);
    const Eigen::EigenSolver<Matrix> es(A);
    const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
    A *= 0.95 / std::max(rho, 1e-3);
    const Matrix B = rng.matrix(m, p);
    const Vector drift = 0.1 * rng.vector(m);

    const int c1 = rng.uniform_int(0, std::min(2, p));
    const int c2 = p - c1 > 0 ? rng.uniform_int(0, std::min(2, p - c1)) : 0;
    const int c3 = (rng.uniform_int(0, 2) == 0 && p - c1 > 0) ? 1 : 0;

    const Matrix D = rng.matrix(c1, m);
    const Matrix E = rng.matrix(c1, p);
    const Vector e_off = rng.vector(c1);
    const Matrix C = rng.matrix(c2, m);
    const Matrix C3 = rng.matrix(c3, m);
    const Vector d3_off = 0.3 * rng.vector(c3);

    // reject poorly conditioned constraint stacks so the oracle comparison
    // stays meaningful
    const auto well_conditioned = [](const Matrix& S) {
      if (S.rows() == 0) {
        return true;
      }
      Eigen::JacobiSVD<Matrix> svd(S);
      const double smin = svd.singularValues().minCoeff();
      const double smax = svd.singularValues().maxCoeff();
      return smin > 1e-6 && smax / smin < 1e6;
    };
    Matrix stage_stack(c1 + c2, p);
    stage_stack << E, C * B;
    Matrix terminal_stack(c1 + c3, p);
    terminal_stack << E, C3 * B;
    if (!well_conditioned(stage_stack) || !well_conditioned(terminal_stack) ||
        !well_conditioned(C) || !well_conditioned(C3)) {
      if (m_in > 0 && attempt + 1 == 64) {
        break;
      }
      continue;
    }

    // Feasible trajectories must follow the constraint-consistent component
    // of the dynamics; if that map has explosive transients over the horizon
    // (e.g. the constraint pins all inputs to a destabilizing feedback), every
    // feasible trajectory is astronomically large and the instance is useless
    // as a test case. Reject such draws.
    Matrix stage_rows_x(c1 + c2, m);
    stage_rows_x << D, C * A;
    Matrix term_rows_x(c1 + c3, m);
    term_rows_x << D, C3 * A;
    const Matrix T = A - B * pseudo_inverse(stage_stack) * stage_rows_x;
    const Matrix T_last = A - B * pseudo_inverse(terminal_stack) * term_rows_x;
    Matrix Tn = Matrix::Identity(m, m);
    double transient = T_last.cwiseAbs().maxCoeff();
    for (int k = 0; k < N; ++k) {
      Tn = (T * Tn).eval();
      transient = std::max(transient, Tn.cwiseAbs().maxCoeff());
    }
    if (transient > 10.0) {
      if (m_in > 0 && attempt + 1 == 64) {
        break;
      }
      continue;
    }

    OcpDefinition ocp;
    ocp.state_dim = m;
    ocp.input_dim = p;
    ocp.horizon = N;
    ocp.dt = 1.0;
    ocp.x0 = 0.5 * rng.vector(m);
    set_linear_dynamics(ocp, A, B, drift);

    const Matrix F = rng.matrix(m + p + 1, m + p);
    Matrix W = F.transpose() * F / static_cast<double>(m + p);
    W.bottomRightCorner(p, p) += Matrix::Identity(p, p);
    const Matrix Wxx = W.topLeftCorner(m, m);
    const Matrix Wuu = W.bottomRightCorner(p, p);
    const Matrix Wux = W.bottomLeftCorner(p, m);
    const Vector x_ref = rng.vector(m);
    const Vector u_ref = rng.vector(p);
    ocp.stage_cost = quadratic_stage_cost(Wxx, Wuu, Wux, x_ref, u_ref);
    ocp.stage_cost_expansion = quadratic_stage_expansion(Wxx, Wuu, Wux, x_ref, u_ref);

    const Matrix Ft = rng.matrix(m + 1, m);
    const Matrix Wf = Ft.transpose() * Ft / static_cast<double>(m);
    const Vector xf_ref = rng.vector(m);
    ocp.terminal_cost = quadratic_terminal_cost(Wf, xf_ref);
    ocp.terminal_cost_expansion = quadratic_terminal_expansion(Wf, xf_ref);

    if (c1 > 0) {
      ocp.g1 = [D, E, e_off](const Vector& x, const Vector& u, int /*n*/) {
        return (D * x + E * u - e_off).eval();
      };
      ocp.g1_jacobians = [D, E](const Vector&, const Vector&, int, Matrix& dgdx, Matrix& dgdu) {
        dgdx = D;
        dgdu = E;
      };
    }
    if (c2 > 0) {
      const Vector d_off = C * ocp.x0;  // compliant at the initial state
      ocp.g2 = [C, d_off](const Vector& x, int /*n*/) { return (C * x - d_off).eval(); };
      ocp.g2_jacobian = [C](const Vector&, int, Matrix& dgdx) { dgdx = C; };
    }
    if (c3 > 0) {
      ocp.g3 = [C3, d3_off](const Vector& x) { return (C3 * x - d3_off).eval(); };
      ocp.g3_jacobian = [C3](const Vector&, Matrix& dgdx) { dgdx = C3; };
    }
    return ocp;
  }
  throw std::runtime_error("[systems] random LQ generation failed to find a well-conditioned "
                           "instance for seed " +
                           std::to_string(seed));
}

const std::vector<SystemCatalogEntry>& system_catalog() {
  static const std::vector<SystemCatalogEntry> catalog = {
      {"double_integrator", "planar double integrator, unconstrained LQ baseline", false},
      {"double_integrator_state_input",
       "planar double integrator with one affine state-input constraint row", false},
      {"double_integrator_pure_state",
       "planar double integrator holding the position difference at zero", false},
      {"point_mass_surface",
       "3D point mass constrained to y sin(2 pi x) - x cos(2 pi y) - z = 0", false},
      {"planar_arm", "two-link arm with the end effector constrained to a line", false},
      {"random_lq", "seeded random constrained LQ problem (relative degree 1)", true},
  };
  return catalog;
}

OcpDefinition make_catalog_system(const std::string& name, int N, double dt, unsigned seed) {
  if (name == "double_integrator") {
    return make_double_integrator(DoubleIntegratorVariant::Unconstrained, N, dt);
  }
  if (name == "double_integrator_state_input") {
    return make_double_integrator(DoubleIntegratorVariant::StateInput, N, dt);
  }
  if (name == "double_integrator_pure_state") {
    return make_double_integrator(DoubleIntegratorVariant::PureState, N, dt);
  }
  if (name == "double_integrator_euler") {
    return make_double_integrator_euler(N, dt);
  }
  if (name == "point_mass_surface") {
    return make_point_mass_surface(N, dt);
  }
  if (name == "planar_arm") {
    return make_planar_arm(N, dt);
  }
  if (name == "random_lq") {
    OcpDefinition ocp = make_random_constrained_lq(seed, 0, 0, N);
    ocp.dt = dt;
    return ocp;
  }
  throw std::invalid_argument("[systems] unknown problem name: " + name);
}

KktSolution dense_kkt_oracle(const LqApproximation& lin, const Vector& dx0) {
  const int N = lin.horizon();
  if (N < 1) {
    throw std::invalid_argument("[systems] oracle needs at least one stage");
  }
  const int m = static_cast<int>(lin.stages.front().A.cols());
  const int p = static_cast<int>(lin.stages.front().B.cols());
  const int nz = N * m + N * p;
  const auto xi = [&](int k) { return (k - 1) * m; };          // dx_k, k = 1..N
  const auto ui = [&](int n) { return N * m + n * p; };        // du_n, n = 0..N-1

  Matrix H = Matrix::Zero(nz, nz);
  Vector f = Vector::Zero(nz);
  for (int n = 0; n < N; ++n) {
    const LqStage& st = lin.stages[static_cast<std::size_t>(n)];
    H.block(ui(n), ui(n), p, p) += st.R;
    f.segment(ui(n), p) += st.r;
    if (n >= 1) {
      H.block(xi(n), xi(n), m, m) += st.Q;
      H.block(ui(n), xi(n), p, m) += st.P;
      H.block(xi(n), ui(n), m, p) += st.P.transpose();
      f.segment(xi(n), m) += st.q_vec;
    } else {
      f.segment(ui(0), p) += st.P * dx0;  // dx_0 is data, fold it into the linear term
    }
  }
  H.block(xi(N), xi(N), m, m) += lin.terminal_Q;
  f.segment(xi(N), m) += lin.terminal_q_vec;

  int rows = N * m;  // dynamics
  for (int n = 0; n < N; ++n) {
    rows += static_cast<int>(lin.constraints[static_cast<std::size_t>(n)].E.rows());
    if (n >= 1) {
      rows += static_cast<int>(lin.constraints[static_cast<std::size_t>(n)].C.rows());
    }
  }
  rows += static_cast<int>(lin.terminal_C.rows());

  Matrix Acon = Matrix::Zero(rows, nz);
  Vector bcon = Vector::Zero(rows);
  int r = 0;
  for (int n = 0; n < N; ++n) {
    const LqStage& st = lin.stages[static_cast<std::size_t>(n)];
    Acon.block(r, xi(n + 1), m, m) = Matrix::Identity(m, m);
    Acon.block(r, ui(n), m, p) = -st.B;
    if (n >= 1) {
      Acon.block(r, xi(n), m, m) = -st.A;
    } else {
      bcon.segment(r, m) = st.A * dx0;
    }
    r += m;
  }
  for (int n = 0; n < N; ++n) {
    const ConstraintStage& cs = lin.constraints[static_cast<std::size_t>(n)];
    const int c1 = static_cast<int>(cs.E.rows());
    if (c1 > 0) {
      Acon.block(r, ui(n), c1, p) = cs.E;
      if (n >= 1) {
        Acon.block(r, xi(n), c1, m) = cs.D;
        bcon.segment(r, c1) = cs.e;
      } else {
        bcon.segment(r, c1) = cs.e - cs.D * dx0;
      }
      r += c1;
    }
    const int c2 = static_cast<int>(cs.C.rows());
    if (n >= 1 && c2 > 0) {
      Acon.block(r, xi(n), c2, m) = cs.C;
      bcon.segment(r, c2) = cs.d;
      r += c2;
    }
  }
  const int c3 = static_cast<int>(lin.terminal_C.rows());
  if (c3 > 0) {
    Acon.block(r, xi(N), c3, m) = lin.terminal_C;
    bcon.segment(r, c3) = lin.terminal_d;
    r += c3;
  }

  Matrix kkt = Matrix::Zero(nz + rows, nz + rows);
  kkt.topLeftCorner(nz, nz) = H;
  kkt.topRightCorner(nz, rows) = Acon.transpose();
  kkt.bottomLeftCorner(rows, nz) = Acon;
  Vector rhs(nz + rows);
  rhs << -f, bcon;

  const Eigen::FullPivLU<Matrix> lu(kkt);
  const Vector sol = lu.solve(rhs);
  const Vector z = sol.head(nz);

  KktSolution out;
  out.kkt_residual =
      (kkt * sol - rhs).cwiseAbs().maxCoeff() / (1.0 + rhs.cwiseAbs().maxCoeff());
  out.solvable = out.kkt_residual <= 1e-6;
  out.objective = 0.5 * z.dot(H * z) + f.dot(z);
  out.dx.resize(static_cast<std::size_t>(N) + 1);
  out.du.resize(static_cast<std::size_t>(N));
  out.dx[0] = dx0;
  for (int k = 1; k <= N; ++k) {
    out.dx[static_cast<std::size_t>(k)] = z.segment(xi(k), m);
  }
  for (int n = 0; n < N; ++n) {
    out.du[static_cast<std::size_t>(n)] = z.segment(ui(n), p);
  }
  return out;
}

}  // namespace pilqr
