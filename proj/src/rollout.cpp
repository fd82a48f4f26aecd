#include "pilqr/rollout.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "pilqr/linalg.hpp"

namespace pilqr {

namespace {

double max_norm(const Vector& v) { return v.size() > 0 ? v.cwiseAbs().maxCoeff() : 0.0; }

void require_finite(const Vector& v, const std::string& what) {
  if (!v.allFinite()) {
    throw std::runtime_error("[rollout] non-finite " + what);
  }
}

// Continuous Jacobians at one point, analytic when supplied.
void continuous_jacobians(const ContinuousModel& model, const Vector& x, const Vector& u,
                          Matrix& Jx, Matrix& Ju) {
  if (model.jacobians) {
    model.jacobians(x, u, Jx, Ju);
    return;
  }
  const double hx = gradient_step(x);
  const double hu = gradient_step(u);
  Jx = finite_difference_jacobian([&](const Vector& xi) { return model.f(xi, u); }, x, hx);
  Ju = finite_difference_jacobian([&](const Vector& ui) { return model.f(x, ui); }, u, hu);
}

struct CostQuadratization {
  double value = 0.0;
  Vector gx;
  Vector gu;
  Matrix Hxx;
  Matrix Huu;
  Matrix Hux;
};

CostQuadratization quadratize_stage_cost_fd(const StageCostFn& cost, const Vector& x,
                                            const Vector& u, int n) {
  const int m = static_cast<int>(x.size());
  const int p = static_cast<int>(u.size());
  CostQuadratization out;
  out.value = cost(x, u, n);
  out.gx = Vector::Zero(m);
  out.gu = Vector::Zero(p);
  out.Hxx = Matrix::Zero(m, m);
  out.Huu = Matrix::Zero(p, p);
  out.Hux = Matrix::Zero(p, m);

  const double hx = gradient_step(x);
  const double hu = gradient_step(u);
  for (int i = 0; i < m; ++i) {
    Vector xp = x, xm = x;
    xp(i) += hx;
    xm(i) -= hx;
    out.gx(i) = (cost(xp, u, n) - cost(xm, u, n)) / (2.0 * hx);
  }
  for (int i = 0; i < p; ++i) {
    Vector up = u, um = u;
    up(i) += hu;
    um(i) -= hu;
    out.gu(i) = (cost(x, up, n) - cost(x, um, n)) / (2.0 * hu);
  }

  const double sx = hessian_step(x);
  const double su = hessian_step(u);
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      Vector xpp = x, xpm = x, xmp = x, xmm = x;
      xpp(i) += sx;
      xpp(j) += sx;
      xpm(i) += sx;
      xpm(j) -= sx;
      xmp(i) -= sx;
      xmp(j) += sx;
      xmm(i) -= sx;
      xmm(j) -= sx;
      const double v = (cost(xpp, u, n) - cost(xpm, u, n) - cost(xmp, u, n) + cost(xmm, u, n)) /
                       (4.0 * sx * sx);
      out.Hxx(i, j) = v;
      out.Hxx(j, i) = v;
    }
  }
  for (int i = 0; i < p; ++i) {
    for (int j = i; j < p; ++j) {
      Vector upp = u, upm = u, ump = u, umm = u;
      upp(i) += su;
      upp(j) += su;
      upm(i) += su;
      upm(j) -= su;
      ump(i) -= su;
      ump(j) += su;
      umm(i) -= su;
      umm(j) -= su;
      const double v = (cost(x, upp, n) - cost(x, upm, n) - cost(x, ump, n) + cost(x, umm, n)) /
                       (4.0 * su * su);
      out.Huu(i, j) = v;
      out.Huu(j, i) = v;
    }
  }
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < m; ++j) {
      Vector up = u, um = u, xp = x, xm = x;
      up(i) += su;
      um(i) -= su;
      xp(j) += sx;
      xm(j) -= sx;
      out.Hux(i, j) = (cost(xp, up, n) - cost(xm, up, n) - cost(xp, um, n) + cost(xm, um, n)) /
                      (4.0 * su * sx);
    }
  }
  return out;
}

TerminalCostExpansion quadratize_terminal_cost_fd(const TerminalCostFn& cost, const Vector& x) {
  const int m = static_cast<int>(x.size());
  TerminalCostExpansion out;
  out.value = cost(x);
  out.dx = Vector::Zero(m);
  out.dxx = Matrix::Zero(m, m);
  const double h = gradient_step(x);
  for (int i = 0; i < m; ++i) {
    Vector xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    out.dx(i) = (cost(xp) - cost(xm)) / (2.0 * h);
  }
  const double s = hessian_step(x);
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      Vector xpp = x, xpm = x, xmp = x, xmm = x;
      xpp(i) += s;
      xpp(j) += s;
      xpm(i) += s;
      xpm(j) -= s;
      xmp(i) -= s;
      xmp(j) += s;
      xmm(i) -= s;
      xmm(j) -= s;
      const double v = (cost(xpp) - cost(xpm) - cost(xmp) + cost(xmm)) / (4.0 * s * s);
      out.dxx(i, j) = v;
      out.dxx(j, i) = v;
    }
  }
  return out;
}

void check_stage_weights(const Matrix& Q, const Matrix& R, int step) {
  Eigen::LLT<Matrix> llt(R);
  if (R.rows() == 0 || llt.info() != Eigen::Success) {
    throw std::invalid_argument("[rollout] input weight R is not positive definite at step " +
                                std::to_string(step));
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(Q, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
  if (lo < -1e-8 * std::max(1.0, hi)) {
    throw std::invalid_argument("[rollout] state weight Q is not positive semi-definite at step " +
                                std::to_string(step));
  }
}

void check_terminal_weight(const Matrix& Q) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(Q, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
  if (lo < -1e-8 * std::max(1.0, hi)) {
    throw std::invalid_argument("[rollout] terminal weight is not positive semi-definite");
  }
}

}  // namespace

double gradient_step(const Vector& at) { return 1e-6 * (1.0 + max_norm(at)); }

double hessian_step(const Vector& at) { return 1e-4 * (1.0 + max_norm(at)); }

Matrix finite_difference_jacobian(const std::function<Vector(const Vector&)>& fn,
                                  const Vector& point, double h) {
  const int cols = static_cast<int>(point.size());
  const int rows = static_cast<int>(fn(point).size());
  Matrix J(rows, cols);
  for (int j = 0; j < cols; ++j) {
    Vector pp = point, pm = point;
    pp(j) += h;
    pm(j) -= h;
    J.col(j) = (fn(pp) - fn(pm)) / (2.0 * h);
  }
  return J;
}

SensitivityStep integrate_step_with_sensitivities(const ContinuousModelAdapter& adapter,
                                                  const Vector& x, const Vector& u, int /*n*/) {
  if (adapter.dt <= 0.0) {
    throw std::invalid_argument("[rollout] adapter dt must be positive");
  }
  const double dt = adapter.dt;
  const int m = static_cast<int>(x.size());
  const int p = static_cast<int>(u.size());
  const Matrix I = Matrix::Identity(m, m);

  const Vector k1 = adapter.model.f(x, u);
  const Vector x2 = x + 0.5 * dt * k1;
  const Vector k2 = adapter.model.f(x2, u);
  const Vector x3 = x + 0.5 * dt * k2;
  const Vector k3 = adapter.model.f(x3, u);
  const Vector x4 = x + dt * k3;
  const Vector k4 = adapter.model.f(x4, u);
  require_finite(k1, "stage derivative k1");
  require_finite(k2, "stage derivative k2");
  require_finite(k3, "stage derivative k3");
  require_finite(k4, "stage derivative k4");

  Matrix Jx1(m, m), Jx2(m, m), Jx3(m, m), Jx4(m, m);
  Matrix Ju1(m, p), Ju2(m, p), Ju3(m, p), Ju4(m, p);
  continuous_jacobians(adapter.model, x, u, Jx1, Ju1);
  continuous_jacobians(adapter.model, x2, u, Jx2, Ju2);
  continuous_jacobians(adapter.model, x3, u, Jx3, Ju3);
  continuous_jacobians(adapter.model, x4, u, Jx4, Ju4);

  // variational equations chained through the stages
  const Matrix dk1x = Jx1;
  const Matrix dk2x = Jx2 * (I + 0.5 * dt * dk1x);
  const Matrix dk3x = Jx3 * (I + 0.5 * dt * dk2x);
  const Matrix dk4x = Jx4 * (I + dt * dk3x);

  const Matrix dk1u = Ju1;
  const Matrix dk2u = Jx2 * (0.5 * dt * dk1u) + Ju2;
  const Matrix dk3u = Jx3 * (0.5 * dt * dk2u) + Ju3;
  const Matrix dk4u = Jx4 * (dt * dk3u) + Ju4;

  SensitivityStep out;
  out.x_next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  out.A = I + (dt / 6.0) * (dk1x + 2.0 * dk2x + 2.0 * dk3x + dk4x);
  out.B = (dt / 6.0) * (dk1u + 2.0 * dk2u + 2.0 * dk3u + dk4u);
  if (!out.A.allFinite() || !out.B.allFinite()) {
    throw std::runtime_error("[rollout] non-finite sensitivity in RK4 step");
  }
  return out;
}

DynamicsFn make_discrete_dynamics(const ContinuousModelAdapter& adapter) {
  return [adapter](const Vector& x, const Vector& u, int /*n*/) -> Vector {
    const double dt = adapter.dt;
    const Vector k1 = adapter.model.f(x, u);
    const Vector k2 = adapter.model.f(x + 0.5 * dt * k1, u);
    const Vector k3 = adapter.model.f(x + 0.5 * dt * k2, u);
    const Vector k4 = adapter.model.f(x + dt * k3, u);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  };
}

DynamicsJacobianFn make_discrete_jacobians(const ContinuousModelAdapter& adapter) {
  return [adapter](const Vector& x, const Vector& u, int n, Matrix& dfdx, Matrix& dfdu) {
    const SensitivityStep step = integrate_step_with_sensitivities(adapter, x, u, n);
    dfdx = step.A;
    dfdu = step.B;
  };
}

TrajectoryPair rollout_policy(const OcpDefinition& ocp, const Policy& policy) {
  if (policy.horizon() != ocp.horizon) {
    throw std::invalid_argument("[rollout] policy horizon does not match the problem");
  }
  TrajectoryPair traj;
  traj.states.reserve(static_cast<std::size_t>(ocp.horizon) + 1);
  traj.inputs.reserve(static_cast<std::size_t>(ocp.horizon));
  traj.states.push_back(ocp.x0);
  for (int n = 0; n < ocp.horizon; ++n) {
    const Vector& x = traj.states.back();
    Vector u = policy(x, n);
    if (!u.allFinite()) {
      throw DivergenceError("[rollout] non-finite input at step " + std::to_string(n));
    }
    Vector x_next = ocp.dynamics(x, u, n);
    if (x_next.size() != ocp.state_dim) {
      throw std::invalid_argument("[rollout] dynamics returned wrong dimension at step " +
                                  std::to_string(n));
    }
    if (!x_next.allFinite()) {
      throw DivergenceError("[rollout] non-finite state at step " + std::to_string(n + 1));
    }
    traj.inputs.push_back(std::move(u));
    traj.states.push_back(std::move(x_next));
  }
  return traj;
}

LqApproximation linearize_and_quadratize(const OcpDefinition& ocp, const TrajectoryPair& traj) {
  validate_trajectory(ocp, traj);
  const int N = ocp.horizon;
  const int m = ocp.state_dim;
  const int p = ocp.input_dim;

  LqApproximation out;
  out.stages.resize(static_cast<std::size_t>(N));
  out.constraints.resize(static_cast<std::size_t>(N));

  for (int n = 0; n < N; ++n) {
    const Vector& x = traj.states[static_cast<std::size_t>(n)];
    const Vector& u = traj.inputs[static_cast<std::size_t>(n)];
    LqStage& lq = out.stages[static_cast<std::size_t>(n)];

    if (ocp.dynamics_jacobians) {
      ocp.dynamics_jacobians(x, u, n, lq.A, lq.B);
    } else {
      const double hx = gradient_step(x);
      const double hu = gradient_step(u);
      lq.A = finite_difference_jacobian(
          [&](const Vector& xi) { return ocp.dynamics(xi, u, n); }, x, hx);
      lq.B = finite_difference_jacobian(
          [&](const Vector& ui) { return ocp.dynamics(x, ui, n); }, u, hu);
    }
    if (lq.A.rows() != m || lq.A.cols() != m || lq.B.rows() != m || lq.B.cols() != p) {
      throw std::invalid_argument("[rollout] dynamics Jacobian dimensions wrong at step " +
                                  std::to_string(n));
    }

    if (ocp.stage_cost_expansion) {
      const StageCostExpansion ex = ocp.stage_cost_expansion(x, u, n);
      lq.q = ex.value;
      lq.q_vec = ex.dx;
      lq.r = ex.du;
      lq.Q = ex.dxx;
      lq.R = ex.duu;
      lq.P = ex.dux;
    } else {
      const CostQuadratization cq = quadratize_stage_cost_fd(ocp.stage_cost, x, u, n);
      lq.q = cq.value;
      lq.q_vec = cq.gx;
      lq.r = cq.gu;
      lq.Q = cq.Hxx;
      lq.R = cq.Huu;
      lq.P = cq.Hux;
    }
    lq.Q = 0.5 * (lq.Q + lq.Q.transpose()).eval();
    lq.R = 0.5 * (lq.R + lq.R.transpose()).eval();
    check_stage_weights(lq.Q, lq.R, n);

    // state-input constraint, then factor rank-deficient rows into C
    Matrix D = Matrix::Zero(0, m);
    Matrix E = Matrix::Zero(0, p);
    Vector e(0);
    if (ocp.g1) {
      const Vector g1v = ocp.g1(x, u, n);
      require_finite(g1v, "state-input constraint value at step " + std::to_string(n));
      if (ocp.g1_jacobians) {
        ocp.g1_jacobians(x, u, n, D, E);
      } else {
        const double hx = gradient_step(x);
        const double hu = gradient_step(u);
        D = finite_difference_jacobian([&](const Vector& xi) { return ocp.g1(xi, u, n); }, x, hx);
        E = finite_difference_jacobian([&](const Vector& ui) { return ocp.g1(x, ui, n); }, u, hu);
      }
      e = -g1v;
    }

    Matrix C = Matrix::Zero(0, m);
    Vector d(0);
    if (ocp.g2) {
      const Vector g2v = ocp.g2(x, n);
      require_finite(g2v, "state constraint value at step " + std::to_string(n));
      if (ocp.g2_jacobian) {
        ocp.g2_jacobian(x, n, C);
      } else {
        const double hx = gradient_step(x);
        C = finite_difference_jacobian([&](const Vector& xi) { return ocp.g2(xi, n); }, x, hx);
      }
      d = -g2v;
    }

    const ConstraintSplit split = split_rank_deficient_constraint(D, E, e);
    Matrix C_all(C.rows() + split.C.rows(), m);
    Vector d_all(C.rows() + split.C.rows());
    C_all << C, split.C;
    d_all << d, split.d;
    const RowReduction red = drop_dependent_rows(C_all, d_all);
    if (!red.consistent) {
      out.warnings.push_back("[rollout] inconsistent dependent pure-state rows at step " +
                             std::to_string(n) + " (residual " + std::to_string(red.residual) +
                             "); kept the consistent subset");
    }

    ConstraintStage& cs = out.constraints[static_cast<std::size_t>(n)];
    cs.D = split.D;
    cs.E = split.E;
    cs.e = split.e;
    cs.C = red.C;
    cs.d = red.d;
  }

  const Vector& xN = traj.states.back();
  if (ocp.terminal_cost_expansion) {
    const TerminalCostExpansion ex = ocp.terminal_cost_expansion(xN);
    out.terminal_q = ex.value;
    out.terminal_q_vec = ex.dx;
    out.terminal_Q = ex.dxx;
  } else {
    const TerminalCostExpansion ex = quadratize_terminal_cost_fd(ocp.terminal_cost, xN);
    out.terminal_q = ex.value;
    out.terminal_q_vec = ex.dx;
    out.terminal_Q = ex.dxx;
  }
  out.terminal_Q = 0.5 * (out.terminal_Q + out.terminal_Q.transpose()).eval();
  check_terminal_weight(out.terminal_Q);

  out.terminal_C = Matrix::Zero(0, m);
  out.terminal_d = Vector(0);
  if (ocp.g3) {
    const Vector g3v = ocp.g3(xN);
    require_finite(g3v, "terminal constraint value");
    Matrix CN;
    if (ocp.g3_jacobian) {
      ocp.g3_jacobian(xN, CN);
    } else {
      const double hx = gradient_step(xN);
      CN = finite_difference_jacobian([&](const Vector& xi) { return ocp.g3(xi); }, xN, hx);
    }
    const RowReduction red = drop_dependent_rows(CN, -g3v);
    if (!red.consistent) {
      out.warnings.push_back(
          "[rollout] inconsistent dependent terminal constraint rows (residual " +
          std::to_string(red.residual) + "); kept the consistent subset");
    }
    out.terminal_C = red.C;
    out.terminal_d = red.d;
  }
  return out;
}

}  // namespace pilqr
