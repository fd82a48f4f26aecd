#include "pilqr/riccati.hpp"

#include <Eigen/Eigenvalues>
#include <stdexcept>

namespace pilqr {

namespace {

// Shared by the public check and the in-sweep validation: H and G are already
// assembled there, so take them directly.
SingularityReport check_conditions_on(const Matrix& H, const Matrix& G, double tol) {
  SingularityReport out;
  if (H.rows() == 0) {
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(H);
  const Vector& lambda = es.eigenvalues();
  const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
  if (lambda.minCoeff() < -tol * scale) {
    out.ok = false;
    out.condition = "input-hessian-negative";
    out.measure = lambda.minCoeff();
    out.message = "input Hessian has negative eigenvalue " + std::to_string(out.measure);
    return out;
  }
  const double g_scale = std::max(1.0, G.size() > 0 ? G.cwiseAbs().maxCoeff() : 0.0);
  for (int i = 0; i < lambda.size(); ++i) {
    if (std::abs(lambda(i)) > tol * scale) {
      continue;
    }
    const Vector v = es.eigenvectors().col(i);
    const double leak = G.rows() > 0 ? (G.transpose() * v).cwiseAbs().maxCoeff() : 0.0;
    if (leak > tol * g_scale) {
      out.ok = false;
      out.condition = "kernel-containment";
      out.measure = leak;
      out.message = "kernel vector of the input Hessian is not annihilated by the "
                    "cross term (leak " +
                    std::to_string(leak) + ")";
      return out;
    }
  }
  return out;
}

void check_value_psd(const Matrix& S, int step, double tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  if (lo < -tol) {
    throw std::runtime_error("[riccati] value matrix lost positive semi-definiteness at step " +
                             std::to_string(step) + " (eigenvalue " + std::to_string(lo) + ")");
  }
}

}  // namespace

SingularityReport check_singular_conditions(const ProjectedStage& stage, const Matrix& S_next,
                                            double tol) {
  Matrix H = stage.R_t + stage.B_t.transpose() * S_next * stage.B_t;
  H = 0.5 * (H + H.transpose()).eval();
  const Matrix G = stage.P_t + stage.B_t.transpose() * S_next * stage.A_t;
  return check_conditions_on(H, G, tol);
}

std::vector<ValueStage> backward_pass(const std::vector<ProjectedStage>& stages,
                                      double terminal_q, const Vector& terminal_q_vec,
                                      const Matrix& terminal_Q, const RiccatiOptions& options) {
  const int N = static_cast<int>(stages.size());
  std::vector<ValueStage> values(static_cast<std::size_t>(N) + 1);

  ValueStage& terminal = values[static_cast<std::size_t>(N)];
  terminal.S = 0.5 * (terminal_Q + terminal_Q.transpose());
  terminal.s_vec = terminal_q_vec;
  terminal.s0 = terminal_q;
  if (options.check_value_psd) {
    check_value_psd(terminal.S, N, options.value_psd_tol);
  }

  const int stride = options.check_stride > 0 ? options.check_stride : 1;
  for (int n = N - 1; n >= 0; --n) {
    const ProjectedStage& st = stages[static_cast<std::size_t>(n)];
    const ValueStage& next = values[static_cast<std::size_t>(n) + 1];
    ValueStage& v = values[static_cast<std::size_t>(n)];

    const Matrix SB = next.S * st.B_t;
    const Vector s_plus = next.s_vec + next.S * st.g_t;

    v.H = st.R_t + st.B_t.transpose() * SB;
    v.H = 0.5 * (v.H + v.H.transpose()).eval();
    v.G = st.P_t + SB.transpose() * st.A_t;
    v.h = st.r_t + st.B_t.transpose() * s_plus;

    if (options.check_conditions && (n % stride == 0 || n == N - 1)) {
      const SingularityReport rep = check_conditions_on(v.H, v.G, options.condition_tol);
      if (!rep.ok) {
        throw std::runtime_error("[riccati] admissibility failure at step " + std::to_string(n) +
                                 " (" + rep.condition + "): " + rep.message);
      }
    }

    const RankFactorization Hf = rank_factorize(v.H);
    v.l = -Hf.apply_pinv(v.h);
    v.L = -Hf.apply_pinv(v.G);

    v.S = st.Q_t + st.A_t.transpose() * next.S * st.A_t - v.L.transpose() * v.H * v.L;
    v.S = 0.5 * (v.S + v.S.transpose()).eval();
    v.s_vec = st.qv_t + st.A_t.transpose() * s_plus + v.G.transpose() * v.l +
              v.L.transpose() * (v.h + v.H * v.l);
    v.s0 = st.q_t + next.s0 + st.g_t.dot(next.s_vec) + 0.5 * st.g_t.dot(next.S * st.g_t) +
           v.l.dot(v.h + 0.5 * v.H * v.l);

    if (!v.S.allFinite() || !v.s_vec.allFinite() || !std::isfinite(v.s0)) {
      throw std::runtime_error("[riccati] non-finite value function at step " +
                               std::to_string(n));
    }
    if (options.check_value_psd && (n % stride == 0)) {
      check_value_psd(v.S, n, options.value_psd_tol);
    }
  }
  return values;
}

Policy assemble_policy(const std::vector<ProjectionStage>& projections,
                       const std::vector<ValueStage>& values, const TrajectoryPair& nominal,
                       double alpha) {
  const int N = nominal.horizon();
  if (static_cast<int>(projections.size()) != N ||
      static_cast<int>(values.size()) != N + 1) {
    throw std::invalid_argument("[riccati] assemble_policy: horizon mismatch");
  }
  Policy policy;
  policy.feedforward.reserve(static_cast<std::size_t>(N));
  policy.gain.reserve(static_cast<std::size_t>(N));
  policy.reference.reserve(static_cast<std::size_t>(N));
  for (int n = 0; n < N; ++n) {
    const ProjectionStage& ps = projections[static_cast<std::size_t>(n)];
    const ValueStage& v = values[static_cast<std::size_t>(n)];
    policy.feedforward.push_back(nominal.inputs[static_cast<std::size_t>(n)] +
                                 alpha * (ps.eps + ps.proj * v.l));
    policy.gain.push_back(ps.U + ps.proj * v.L);
    policy.reference.push_back(nominal.states[static_cast<std::size_t>(n)]);
  }
  return policy;
}

}  // namespace pilqr
