#include "pilqr/projection.hpp"

#include <stdexcept>

namespace pilqr {

PreviewStack build_preview_stack(const LqStage& lq, const ConstraintStage& cons_n,
                                 const Matrix& cons_next_C, const Vector& cons_next_d) {
  const int m = static_cast<int>(lq.A.cols());
  const int p = static_cast<int>(lq.B.cols());
  if (cons_next_C.rows() != cons_next_d.size()) {
    throw std::invalid_argument("[projection] next-step constraint rows and rhs disagree");
  }
  if (cons_next_C.rows() > 0 && cons_next_C.cols() != m) {
    throw std::invalid_argument("[projection] next-step constraint has wrong state dimension");
  }

  PreviewStack out;
  out.C_next = cons_next_C;
  out.M = cons_next_C * lq.B;
  out.N_mat = cons_next_C * lq.A;

  const int c1 = static_cast<int>(cons_n.E.rows());
  const int c2 = static_cast<int>(out.M.rows());
  out.E_stack.resize(c1 + c2, p);
  out.D_stack.resize(c1 + c2, m);
  out.rhs.resize(c1 + c2);
  out.E_stack << cons_n.E, out.M;
  out.D_stack << cons_n.D, out.N_mat;
  out.rhs << cons_n.e, cons_next_d;
  return out;
}

RelativeDegreeReport check_relative_degree(const PreviewStack& stack, int step, double rank_tol) {
  RelativeDegreeReport out;
  out.step = step;

  const auto deficient = [&](const Matrix& A, const char* name) {
    const RankFactorization f = rank_factorize(A, rank_tol);
    if (f.rank < A.rows()) {
      out.ok = false;
      out.matrix = name;
      out.rank = f.rank;
      out.rows = static_cast<int>(A.rows());
      out.message = "[projection] relative-degree violation at step " + std::to_string(step) +
                    ": " + name + " has rank " + std::to_string(f.rank) + " < " +
                    std::to_string(A.rows()) + " rows";
      return true;
    }
    return false;
  };

  if (stack.C_next.rows() > 0 && deficient(stack.C_next, "C_next")) {
    return out;
  }
  if (stack.M.rows() > 0 && deficient(stack.M, "M")) {
    return out;
  }
  return out;
}

ProjectionStage compute_projection(const PreviewStack& stack, double rank_tol) {
  const int p = static_cast<int>(stack.E_stack.cols());
  const int rows = static_cast<int>(stack.E_stack.rows());

  ProjectionStage out;
  out.M = stack.M;
  out.N_mat = stack.N_mat;
  out.E_stack = stack.E_stack;
  out.D_stack = stack.D_stack;
  out.rhs = stack.rhs;

  if (rows == 0) {
    out.eps = Vector::Zero(p);
    out.U = Matrix::Zero(p, stack.D_stack.cols());
    out.proj = Matrix::Identity(p, p);
    out.rank = 0;
    out.full_row_rank = true;
    out.restoration_residual = 0.0;
    return out;
  }

  const RankFactorization f = rank_factorize(stack.E_stack, rank_tol);
  out.rank = f.rank;
  out.full_row_rank = f.rank == rows;
  out.eps = f.apply_pinv(stack.rhs);
  out.U = -f.apply_pinv(stack.D_stack);
  out.proj = f.null_space_basis * f.null_space_basis.transpose();
  if (!out.full_row_rank) {
    const Vector resid = stack.E_stack * out.eps - stack.rhs;
    out.restoration_residual = resid.size() > 0 ? resid.cwiseAbs().maxCoeff() : 0.0;
  }
  return out;
}

ProjectedStage project_stage(const LqStage& lq, const ProjectionStage& ps) {
  ProjectedStage out;
  const Matrix& P_N = ps.proj;

  out.A_t = lq.A + lq.B * ps.U;
  out.B_t = lq.B * P_N;
  out.g_t = lq.B * ps.eps;

  const Vector R_eps = lq.R * ps.eps;
  out.q_t = lq.q + ps.eps.dot(lq.r) + 0.5 * ps.eps.dot(R_eps);
  out.qv_t = lq.q_vec + ps.U.transpose() * lq.r + lq.P.transpose() * ps.eps +
             ps.U.transpose() * R_eps;
  out.Q_t = lq.Q + ps.U.transpose() * lq.R * ps.U + ps.U.transpose() * lq.P +
            lq.P.transpose() * ps.U;
  out.r_t = P_N * (lq.r + R_eps);
  out.R_t = P_N * lq.R * P_N;
  out.P_t = P_N * (lq.P + lq.R * ps.U);

  out.Q_t = 0.5 * (out.Q_t + out.Q_t.transpose()).eval();
  out.R_t = 0.5 * (out.R_t + out.R_t.transpose()).eval();
  return out;
}

}  // namespace pilqr
