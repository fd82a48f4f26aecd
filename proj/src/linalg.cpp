#include "pilqr/linalg.hpp"

#include <Eigen/SVD>

namespace pilqr {

Matrix RankFactorization::apply_pinv(const Matrix& rhs) const {
  if (rank == 0) {
    return Matrix::Zero(right_vectors.rows(), rhs.cols());
  }
  return right_vectors * singular_values.cwiseInverse().asDiagonal() *
         (left_vectors.transpose() * rhs);
}

Matrix RankFactorization::pinv() const {
  if (rank == 0) {
    return Matrix::Zero(right_vectors.rows(), left_vectors.rows());
  }
  return right_vectors * singular_values.cwiseInverse().asDiagonal() * left_vectors.transpose();
}

RankFactorization rank_factorize(const Matrix& A, double rank_tol) {
  if (!A.allFinite()) {
    throw std::runtime_error("[linalg] non-finite entries in matrix to factorize");
  }
  const int rows = static_cast<int>(A.rows());
  const int cols = static_cast<int>(A.cols());
  RankFactorization out;
  if (rows == 0 || cols == 0) {
    out.rank = 0;
    out.row_space_basis = Matrix::Zero(0, cols);
    out.null_space_basis = Matrix::Identity(cols, cols);
    out.left_vectors = Matrix::Zero(rows, 0);
    out.singular_values = Vector(0);
    out.right_vectors = Matrix::Zero(cols, 0);
    return out;
  }

  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const Vector& sigma = svd.singularValues();
  const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
  // strict inequality: values exactly at the threshold count as zero
  int rank = 0;
  for (int i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > rank_tol * sigma_max) {
      ++rank;
    }
  }

  out.rank = rank;
  out.left_vectors = svd.matrixU().leftCols(rank);
  out.singular_values = sigma.head(rank);
  out.right_vectors = svd.matrixV().leftCols(rank);
  out.row_space_basis = out.right_vectors.transpose();
  out.null_space_basis = svd.matrixV().rightCols(cols - rank);
  return out;
}

Matrix pseudo_inverse(const Matrix& A, double rank_tol) {
  if (A.rows() == 0 || A.cols() == 0) {
    return Matrix::Zero(A.cols(), A.rows());
  }
  return rank_factorize(A, rank_tol).pinv();
}

Matrix nullspace_projector(const Matrix& A, double rank_tol) {
  const int cols = static_cast<int>(A.cols());
  if (A.rows() == 0) {
    return Matrix::Identity(cols, cols);
  }
  const RankFactorization f = rank_factorize(A, rank_tol);
  // V V^T from the kernel basis is symmetric by construction
  return f.null_space_basis * f.null_space_basis.transpose();
}

ConstraintSplit split_rank_deficient_constraint(const Matrix& D, const Matrix& E, const Vector& e,
                                                double rank_tol) {
  const int rows = static_cast<int>(E.rows());
  ConstraintSplit out;
  if (rows == 0) {
    out.D = D;
    out.E = E;
    out.e = e;
    out.C = Matrix::Zero(0, D.cols());
    out.d = Vector(0);
    return out;
  }
  if (D.rows() != rows || e.size() != rows) {
    throw std::invalid_argument("[linalg] split: row counts of D, E, e disagree");
  }
  if (E.cols() == 0) {
    out.D = Matrix::Zero(0, D.cols());
    out.E = Matrix::Zero(0, 0);
    out.e = Vector(0);
    out.C = D;
    out.d = e;
    return out;
  }

  Eigen::JacobiSVD<Matrix> svd(E, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& sigma = svd.singularValues();
  const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > rank_tol * sigma_max) {
      ++rank;
    }
  }

  if (rank == rows) {
    out.D = D;
    out.E = E;
    out.e = e;
    out.C = Matrix::Zero(0, D.cols());
    out.d = Vector(0);
    return out;
  }

  // Rotate the system by U^T: the first `rank` rows carry the full-row-rank
  // state-input part, the rest have vanishing E-component.
  const Matrix Ut = svd.matrixU().transpose();
  const Matrix Dr = Ut * D;
  const Matrix Er = Ut * E;
  const Vector er = Ut * e;

  out.D = Dr.topRows(rank);
  out.E = Er.topRows(rank);
  out.e = er.head(rank);
  out.C = Dr.bottomRows(rows - rank);
  out.d = er.tail(rows - rank);

  const double d_scale = 1.0 + e.cwiseAbs().maxCoeff();
  const double row_scale = 1.0 + std::max(D.cwiseAbs().sum(), E.cwiseAbs().sum());
  for (int i = 0; i < out.C.rows(); ++i) {
    if (out.C.row(i).cwiseAbs().maxCoeff() <= rank_tol * row_scale &&
        std::abs(out.d(i)) > rank_tol * d_scale) {
      throw std::runtime_error(
          "[linalg] split: infeasible degenerate constraint row (0 = nonzero residual)");
    }
  }
  return out;
}

RowReduction drop_dependent_rows(const Matrix& C, const Vector& d, double rank_tol) {
  RowReduction out;
  const int rows = static_cast<int>(C.rows());
  if (rows == 0) {
    out.C = C;
    out.d = d;
    return out;
  }
  if (d.size() != rows) {
    throw std::invalid_argument("[linalg] drop_dependent_rows: C and d row counts disagree");
  }

  Eigen::JacobiSVD<Matrix> svd(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& sigma = svd.singularValues();
  const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > rank_tol * sigma_max) {
      ++rank;
    }
  }
  if (rank == rows) {
    out.C = C;
    out.d = d;
    return out;
  }

  // Rotate by U^T so dependent rows land at the bottom with vanishing
  // C-component; their d-part measures the inconsistency of those rows.
  const Matrix Ut = svd.matrixU().transpose();
  const Matrix Cr = Ut * C;
  const Vector dr = Ut * d;
  out.C = Cr.topRows(rank);
  out.d = dr.head(rank);
  out.residual = dr.tail(rows - rank).cwiseAbs().maxCoeff();
  out.consistent = out.residual <= 1e-8 * (1.0 + d.cwiseAbs().maxCoeff());
  return out;
}

}  // namespace pilqr
