#pragma once

#include <Eigen/Dense>

#include "pilqr/problem.hpp"

namespace pilqr {

/// Relative singular-value threshold for numerical rank decisions.
inline constexpr double kDefaultRankTol = 1e-9;

/// Rank-revealing SVD products of a matrix A (rows x cols).
///
/// row_space_basis holds `rank` orthonormal rows spanning the row space;
/// null_space_basis holds cols - rank orthonormal columns spanning the kernel.
/// The retained U, singular values and V suffice to apply the pseudo-inverse.
struct RankFactorization {
  int rank = 0;
  Matrix row_space_basis;   // rank x cols
  Matrix null_space_basis;  // cols x (cols - rank)
  Matrix left_vectors;      // rows x rank
  Vector singular_values;   // rank entries, descending
  Matrix right_vectors;     // cols x rank

  int nullity() const { return static_cast<int>(null_space_basis.cols()); }

  /// Applies the Moore-Penrose pseudo-inverse to a vector or matrix.
  Matrix apply_pinv(const Matrix& rhs) const;
  Matrix pinv() const;
};

/// Numerical rank via singular values > rank_tol * sigma_max (strict).
RankFactorization rank_factorize(const Matrix& A, double rank_tol = kDefaultRankTol);

/// Unweighted Moore-Penrose pseudo-inverse. Satisfies the four Penrose
/// conditions to roundoff for any rank.
Matrix pseudo_inverse(const Matrix& A, double rank_tol = kDefaultRankTol);

/// Orthogonal projector V V^T onto the kernel of A. Symmetric, idempotent,
/// A P = 0. For a matrix with no rows the projector is the identity.
Matrix nullspace_projector(const Matrix& A, double rank_tol = kDefaultRankTol);

/// Result of factorizing a row-rank-deficient state-input constraint
/// D dx + E du = e into a full-row-rank state-input part and an induced
/// pure-state part C dx = d. Orthogonal row transforms preserve the
/// solution set.
struct ConstraintSplit {
  Matrix D;  // retained state-input rows, E full row rank
  Matrix E;
  Vector e;
  Matrix C;  // induced pure-state rows
  Vector d;
};

/// Splits rows of (D, E, e) by the row space of E. Rows whose E-component
/// vanishes become pure-state rows. Throws std::runtime_error if a row
/// degenerates to 0 = e with e != 0.
ConstraintSplit split_rank_deficient_constraint(const Matrix& D, const Matrix& E, const Vector& e,
                                                double rank_tol = kDefaultRankTol);

/// Reduces C dx = d to an equivalent full-row-rank system by dropping
/// linearly dependent rows. `consistent` is false when a dropped row
/// disagrees with the retained ones (the retained system is then the
/// least-squares reading of the input).
struct RowReduction {
  Matrix C;
  Vector d;
  bool consistent = true;
  double residual = 0.0;
};

RowReduction drop_dependent_rows(const Matrix& C, const Vector& d,
                                 double rank_tol = kDefaultRankTol);

}  // namespace pilqr
