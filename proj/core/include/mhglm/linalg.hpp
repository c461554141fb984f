#pragma once

#include <limits>

#include <Eigen/Core>

namespace mhglm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kMachineEps = std::numeric_limits<double>::epsilon();

/// Compact SVD F = U diag(d) V^T keeping only singular values above the rank
/// threshold. Singular values are stored in descending order.
struct CompactSvd {
  MatrixXd U;  ///< n x r, orthonormal columns
  VectorXd d;  ///< r positive singular values
  MatrixXd V;  ///< k x r, orthonormal columns
  Index rank = 0;
};

/// Numerical rank is the count of singular values strictly greater than
/// rank_tol * max(n, k) * sigma_max. A zero matrix has rank 0 and empty factors.
/// Throws InvalidInput on empty or non-finite input.
CompactSvd compact_svd(const MatrixXd& F, double rank_tol = kMachineEps);

/// Frobenius-nearest positive semidefinite matrix: symmetrize, then clip
/// negative eigenvalues to zero.
MatrixXd psd_project(const MatrixXd& S);

/// Symmetric square root of (S + S^T)/2 with negative eigenvalues clipped.
MatrixXd psd_sqrt(const MatrixXd& S);

/// Smallest eigenvalue of (S + S^T)/2.
double min_eigenvalue(const MatrixXd& S);

/// Inverse of a symmetric positive-definite matrix via Cholesky; the result is
/// symmetrized. Throws NumericalError if S is not numerically PD.
MatrixXd spd_inverse(const MatrixXd& S);

/// Orthonormal coordinates on the space of symmetric q x q matrices: diagonal
/// entries map to themselves and off-diagonal pairs to sqrt(2) * S(i, j), so
/// that <svec(A), svec(B)> = trace(A B). Ordering is column-major over the
/// lower triangle: (0,0), (1,0), ..., (q-1,0), (1,1), ...
class SymBasis {
 public:
  explicit SymBasis(Index q);

  Index q() const noexcept { return q_; }
  Index dim() const noexcept { return q_ * (q_ + 1) / 2; }

  VectorXd svec(const MatrixXd& S) const;
  MatrixXd smat(const VectorXd& v) const;

  /// svec coordinate of the (row, col) pair, row >= col.
  Index index(Index row, Index col) const;

 private:
  Index q_;
};

/// Linear operator S -> sum_i A_i S A_i on symmetric matrices, i.e.
/// vec(S) -> (sum_i A_i (x) A_i) vec(S) with each A_i symmetric. The operator
/// is accumulated directly in SymBasis coordinates, never as a q^2 x q^2
/// Kronecker matrix.
class SymKroneckerSum {
 public:
  explicit SymKroneckerSum(Index q);

  Index q() const noexcept { return basis_.q(); }
  const SymBasis& basis() const noexcept { return basis_; }

  /// Adds the term A (x) A. A is symmetrized first.
  void add_term(const MatrixXd& A);
  /// Adds a term already expressed in reduced coordinates (see reduced_term).
  void add_reduced(const MatrixXd& reduced) { reduced_ += reduced; }

  /// Reduced-coordinate matrix of A (x) A restricted to symmetric matrices.
  static MatrixXd reduced_term(const SymBasis& basis, const MatrixXd& A);

  /// The dim x dim symmetric matrix of the operator in SymBasis coordinates.
  const MatrixXd& reduced() const noexcept { return reduced_; }

  /// Applies the operator to a symmetric matrix.
  MatrixXd apply(const MatrixXd& S) const;

 private:
  SymBasis basis_;
  MatrixXd reduced_;
};

/// Factorized SymKroneckerSum, ready for repeated solves.
class SymSolver {
 public:
  /// Throws SingularOperator when min|eig| <= inv_cond_tol * max|eig|; the
  /// reported direction is the offending eigenvector in svec coordinates.
  SymSolver(const SymKroneckerSum& op, double inv_cond_tol = 1e-12);

  /// Solves op(S) = rhs for symmetric S.
  MatrixXd solve(const MatrixXd& rhs) const;

  double min_abs_eigenvalue() const noexcept { return min_abs_eig_; }

 private:
  SymBasis basis_;
  MatrixXd eigvecs_;
  VectorXd eigvals_;
  double min_abs_eig_ = 0.0;
};

/// One-shot convenience wrapper around SymSolver.
MatrixXd solve_sym(const SymKroneckerSum& op, const MatrixXd& rhs, double inv_cond_tol = 1e-12);

}  // namespace mhglm
