#include "mhglm/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "mhglm/error.hpp"

namespace mhglm {

CompactSvd compact_svd(const MatrixXd& F, double rank_tol) {
  if (F.rows() < 1 || F.cols() < 1) throw InvalidInput("compact_svd: empty matrix");
  if (!F.allFinite()) throw InvalidInput("compact_svd: non-finite entries");

  Eigen::JacobiSVD<MatrixXd> svd(F, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  const double threshold = rank_tol * static_cast<double>(std::max(F.rows(), F.cols())) * smax;

  Index r = 0;
  while (r < sv.size() && sv(r) > threshold) ++r;

  CompactSvd out;
  out.rank = r;
  out.U = svd.matrixU().leftCols(r);
  out.d = sv.head(r);
  out.V = svd.matrixV().leftCols(r);
  return out;
}

namespace {

Eigen::SelfAdjointEigenSolver<MatrixXd> sym_eig(const MatrixXd& S) {
  const MatrixXd sym = 0.5 * (S + S.transpose());
  return Eigen::SelfAdjointEigenSolver<MatrixXd>(sym);
}

}  // namespace

MatrixXd psd_project(const MatrixXd& S) {
  if (S.size() == 0) return S;
  auto es = sym_eig(S);
  const VectorXd clipped = es.eigenvalues().cwiseMax(0.0);
  if ((es.eigenvalues().array() >= 0.0).all()) return 0.5 * (S + S.transpose());
  MatrixXd out = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

MatrixXd psd_sqrt(const MatrixXd& S) {
  if (S.size() == 0) return S;
  auto es = sym_eig(S);
  const VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  MatrixXd out = es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

double min_eigenvalue(const MatrixXd& S) {
  if (S.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

MatrixXd spd_inverse(const MatrixXd& S) {
  Eigen::LLT<MatrixXd> llt(0.5 * (S + S.transpose()));
  if (llt.info() != Eigen::Success) throw NumericalError("spd_inverse: matrix is not positive definite");
  MatrixXd inv = llt.solve(MatrixXd::Identity(S.rows(), S.cols()));
  return 0.5 * (inv + inv.transpose());
}

// ---------------------------------------------------------------------------

SymBasis::SymBasis(Index q) : q_(q) {
  if (q < 0) throw InvalidInput("SymBasis: negative dimension");
}

Index SymBasis::index(Index row, Index col) const {
  // Column-major lower triangle: column c starts after sum_{k<c} (q - k).
  return col * q_ - col * (col - 1) / 2 + (row - col);
}

VectorXd SymBasis::svec(const MatrixXd& S) const {
  VectorXd v(dim());
  const double r2 = std::sqrt(2.0);
  Index a = 0;
  for (Index j = 0; j < q_; ++j) {
    v(a++) = S(j, j);
    for (Index i = j + 1; i < q_; ++i) v(a++) = r2 * 0.5 * (S(i, j) + S(j, i));
  }
  return v;
}

MatrixXd SymBasis::smat(const VectorXd& v) const {
  MatrixXd S(q_, q_);
  const double inv_r2 = 1.0 / std::sqrt(2.0);
  Index a = 0;
  for (Index j = 0; j < q_; ++j) {
    S(j, j) = v(a++);
    for (Index i = j + 1; i < q_; ++i) {
      S(i, j) = S(j, i) = v(a++) * inv_r2;
    }
  }
  return S;
}

// ---------------------------------------------------------------------------

SymKroneckerSum::SymKroneckerSum(Index q) : basis_(q), reduced_(MatrixXd::Zero(basis_.dim(), basis_.dim())) {}

MatrixXd SymKroneckerSum::reduced_term(const SymBasis& basis, const MatrixXd& A_in) {
  const Index q = basis.q();
  const MatrixXd A = 0.5 * (A_in + A_in.transpose());
  MatrixXd out(basis.dim(), basis.dim());
  const double inv_r2 = 1.0 / std::sqrt(2.0);
  MatrixXd Y(q, q);
  Index b = 0;
  for (Index l = 0; l < q; ++l) {
    for (Index k = l; k < q; ++k) {
      // A E_b A for the basis element E_b of the (k, l) coordinate.
      if (k == l) {
        Y.noalias() = A.col(k) * A.col(k).transpose();
      } else {
        Y.noalias() = A.col(k) * A.col(l).transpose();
        Y += Y.transpose().eval();
        Y *= inv_r2;
      }
      out.col(b++) = basis.svec(Y);
    }
  }
  return 0.5 * (out + out.transpose());
}

void SymKroneckerSum::add_term(const MatrixXd& A) {
  if (A.rows() != q() || A.cols() != q()) throw InvalidInput("SymKroneckerSum: term has wrong dimension");
  reduced_ += reduced_term(basis_, A);
}

MatrixXd SymKroneckerSum::apply(const MatrixXd& S) const { return basis_.smat(reduced_ * basis_.svec(S)); }

SymSolver::SymSolver(const SymKroneckerSum& op, double inv_cond_tol) : basis_(op.basis()) {
  if (basis_.dim() == 0) return;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(op.reduced());
  eigvals_ = es.eigenvalues();
  eigvecs_ = es.eigenvectors();
  Index imin = 0;
  const double amin = eigvals_.cwiseAbs().minCoeff(&imin);
  const double amax = eigvals_.cwiseAbs().maxCoeff();
  min_abs_eig_ = amin;
  if (!(amax > 0.0) || amin <= inv_cond_tol * amax) {
    throw SingularOperator("symmetric Kronecker operator is singular on symmetric matrices",
                           eigvecs_.col(imin), amax > 0.0 ? amin / amax : 0.0);
  }
}

MatrixXd SymSolver::solve(const MatrixXd& rhs) const {
  if (basis_.dim() == 0) return MatrixXd(0, 0);
  const VectorXd b = basis_.svec(rhs);
  const VectorXd x = eigvecs_ * ((eigvecs_.transpose() * b).array() / eigvals_.array()).matrix();
  return basis_.smat(x);
}

MatrixXd solve_sym(const SymKroneckerSum& op, const MatrixXd& rhs, double inv_cond_tol) {
  return SymSolver(op, inv_cond_tol).solve(rhs);
}

}  // namespace mhglm
