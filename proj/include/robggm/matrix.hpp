#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace robggm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Dense symmetric matrix. Construction symmetrizes as 0.5 * (A + A^T), so
// every instance is exactly symmetric in storage regardless of how the
// input was computed.
class SymMatrix {
 public:
  SymMatrix() = default;

  explicit SymMatrix(const Matrix& a) {
    if (a.rows() != a.cols())
      throw DimensionMismatch("symmetric matrix must be square, got " +
                              std::to_string(a.rows()) + "x" +
                              std::to_string(a.cols()));
    m_ = 0.5 * (a + a.transpose());
  }

  static SymMatrix identity(Eigen::Index p) {
    return SymMatrix(Matrix::Identity(p, p));
  }

  static SymMatrix from_diagonal(const Vector& d) {
    return SymMatrix(Matrix(d.asDiagonal()));
  }

  Eigen::Index dim() const { return m_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  const Matrix& mat() const { return m_; }

 private:
  Matrix m_;
};

// Lower-triangular Cholesky factor L with A = L L^T. Obtained via
// cholesky() below; kept as its own type so downstream code can reuse one
// factorization for solves, log-determinants and inverses.
class CholeskyFactor {
 public:
  Eigen::Index dim() const { return lower_.rows(); }
  const Matrix& lower() const { return lower_; }

  double log_det() const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < lower_.rows(); ++i)
      s += std::log(lower_(i, i));
    return 2.0 * s;
  }

  // A^{-1} b via forward and backward substitution.
  Vector solve(const Vector& b) const {
    if (b.size() != lower_.rows())
      throw DimensionMismatch("solve: vector length " +
                              std::to_string(b.size()) + " vs dimension " +
                              std::to_string(lower_.rows()));
    Vector y = lower_.triangularView<Eigen::Lower>().solve(b);
    return lower_.transpose().triangularView<Eigen::Upper>().solve(y);
  }

  Matrix solve(const Matrix& b) const {
    if (b.rows() != lower_.rows())
      throw DimensionMismatch("solve: rhs rows " + std::to_string(b.rows()) +
                              " vs dimension " + std::to_string(lower_.rows()));
    Matrix y = lower_.triangularView<Eigen::Lower>().solve(b);
    return lower_.transpose().triangularView<Eigen::Upper>().solve(y);
  }

  // A^{-1} = X^T X with X = L^{-1}; the product form keeps the result
  // symmetric up to the SymMatrix constructor's final symmetrization.
  SymMatrix inverse() const {
    Matrix x = lower_.triangularView<Eigen::Lower>().solve(
        Matrix::Identity(lower_.rows(), lower_.cols()));
    return SymMatrix(x.transpose() * x);
  }

  Matrix reconstruct() const { return lower_ * lower_.transpose(); }

 private:
  friend CholeskyFactor cholesky(const SymMatrix&);
  explicit CholeskyFactor(Matrix lower) : lower_(std::move(lower)) {}
  Matrix lower_;
};

// Unpivoted Cholesky factorization. A pivot at or below 1e-14 times the
// largest diagonal entry is treated as a positive definiteness failure
// rather than silently producing a huge ill-conditioned factor.
inline CholeskyFactor cholesky(const SymMatrix& a) {
  const Matrix& m = a.mat();
  const Eigen::Index p = m.rows();
  if (p == 0) throw DimensionMismatch("cholesky: empty matrix");

  double max_diag = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) max_diag = std::max(max_diag, m(i, i));
  if (!(max_diag > 0.0))
    throw NotPositiveDefinite("cholesky: no positive diagonal entry");
  const double pivot_floor = 1e-14 * max_diag;

  Matrix l = Matrix::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double d = m(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > pivot_floor))
      throw NotPositiveDefinite("cholesky: pivot " + std::to_string(d) +
                                " at column " + std::to_string(j + 1) +
                                " below threshold");
    l(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < p; ++i) {
      double s = m(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return CholeskyFactor(std::move(l));
}

inline double log_det_pd(const SymMatrix& a) { return cholesky(a).log_det(); }

inline SymMatrix invert_pd(const SymMatrix& a) { return cholesky(a).inverse(); }

// Rescale a positive definite (or at least positive-diagonal) matrix to
// unit diagonal: C_ij = A_ij / sqrt(A_ii A_jj). The diagonal is set to 1
// exactly, not recomputed, so the function is idempotent.
inline SymMatrix to_correlation(const SymMatrix& a) {
  const Eigen::Index p = a.dim();
  for (Eigen::Index i = 0; i < p; ++i)
    if (!(a(i, i) > 0.0))
      throw NonPositiveDiagonal("to_correlation: diagonal entry " +
                                std::to_string(i + 1) + " is " +
                                std::to_string(a(i, i)));
  Matrix c(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    c(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      double v = a(i, j) / std::sqrt(a(i, i) * a(j, j));
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return SymMatrix(c);
}

}  // namespace robggm
