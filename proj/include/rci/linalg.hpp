#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace rci {

using Index = Eigen::Index;

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = DenseMatrix<double>;
using Vector = DenseVector<double>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Input file / config problem; carries the offending line when known.
struct ParseError : Error {
  explicit ParseError(const std::string& what, long line = -1)
      : Error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what), line(line) {}
  long line;
};

struct DimensionError : Error {
  using Error::Error;
};

/// Kronecker product, column-convention: (A ⊗ B)(ia*pb+ib, ja*qb+jb) = A(ia,ja)·B(ib,jb).
template <typename Scalar>
DenseMatrix<Scalar> kron(const DenseMatrix<Scalar>& a, const DenseMatrix<Scalar>& b) {
  DenseMatrix<Scalar> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// p ⊗ x for vectors: stacks p_1·x, ..., p_s·x.
template <typename Scalar>
DenseVector<Scalar> kron(const DenseVector<Scalar>& p, const DenseVector<Scalar>& x) {
  DenseVector<Scalar> out(p.size() * x.size());
  for (Index i = 0; i < p.size(); ++i) out.segment(i * x.size(), x.size()) = p(i) * x;
  return out;
}

/// Column-stacking vectorization.
template <typename Scalar>
DenseVector<Scalar> vec(const DenseMatrix<Scalar>& a) {
  return a.reshaped();
}

template <typename Scalar>
DenseMatrix<Scalar> unvec(const DenseVector<Scalar>& v, Index rows, Index cols) {
  if (v.size() != rows * cols) throw DimensionError("unvec: size mismatch");
  return v.reshaped(rows, cols);
}

inline double min_eigenvalue(const Matrix& symmetric) {
  if (symmetric.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

inline Matrix symmetrized(const Matrix& a) { return 0.5 * (a + a.transpose()); }

inline Index numeric_rank(const Matrix& a, double rel_tol = 1e-8) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  Index r = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rel_tol * sv(0)) ++r;
  return r;
}

}  // namespace rci
