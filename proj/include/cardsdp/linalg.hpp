#pragma once

// Dense symmetric kernels shared by the conic solver, the QP solver and the
// lifting code. Everything is double precision and dense.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstddef>

#include "cardsdp/errors.hpp"

namespace cardsdp::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense symmetric matrix. The lower triangle is authoritative: every
/// constructor and mutator keeps the stored upper triangle an exact mirror.
class SymMatrix {
 public:
  SymMatrix() = default;

  explicit SymMatrix(Eigen::Index dim) : data_(Matrix::Zero(dim, dim)) {}

  /// Copies the lower triangle of `m` and mirrors it.
  explicit SymMatrix(const Matrix& m) : data_(m) {
    if (m.rows() != m.cols()) {
      throw DimensionMismatch("SymMatrix needs a square matrix, got " +
                              std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()));
    }
    mirror_lower();
  }

  static SymMatrix identity(Eigen::Index dim) {
    SymMatrix s;
    s.data_ = Matrix::Identity(dim, dim);
    return s;
  }

  Eigen::Index dim() const noexcept { return data_.rows(); }

  double operator()(Eigen::Index i, Eigen::Index j) const { return data_(i, j); }

  /// Sets both (i, j) and (j, i).
  void set(Eigen::Index i, Eigen::Index j, double v) {
    data_(i, j) = v;
    data_(j, i) = v;
  }

  const Matrix& dense() const noexcept { return data_; }

  double frobenius() const { return data_.norm(); }

  friend bool operator==(const SymMatrix& a, const SymMatrix& b) {
    return a.data_ == b.data_;
  }

 private:
  void mirror_lower() {
    for (Eigen::Index j = 0; j < data_.cols(); ++j) {
      for (Eigen::Index i = j + 1; i < data_.rows(); ++i) data_(j, i) = data_(i, j);
    }
  }

  Matrix data_;
};

/// Trace inner product <A, B>.
inline double inner(const Matrix& a, const Matrix& b) {
  return a.cwiseProduct(b).sum();
}

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

namespace detail {

// Unblocked right-looking Cholesky. Only used to locate the first failing
// pivot after the fast path rejected the matrix.
inline std::size_t failing_pivot(const Matrix& a) {
  const Eigen::Index n = a.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > 0.0)) return static_cast<std::size_t>(j);
    l(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
  }
  return static_cast<std::size_t>(n);
}

}  // namespace detail

/// Lower-triangular L with L Lᵀ = A. Throws NotPositiveDefinite(pivot) when
/// a pivot is not strictly positive.
inline Matrix cholesky(const Matrix& a) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite(detail::failing_pivot(a));
  // NaN entries slip through LLT's pivot test.
  Matrix l = llt.matrixL();
  if (!l.allFinite()) throw NotPositiveDefinite(detail::failing_pivot(a));
  return l;
}

inline Matrix cholesky(const SymMatrix& a) { return cholesky(a.dense()); }

struct EigenDecomposition {
  Vector values;   ///< ascending
  Matrix vectors;  ///< columns orthonormal, paired with `values`
};

inline EigenDecomposition sym_eig(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success) {
    throw NoConvergence("symmetric eigensolver hit its iteration cap (dim " +
                        std::to_string(a.rows()) + ")");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

inline EigenDecomposition sym_eig(const SymMatrix& a) { return sym_eig(a.dense()); }

/// Eigenvalues only, ascending.
inline Vector sym_eigenvalues(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NoConvergence("symmetric eigensolver hit its iteration cap (dim " +
                        std::to_string(a.rows()) + ")");
  }
  return solver.eigenvalues();
}

inline double lambda_min(const Matrix& a) { return sym_eigenvalues(a)(0); }

/// Solves A x = b for positive definite A via cholesky.
inline Vector solve_posdef(const Matrix& a, const Vector& b) {
  if (a.rows() != b.size()) throw DimensionMismatch("solve_posdef: size mismatch");
  Matrix l = cholesky(a);
  Vector x = l.triangularView<Eigen::Lower>().solve(b);
  l.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

inline Vector solve_posdef(const SymMatrix& a, const Vector& b) {
  return solve_posdef(a.dense(), b);
}

}  // namespace cardsdp::linalg
