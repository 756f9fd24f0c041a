#pragma once

// The lifted semidefinite relaxation of the cardinality-constrained problem,
// written as a standard-form conic program over one PSD block and one
// nonnegative slack block:
//
//   min  <C, M> + c_sᵀ s
//   s.t. <A_k, M> + a_kᵀ s = b_k,   k = 0..m-1
//        M ⪰ 0,  s >= 0.
//
// The PSD block has dimension 2n+1 and is laid out as
//
//        [ 1  xᵀ  yᵀ ]        row/col 0          corner
//   M =  [ x  X   Zᵀ ]        rows 1..n          x block
//        [ y  Z   Y  ]        rows n+1..2n       y block
//
// so Z = M[y rows, x cols] and a rank-one lifting (1, x, y)(1, x, y)ᵀ has
// Z = y xᵀ.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cardsdp/errors.hpp"
#include "cardsdp/instance.hpp"
#include "cardsdp/linalg.hpp"

namespace cardsdp::sdp {

using linalg::Matrix;
using linalg::SymMatrix;
using linalg::Vector;

/// One upper-triangle entry (row <= col) of a sparse symmetric matrix.
/// Off-diagonal entries stand for both (row, col) and (col, row).
struct SymEntry {
  int row;
  int col;
  double value;
};

/// Sparse symmetric coefficient matrix over the PSD block.
struct SparseSym {
  std::vector<SymEntry> entries;

  void add(int r, int c, double v) {
    if (r > c) std::swap(r, c);
    entries.push_back({r, c, v});
  }

  /// <A, M> for symmetric M.
  double dot(const Matrix& m) const {
    double acc = 0.0;
    for (const auto& e : entries) {
      acc += (e.row == e.col ? 1.0 : 2.0) * e.value * m(e.row, e.col);
    }
    return acc;
  }

  /// M += alpha * A.
  void add_to(Matrix& m, double alpha) const {
    for (const auto& e : entries) {
      m(e.row, e.col) += alpha * e.value;
      if (e.row != e.col) m(e.col, e.row) += alpha * e.value;
    }
  }
};

struct SlackTerm {
  int index;
  double value;
};

struct Constraint {
  SparseSym psd;
  std::vector<SlackTerm> slack;
  double rhs = 0.0;
  std::string label;
};

struct ConicProblem {
  int psd_dim = 0;
  int slack_dim = 0;
  SymMatrix objective;              ///< C over the PSD block
  Vector slack_objective;           ///< c_s over the slack block
  std::vector<Constraint> constraints;

  int num_constraints() const noexcept { return static_cast<int>(constraints.size()); }

  Vector rhs() const {
    Vector b(num_constraints());
    for (int k = 0; k < num_constraints(); ++k) b(k) = constraints[k].rhs;
    return b;
  }

  /// A(M, s): the constraint left-hand sides.
  Vector apply(const Matrix& m, const Vector& s) const {
    Vector out(num_constraints());
    for (int k = 0; k < num_constraints(); ++k) {
      const auto& c = constraints[k];
      double v = c.psd.dot(m);
      for (const auto& t : c.slack) v += t.value * s(t.index);
      out(k) = v;
    }
    return out;
  }

  /// Adjoint of A applied to y: returns (Σ y_k A_k, Σ y_k a_k).
  std::pair<Matrix, Vector> adjoint(const Vector& y) const {
    Matrix m = Matrix::Zero(psd_dim, psd_dim);
    Vector s = Vector::Zero(slack_dim);
    for (int k = 0; k < num_constraints(); ++k) {
      const auto& c = constraints[k];
      c.psd.add_to(m, y(k));
      for (const auto& t : c.slack) s(t.index) += y(k) * t.value;
    }
    return {std::move(m), std::move(s)};
  }

  double objective_value(const Matrix& m, const Vector& s) const {
    return linalg::inner(objective.dense(), m) + slack_objective.dot(s);
  }

  /// Throws DimensionMismatch if any entry falls outside the blocks.
  void check_well_formed() const {
    if (objective.dim() != psd_dim) throw DimensionMismatch("objective dim != psd_dim");
    if (slack_objective.size() != slack_dim) {
      throw DimensionMismatch("slack objective length != slack_dim");
    }
    for (const auto& c : constraints) {
      for (const auto& e : c.psd.entries) {
        if (e.row < 0 || e.col >= psd_dim || e.row > e.col) {
          throw DimensionMismatch("constraint " + c.label + " has an entry outside the PSD block");
        }
      }
      for (const auto& t : c.slack) {
        if (t.index < 0 || t.index >= slack_dim) {
          throw DimensionMismatch("constraint " + c.label + " has a slack index out of range");
        }
      }
    }
  }
};

inline int x_index(int i) { return 1 + i; }
inline int y_index(int n, int i) { return 1 + n + i; }

/// Builds the relaxation. Constraint order (m = 4n+4):
///   0              M_00 = 1
///   1..n           diag(Z) = 0
///   n+1..2n        diag(Y) = y
///   2n+1           μᵀx - s_0 = ρ
///   2n+2           eᵀx + s_1 = 1
///   2n+3           eᵀy - s_2 = n - aleph
///   2n+4..3n+3     x_i - s_{3+i} = 0        (x >= 0)
///   3n+4..4n+3     x_i + s_{3+n+i} = u_i    (x <= u)
/// Row-0 entries carry value 1/2 because <A, M> counts both (0, j) and (j, 0).
inline ConicProblem build_sdp(const Instance& inst) {
  const int n = inst.n();
  ConicProblem p;
  p.psd_dim = 2 * n + 1;
  p.slack_dim = 2 * n + 3;
  Matrix c = Matrix::Zero(p.psd_dim, p.psd_dim);
  c.block(1, 1, n, n) = inst.Q().dense();
  p.objective = SymMatrix(c);
  p.slack_objective = Vector::Zero(p.slack_dim);
  p.constraints.reserve(static_cast<std::size_t>(4 * n + 4));

  {
    Constraint k;
    k.psd.add(0, 0, 1.0);
    k.rhs = 1.0;
    k.label = "corner";
    p.constraints.push_back(std::move(k));
  }
  for (int i = 0; i < n; ++i) {
    Constraint k;
    k.psd.add(x_index(i), y_index(n, i), 0.5);
    k.label = "diagZ[" + std::to_string(i) + "]";
    p.constraints.push_back(std::move(k));
  }
  for (int i = 0; i < n; ++i) {
    Constraint k;
    k.psd.add(y_index(n, i), y_index(n, i), 1.0);
    k.psd.add(0, y_index(n, i), -0.5);
    k.label = "diagY[" + std::to_string(i) + "]";
    p.constraints.push_back(std::move(k));
  }
  {
    Constraint k;
    for (int i = 0; i < n; ++i) k.psd.add(0, x_index(i), 0.5 * inst.mu()(i));
    k.slack.push_back({0, -1.0});
    k.rhs = inst.rho();
    k.label = "return";
    p.constraints.push_back(std::move(k));
  }
  {
    Constraint k;
    for (int i = 0; i < n; ++i) k.psd.add(0, x_index(i), 0.5);
    k.slack.push_back({1, 1.0});
    k.rhs = 1.0;
    k.label = "budget";
    p.constraints.push_back(std::move(k));
  }
  {
    Constraint k;
    for (int i = 0; i < n; ++i) k.psd.add(0, y_index(n, i), 0.5);
    k.slack.push_back({2, -1.0});
    k.rhs = static_cast<double>(n - inst.aleph());
    k.label = "cardinality";
    p.constraints.push_back(std::move(k));
  }
  for (int i = 0; i < n; ++i) {
    Constraint k;
    k.psd.add(0, x_index(i), 0.5);
    k.slack.push_back({3 + i, -1.0});
    k.label = "x_lower[" + std::to_string(i) + "]";
    p.constraints.push_back(std::move(k));
  }
  for (int i = 0; i < n; ++i) {
    Constraint k;
    k.psd.add(0, x_index(i), 0.5);
    k.slack.push_back({3 + n + i, 1.0});
    k.rhs = inst.u()(i);
    k.label = "x_upper[" + std::to_string(i) + "]";
    p.constraints.push_back(std::move(k));
  }
  return p;
}

/// The (x, y, X, Y, Z) pieces of a lifted (2n+1) matrix plus its spectrum.
struct LiftedPoint {
  Vector x;
  Vector y;
  SymMatrix X;
  SymMatrix Y;
  Matrix Z;  ///< M[y rows, x cols]
  double objective = 0.0;  ///< <Q, X>, filled by callers that know Q
  Vector eigenvalues;      ///< ascending, full (2n+1) spectrum
  int numerical_rank = 0;
};

/// Relative threshold for counting an eigenvalue as nonzero.
inline constexpr double kRankTolerance = 1e-6;

inline int numerical_rank(const Vector& ascending_eigenvalues, double rel_tol = kRankTolerance) {
  if (ascending_eigenvalues.size() == 0) return 0;
  const double lmax = ascending_eigenvalues(ascending_eigenvalues.size() - 1);
  if (lmax <= 0.0) return 0;
  return static_cast<int>((ascending_eigenvalues.array() > rel_tol * lmax).count());
}

inline LiftedPoint split_lifted(const SymMatrix& m, int n) {
  if (m.dim() != 2 * n + 1) {
    throw DimensionMismatch("lifted matrix must have dimension 2n+1 = " +
                            std::to_string(2 * n + 1));
  }
  if (std::abs(m(0, 0) - 1.0) > 1e-6) {
    throw CornerNotUnit("corner entry is " + std::to_string(m(0, 0)) + ", expected 1");
  }
  const Matrix& d = m.dense();
  LiftedPoint p;
  p.x = d.block(1, 0, n, 1);
  p.y = d.block(1 + n, 0, n, 1);
  p.X = SymMatrix(Matrix(d.block(1, 1, n, n)));
  p.Y = SymMatrix(Matrix(d.block(1 + n, 1 + n, n, n)));
  p.Z = d.block(1 + n, 1, n, n);
  p.eigenvalues = linalg::sym_eigenvalues(d);
  p.numerical_rank = numerical_rank(p.eigenvalues);
  return p;
}

/// Embeds (x, y, X, Y) with the coupling block Z = y xᵀ. With this choice
/// M - (1,x,y)(1,x,y)ᵀ = blockdiag(0, X - xxᵀ, Y - yyᵀ), so the result is
/// PSD iff both Schur complements are.
inline SymMatrix schur_embed(const Vector& x, const Vector& y, const SymMatrix& X,
                             const SymMatrix& Y) {
  const auto n = x.size();
  if (y.size() != n || X.dim() != n || Y.dim() != n) {
    throw DimensionMismatch("schur_embed: x, y, X, Y dimensions disagree");
  }
  Matrix m(2 * n + 1, 2 * n + 1);
  m(0, 0) = 1.0;
  m.block(0, 1, 1, n) = x.transpose();
  m.block(0, 1 + n, 1, n) = y.transpose();
  m.block(1, 0, n, 1) = x;
  m.block(1 + n, 0, n, 1) = y;
  m.block(1, 1, n, n) = X.dense();
  m.block(1 + n, 1 + n, n, n) = Y.dense();
  m.block(1 + n, 1, n, n) = y * x.transpose();
  m.block(1, 1 + n, n, n) = x * y.transpose();
  return SymMatrix(m);
}

// ---------------------------------------------------------------------------
// SDPA sparse export (.dat-s).
//
// SDPA solves  max <F_0, Y>  s.t. <F_k, Y> = c_k, Y ⪰ 0  (its "dual" form),
// so the problem is written with F_0 = -C, F_k = A_k, c_k = b_k: the SDPA
// objective value is the negated minimum. Block 1 is the PSD block
// (size 2n+1); block 2 is the diagonal slack block (size -(slack_dim)).
// Entry lines are "matno blkno i j value" with 1-based i <= j, emitted in
// order: F_0 block 1, F_0 block 2, then constraints k = 1..m in build order,
// each with its PSD entries followed by its slack entries. Values use
// %.17g so the file round-trips every double exactly.

inline void write_sdpa(const ConicProblem& p, std::ostream& out) {
  char buf[128];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "\"cardinality-constrained portfolio relaxation\"\n";
  out << p.num_constraints() << " = mDIM\n";
  out << (p.slack_dim > 0 ? 2 : 1) << " = nBLOCK\n";
  out << p.psd_dim;
  if (p.slack_dim > 0) out << " " << -p.slack_dim;
  out << " = bLOCKsTRUCT\n";
  for (int k = 0; k < p.num_constraints(); ++k) {
    out << (k ? " " : "") << num(p.constraints[k].rhs);
  }
  out << "\n";
  const Matrix& c = p.objective.dense();
  for (int i = 0; i < p.psd_dim; ++i) {
    for (int j = i; j < p.psd_dim; ++j) {
      if (c(i, j) != 0.0) out << "0 1 " << i + 1 << " " << j + 1 << " " << num(-c(i, j)) << "\n";
    }
  }
  for (int i = 0; i < p.slack_dim; ++i) {
    if (p.slack_objective(i) != 0.0) {
      out << "0 2 " << i + 1 << " " << i + 1 << " " << num(-p.slack_objective(i)) << "\n";
    }
  }
  for (int k = 0; k < p.num_constraints(); ++k) {
    const auto& con = p.constraints[k];
    for (const auto& e : con.psd.entries) {
      out << k + 1 << " 1 " << e.row + 1 << " " << e.col + 1 << " " << num(e.value) << "\n";
    }
    for (const auto& t : con.slack) {
      out << k + 1 << " 2 " << t.index + 1 << " " << t.index + 1 << " " << num(t.value) << "\n";
    }
  }
}

inline void write_sdpa(const ConicProblem& p, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_sdpa(p, out);
}

}  // namespace cardsdp::sdp
