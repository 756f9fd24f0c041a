#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace cardsdp;
using namespace cardsdp::linalg;
using testing_support::random_matrix;
using testing_support::random_vector;

TEST(SymMatrix, LowerTriangleIsAuthoritative) {
  SymMatrix a(3);
  a.set(0, 2, 5.0);
  EXPECT_EQ(a(2, 0), 5.0);
  EXPECT_EQ(a(0, 2), 5.0);
  EXPECT_EQ(a.dense(), a.dense().transpose());
}

TEST(Cholesky, Identity) {
  EXPECT_TRUE(cholesky(Matrix::Identity(3, 3)).isApprox(Matrix::Identity(3, 3)));
}

TEST(Cholesky, HandChecked2x2) {
  Matrix a(2, 2);
  a << 4, 2, 2, 3;
  const Matrix l = cholesky(a);
  EXPECT_NEAR(l(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(l(1, 0), 1.0, 1e-15);
  EXPECT_NEAR(l(1, 1), std::sqrt(2.0), 1e-15);
  EXPECT_EQ(l(0, 1), 0.0);
}

TEST(Cholesky, IndefiniteReportsPivot) {
  Matrix a(2, 2);
  a << 1, 2, 2, 1;
  try {
    cholesky(a);
    FAIL() << "expected NotPositiveDefinite";
  } catch (const NotPositiveDefinite& e) {
    EXPECT_EQ(e.pivot(), 1u);
  }
}

TEST(Cholesky, ReconstructsRandomPositiveDefinite) {
  std::mt19937_64 rng(11);
  for (int n : {1, 5, 20, 60}) {
    const Matrix g = random_matrix(rng, n, n);
    const Matrix a = g.transpose() * g + Matrix::Identity(n, n);
    const Matrix l = cholesky(a);
    EXPECT_LE((l * l.transpose() - a).norm(), 1e-10 * (1.0 + a.norm())) << "n=" << n;
    EXPECT_TRUE(l.isLowerTriangular());
  }
}

TEST(SymEig, Diagonal) {
  const auto e = sym_eig(Vector(Eigen::Vector3d(3, 1, 2)).asDiagonal().toDenseMatrix());
  EXPECT_NEAR(e.values(0), 1.0, 1e-15);
  EXPECT_NEAR(e.values(1), 2.0, 1e-15);
  EXPECT_NEAR(e.values(2), 3.0, 1e-15);
}

TEST(SymEig, Swap) {
  Matrix a(2, 2);
  a << 0, 1, 1, 0;
  const Vector v = sym_eigenvalues(a);
  EXPECT_NEAR(v(0), -1.0, 1e-15);
  EXPECT_NEAR(v(1), 1.0, 1e-15);
}

TEST(SymEig, GramMatrixIsPsd) {
  std::mt19937_64 rng(5);
  const Matrix g = random_matrix(rng, 8, 8);
  EXPECT_GE(lambda_min(g.transpose() * g), -1e-12);
}

TEST(SymEig, PairsOrthonormalityAndReconstruction) {
  std::mt19937_64 rng(7);
  for (int n : {2, 9, 41, 201}) {
    const Matrix g = random_matrix(rng, n, n);
    const Matrix a = symmetrize(g);
    const auto e = sym_eig(a);
    const double scale = 1.0 + a.norm();
    for (int k = 0; k < n; ++k) {
      EXPECT_LE((a * e.vectors.col(k) - e.values(k) * e.vectors.col(k)).norm(), 1e-9 * scale);
    }
    EXPECT_LE((e.vectors.transpose() * e.vectors - Matrix::Identity(n, n)).cwiseAbs().maxCoeff(),
              1e-10);
    EXPECT_LE((e.vectors * e.values.asDiagonal() * e.vectors.transpose() - a).norm(), 1e-8 * scale);
    for (int k = 1; k < n; ++k) EXPECT_LE(e.values(k - 1), e.values(k));
  }
}

TEST(SolvePosdef, IdentityAndScaling) {
  const Vector b = Eigen::Vector3d(1, -2, 3);
  EXPECT_TRUE(solve_posdef(Matrix::Identity(3, 3), b).isApprox(b));
  EXPECT_TRUE(solve_posdef(Matrix(2.0 * Matrix::Identity(3, 3)), b).isApprox(b / 2));
}

TEST(SolvePosdef, RecoversChosenSolution) {
  std::mt19937_64 rng(3);
  const Matrix g = random_matrix(rng, 10, 10);
  const Matrix a = g.transpose() * g + 0.1 * Matrix::Identity(10, 10);
  const Vector xstar = random_vector(rng, 10);
  const Vector b = a * xstar;
  const Vector x = solve_posdef(a, b);
  EXPECT_LE((a * x - b).norm(), 1e-9 * (a.norm() * x.norm() + b.norm()));
}

TEST(SolvePosdef, PropagatesNotPositiveDefinite) {
  Matrix a(2, 2);
  a << 1, 2, 2, 1;
  EXPECT_THROW(solve_posdef(a, Vector::Ones(2)), NotPositiveDefinite);
}
