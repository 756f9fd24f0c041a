#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "support.hpp"

using namespace cardsdp;
using namespace cardsdp::sdp;
using linalg::Matrix;
using linalg::SymMatrix;
using linalg::Vector;
using testing_support::random_matrix;
using testing_support::random_vector;
using testing_support::unit_instance;

namespace {

Matrix rank_one(const Vector& x, const Vector& y) {
  Vector v(1 + x.size() + y.size());
  v << 1.0, x, y;
  return v * v.transpose();
}

/// Slacks that make a rank-one lifting of (x, y) satisfy every constraint,
/// computed from the model (not from the builder).
Vector model_slacks(const Instance& inst, const Vector& x, const Vector& y) {
  const int n = inst.n();
  Vector s(2 * n + 3);
  s(0) = inst.mu().dot(x) - inst.rho();
  s(1) = 1.0 - x.sum();
  s(2) = y.sum() - (n - inst.aleph());
  s.segment(3, n) = x;
  s.segment(3 + n, n) = inst.u() - x;
  return s;
}

}  // namespace

TEST(BuildSdp, CountsForThreeAssets) {
  const ConicProblem p = build_sdp(unit_instance(3, 0.5, 3));
  EXPECT_EQ(p.psd_dim, 7);
  EXPECT_EQ(p.slack_dim, 9);
  EXPECT_EQ(p.num_constraints(), 16);
  EXPECT_NO_THROW(p.check_well_formed());
}

TEST(BuildSdp, CountFormulaHoldsForAllSizes) {
  for (int n = 1; n <= 25; ++n) {
    GenSpec spec;
    spec.n = n;
    spec.seed = static_cast<std::uint64_t>(n);
    const ConicProblem p = build_sdp(generate_instance(spec));
    EXPECT_EQ(p.psd_dim, 2 * n + 1);
    EXPECT_EQ(p.slack_dim, 2 * n + 3);
    EXPECT_EQ(p.num_constraints(), 4 * n + 4);
  }
}

TEST(BuildSdp, CoefficientsStoredInUpperTriangle) {
  const ConicProblem p = build_sdp(unit_instance(4, 0.5, 2));
  EXPECT_EQ(p.objective.dense(), p.objective.dense().transpose());
  for (const auto& c : p.constraints) {
    for (const auto& e : c.psd.entries) EXPECT_LE(e.row, e.col);
  }
}

TEST(BuildSdp, FeasibleRankOnePointSatisfiesEveryConstraint) {
  const Instance inst = unit_instance(3, 0.5, 1);
  const Vector x = Eigen::Vector3d(0.5, 0.0, 0.0);
  const Vector y = Eigen::Vector3d(0.0, 1.0, 1.0);
  const ConicProblem p = build_sdp(inst);
  const Matrix m = rank_one(x, y);
  const Vector s = model_slacks(inst, x, y);
  ASSERT_GE(s.minCoeff(), 0.0);
  EXPECT_LE((p.apply(m, s) - p.rhs()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(p.objective_value(m, s), inst.risk(x), 1e-15);
}

TEST(BuildSdp, ObjectiveMatchesRiskOnGeneratedPoints) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    GenSpec spec;
    spec.n = 6;
    spec.seed = 40 + trial;
    const Instance inst = generate_instance(spec);
    Vector x = Vector::Zero(6), y = Vector::Ones(6);
    for (int i = 0; i < 6; ++i) {
      if (unif(rng) < 0.5) {
        x(i) = unif(rng) * inst.u()(i) / 6.0;
        y(i) = 0.0;
      }
    }
    EXPECT_NEAR(build_sdp(inst).objective_value(rank_one(x, y), Vector::Zero(15)),
                inst.risk(x), 1e-12 * (1.0 + inst.risk(x)));
  }
}

TEST(BuildSdp, ObjectiveIgnoresYAndZBlocks) {
  GenSpec spec;
  spec.n = 5;
  const Instance inst = generate_instance(spec);
  const ConicProblem p = build_sdp(inst);
  std::mt19937_64 rng(2);
  Matrix m = linalg::symmetrize(random_matrix(rng, 11, 11));
  const double before = p.objective_value(m, Vector::Zero(p.slack_dim));
  Matrix perturbed = m;
  const Matrix yz = random_matrix(rng, 5, 11);
  perturbed.block(6, 0, 5, 11) += yz;
  perturbed.block(0, 6, 11, 5) += yz.transpose();
  EXPECT_DOUBLE_EQ(p.objective_value(perturbed, Vector::Zero(p.slack_dim)), before);
}

TEST(SplitLifted, RankOneRecovery) {
  const Vector x = Eigen::Vector3d(0.1, 0.2, 0.3);
  const Vector y = Eigen::Vector3d(0.0, 1.0, 0.5);
  const LiftedPoint lp = split_lifted(SymMatrix(rank_one(x, y)), 3);
  EXPECT_LE((lp.x - x).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((lp.y - y).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(lp.numerical_rank, 1);
  EXPECT_EQ(lp.eigenvalues.size(), 7);
  EXPECT_TRUE(lp.Z.isApprox(y * x.transpose()));
}

TEST(SplitLifted, PerturbationRaisesRank) {
  const Vector x = Eigen::Vector3d(0.1, 0.2, 0.3);
  const Vector y = Eigen::Vector3d(0.0, 1.0, 0.5);
  Vector v(7);
  v << 1.0, x, y;
  // Unit vector orthogonal to v.
  Vector w = Vector::Zero(7);
  w(1) = v(2);
  w(2) = -v(1);
  w.normalize();
  const Matrix m = v * v.transpose() + 1e-3 * w * w.transpose();
  EXPECT_GE(split_lifted(SymMatrix(m), 3).numerical_rank, 2);
}

TEST(SplitLifted, Errors) {
  Matrix m = rank_one(Vector::Zero(2), Vector::Zero(2));
  EXPECT_THROW(split_lifted(SymMatrix(m), 3), DimensionMismatch);
  m(0, 0) = 1.01;
  EXPECT_THROW(split_lifted(SymMatrix(m), 2), CornerNotUnit);
}

TEST(SchurEmbed, ZeroPoint) {
  const SymMatrix m = schur_embed(Vector::Zero(3), Vector::Zero(3), SymMatrix(3), SymMatrix(3));
  Matrix expected = Matrix::Zero(7, 7);
  expected(0, 0) = 1.0;
  EXPECT_EQ(m.dense(), expected);
  EXPECT_EQ(numerical_rank(linalg::sym_eigenvalues(m.dense())), 1);
}

TEST(SchurEmbed, ExactLiftingIsRankOne) {
  const Vector x = Eigen::Vector3d(0.3, -0.2, 0.5);
  const Vector y = Eigen::Vector3d(1.0, 0.0, 0.25);
  const SymMatrix m = schur_embed(x, y, SymMatrix(Matrix(x * x.transpose())),
                                  SymMatrix(Matrix(y * y.transpose())));
  EXPECT_LE((m.dense() - rank_one(x, y)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SchurEmbed, IdentityExcessIsPsd) {
  const Vector x = Eigen::Vector3d(0.3, -0.2, 0.5);
  const Vector y = Eigen::Vector3d(1.0, 0.0, 0.25);
  const SymMatrix m = schur_embed(x, y, SymMatrix(Matrix(x * x.transpose() + Matrix::Identity(3, 3))),
                                  SymMatrix(Matrix(y * y.transpose())));
  EXPECT_GE(linalg::lambda_min(m.dense()), -1e-12);
}

TEST(SchurEmbed, DimensionMismatch) {
  EXPECT_THROW(schur_embed(Vector::Zero(3), Vector::Zero(2), SymMatrix(3), SymMatrix(3)),
               DimensionMismatch);
}

// PSD iff both Schur complements are PSD.
TEST(SchurEmbed, EquivalenceProperty) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> dim(1, 10);
  for (int draw = 0; draw < 150; ++draw) {
    const int n = dim(rng);
    const Vector x = random_vector(rng, n);
    const Vector y = random_vector(rng, n);
    const Matrix g1 = random_matrix(rng, n, n), g2 = random_matrix(rng, n, n);
    const Matrix p1 = g1 * g1.transpose(), p2 = g2 * g2.transpose();
    const SymMatrix good = schur_embed(x, y, SymMatrix(Matrix(x * x.transpose() + p1)),
                                       SymMatrix(Matrix(y * y.transpose() + p2)));
    const Vector ev = linalg::sym_eigenvalues(good.dense());
    EXPECT_GE(ev(0), -1e-9 * (1.0 + ev(n * 2)));

    // Push one eigenvalue of P1 negative.
    const auto e1 = linalg::sym_eig(p1);
    const Matrix bad_p1 = p1 - (e1.values(0) + 0.5) * e1.vectors.col(0) * e1.vectors.col(0).transpose();
    const SymMatrix bad = schur_embed(x, y, SymMatrix(Matrix(x * x.transpose() + bad_p1)),
                                      SymMatrix(Matrix(y * y.transpose() + p2)));
    const Vector evb = linalg::sym_eigenvalues(bad.dense());
    EXPECT_LT(evb(0), -1e-9 * (1.0 + evb(n * 2)));
  }
}

namespace {

/// Independent reader for the SDPA sparse format: returns the data matrices
/// as full symmetric blocks F_k (k = 0..m) and the right-hand side c.
struct SdpaData {
  int m = 0;
  std::vector<int> blocks;
  Vector c;
  std::vector<std::vector<Matrix>> f;  // f[k][block]
};

SdpaData read_sdpa(std::istream& in) {
  SdpaData d;
  std::string line;
  std::getline(in, line);  // title
  std::getline(in, line);
  d.m = std::stoi(line);
  std::getline(in, line);
  const int nblock = std::stoi(line);
  std::getline(in, line);
  std::istringstream bs(line);
  for (int b = 0; b < nblock; ++b) {
    int v;
    bs >> v;
    d.blocks.push_back(std::abs(v));
  }
  d.c.resize(d.m);
  for (int k = 0; k < d.m; ++k) in >> d.c(k);
  d.f.assign(d.m + 1, {});
  for (auto& fk : d.f) {
    for (int sz : d.blocks) fk.push_back(Matrix::Zero(sz, sz));
  }
  int k, b, i, j;
  double v;
  while (in >> k >> b >> i >> j >> v) {
    d.f[k][b - 1](i - 1, j - 1) = v;
    d.f[k][b - 1](j - 1, i - 1) = v;
  }
  return d;
}

}  // namespace

TEST(WriteSdpa, ReadsBackAsTheSameProblem) {
  GenSpec spec;
  spec.n = 4;
  spec.aleph = 2;
  const Instance inst = generate_instance(spec);
  const ConicProblem p = build_sdp(inst);
  std::stringstream ss;
  write_sdpa(p, ss);
  const SdpaData d = read_sdpa(ss);
  ASSERT_EQ(d.m, p.num_constraints());
  ASSERT_EQ(d.blocks, (std::vector<int>{9, 11}));
  EXPECT_EQ(d.c, p.rhs());

  std::mt19937_64 rng(8);
  const Matrix mm = linalg::symmetrize(random_matrix(rng, 9, 9));
  const Vector s = random_vector(rng, 11);
  const Matrix sd = s.asDiagonal();
  const Vector applied = p.apply(mm, s);
  for (int k = 1; k <= d.m; ++k) {
    const double val = linalg::inner(d.f[k][0], mm) + linalg::inner(d.f[k][1], sd);
    EXPECT_NEAR(val, applied(k - 1), 1e-12) << p.constraints[k - 1].label;
  }
  const double obj = -(linalg::inner(d.f[0][0], mm) + linalg::inner(d.f[0][1], sd));
  EXPECT_NEAR(obj, p.objective_value(mm, s), 1e-12);
}

TEST(WriteSdpa, WritesFile) {
  const auto path = std::filesystem::temp_directory_path() / "cardsdp_test.dat-s";
  write_sdpa(build_sdp(unit_instance(3, 0.5, 1)), path);
  std::ifstream in(path);
  const SdpaData d = read_sdpa(in);
  EXPECT_EQ(d.m, 16);
  std::filesystem::remove(path);
}

// Solved relaxations respect the lifted-point invariants, including the
// implied bound 0 <= y <= 1 that the model does not state.
TEST(LiftedPoint, InvariantsOfSolvedRelaxations) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    GenSpec spec;
    spec.n = 6 + static_cast<int>(seed % 3);
    spec.seed = seed;
    spec.aleph = 1 + static_cast<int>(seed % 3);
    const Instance inst = generate_instance(spec);
    const auto sol = ipm::solve(build_sdp(inst));
    ASSERT_EQ(sol.status, ipm::Status::Optimal);
    const LiftedPoint lp = split_lifted(sol.M, inst.n());
    const double lmax = lp.eigenvalues(lp.eigenvalues.size() - 1);
    EXPECT_GE(lp.eigenvalues(0), -1e-7 * (1.0 + lmax));
    for (int i = 0; i < inst.n(); ++i) {
      EXPECT_LE(std::abs(lp.Z(i, i)), 1e-6);
      EXPECT_LE(std::abs(lp.Y(i, i) - lp.y(i)), 1e-6);
      EXPECT_GE(lp.y(i), -1e-7);
      EXPECT_LE(lp.y(i), 1.0 + 1e-7);
    }
    EXPECT_GE(linalg::lambda_min(lp.X.dense() - lp.x * lp.x.transpose()), -1e-7);
    EXPECT_GE(linalg::lambda_min(lp.Y.dense() - lp.y * lp.y.transpose()), -1e-7);
  }
}
