#include "test_support.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace spdstats;
using namespace spdstats::testing;

TEST(SymMat, SymmetrizesAndValidatesShape) {
  Matrix m(2, 2);
  m << 1.0, 2.0, 4.0, 3.0;
  const SymMat s(m);
  EXPECT_DOUBLE_EQ(s(0, 1), 3.0);
  EXPECT_DOUBLE_EQ(s(1, 0), 3.0);
  EXPECT_THROW_CODE(SymMat(Matrix::Ones(2, 3)), ErrorCode::InvalidInput);
  EXPECT_THROW_CODE(SymMat(Matrix::Ones(1, 1)), ErrorCode::InvalidInput);
}

TEST(SymMat, UpperTriangleRoundTrip) {
  Rng rng(1);
  const SymMat s = random_pd(rng, 3);
  const auto u = s.upper();
  ASSERT_EQ(u.size(), 6u);
  EXPECT_EQ(SymMat::from_upper(3, u).matrix(), s.matrix());
  EXPECT_THROW_CODE(SymMat::from_upper(3, std::vector<double>(5, 0.0)), ErrorCode::InvalidInput);
}

TEST(SymEig, DiagonalMatrixSortedDescending) {
  const EigenPair e = sym_eig(SymMat::diagonal({1.0, 3.0, 2.0}));
  EXPECT_DOUBLE_EQ(e.values(0), 3.0);
  EXPECT_DOUBLE_EQ(e.values(1), 2.0);
  EXPECT_DOUBLE_EQ(e.values(2), 1.0);
  EXPECT_DOUBLE_EQ(e.vectors(1, 0), 1.0);
}

TEST(SymEig, ReconstructsRandomMatrices) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + trial % 5;
    const Matrix g = gaussian_matrix(rng, k, k);
    const SymMat s(g + g.transpose());
    const EigenPair e = sym_eig(s);
    EXPECT_MAT_NEAR(reconstruct(e.vectors, e.values).matrix(), s.matrix(), 1e-12);
    EXPECT_MAT_NEAR(e.vectors.transpose() * e.vectors, Matrix::Identity(k, k), 1e-12);
    for (int i = 1; i < k; ++i) EXPECT_GE(e.values(i - 1), e.values(i));
  }
}

TEST(SymEig, SignConvention) {
  Rng rng(3);
  const SymMat s = random_pd(rng, 4);
  const EigenPair e = sym_eig(s);
  for (int c = 0; c < 4; ++c) {
    int first = 0;
    while (std::abs(e.vectors(first, c)) <= 1e-12) ++first;
    EXPECT_GT(e.vectors(first, c), 0.0);
  }
  // Same input, same output.
  EXPECT_EQ(sym_eig(s).vectors, e.vectors);
}

TEST(SymEig, AgreesWithEigenSolver) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const SymMat s = random_pd(rng, 3, 3.0);
    Eigen::SelfAdjointEigenSolver<Matrix> ref(s.matrix());
    const Vector mine = sym_eig(s).values;
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(mine(i), ref.eigenvalues()(2 - i), 1e-12 * mine(0));
  }
}

TEST(MatFunc, LogExpInverse) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const SymMat s = random_pd(rng, 3, 2.0);
    EXPECT_MAT_NEAR(mat_func(mat_func(s, MatFunc::log()), MatFunc::exp()).matrix(), s.matrix(), 1e-10);
  }
}

TEST(MatFunc, PowersAgreeWithProducts) {
  Rng rng(6);
  const SymMat s = random_pd(rng, 3);
  const Matrix r = mat_func(s, MatFunc::sqrt()).matrix();
  EXPECT_MAT_NEAR(r * r, s.matrix(), 1e-12);
  EXPECT_MAT_NEAR(mat_func(s, MatFunc::pow(-1.0)).matrix() * s.matrix(), Matrix::Identity(3, 3), 1e-11);
  EXPECT_MAT_NEAR(mat_func(s, MatFunc::pow(2.0)).matrix(), s.matrix() * s.matrix(), 1e-11);
}

TEST(MatFunc, DomainErrors) {
  const SymMat singular = SymMat::diagonal({1.0, 0.0});
  EXPECT_THROW_CODE(mat_func(singular, MatFunc::log()), ErrorCode::RankDeficient);
  EXPECT_THROW_CODE(mat_func(singular, MatFunc::pow(-0.5)), ErrorCode::RankDeficient);
  EXPECT_THROW_CODE(mat_func(SymMat::diagonal({1.0, -0.5}), MatFunc::sqrt()), ErrorCode::NotPSD);
  EXPECT_THROW_CODE(mat_func(SymMat::identity(2), MatFunc::pow(0.0)), ErrorCode::InvalidInput);
  // sqrt of a PSD matrix with a zero eigenvalue is fine.
  EXPECT_MAT_NEAR(mat_func(singular, MatFunc::sqrt()).matrix(), singular.matrix(), 0.0);
}

TEST(Cholesky, FactorsPositiveDefinite) {
  Rng rng(7);
  for (int k = 2; k <= 5; ++k) {
    const SymMat s = random_pd(rng, k);
    const Matrix l = cholesky_lower(s).matrix();
    EXPECT_MAT_NEAR(l * l.transpose(), s.matrix(), 1e-12);
    for (int i = 0; i < k; ++i) {
      EXPECT_GT(l(i, i), 0.0);
      for (int j = i + 1; j < k; ++j) EXPECT_EQ(l(i, j), 0.0);
    }
  }
  EXPECT_THROW_CODE(cholesky_lower(SymMat::diagonal({1.0, 0.0})), ErrorCode::RankDeficient);
}

TEST(Cholesky, SemidefiniteVariant) {
  EXPECT_EQ(cholesky_semidefinite(SymMat::zero(3)).matrix(), Matrix::Zero(3, 3));
  Vector v(3);
  v << 1.0, 2.0, -1.0;
  const SymMat rank1(v * v.transpose());
  const Matrix l = cholesky_semidefinite(rank1).matrix();
  EXPECT_MAT_NEAR(l * l.transpose(), rank1.matrix(), 1e-12);
  EXPECT_THROW_CODE(cholesky_semidefinite(SymMat::diagonal({1.0, -1.0})), ErrorCode::NotPSD);
}

TEST(FactorPsd, ReproducesMatrix) {
  Vector v(3);
  v << 0.0, 1.0, 2.0;
  for (const SymMat& s : {SymMat::diagonal({2.0, 1.0, 0.5}), SymMat(v * v.transpose()), SymMat::zero(3)}) {
    const Matrix q = factor_psd(s);
    EXPECT_MAT_NEAR(q * q.transpose(), s.matrix(), 1e-12);
  }
}

// Brute-force search over all 2 x 2 rotations and reflections.
TEST(Opa, MatchesAngleGridOracle) {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = gaussian_matrix(rng, 2, 2);
    const Matrix b = gaussian_matrix(rng, 2, 2);
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 200000; ++i) {
      const double th = 2.0 * std::numbers::pi * i / 200000.0;
      for (double sgn : {1.0, -1.0}) {
        Matrix r(2, 2);
        r << std::cos(th), -sgn * std::sin(th), std::sin(th), sgn * std::cos(th);
        best = std::min(best, (a - b * r).norm());
      }
    }
    const Matrix r = opa_rotation(a, b).matrix();
    EXPECT_MAT_NEAR(r.transpose() * r, Matrix::Identity(2, 2), 1e-12);
    EXPECT_NEAR((a - b * r).norm(), best, 1e-8);
    EXPECT_LE((a - b * r).norm(), best + 1e-12);
  }
}

TEST(Opa, RecoversKnownRotation) {
  Rng rng(9);
  const Matrix b = gaussian_matrix(rng, 4, 4);
  const Matrix r = random_orthogonal(rng, 4, false);
  EXPECT_MAT_NEAR(opa_rotation(b * r, b).matrix(), r, 1e-10);
  EXPECT_THROW_CODE(opa_rotation(Matrix::Identity(2, 2), Matrix::Identity(3, 3)), ErrorCode::InvalidInput);
}

TEST(Opa, ProcrustesTraceIsOptimalInnerProduct) {
  Rng rng(10);
  const Matrix a = gaussian_matrix(rng, 3, 3);
  const Matrix b = gaussian_matrix(rng, 3, 3);
  const Matrix r = opa_rotation(a, b).matrix();
  EXPECT_NEAR(procrustes_trace(a, b), (r.transpose() * b.transpose() * a).trace(), 1e-12);
}
