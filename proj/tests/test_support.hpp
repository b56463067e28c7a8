#pragma once

#include "spdstats/spdstats.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

namespace spdstats::testing {

using Rng = std::mt19937_64;

inline Matrix gaussian_matrix(Rng& rng, int rows, int cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = n(rng);
  return m;
}

/// Haar-distributed orthogonal matrix; det +1 when `proper`.
inline Matrix random_orthogonal(Rng& rng, int k, bool proper = true) {
  Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(rng, k, k));
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < k; ++i) {
    if (r(i, i) < 0.0) q.col(i) = -q.col(i);
  }
  if (proper && q.determinant() < 0.0) q.col(0) = -q.col(0);
  return q;
}

/// V diag(exp(u)) V^T with u uniform in [-spread, spread].
inline SymMat random_pd(Rng& rng, int k, double spread = 1.0) {
  std::uniform_real_distribution<double> u(-spread, spread);
  Vector lambda(k);
  for (int i = 0; i < k; ++i) lambda(i) = std::exp(u(rng));
  const Matrix v = random_orthogonal(rng, k);
  return SymMat(v * lambda.asDiagonal() * v.transpose());
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// A^{1/2} (A^{-1/2} B A^{-1/2})^t A^{1/2}: the affine-invariant geodesic.
inline SymMat riemannian_geodesic(const SymMat& a, const SymMat& b, double t) {
  const Matrix half = mat_func(a, MatFunc::sqrt()).matrix();
  const Matrix inv_half = mat_func(a, MatFunc::pow(-0.5)).matrix();
  const SymMat inner(inv_half * b.matrix() * inv_half);
  return SymMat(half * mat_func(inner, MatFunc::pow(t)).matrix() * half);
}

inline PhantomSpec phantom_spec(PhantomKind kind) {
  PhantomSpec s;
  s.kind = kind;
  return s;
}

/// Scratch directory unique to the calling test.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("spdstats_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace spdstats::testing

#define EXPECT_MAT_NEAR(a, b, tol) EXPECT_LE(::spdstats::testing::max_abs_diff((a), (b)), (tol))
#define EXPECT_THROW_CODE(stmt, expected)                                  \
  do {                                                                     \
    try {                                                                  \
      stmt;                                                                \
      ADD_FAILURE() << "expected " << ::spdstats::to_string(expected);     \
    } catch (const ::spdstats::Error& e_) {                                \
      EXPECT_EQ(e_.code(), expected) << e_.what();                         \
    }                                                                      \
  } while (0)
