#pragma once
// Dense symmetric-matrix primitives: cyclic Jacobi eigendecomposition,
// spectral matrix functions, Cholesky factors and the orthogonal Procrustes
// rotation. Everything here is a pure function of its arguments.

#include "spdstats/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <initializer_list>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace spdstats {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense symmetric k x k matrix (k >= 2). Symmetry is exact: the stored
/// matrix is the average of its argument and that argument's transpose.
class SymMat {
 public:
  explicit SymMat(const Matrix& m) {
    if (m.rows() != m.cols()) fail(ErrorCode::InvalidInput, "SymMat must be square");
    if (m.rows() < 2) fail(ErrorCode::InvalidInput, "SymMat dimension must be at least 2");
    m_ = m;
    const auto k = m.rows();
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = i + 1; j < k; ++j) {
        const double v = 0.5 * (m(i, j) + m(j, i));
        m_(i, j) = v;
        m_(j, i) = v;
      }
    }
  }

  static SymMat identity(int k) { return SymMat(Matrix::Identity(k, k)); }
  static SymMat zero(int k) { return SymMat(Matrix::Zero(k, k)); }
  static SymMat diagonal(std::initializer_list<double> d) {
    Vector v(static_cast<Eigen::Index>(d.size()));
    Eigen::Index i = 0;
    for (double x : d) v(i++) = x;
    return diagonal(v);
  }
  static SymMat diagonal(const Vector& d) { return SymMat(Matrix(d.asDiagonal())); }

  /// Upper triangle in row-major order, length k(k+1)/2.
  static SymMat from_upper(int k, std::span<const double> upper) {
    if (k < 2) fail(ErrorCode::InvalidInput, "SymMat dimension must be at least 2");
    const auto expected = static_cast<std::size_t>(k * (k + 1) / 2);
    if (upper.size() != expected) {
      fail(ErrorCode::InvalidInput, "expected " + std::to_string(expected) +
                                        " upper-triangle entries, got " +
                                        std::to_string(upper.size()));
    }
    Matrix m(k, k);
    std::size_t n = 0;
    for (int i = 0; i < k; ++i)
      for (int j = i; j < k; ++j) m(i, j) = m(j, i) = upper[n++];
    return SymMat(m);
  }

  std::vector<double> upper() const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(dim() * (dim() + 1) / 2));
    for (int i = 0; i < dim(); ++i)
      for (int j = i; j < dim(); ++j) out.push_back(m_(i, j));
    return out;
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }
  bool all_finite() const { return m_.allFinite(); }

 private:
  Matrix m_;
};

inline SymMat operator*(double a, const SymMat& s) { return SymMat(a * s.matrix()); }

/// Conjugation V S V^T.
inline SymMat congruence(const Matrix& v, const SymMat& s) {
  return SymMat(v * s.matrix() * v.transpose());
}

struct EigenPair {
  Vector values;   // descending
  Matrix vectors;  // columns are unit eigenvectors
};

/// Lower-triangular factor (entries above the diagonal are exactly zero).
class LowerTriangular {
 public:
  explicit LowerTriangular(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) fail(ErrorCode::InvalidInput, "factor must be square");
    m_.triangularView<Eigen::StrictlyUpper>().setZero();
  }
  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }

 private:
  Matrix m_;
};

/// Element of O(k); reflections allowed.
class OrthogonalMat {
 public:
  explicit OrthogonalMat(Matrix r) : r_(std::move(r)) {}
  static OrthogonalMat identity(int k) { return OrthogonalMat(Matrix::Identity(k, k)); }
  int dim() const { return static_cast<int>(r_.rows()); }
  const Matrix& matrix() const { return r_; }
  double det() const { return r_.determinant(); }

 private:
  Matrix r_;
};

/// Numerical rank threshold: 1e-10 * max(1, lambda_max).
inline double rank_tol(double lambda_max) { return 1e-10 * std::max(1.0, lambda_max); }

namespace detail {

inline double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = i + 1; j < a.cols(); ++j) s += 2.0 * a(i, j) * a(i, j);
  return std::sqrt(s);
}

// Flip each column so its first component with magnitude above 1e-12 is positive.
inline void canonicalize_signs(Matrix& v) {
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      if (std::abs(v(r, c)) > 1e-12) {
        if (v(r, c) < 0.0) v.col(c) *= -1.0;
        break;
      }
    }
  }
}

}  // namespace detail

/// Cyclic Jacobi eigendecomposition. Sweeps until the off-diagonal Frobenius
/// norm drops below 1e-13 * ||S||_F (max 50 sweeps). Eigenvalues come out
/// descending; equal eigenvalues keep sweep order (stable sort).
inline EigenPair sym_eig(const SymMat& s) {
  if (!s.all_finite()) fail(ErrorCode::InvalidInput, "non-finite matrix entries");
  const int k = s.dim();
  Matrix a = s.matrix();
  Matrix v = Matrix::Identity(k, k);
  const double scale = a.norm();

  constexpr int kMaxSweeps = 50;
  int sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    const double off = detail::off_diagonal_norm(a);
    if (off == 0.0 || off <= 1e-13 * scale) break;
    for (int p = 0; p < k - 1; ++p) {
      for (int q = p + 1; q < k; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Symmetric Schur decomposition of the (p,q) 2x2 block.
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * c;
        for (int r = 0; r < k; ++r) {
          const double arp = a(r, p);
          const double arq = a(r, q);
          a(r, p) = c * arp - sn * arq;
          a(r, q) = sn * arp + c * arq;
        }
        for (int r = 0; r < k; ++r) {
          const double apr = a(p, r);
          const double aqr = a(q, r);
          a(p, r) = c * apr - sn * aqr;
          a(q, r) = sn * apr + c * aqr;
        }
        a(p, q) = a(q, p) = 0.0;
        for (int r = 0; r < k; ++r) {
          const double vrp = v(r, p);
          const double vrq = v(r, q);
          v(r, p) = c * vrp - sn * vrq;
          v(r, q) = sn * vrp + c * vrq;
        }
      }
    }
  }
  if (sweep == kMaxSweeps && detail::off_diagonal_norm(a) > 1e-13 * scale) {
    throw NonConvergenceError("Jacobi eigendecomposition did not converge", a,
                              detail::off_diagonal_norm(a));
  }

  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return a(i, i) > a(j, j); });

  EigenPair out{Vector(k), Matrix(k, k)};
  for (int i = 0; i < k; ++i) {
    out.values(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  detail::canonicalize_signs(out.vectors);
  return out;
}

inline SymMat reconstruct(const Matrix& vectors, const Vector& values) {
  return SymMat(vectors * values.asDiagonal() * vectors.transpose());
}

/// Scalar function applied through the spectral decomposition.
struct MatFunc {
  enum class Kind { Log, Exp, Sqrt, Pow };
  Kind kind;
  double alpha = 1.0;

  static MatFunc log() { return {Kind::Log, 0.0}; }
  static MatFunc exp() { return {Kind::Exp, 0.0}; }
  static MatFunc sqrt() { return {Kind::Sqrt, 0.5}; }
  static MatFunc pow(double a) { return {Kind::Pow, a}; }
};

namespace detail {

inline Vector apply_spectral(const Vector& lambda, MatFunc f) {
  const double tol = rank_tol(lambda.maxCoeff());
  Vector out(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    const double l = lambda(i);
    switch (f.kind) {
      case MatFunc::Kind::Exp:
        out(i) = std::exp(l);
        break;
      case MatFunc::Kind::Log:
        if (l <= tol) fail(ErrorCode::RankDeficient, "log of a singular matrix", l);
        out(i) = std::log(l);
        break;
      case MatFunc::Kind::Sqrt:
      case MatFunc::Kind::Pow: {
        const double a = f.kind == MatFunc::Kind::Sqrt ? 0.5 : f.alpha;
        if (a == 0.0) fail(ErrorCode::InvalidInput, "matrix power with exponent 0");
        if (a > 0.0) {
          if (l < -tol) fail(ErrorCode::NotPSD, "fractional power of an indefinite matrix", l);
          out(i) = l <= 0.0 ? 0.0 : (a == 0.5 ? std::sqrt(l) : std::pow(l, a));
        } else {
          if (l <= tol) fail(ErrorCode::RankDeficient, "negative power of a singular matrix", l);
          out(i) = std::pow(l, a);
        }
        break;
      }
    }
  }
  return out;
}

}  // namespace detail

inline SymMat mat_func(const SymMat& s, MatFunc f) {
  const EigenPair e = sym_eig(s);
  return reconstruct(e.vectors, detail::apply_spectral(e.values, f));
}

/// Cholesky factor with strictly positive diagonal. Throws RankDeficient when
/// a pivot falls to rank_tol or below.
inline LowerTriangular cholesky_lower(const SymMat& s) {
  const int k = s.dim();
  const double tol = rank_tol(sym_eig(s).values(0));
  const Matrix& a = s.matrix();
  Matrix l = Matrix::Zero(k, k);
  for (int j = 0; j < k; ++j) {
    double d = a(j, j);
    for (int m = 0; m < j; ++m) d -= l(j, m) * l(j, m);
    if (d <= tol) fail(ErrorCode::RankDeficient, "Cholesky pivot below rank tolerance", d);
    l(j, j) = std::sqrt(d);
    for (int i = j + 1; i < k; ++i) {
      double x = a(i, j);
      for (int m = 0; m < j; ++m) x -= l(i, m) * l(j, m);
      l(i, j) = x / l(j, j);
    }
  }
  return LowerTriangular(std::move(l));
}

/// Cholesky without pivoting that tolerates semi-definite input: a pivot at or
/// below rank_tol zeroes its whole column. Continuous extension of chol() to
/// the PSD boundary (the zero matrix maps to zero).
inline LowerTriangular cholesky_semidefinite(const SymMat& s) {
  const int k = s.dim();
  const double tol = rank_tol(sym_eig(s).values(0));
  const Matrix& a = s.matrix();
  Matrix l = Matrix::Zero(k, k);
  for (int j = 0; j < k; ++j) {
    double d = a(j, j);
    for (int m = 0; m < j; ++m) d -= l(j, m) * l(j, m);
    if (d < -tol) fail(ErrorCode::NotPSD, "negative Cholesky pivot", d);
    if (d <= tol) continue;
    l(j, j) = std::sqrt(d);
    for (int i = j + 1; i < k; ++i) {
      double x = a(i, j);
      for (int m = 0; m < j; ++m) x -= l(i, m) * l(j, m);
      l(i, j) = x / l(j, j);
    }
  }
  return LowerTriangular(std::move(l));
}

/// Any Q with Q Q^T = S: the Cholesky factor when S is positive definite,
/// otherwise the symmetric square root with small negative eigenvalues clamped.
inline Matrix factor_psd(const SymMat& s) {
  try {
    return cholesky_lower(s).matrix();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::RankDeficient) throw;
  }
  const EigenPair e = sym_eig(s);
  const double tol = rank_tol(e.values(0));
  Vector root(e.values.size());
  for (Eigen::Index i = 0; i < root.size(); ++i) {
    const double l = e.values(i);
    if (l < -tol) fail(ErrorCode::NotPSD, "matrix has a negative eigenvalue", l);
    root(i) = l > 0.0 ? std::sqrt(l) : 0.0;
  }
  return e.vectors * root.asDiagonal() * e.vectors.transpose();
}

/// R in O(k) minimizing ||A - B R||_F, from the SVD B^T A = U D V^T as R = U V^T.
inline OrthogonalMat opa_rotation(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols()) {
    fail(ErrorCode::InvalidInput, "opa_rotation needs two square matrices of equal size");
  }
  if (!a.allFinite() || !b.allFinite()) fail(ErrorCode::InvalidInput, "non-finite input");
  const Eigen::JacobiSVD<Matrix> svd(b.transpose() * a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return OrthogonalMat(svd.matrixU() * svd.matrixV().transpose());
}

/// Sum of singular values of B^T A, i.e. max over R of tr(R^T B^T A).
inline double procrustes_trace(const Matrix& a, const Matrix& b) {
  const Eigen::JacobiSVD<Matrix> svd(b.transpose() * a);
  return svd.singularValues().sum();
}

}  // namespace spdstats
