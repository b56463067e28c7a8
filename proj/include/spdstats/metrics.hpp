#pragma once
// Distances between covariance matrices.
//
// Five of the eight metrics are Euclidean after a fixed map of the tensor
// ("flat" metrics): d(S1, S2) = ||phi(S1) - phi(S2)||_F with
//   Euclidean       phi(S) = S
//   Cholesky        phi(S) = chol(S)
//   RootEuclidean   phi(S) = S^{1/2}
//   LogEuclidean    phi(S) = log S
//   PowerEuclidean  phi(S) = S^alpha / alpha
// to_flat/from_flat expose that map so means and smoothers can work in the
// flat space. The remaining three (Riemannian, Procrustes size-and-shape,
// full Procrustes) need their own machinery.
//
// Full Procrustes: for unit-size Z1 = Q1/||Q1|| the infimum over (R, beta)
// separates. For any R the best beta is tr(R^T Q2^T Z1)/||Q2||^2, so the
// residual is 1 - tr(R^T Q2^T Z1)^2/||Q2||^2, minimized by the same rotation
// that solves ordinary Procrustes. The result equals sqrt(1 - rho^2) with
// rho = sum sigma(Q2^T Q1)/(||Q1|| ||Q2||), which is symmetric in S1, S2.

#include "spdstats/error.hpp"
#include "spdstats/linalg.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

namespace spdstats {

enum class MetricKind {
  Euclidean,
  LogEuclidean,
  Riemannian,
  Cholesky,
  RootEuclidean,
  ProcrustesSizeShape,
  FullProcrustes,
  PowerEuclidean,
};

inline constexpr std::array<MetricKind, 8> kAllMetricKinds = {
    MetricKind::Euclidean,     MetricKind::LogEuclidean,        MetricKind::Riemannian,
    MetricKind::Cholesky,      MetricKind::RootEuclidean,       MetricKind::ProcrustesSizeShape,
    MetricKind::FullProcrustes, MetricKind::PowerEuclidean};

class MetricId {
 public:
  static constexpr double kDefaultAlpha = 0.5;

  // Implicit so that a bare MetricKind can be passed where a MetricId is expected.
  MetricId(MetricKind kind) : kind_(kind) {  // NOLINT(google-explicit-constructor)
    if (kind == MetricKind::PowerEuclidean) alpha_ = kDefaultAlpha;
  }

  static MetricId power(double alpha) {
    if (!(alpha != 0.0) || !std::isfinite(alpha)) {
      fail(ErrorCode::InvalidInput, "power metric exponent must be finite and nonzero");
    }
    MetricId m(MetricKind::PowerEuclidean);
    m.alpha_ = alpha;
    return m;
  }

  MetricKind kind() const { return kind_; }
  std::optional<double> alpha() const { return alpha_; }
  double power_alpha() const { return alpha_.value_or(1.0); }

 private:
  MetricKind kind_;
  std::optional<double> alpha_;
};

constexpr std::string_view metric_name(MetricKind kind) {
  switch (kind) {
    case MetricKind::Euclidean: return "euclidean";
    case MetricKind::LogEuclidean: return "log-euclidean";
    case MetricKind::Riemannian: return "riemannian";
    case MetricKind::Cholesky: return "cholesky";
    case MetricKind::RootEuclidean: return "root-euclidean";
    case MetricKind::ProcrustesSizeShape: return "procrustes";
    case MetricKind::FullProcrustes: return "full-procrustes";
    case MetricKind::PowerEuclidean: return "power";
  }
  return "unknown";
}

inline MetricId parse_metric(std::string_view name, std::optional<double> alpha = std::nullopt) {
  for (MetricKind kind : kAllMetricKinds) {
    if (metric_name(kind) == name) {
      if (kind == MetricKind::PowerEuclidean) return MetricId::power(alpha.value_or(MetricId::kDefaultAlpha));
      return MetricId(kind);
    }
  }
  fail(ErrorCode::InvalidInput, "unknown metric '" + std::string(name) + "'");
}

constexpr bool is_flat(MetricKind kind) {
  switch (kind) {
    case MetricKind::Euclidean:
    case MetricKind::Cholesky:
    case MetricKind::RootEuclidean:
    case MetricKind::LogEuclidean:
    case MetricKind::PowerEuclidean:
      return true;
    default:
      return false;
  }
}

/// Metrics whose flat map is defined at the zero matrix.
inline bool defined_at_zero(const MetricId& m) {
  switch (m.kind()) {
    case MetricKind::Euclidean:
    case MetricKind::Cholesky:
    case MetricKind::RootEuclidean:
      return true;
    case MetricKind::PowerEuclidean:
      return m.power_alpha() > 0.0;
    default:
      return false;
  }
}

inline Matrix to_flat(const MetricId& m, const SymMat& s) {
  switch (m.kind()) {
    case MetricKind::Euclidean:
      return s.matrix();
    case MetricKind::Cholesky:
      return cholesky_semidefinite(s).matrix();
    case MetricKind::RootEuclidean:
      return mat_func(s, MatFunc::sqrt()).matrix();
    case MetricKind::LogEuclidean:
      return mat_func(s, MatFunc::log()).matrix();
    case MetricKind::PowerEuclidean: {
      const double a = m.power_alpha();
      return mat_func(s, MatFunc::pow(a)).matrix() / a;
    }
    default:
      fail(ErrorCode::UnsupportedCase,
           "metric '" + std::string(metric_name(m.kind())) + "' has no flat representation");
  }
}

inline SymMat from_flat(const MetricId& m, const Matrix& x) {
  switch (m.kind()) {
    case MetricKind::Euclidean:
      return SymMat(x);
    case MetricKind::Cholesky:
      return SymMat(x * x.transpose());
    case MetricKind::RootEuclidean:
      return SymMat(x * x.transpose());
    case MetricKind::LogEuclidean:
      return mat_func(SymMat(x), MatFunc::exp());
    case MetricKind::PowerEuclidean: {
      const double a = m.power_alpha();
      return mat_func(SymMat(a * x), MatFunc::pow(1.0 / a));
    }
    default:
      fail(ErrorCode::UnsupportedCase,
           "metric '" + std::string(metric_name(m.kind())) + "' has no flat representation");
  }
}

namespace detail {

inline double riemannian_distance(const SymMat& s1, const SymMat& s2) {
  const EigenPair e1 = sym_eig(s1);
  const double lmax = e1.values(0);
  const double lmin = e1.values(e1.values.size() - 1);
  if (lmin <= rank_tol(lmax) || lmin / lmax < 1e-12) {
    fail(ErrorCode::RankDeficient, "Riemannian distance needs full-rank input", lmin);
  }
  const Vector inv_root = e1.values.cwiseSqrt().cwiseInverse();
  const Matrix w = e1.vectors * inv_root.asDiagonal() * e1.vectors.transpose();
  const EigenPair e = sym_eig(SymMat(w * s2.matrix() * w));
  const double mmax = e.values(0);
  const double mmin = e.values(e.values.size() - 1);
  if (mmin <= rank_tol(mmax) || mmin / mmax < 1e-12) {
    fail(ErrorCode::RankDeficient, "Riemannian distance needs full-rank input", mmin);
  }
  return e.values.array().log().matrix().norm();
}

inline double procrustes_distance(const SymMat& s1, const SymMat& s2) {
  const Matrix q1 = factor_psd(s1);
  const Matrix q2 = factor_psd(s2);
  const OrthogonalMat r = opa_rotation(q1, q2);
  return (q1 - q2 * r.matrix()).norm();
}

inline double full_procrustes_distance(const SymMat& s1, const SymMat& s2) {
  const Matrix q1 = cholesky_lower(s1).matrix();
  const Matrix q2 = cholesky_lower(s2).matrix();
  const Matrix z1 = q1 / q1.norm();
  const OrthogonalMat r = opa_rotation(z1, q2);
  const Matrix q2r = q2 * r.matrix();
  const double beta = (q2r.transpose() * z1).trace() / q2.squaredNorm();
  return (z1 - beta * q2r).norm();
}

}  // namespace detail

inline double distance(const MetricId& metric, const SymMat& s1, const SymMat& s2) {
  if (s1.dim() != s2.dim()) fail(ErrorCode::InvalidInput, "distance between matrices of different size");
  switch (metric.kind()) {
    case MetricKind::Riemannian:
      return detail::riemannian_distance(s1, s2);
    case MetricKind::ProcrustesSizeShape:
      return detail::procrustes_distance(s1, s2);
    case MetricKind::FullProcrustes:
      return detail::full_procrustes_distance(s1, s2);
    default:
      return (to_flat(metric, s1) - to_flat(metric, s2)).norm();
  }
}

}  // namespace spdstats
