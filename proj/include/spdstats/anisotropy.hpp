#pragma once

#include "spdstats/error.hpp"
#include "spdstats/linalg.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <string_view>

namespace spdstats {

enum class AnisotropyMeasure { FA, PA, GA, TGA };

constexpr std::string_view measure_name(AnisotropyMeasure m) {
  switch (m) {
    case AnisotropyMeasure::FA: return "fa";
    case AnisotropyMeasure::PA: return "pa";
    case AnisotropyMeasure::GA: return "ga";
    case AnisotropyMeasure::TGA: return "tga";
  }
  return "unknown";
}

inline AnisotropyMeasure parse_measure(std::string_view name) {
  for (auto m : {AnisotropyMeasure::FA, AnisotropyMeasure::PA, AnisotropyMeasure::GA, AnisotropyMeasure::TGA}) {
    if (measure_name(m) == name) return m;
  }
  fail(ErrorCode::InvalidInput, "unknown anisotropy measure '" + std::string(name) + "'");
}

namespace detail {

inline double fractional_anisotropy(const Vector& lambda) {
  const double k = static_cast<double>(lambda.size());
  const double sum_sq = lambda.squaredNorm();
  if (!(sum_sq > 0.0)) fail(ErrorCode::InvalidInput, "FA of the zero matrix is undefined");
  const double spread = (lambda.array() - lambda.mean()).matrix().squaredNorm();
  return std::sqrt(k / (k - 1.0) * spread / sum_sq);
}

inline double procrustes_anisotropy(const Vector& lambda) {
  const double k = static_cast<double>(lambda.size());
  const double trace = lambda.sum();
  if (!(trace > 0.0)) fail(ErrorCode::InvalidInput, "PA of the zero matrix is undefined");
  // Eigenvalues within roundoff of zero would otherwise enter as sqrt(eps).
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * lambda.maxCoeff();
  const Vector root = (lambda.array() <= floor).select(0.0, lambda).cwiseSqrt();
  const double spread = (root.array() - root.mean()).matrix().squaredNorm();
  return std::sqrt(k / (k - 1.0) * spread / trace);
}

inline double geodesic_anisotropy(const Vector& lambda) {
  const double tol = rank_tol(lambda.maxCoeff());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) <= tol) fail(ErrorCode::RankDeficient, "GA needs a full-rank tensor", lambda(i));
  }
  const Vector logs = lambda.array().log().matrix();
  return (logs.array() - logs.mean()).matrix().norm();
}

}  // namespace detail

/// Anisotropy of a single tensor from its eigenvalues. FA and PA clamp
/// negative eigenvalues (estimation noise) to zero; GA and tanh(GA) refuse
/// eigenvalues at or below rank_tol.
inline double anisotropy(AnisotropyMeasure measure, const SymMat& s) {
  const Vector lambda = sym_eig(s).values;
  switch (measure) {
    case AnisotropyMeasure::FA:
      return detail::fractional_anisotropy(lambda.cwiseMax(0.0));
    case AnisotropyMeasure::PA:
      return detail::procrustes_anisotropy(lambda.cwiseMax(0.0));
    case AnisotropyMeasure::GA:
      return detail::geodesic_anisotropy(lambda);
    case AnisotropyMeasure::TGA:
      return std::tanh(detail::geodesic_anisotropy(lambda));
  }
  return 0.0;
}

}  // namespace spdstats
