#pragma once
// Streamline tractography along interpolated principal eigenvector axes.

#include "spdstats/anisotropy.hpp"
#include "spdstats/error.hpp"
#include "spdstats/field.hpp"
#include "spdstats/linalg.hpp"
#include "spdstats/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spdstats {

enum class Termination { FA, Angle, Bounds, MaxSteps };

constexpr std::string_view termination_name(Termination t) {
  switch (t) {
    case Termination::FA: return "fa";
    case Termination::Angle: return "angle";
    case Termination::Bounds: return "bounds";
    case Termination::MaxSteps: return "max_steps";
  }
  return "unknown";
}

inline Termination parse_termination(std::string_view s) {
  for (auto t : {Termination::FA, Termination::Angle, Termination::Bounds, Termination::MaxSteps}) {
    if (termination_name(t) == s) return t;
  }
  fail(ErrorCode::InvalidInput, "unknown termination reason '" + std::string(s) + "'");
}

struct TrackSpec {
  std::optional<double> step;  // default: half the smallest voxel spacing
  double fa_threshold = 0.15;
  int max_steps = 2000;
  double angle_threshold_deg = 60.0;
  MetricId metric = MetricKind::Euclidean;
  KernelSpec kernel;
  AnisotropyMeasure stop_measure = AnisotropyMeasure::FA;

  double step_for(const TensorField& field) const { return step.value_or(0.5 * field.min_spacing()); }

  void validate() const {
    if (step && (!(*step > 0.0) || !std::isfinite(*step))) fail(ErrorCode::InvalidInput, "step must be positive");
    if (!(fa_threshold >= 0.0 && fa_threshold <= 1.0)) {
      fail(ErrorCode::InvalidInput, "anisotropy threshold must lie in [0, 1]", fa_threshold);
    }
    if (max_steps < 0) fail(ErrorCode::InvalidInput, "max_steps must be nonnegative");
    if (!(angle_threshold_deg > 0.0 && angle_threshold_deg <= 90.0)) {
      fail(ErrorCode::InvalidInput, "angle threshold must lie in (0, 90] degrees", angle_threshold_deg);
    }
    kernel.validate();
  }
};

struct Streamline {
  std::vector<Point3> points;
  std::array<Termination, 2> termination{Termination::MaxSteps, Termination::MaxSteps};  // {backward, forward}
};

struct PrincipalDirection {
  Point3 direction;
  bool degenerate = false;
};

inline PrincipalDirection principal_direction(const SymMat& s) {
  if (s.dim() != 3) fail(ErrorCode::InvalidInput, "principal directions are defined for 3 x 3 tensors");
  if (s.matrix().cwiseAbs().maxCoeff() == 0.0) fail(ErrorCode::RankDeficient, "zero tensor has no principal axis");
  const EigenPair e = sym_eig(s);
  const double l1 = e.values(0);
  const double l2 = e.values(1);
  return {e.vectors.col(0).normalized(), !(l1 > 0.0) || l1 - l2 < rank_tol(l1) * l1};
}

namespace detail {

struct TrackState {
  Point3 direction;
  bool ok = false;  // direction usable and anisotropy above threshold
};

// Interpolated tensor at p, or nullopt when p has no support.
inline std::optional<SymMat> tensor_at(const TensorField& field, const Point3& p, const TrackSpec& spec) {
  try {
    return interpolate(field, p, spec.metric, spec.kernel);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::EmptyNeighborhood || e.code() == ErrorCode::InvalidInput) return std::nullopt;
    throw;
  }
}

inline TrackState evaluate(const SymMat& s, const TrackSpec& spec) {
  double a = 0.0;
  try {
    a = anisotropy(spec.stop_measure, s);
  } catch (const Error&) {
    return {Point3::Zero(), false};
  }
  if (!(a >= spec.fa_threshold)) return {Point3::Zero(), false};
  PrincipalDirection pd = principal_direction(s);
  return {pd.direction, !pd.degenerate};
}

inline Termination follow(const TensorField& field, Point3 p, Point3 dir, const TrackSpec& spec, double h,
                          double pad, std::vector<Point3>& out) {
  const double cos_limit = std::cos(spec.angle_threshold_deg * std::numbers::pi / 180.0);
  for (int n = 0; n < spec.max_steps; ++n) {
    const Point3 q = p + h * dir;
    if (!field.contains(q, pad)) return Termination::Bounds;
    const std::optional<SymMat> s = tensor_at(field, q, spec);
    if (!s) return Termination::Bounds;
    const TrackState st = evaluate(*s, spec);
    if (!st.ok) return Termination::FA;
    Point3 d = st.direction;
    if (d.dot(dir) < 0.0) d = -d;
    if (d.dot(dir) < cos_limit) return Termination::Angle;
    out.push_back(q);
    p = q;
    dir = d;
  }
  return Termination::MaxSteps;
}

}  // namespace detail

/// Fixed-step Euler integration in both directions from `seed`. Each step
/// uses the axis at the current point, sign-aligned with the previous step.
/// Tracking stays inside the voxel-center hull padded by half a voxel.
inline Streamline track(const TensorField& field, const Point3& seed, const TrackSpec& spec) {
  spec.validate();
  if (field.k() != 3) fail(ErrorCode::InvalidInput, "tractography needs a 3 x 3 tensor field");
  const double pad = 0.5 * field.min_spacing();
  const double h = spec.step_for(field);
  if (!seed.allFinite() || !field.contains(seed, pad)) fail(ErrorCode::SeedOutOfBounds, "seed outside the field");
  const std::optional<SymMat> s0 = detail::tensor_at(field, seed, spec);
  if (!s0) fail(ErrorCode::SeedOutOfBounds, "no tensors near the seed");
  const detail::TrackState st = detail::evaluate(*s0, spec);
  if (!st.ok) fail(ErrorCode::SeedBelowThreshold, "seed anisotropy below threshold or direction degenerate");

  std::vector<Point3> backward;
  std::vector<Point3> forward;
  Streamline line;
  line.termination[0] = detail::follow(field, seed, -st.direction, spec, h, pad, backward);
  line.termination[1] = detail::follow(field, seed, st.direction, spec, h, pad, forward);
  line.points.reserve(backward.size() + 1 + forward.size());
  line.points.assign(backward.rbegin(), backward.rend());
  line.points.push_back(seed);
  line.points.insert(line.points.end(), forward.begin(), forward.end());
  return line;
}

}  // namespace spdstats
