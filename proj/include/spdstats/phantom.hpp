#pragma once
// Analytic tensor-field phantoms with ground truth.

#include "spdstats/error.hpp"
#include "spdstats/field.hpp"
#include "spdstats/linalg.hpp"
#include "spdstats/pga.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace spdstats {

enum class PhantomKind { Constant, TwoBundleCrossing, QuarterCircle, NoisyGeodesicGrid };

constexpr std::string_view phantom_name(PhantomKind k) {
  switch (k) {
    case PhantomKind::Constant: return "constant";
    case PhantomKind::TwoBundleCrossing: return "two-bundle-crossing";
    case PhantomKind::QuarterCircle: return "quarter-circle";
    case PhantomKind::NoisyGeodesicGrid: return "noisy-geodesic-grid";
  }
  return "unknown";
}

inline PhantomKind parse_phantom(std::string_view s) {
  for (auto k : {PhantomKind::Constant, PhantomKind::TwoBundleCrossing, PhantomKind::QuarterCircle,
                 PhantomKind::NoisyGeodesicGrid}) {
    if (phantom_name(k) == s) return k;
  }
  fail(ErrorCode::InvalidInput, "unknown phantom '" + std::string(s) + "'");
}

struct PhantomSpec {
  PhantomKind kind = PhantomKind::Constant;
  std::optional<std::array<int, 3>> dims;  // per-kind default when unset
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  std::optional<SymMat> tensor;             // constant: default diag(3, 1, 1) * 1e-3
  double lambda1 = 1.7e-3;                  // fibre eigenvalue
  double lambda2 = 0.3e-3;                  // transverse eigenvalues
  double background = 0.7e-3;               // isotropic background (crossing)
  double bundle_half_width = 2.0;           // crossing, in voxels
  double inner_radius = 2.0;                // quarter-circle mask, in voxels
  double sigma = 0.0;                       // noisy-geodesic-grid factor noise
  std::uint64_t seed = 0;

  std::array<int, 3> resolved_dims() const {
    if (dims) return *dims;
    switch (kind) {
      case PhantomKind::Constant: return {10, 10, 10};
      case PhantomKind::TwoBundleCrossing: return {16, 16, 3};
      case PhantomKind::QuarterCircle: return {24, 24, 1};
      case PhantomKind::NoisyGeodesicGrid: return {11, 3, 1};
    }
    return {1, 1, 1};
  }

  void validate() const {
    if (!(lambda1 > 0.0 && lambda2 > 0.0 && background > 0.0)) {
      fail(ErrorCode::InvalidInput, "phantom eigenvalues must be positive");
    }
    if (!(sigma >= 0.0)) fail(ErrorCode::InvalidInput, "phantom noise sigma must be nonnegative");
    if (tensor && tensor->dim() != 3) fail(ErrorCode::InvalidInput, "phantom tensors are 3 x 3");
  }
};

struct TruthTrack {
  std::vector<Point3> points;
};

struct Phantom {
  TensorField field;
  TensorField truth;  // noiseless field
  std::vector<TruthTrack> tracks;
};

/// lambda1 t t^T + lambda2 (I - t t^T) for unit axis t.
inline SymMat axial_tensor(const Point3& t, double lambda1, double lambda2) {
  const Point3 u = t.normalized();
  const Eigen::Matrix3d p = u * u.transpose();
  return SymMat(lambda1 * p + lambda2 * (Eigen::Matrix3d::Identity() - p));
}

namespace detail {

inline Phantom constant_phantom(const PhantomSpec& spec, const std::array<int, 3>& dims) {
  const SymMat d = spec.tensor.value_or(SymMat::diagonal({3e-3, 1e-3, 1e-3}));
  TensorField f(dims, spec.spacing, 3);
  for (std::size_t i = 0; i < f.size(); ++i) f.set(i, d);
  // Straight lines through the grid centre along the principal axis.
  const EigenPair e = sym_eig(d);
  const Point3 axis = e.vectors.col(0);
  Point3 centre;
  double extent = 0.0;
  for (int a = 0; a < 3; ++a) {
    centre[a] = 0.5 * (dims[a] - 1) * spec.spacing[a];
    extent += std::pow((dims[a] - 1) * spec.spacing[a], 2);
  }
  extent = std::sqrt(extent);
  return {f, f, {TruthTrack{{centre - 0.5 * extent * axis, centre + 0.5 * extent * axis}}}};
}

inline Phantom crossing_phantom(const PhantomSpec& spec, const std::array<int, 3>& dims) {
  TensorField f(dims, spec.spacing, 3);
  const SymMat along_x = axial_tensor(Point3::UnitX(), spec.lambda1, spec.lambda2);
  const SymMat along_y = axial_tensor(Point3::UnitY(), spec.lambda1, spec.lambda2);
  const double cx = 0.5 * (dims[0] - 1);
  const double cy = 0.5 * (dims[1] - 1);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto c = f.coords(i);
    const bool in_x = std::abs(c[1] - cy) <= spec.bundle_half_width;
    const bool in_y = std::abs(c[0] - cx) <= spec.bundle_half_width;
    if (in_x && in_y) {
      f.set(i, SymMat(0.5 * (along_x.matrix() + along_y.matrix())));
    } else if (in_x) {
      f.set(i, along_x);
    } else if (in_y) {
      f.set(i, along_y);
    } else {
      f.set(i, spec.background * SymMat::identity(3));
    }
  }
  const double z = 0.5 * (dims[2] - 1) * spec.spacing[2];
  std::vector<TruthTrack> tracks{
      {{Point3(0.0, cy * spec.spacing[1], z), Point3((dims[0] - 1) * spec.spacing[0], cy * spec.spacing[1], z)}},
      {{Point3(cx * spec.spacing[0], 0.0, z), Point3(cx * spec.spacing[0], (dims[1] - 1) * spec.spacing[1], z)}}};
  return {f, f, std::move(tracks)};
}

// Fibres run along circles centred on the origin in the xy-plane; voxels
// closer than inner_radius voxels to the axis are masked.
inline Phantom quarter_circle_phantom(const PhantomSpec& spec, const std::array<int, 3>& dims) {
  TensorField f(dims, spec.spacing, 3);
  const double unit = f.min_spacing();
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Point3 p = f.position(i);
    const double r = std::hypot(p.x(), p.y());
    if (r < spec.inner_radius * unit) continue;
    f.set(i, axial_tensor(Point3(-p.y(), p.x(), 0.0) / r, spec.lambda1, spec.lambda2));
  }
  std::vector<TruthTrack> tracks;
  const double rmax = std::min((dims[0] - 1) * spec.spacing[0], (dims[1] - 1) * spec.spacing[1]);
  const double z = 0.5 * (dims[2] - 1) * spec.spacing[2];
  for (double r = std::ceil(spec.inner_radius) * unit; r <= rmax; r += unit) {
    TruthTrack t;
    for (int j = 0; j <= 32; ++j) {
      const double th = 0.5 * std::numbers::pi * j / 32.0;
      t.points.emplace_back(r * std::cos(th), r * std::sin(th), z);
    }
    tracks.push_back(std::move(t));
  }
  return {f, f, std::move(tracks)};
}

// Tensors along x follow the factor-space line Q(t) = Q0 + t U, t = x / (nx - 1);
// every voxel gets independent Gaussian factor noise.
inline Phantom noisy_geodesic_phantom(const PhantomSpec& spec, const std::array<int, 3>& dims) {
  TensorField f(dims, spec.spacing, 3);
  TensorField truth(dims, spec.spacing, 3);
  const GeodesicPathSpec path = default_geodesic_path(std::sqrt(1e-3));
  const Eigen::Matrix3d q0 = path.start;
  const Eigen::Matrix3d u = path.direction;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto c = f.coords(i);
    const double t = dims[0] > 1 ? static_cast<double>(c[0]) / (dims[0] - 1) : 0.0;
    const Eigen::Matrix3d q = q0 + t * u;
    Eigen::Matrix3d noisy = q;
    if (spec.sigma > 0.0) {
      for (int col = 0; col < 3; ++col)
        for (int row = 0; row < 3; ++row) noisy(row, col) += spec.sigma * normal(rng);
    }
    truth.set(i, SymMat(q * q.transpose()));
    f.set(i, SymMat(noisy * noisy.transpose()));
  }
  return {f, truth, {}};
}

}  // namespace detail

inline Phantom make_phantom(const PhantomSpec& spec) {
  spec.validate();
  const auto dims = spec.resolved_dims();
  switch (spec.kind) {
    case PhantomKind::Constant: return detail::constant_phantom(spec, dims);
    case PhantomKind::TwoBundleCrossing: return detail::crossing_phantom(spec, dims);
    case PhantomKind::QuarterCircle: return detail::quarter_circle_phantom(spec, dims);
    case PhantomKind::NoisyGeodesicGrid: return detail::noisy_geodesic_phantom(spec, dims);
  }
  fail(ErrorCode::InvalidInput, "unknown phantom");
}

}  // namespace spdstats
