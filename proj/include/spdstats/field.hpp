#pragma once
// Tensor fields on voxel grids: Gaussian kernel weights, weighted-mean
// interpolation, upsampling and the penalized smoothing family
//
//   minimize over Sigma_j   sum_i w_ij d(S_i, Sigma_j)^beta + lambda d(Sigma_j, mu)^omega
//
// solved voxel by voxel. Every output voxel reads only the input field, so
// results do not depend on evaluation order.

#include "spdstats/error.hpp"
#include "spdstats/frechet.hpp"
#include "spdstats/linalg.hpp"
#include "spdstats/metrics.hpp"
#include "spdstats/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spdstats {

using Point3 = Eigen::Vector3d;

class TensorField {
 public:
  TensorField(std::array<int, 3> dims, std::array<double, 3> spacing, int k)
      : dims_(dims), spacing_(spacing), k_(k) {
    for (int a = 0; a < 3; ++a) {
      if (dims_[a] < 1) fail(ErrorCode::InvalidInput, "field dimensions must be positive");
      if (!(spacing_[a] > 0.0) || !std::isfinite(spacing_[a])) {
        fail(ErrorCode::InvalidInput, "voxel spacing must be positive");
      }
    }
    if (k_ < 2) fail(ErrorCode::InvalidInput, "tensor dimension must be at least 2");
    tensors_.resize(static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2]);
  }

  const std::array<int, 3>& dims() const { return dims_; }
  const std::array<double, 3>& spacing() const { return spacing_; }
  int k() const { return k_; }
  std::size_t size() const { return tensors_.size(); }

  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims_[0]) * (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims_[1]) * z);
  }
  std::array<int, 3> coords(std::size_t i) const {
    const auto nx = static_cast<std::size_t>(dims_[0]);
    const auto ny = static_cast<std::size_t>(dims_[1]);
    return {static_cast<int>(i % nx), static_cast<int>((i / nx) % ny), static_cast<int>(i / (nx * ny))};
  }
  Point3 position(std::size_t i) const {
    const auto c = coords(i);
    return {c[0] * spacing_[0], c[1] * spacing_[1], c[2] * spacing_[2]};
  }

  const std::optional<SymMat>& at(std::size_t i) const { return tensors_.at(i); }
  const std::optional<SymMat>& at(int x, int y, int z) const { return tensors_.at(index(x, y, z)); }

  void set(std::size_t i, std::optional<SymMat> t) {
    if (t) {
      if (t->dim() != k_) fail(ErrorCode::InvalidInput, "tensor dimension does not match field");
      if (!t->all_finite()) fail(ErrorCode::InvalidInput, "non-finite tensor entry");
    }
    tensors_.at(i) = std::move(t);
  }
  void set(int x, int y, int z, std::optional<SymMat> t) { set(index(x, y, z), std::move(t)); }

  std::size_t present_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.has_value() ? 1 : 0;
    return n;
  }

  double min_spacing() const { return std::min({spacing_[0], spacing_[1], spacing_[2]}); }

  /// Inside the voxel-center hull grown by `pad` on every side.
  bool contains(const Point3& p, double pad) const {
    for (int a = 0; a < 3; ++a) {
      const double hi = (dims_[a] - 1) * spacing_[a];
      if (!(p[a] >= -pad && p[a] <= hi + pad)) return false;
    }
    return true;
  }

 private:
  std::array<int, 3> dims_;
  std::array<double, 3> spacing_;
  int k_;
  std::vector<std::optional<SymMat>> tensors_;
};

struct KernelSpec {
  double gamma = 1.0;           // w ~ exp(-gamma ||x - x_i||^2), physical units
  double support_radius = 3.0;  // in voxels (multiples of the smallest spacing)

  void validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) fail(ErrorCode::InvalidInput, "kernel gamma must be positive");
    if (!(support_radius >= 1.0)) fail(ErrorCode::InvalidInput, "kernel support radius must be at least 1 voxel");
  }
};

/// Normalized Gaussian weights; positions farther than support_radius * unit
/// from the target get weight 0. Evaluated relative to the nearest position
/// so that very sharp kernels do not underflow.
inline std::vector<double> kernel_weights(const std::vector<Point3>& positions, const Point3& target,
                                          const KernelSpec& spec, double unit = 1.0) {
  spec.validate();
  const double radius = spec.support_radius * unit;
  std::vector<double> d2(positions.size());
  double nearest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < positions.size(); ++i) {
    d2[i] = (positions[i] - target).squaredNorm();
    if (std::sqrt(d2[i]) <= radius) nearest = std::min(nearest, d2[i]);
  }
  if (!std::isfinite(nearest)) fail(ErrorCode::EmptyNeighborhood, "no position within the kernel support");
  std::vector<double> w(positions.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (std::sqrt(d2[i]) > radius) continue;
    w[i] = std::exp(-spec.gamma * (d2[i] - nearest));
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

/// Present voxels contributing to a weighted mean, with normalized weights.
struct Neighborhood {
  std::vector<std::size_t> indices;
  std::vector<SymMat> tensors;
  std::vector<double> weights;
};

inline Neighborhood kernel_neighborhood(const TensorField& field, const Point3& target, const KernelSpec& spec) {
  spec.validate();
  const double radius = spec.support_radius * field.min_spacing();
  std::array<int, 2> range[3];
  for (int a = 0; a < 3; ++a) {
    const double s = field.spacing()[a];
    const int lo = static_cast<int>(std::ceil((target[a] - radius) / s - 1e-9));
    const int hi = static_cast<int>(std::floor((target[a] + radius) / s + 1e-9));
    range[a] = {std::max(lo, 0), std::min(hi, field.dims()[a] - 1)};
  }
  std::vector<std::size_t> candidates;
  std::vector<Point3> positions;
  for (int z = range[2][0]; z <= range[2][1]; ++z) {
    for (int y = range[1][0]; y <= range[1][1]; ++y) {
      for (int x = range[0][0]; x <= range[0][1]; ++x) {
        const std::size_t i = field.index(x, y, z);
        if (!field.at(i)) continue;
        const Point3 p = field.position(i);
        if ((p - target).norm() > radius) continue;
        candidates.push_back(i);
        positions.push_back(p);
      }
    }
  }
  if (candidates.empty()) fail(ErrorCode::EmptyNeighborhood, "no tensor within the kernel support");
  const std::vector<double> w = kernel_weights(positions, target, spec, field.min_spacing());
  Neighborhood n;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (w[c] == 0.0) continue;
    n.indices.push_back(candidates[c]);
    n.tensors.push_back(*field.at(candidates[c]));
    n.weights.push_back(w[c]);
  }
  return n;
}

/// Multilinear weights on the corners of the cell containing a point given in
/// voxel-index coordinates (base corner + fractional offset). Masked corners
/// are dropped and the rest renormalized.
inline Neighborhood linear_neighborhood(const TensorField& field, std::array<int, 3> base,
                                        std::array<double, 3> frac) {
  Neighborhood n;
  double total = 0.0;
  for (int corner = 0; corner < 8; ++corner) {
    std::array<int, 3> c{};
    double w = 1.0;
    for (int a = 0; a < 3; ++a) {
      const int bit = (corner >> a) & 1;
      c[a] = base[a] + bit;
      w *= bit ? frac[a] : 1.0 - frac[a];
    }
    if (w == 0.0) continue;
    bool inside = true;
    for (int a = 0; a < 3; ++a) inside = inside && c[a] >= 0 && c[a] < field.dims()[a];
    if (!inside) continue;
    const std::size_t i = field.index(c[0], c[1], c[2]);
    if (!field.at(i)) continue;
    n.indices.push_back(i);
    n.tensors.push_back(*field.at(i));
    n.weights.push_back(w);
    total += w;
  }
  if (n.indices.empty()) fail(ErrorCode::EmptyNeighborhood, "all cell corners are masked");
  for (double& w : n.weights) w /= total;
  return n;
}

/// Weighted Frechet mean of the kernel neighborhood of `target`.
inline SymMat interpolate(const TensorField& field, const Point3& target, const MetricId& metric,
                          const KernelSpec& spec, const SolverOptions& opts = {}) {
  spec.validate();
  if (!field.contains(target, spec.support_radius * field.min_spacing())) {
    fail(ErrorCode::InvalidInput, "interpolation target outside the field");
  }
  Neighborhood n = kernel_neighborhood(field, target, spec);
  return frechet_mean(metric, WeightedSample(std::move(n.tensors), std::move(n.weights)), opts);
}

/// Geodesic-path interpolation: multilinear weights of the enclosing cell.
inline SymMat interpolate_linear(const TensorField& field, const Point3& target, const MetricId& metric,
                                 const SolverOptions& opts = {}) {
  if (!field.contains(target, 0.0)) fail(ErrorCode::InvalidInput, "interpolation target outside the field");
  std::array<int, 3> base{};
  std::array<double, 3> frac{};
  for (int a = 0; a < 3; ++a) {
    const double u = target[a] / field.spacing()[a];
    const int n = field.dims()[a];
    base[a] = n == 1 ? 0 : std::clamp(static_cast<int>(std::floor(u)), 0, n - 2);
    frac[a] = n == 1 ? 0.0 : std::clamp(u - base[a], 0.0, 1.0);
  }
  Neighborhood nb = linear_neighborhood(field, base, frac);
  return frechet_mean(metric, WeightedSample(std::move(nb.tensors), std::move(nb.weights)), opts);
}

enum class InterpMode { Kernel, LinearPath };

inline InterpMode parse_interp_mode(std::string_view s) {
  if (s == "kernel") return InterpMode::Kernel;
  if (s == "linear") return InterpMode::LinearPath;
  fail(ErrorCode::InvalidInput, "unknown interpolation mode '" + std::string(s) + "'");
}

/// Inserts `factor` new lattice points between each pair of neighbouring
/// voxels: n -> (n - 1)(factor + 1) + 1 along every axis with n > 1.
/// Output voxels whose neighbourhood is empty stay masked.
inline TensorField upsample(const TensorField& field, int factor, const MetricId& metric, const KernelSpec& spec,
                            InterpMode mode = InterpMode::Kernel, const SolverOptions& opts = {}) {
  if (factor < 0) fail(ErrorCode::InvalidInput, "upsampling factor must be nonnegative");
  if (factor == 0) return field;
  spec.validate();
  const int stride = factor + 1;
  std::array<int, 3> dims{};
  std::array<double, 3> spacing{};
  for (int a = 0; a < 3; ++a) {
    const int n = field.dims()[a];
    dims[a] = n == 1 ? 1 : (n - 1) * stride + 1;
    spacing[a] = n == 1 ? field.spacing()[a] : field.spacing()[a] / stride;
  }
  TensorField out(dims, spacing, field.k());
  std::vector<std::optional<SymMat>> values(out.size());
  parallel_for(out.size(), [&](std::size_t i) {
    const auto c = out.coords(i);
    try {
      if (mode == InterpMode::LinearPath) {
        std::array<int, 3> base{};
        std::array<double, 3> frac{};
        for (int a = 0; a < 3; ++a) {
          base[a] = c[a] / stride;
          frac[a] = static_cast<double>(c[a] % stride) / stride;
        }
        Neighborhood nb = linear_neighborhood(field, base, frac);
        values[i] = frechet_mean(metric, WeightedSample(std::move(nb.tensors), std::move(nb.weights)), opts);
      } else {
        Neighborhood nb = kernel_neighborhood(field, out.position(i), spec);
        values[i] = frechet_mean(metric, WeightedSample(std::move(nb.tensors), std::move(nb.weights)), opts);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyNeighborhood) throw;
    }
  });
  for (std::size_t i = 0; i < out.size(); ++i) out.set(i, std::move(values[i]));
  return out;
}

// ---------------------------------------------------------------------------
// Smoothing

enum class MuChoice { Identity, Zero, Average };

inline MuChoice parse_mu(std::string_view s) {
  if (s == "identity") return MuChoice::Identity;
  if (s == "zero") return MuChoice::Zero;
  if (s == "average") return MuChoice::Average;
  fail(ErrorCode::InvalidInput, "unknown reference matrix '" + std::string(s) + "'");
}

struct SmoothSpec {
  int beta = 2;
  int omega = 0;
  double lambda = 0.0;
  MuChoice mu = MuChoice::Identity;
  MetricId metric = MetricKind::Euclidean;

  /// The penalty only exists for lambda > 0.
  bool penalized() const { return lambda > 0.0 && omega != 0; }

  void validate() const {
    const bool known = (beta == 2 && omega == 0) || (beta == 1 && omega == 0) || (beta == 2 && omega == 2) ||
                       (beta == 2 && omega == 1);
    if (!known) {
      fail(ErrorCode::UnsupportedCase,
           "(beta, omega) = (" + std::to_string(beta) + ", " + std::to_string(omega) + ") is not supported");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail(ErrorCode::InvalidInput, "lambda must be nonnegative");
    if (!is_flat(metric.kind()) && (beta != 2 || omega != 0)) {
      fail(ErrorCode::UnsupportedCase, "metric '" + std::string(metric_name(metric.kind())) +
                                           "' only supports the weighted mean (beta, omega) = (2, 0)");
    }
  }
};

struct WeiszfeldResult {
  Matrix point;
  int iterations = 0;
  bool converged = false;
};

/// Weighted geometric median of matrices under the Frobenius norm.
/// A data point is returned directly when it satisfies the optimality test
/// ||sum_{i != j} w_i (p_i - p_j)/||p_i - p_j|| || <= w_j. If an iterate lands
/// on a data point it is nudged by 1e-12 (relative) along a fixed direction.
inline WeiszfeldResult weiszfeld(const std::vector<Matrix>& points, const std::vector<double>& weights,
                                 double tol = 1e-9, int max_iter = 500) {
  const std::size_t n = points.size();
  if (n == 0 || weights.size() != n) fail(ErrorCode::InvalidInput, "Weiszfeld needs matching points and weights");
  double scale = 0.0;
  for (const Matrix& p : points) scale = std::max(scale, p.norm());
  if (scale == 0.0) scale = 1.0;
  const double coincide = 1e-12 * scale;

  for (std::size_t j = 0; j < n; ++j) {
    Matrix r = Matrix::Zero(points[j].rows(), points[j].cols());
    for (std::size_t i = 0; i < n; ++i) {
      const double d = (points[i] - points[j]).norm();
      if (d > coincide) r += weights[i] * (points[i] - points[j]) / d;
    }
    double mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if ((points[i] - points[j]).norm() <= coincide) mass += weights[i];
    }
    if (r.norm() <= mass) return {points[j], 0, true};
  }

  Matrix x = Matrix::Zero(points[0].rows(), points[0].cols());
  for (std::size_t i = 0; i < n; ++i) x += weights[i] * points[i];
  Matrix nudge = Matrix::Ones(x.rows(), x.cols());
  nudge /= nudge.norm();

  for (int it = 1; it <= max_iter; ++it) {
    Matrix num = Matrix::Zero(x.rows(), x.cols());
    double den = 0.0;
    bool landed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = (points[i] - x).norm();
      if (d <= coincide) {
        landed = true;
        break;
      }
      num += (weights[i] / d) * points[i];
      den += weights[i] / d;
    }
    if (landed) {
      x += coincide * nudge;
      continue;
    }
    const Matrix next = num / den;
    const double step = (next - x).norm();
    x = next;
    if (step <= tol * scale) return {x, it, true};
  }
  return {x, max_iter, false};
}

/// sum_i w_i d(S_i, sigma)^beta + lambda d(sigma, mu)^omega (penalty omitted when lambda = 0).
inline double smoothing_objective(const SmoothSpec& spec, const std::vector<SymMat>& tensors,
                                  const std::vector<double>& weights, const std::optional<SymMat>& mu,
                                  const SymMat& sigma) {
  double f = 0.0;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    f += weights[i] * std::pow(distance(spec.metric, tensors[i], sigma), spec.beta);
  }
  if (spec.penalized()) {
    if (!mu) fail(ErrorCode::InvalidInput, "penalized objective needs a reference matrix");
    f += spec.lambda * std::pow(distance(spec.metric, sigma, *mu), spec.omega);
  }
  return f;
}

/// Solves the per-voxel problem for one neighbourhood.
inline SymMat solve_smoothing(const SmoothSpec& spec, const std::vector<SymMat>& tensors,
                              const std::vector<double>& weights, const std::optional<SymMat>& mu,
                              const SolverOptions& opts = {}) {
  spec.validate();
  if (!is_flat(spec.metric.kind())) {
    return frechet_mean(spec.metric, WeightedSample(tensors, weights), opts);
  }
  std::vector<Matrix> flat;
  flat.reserve(tensors.size());
  Matrix mean = Matrix::Zero(tensors.front().dim(), tensors.front().dim());
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    flat.push_back(to_flat(spec.metric, tensors[i]));
    mean += (weights[i] / wsum) * flat.back();
  }

  if (spec.beta == 1) {
    std::vector<double> w(weights);
    for (double& x : w) x /= wsum;
    return from_flat(spec.metric, weiszfeld(flat, w).point);
  }
  if (!spec.penalized()) return from_flat(spec.metric, mean);

  if (!mu) fail(ErrorCode::InvalidInput, "penalized smoothing needs a reference matrix");
  const Matrix m = to_flat(spec.metric, *mu);
  if (spec.omega == 2) return from_flat(spec.metric, (mean + spec.lambda * m) / (1.0 + spec.lambda));

  // omega == 1: proximal step of lambda ||sigma - m|| around the weighted mean.
  const Matrix r = mean - m;
  const double norm = r.norm();
  const double shrink = norm > 0.0 ? std::max(0.0, 1.0 - 0.5 * spec.lambda / norm) : 0.0;
  return from_flat(spec.metric, m + shrink * r);
}

/// Reference matrix for the penalty term.
inline std::optional<SymMat> resolve_mu(const TensorField& field, const SmoothSpec& spec) {
  if (!spec.penalized()) return std::nullopt;
  switch (spec.mu) {
    case MuChoice::Identity:
      return SymMat::identity(field.k());
    case MuChoice::Zero:
      if (!defined_at_zero(spec.metric)) {
        fail(ErrorCode::UnsupportedCase, "zero reference matrix is not valid for metric '" +
                                             std::string(metric_name(spec.metric.kind())) + "'");
      }
      return SymMat::zero(field.k());
    case MuChoice::Average: {
      std::vector<SymMat> all;
      for (std::size_t i = 0; i < field.size(); ++i) {
        if (field.at(i)) all.push_back(*field.at(i));
      }
      if (all.empty()) fail(ErrorCode::EmptyNeighborhood, "field has no tensors to average");
      return frechet_mean(spec.metric, WeightedSample::uniform(std::move(all)));
    }
  }
  return std::nullopt;
}

/// Smoothed tensor at present voxel `j`, computed from the original field.
inline SymMat smooth_voxel(const TensorField& field, std::size_t j, const SmoothSpec& spec,
                           const KernelSpec& kernel, const std::optional<SymMat>& mu,
                           const SolverOptions& opts = {}) {
  if (!field.at(j)) fail(ErrorCode::InvalidInput, "cannot smooth a masked voxel");
  const Neighborhood n = kernel_neighborhood(field, field.position(j), kernel);
  return solve_smoothing(spec, n.tensors, n.weights, mu, opts);
}

inline TensorField smooth(const TensorField& field, const SmoothSpec& spec, const KernelSpec& kernel,
                          const SolverOptions& opts = {}) {
  spec.validate();
  kernel.validate();
  const std::optional<SymMat> mu = resolve_mu(field, spec);
  std::vector<std::optional<SymMat>> values(field.size());
  parallel_for(field.size(), [&](std::size_t j) {
    if (field.at(j)) values[j] = smooth_voxel(field, j, spec, kernel, mu, opts);
  });
  TensorField out(field.dims(), field.spacing(), field.k());
  for (std::size_t j = 0; j < field.size(); ++j) out.set(j, std::move(values[j]));
  return out;
}

}  // namespace spdstats
