#pragma once
// Tangent-space principal geodesic analysis under the Procrustes
// size-and-shape metric. Tangent coordinates are the aligned factor residuals
// Q_i R_i - Qbar from WGPA, flattened column-major to length k^2.

#include "spdstats/error.hpp"
#include "spdstats/frechet.hpp"
#include "spdstats/linalg.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace spdstats {

struct PgaModel {
  SymMat mean;
  Matrix mean_factor;            // Qbar, with mean = Qbar Qbar^T
  std::vector<Vector> loadings;  // unit k^2 vectors, descending variance
  std::vector<double> variances;
  Matrix scores;                 // N x loadings.size()
  double total_variance = 0.0;   // trace of the tangent covariance
};

inline Vector flatten(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

inline Matrix unflatten(const Vector& v, int k) {
  if (v.size() != static_cast<Eigen::Index>(k) * k) fail(ErrorCode::InvalidInput, "vector length is not k^2");
  return Eigen::Map<const Matrix>(v.data(), k, k);
}

inline PgaModel pga_fit(const std::vector<SymMat>& samples, int n_components, double tol = kWgpaTol,
                        int max_iter = kWgpaMaxIter) {
  const auto n = static_cast<int>(samples.size());
  if (n < 2) fail(ErrorCode::InsufficientSamples, "PGA needs at least two samples", n);
  const int k = samples.front().dim();
  const int limit = std::min(n - 1, k * k);
  if (n_components < 1 || n_components > limit) {
    fail(ErrorCode::InvalidInput, "number of components must lie in [1, min(N - 1, k^2)]", n_components);
  }

  const WgpaResult g = wgpa(WeightedSample::uniform(samples), tol, max_iter);
  const int dim = k * k;
  Matrix coords(n, dim);
  for (int i = 0; i < n; ++i) {
    coords.row(i) = flatten(g.aligned_factors[static_cast<std::size_t>(i)] - g.mean_factor).transpose();
  }
  const Matrix cov = coords.transpose() * coords / static_cast<double>(n - 1);
  const EigenPair e = sym_eig(SymMat(cov));

  PgaModel model{g.mean, g.mean_factor, {}, {}, Matrix(n, n_components), cov.trace()};
  for (int c = 0; c < n_components; ++c) {
    Vector u = e.vectors.col(c);
    Eigen::Index arg = 0;
    u.cwiseAbs().maxCoeff(&arg);
    if (u(arg) < 0.0) u = -u;
    model.loadings.push_back(u);
    model.variances.push_back(std::max(0.0, e.values(c)));
    model.scores.col(c) = coords * u;
  }
  return model;
}

/// (Qbar + t U_c)(Qbar + t U_c)^T for loading c.
inline SymMat geodesic_point(const PgaModel& model, int component, double t) {
  if (component < 0 || component >= static_cast<int>(model.loadings.size())) {
    fail(ErrorCode::IndexOutOfRange, "PGA component index out of range", component);
  }
  const auto k = static_cast<int>(model.mean_factor.rows());
  const Matrix q = model.mean_factor + t * unflatten(model.loadings[static_cast<std::size_t>(component)], k);
  return SymMat(q * q.transpose());
}

struct GeodesicPathSpec {
  Matrix start;      // factor at t = 0
  Matrix direction;  // factor-space direction; t runs over [0, 1]
  int n_points = 11;
};

/// Reference 3 x 3 path used by the simulation command and the phantoms:
/// start Q0 = diag(1.5, 0.8, 0.6) and direction U = Q0^{-T} H with H symmetric,
/// so Q(t)^T Q(s) is symmetric positive definite for t, s in [0, 1] and the
/// path points are already mutually Procrustes-aligned.
inline GeodesicPathSpec default_geodesic_path(double scale = 1.0, int n_points = 11) {
  Matrix start = Matrix::Zero(3, 3);
  start.diagonal() << 1.5, 0.8, 0.6;
  Matrix h(3, 3);
  h << 0.4, 0.15, 0.0, 0.15, -0.2, 0.05, 0.0, 0.05, 0.1;
  const Matrix dir = start.transpose().inverse() * h;
  return {scale * start, scale * dir, n_points};
}

/// n_paths noisy copies of the equally spaced path Q(t) = start + t direction,
/// with i.i.d. N(0, sigma^2) noise added to each factor entry. Returns the
/// pooled sample, path-major.
inline std::vector<SymMat> simulate_noisy_geodesic(const GeodesicPathSpec& path, double sigma, int n_paths,
                                                   std::uint64_t seed) {
  if (path.n_points < 2) fail(ErrorCode::InvalidInput, "a path needs at least two points", path.n_points);
  if (n_paths < 1) fail(ErrorCode::InvalidInput, "need at least one path", n_paths);
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) fail(ErrorCode::InvalidInput, "noise sigma must be nonnegative");
  if (path.start.rows() != path.start.cols() || path.start.rows() < 2 || path.direction.rows() != path.start.rows() ||
      path.direction.cols() != path.start.cols()) {
    fail(ErrorCode::InvalidInput, "path factors must be square and of equal size");
  }
  if (!path.start.allFinite() || !path.direction.allFinite()) fail(ErrorCode::InvalidInput, "non-finite path factor");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Index k = path.start.rows();
  std::vector<SymMat> out;
  out.reserve(static_cast<std::size_t>(n_paths) * path.n_points);
  for (int p = 0; p < n_paths; ++p) {
    for (int j = 0; j < path.n_points; ++j) {
      const double t = static_cast<double>(j) / (path.n_points - 1);
      Matrix q = path.start + t * path.direction;
      if (sigma > 0.0) {
        for (Eigen::Index c = 0; c < k; ++c)
          for (Eigen::Index r = 0; r < k; ++r) q(r, c) += sigma * normal(rng);
      }
      out.emplace_back(q * q.transpose());
    }
  }
  return out;
}

}  // namespace spdstats
