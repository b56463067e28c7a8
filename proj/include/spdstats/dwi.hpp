#pragma once
// Diffusion-weighted signal model Z_j = Z_0 exp(-b g_j^T D g_j): forward
// simulation with optional noise and log-linear least-squares estimation of D.

#include "spdstats/error.hpp"
#include "spdstats/linalg.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace spdstats {

using Direction = Eigen::Vector3d;

struct GradientScheme {
  double b = 1000.0;  // s/mm^2
  std::vector<Direction> directions;

  void validate() const {
    if (!(b > 0.0) || !std::isfinite(b)) fail(ErrorCode::InvalidInput, "b-value must be positive", b);
    if (directions.empty()) fail(ErrorCode::InvalidInput, "gradient scheme has no directions");
    for (const Direction& g : directions) {
      if (!g.allFinite() || std::abs(g.norm() - 1.0) > 1e-12) {
        fail(ErrorCode::InvalidInput, "gradient directions must be unit vectors", g.norm());
      }
    }
  }
};

struct SignalSet {
  double z0 = 1.0;
  std::vector<double> z;
};

enum class NoiseKind { None, LogGaussian, Gaussian, Rician };

constexpr std::string_view noise_name(NoiseKind k) {
  switch (k) {
    case NoiseKind::None: return "none";
    case NoiseKind::LogGaussian: return "log-gaussian";
    case NoiseKind::Gaussian: return "gaussian";
    case NoiseKind::Rician: return "rician";
  }
  return "unknown";
}

inline NoiseKind parse_noise(std::string_view s) {
  for (auto k : {NoiseKind::None, NoiseKind::LogGaussian, NoiseKind::Gaussian, NoiseKind::Rician}) {
    if (noise_name(k) == s) return k;
  }
  fail(ErrorCode::InvalidInput, "unknown noise model '" + std::string(s) + "'");
}

struct NoiseModel {
  NoiseKind kind = NoiseKind::None;
  double sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) fail(ErrorCode::InvalidInput, "noise sigma must be nonnegative");
    if ((sigma == 0.0) != (kind == NoiseKind::None)) {
      fail(ErrorCode::InvalidInput, "noise sigma must be zero exactly when the noise model is 'none'");
    }
  }
};

/// SplitMix64 finalizer; used to derive independent per-voxel seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline SignalSet simulate_signals(const SymMat& d, const GradientScheme& scheme, double z0,
                                  const NoiseModel& noise = {}) {
  scheme.validate();
  noise.validate();
  if (d.dim() != 3) fail(ErrorCode::InvalidInput, "diffusion tensors are 3 x 3");
  if (!(z0 > 0.0) || !std::isfinite(z0)) fail(ErrorCode::InvalidInput, "baseline signal must be positive", z0);
  const EigenPair e = sym_eig(d);
  const double lmin = e.values(2);
  if (lmin < -rank_tol(e.values(0))) fail(ErrorCode::NotPSD, "diffusion tensor is not PSD", lmin);

  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  SignalSet out{z0, {}};
  out.z.reserve(scheme.directions.size());
  for (const Direction& g : scheme.directions) {
    const double clean = z0 * std::exp(-scheme.b * g.dot(d.matrix() * g));
    double z = clean;
    switch (noise.kind) {
      case NoiseKind::None:
        break;
      case NoiseKind::LogGaussian:
        z = clean * std::exp(noise.sigma * normal(rng));
        break;
      case NoiseKind::Gaussian:
        z = std::max(0.0, clean + noise.sigma * normal(rng));
        break;
      case NoiseKind::Rician: {
        const double re = clean + noise.sigma * normal(rng);
        const double im = noise.sigma * normal(rng);
        z = std::sqrt(re * re + im * im);
        break;
      }
    }
    out.z.push_back(z);
  }
  return out;
}

struct FitOptions {
  bool project_psd = false;  // clamp negative eigenvalues to zero
  bool fit_z0 = false;       // estimate log Z_0 as a seventh unknown
};

struct TensorFit {
  SymMat d;
  double z0;
};

namespace detail {

// Coefficients of the upper triangle (xx, xy, xz, yy, yz, zz) in g^T D g.
inline Eigen::Matrix<double, 1, 6> quadratic_row(const Direction& g) {
  Eigen::Matrix<double, 1, 6> r;
  r << g.x() * g.x(), 2.0 * g.x() * g.y(), 2.0 * g.x() * g.z(), g.y() * g.y(), 2.0 * g.y() * g.z(), g.z() * g.z();
  return r;
}

inline void check_condition(const Matrix& design) {
  const EigenPair e = sym_eig(SymMat(design.transpose() * design));
  const double lmax = e.values(0);
  const double lmin = e.values(e.values.size() - 1);
  if (!(lmin > 0.0) || lmax / lmin > 1e12) {
    fail(ErrorCode::DegenerateDesign, "gradient directions do not determine the tensor", lmin > 0.0 ? lmax / lmin : 0.0);
  }
}

}  // namespace detail

inline TensorFit fit_tensor_ls_detailed(const SignalSet& signals, const GradientScheme& scheme,
                                        const FitOptions& opts = {}) {
  scheme.validate();
  const std::size_t m = scheme.directions.size();
  if (signals.z.size() != m) fail(ErrorCode::InvalidInput, "signal count does not match the gradient scheme");
  if (m < 6) fail(ErrorCode::InvalidInput, "tensor estimation needs at least 6 directions");
  if (!(signals.z0 > 0.0)) fail(ErrorCode::InvalidInput, "baseline signal must be positive", signals.z0);
  for (double z : signals.z) {
    if (!(z > 0.0) || !std::isfinite(z)) fail(ErrorCode::InvalidInput, "signals must be positive", z);
  }

  Vector coef;
  double z0 = signals.z0;
  if (!opts.fit_z0) {
    Matrix x(static_cast<Eigen::Index>(m), 6);
    Vector y(static_cast<Eigen::Index>(m));
    const double log_z0 = std::log(signals.z0);
    for (std::size_t j = 0; j < m; ++j) {
      const auto r = static_cast<Eigen::Index>(j);
      x.row(r) = scheme.b * detail::quadratic_row(scheme.directions[j]);
      y(r) = log_z0 - std::log(signals.z[j]);
    }
    detail::check_condition(x);
    coef = x.colPivHouseholderQr().solve(y);
  } else {
    // Rows: the baseline reading (b = 0) followed by each gradient reading.
    Matrix x = Matrix::Zero(static_cast<Eigen::Index>(m + 1), 7);
    Vector y(static_cast<Eigen::Index>(m + 1));
    x(0, 0) = 1.0;
    y(0) = std::log(signals.z0);
    for (std::size_t j = 0; j < m; ++j) {
      const auto r = static_cast<Eigen::Index>(j + 1);
      x(r, 0) = 1.0;
      x.block(r, 1, 1, 6) = -scheme.b * detail::quadratic_row(scheme.directions[j]);
      y(r) = std::log(signals.z[j]);
    }
    detail::check_condition(x);
    const Vector full = x.colPivHouseholderQr().solve(y);
    z0 = std::exp(full(0));
    coef = full.tail(6);
  }

  const std::vector<double> upper(coef.data(), coef.data() + 6);
  SymMat d = SymMat::from_upper(3, upper);
  if (opts.project_psd) {
    const EigenPair e = sym_eig(d);
    d = reconstruct(e.vectors, e.values.cwiseMax(0.0));
  }
  return TensorFit{d, z0};
}

inline SymMat fit_tensor_ls(const SignalSet& signals, const GradientScheme& scheme, const FitOptions& opts = {}) {
  return fit_tensor_ls_detailed(signals, scheme, opts).d;
}

/// Axes plus the six face diagonals reduced to six axial directions.
inline std::vector<Direction> classic_six_directions() {
  const double h = 1.0 / std::sqrt(2.0);
  return {Direction(1, 0, 0), Direction(0, 1, 0), Direction(0, 0, 1),
          Direction(h, h, 0), Direction(h, 0, h), Direction(0, h, h)};
}

/// m axial directions spread by minimizing the electrostatic energy of
/// antipodal charge pairs, from a seeded random start. Returned on the z >= 0
/// hemisphere.
inline std::vector<Direction> electrostatic_directions(int m, std::uint64_t seed = 1) {
  if (m < 1) fail(ErrorCode::InvalidInput, "need at least one direction");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Direction> g(static_cast<std::size_t>(m));
  for (auto& v : g) {
    do {
      v = Direction(normal(rng), normal(rng), normal(rng));
    } while (v.norm() < 1e-6);
    v.normalize();
  }

  auto energy = [](const std::vector<Direction>& p) {
    double e = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
      for (std::size_t j = i + 1; j < p.size(); ++j)
        e += 1.0 / (p[i] - p[j]).norm() + 1.0 / (p[i] + p[j]).norm();
    return e;
  };

  double step = 0.1;
  double e = energy(g);
  for (int it = 0; it < 2000 && step > 1e-10; ++it) {
    std::vector<Direction> force(g.size(), Direction::Zero());
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (i == j) continue;
        const Direction a = g[i] - g[j];
        const Direction b = g[i] + g[j];
        force[i] += a / std::pow(a.norm(), 3) + b / std::pow(b.norm(), 3);
      }
      force[i] -= force[i].dot(g[i]) * g[i];
    }
    double fmax = 0.0;
    for (const auto& f : force) fmax = std::max(fmax, f.norm());
    if (fmax == 0.0) break;
    std::vector<Direction> trial(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) trial[i] = (g[i] + step * force[i] / fmax).normalized();
    const double et = energy(trial);
    if (et < e) {
      g = std::move(trial);
      e = et;
      step *= 1.2;
    } else {
      step *= 0.5;
    }
  }
  for (auto& v : g) {
    if (v.z() < 0.0 || (v.z() == 0.0 && v.y() < 0.0)) v = -v;
    v.normalize();
  }
  return g;
}

}  // namespace spdstats
