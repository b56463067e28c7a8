#pragma once
// Weighted Frechet means under each metric.
//
// Flat metrics average in the flat space and map back. The Riemannian mean
// runs the fixed-point Karcher iteration with step halving on objective
// increase. The size-and-shape mean is the Weighted Generalized Procrustes
// Algorithm. The full Procrustes mean alternates rotations with a dominant
// eigenvector update on unit-size factors.

#include "spdstats/error.hpp"
#include "spdstats/linalg.hpp"
#include "spdstats/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace spdstats {

class WeightedSample {
 public:
  WeightedSample(std::vector<SymMat> matrices, std::vector<double> weights)
      : matrices_(std::move(matrices)), weights_(std::move(weights)) {
    if (matrices_.empty()) fail(ErrorCode::InvalidInput, "weighted sample needs at least one matrix");
    if (weights_.size() != matrices_.size()) {
      fail(ErrorCode::InvalidInput, "number of weights does not match number of matrices");
    }
    double total = 0.0;
    for (double w : weights_) {
      if (!std::isfinite(w) || w < 0.0) fail(ErrorCode::InvalidInput, "weights must be finite and nonnegative", w);
      total += w;
    }
    if (!(total > 0.0)) fail(ErrorCode::InvalidInput, "weights sum to zero");
    for (double& w : weights_) w /= total;
    const int k = matrices_.front().dim();
    for (const SymMat& s : matrices_) {
      if (s.dim() != k) fail(ErrorCode::InvalidInput, "sample matrices differ in dimension");
    }
  }

  static WeightedSample uniform(std::vector<SymMat> matrices) {
    std::vector<double> w(matrices.size(), 1.0);
    return WeightedSample(std::move(matrices), std::move(w));
  }

  std::size_t size() const { return matrices_.size(); }
  int dim() const { return matrices_.front().dim(); }
  const std::vector<SymMat>& matrices() const { return matrices_; }
  const std::vector<double>& weights() const { return weights_; }
  const SymMat& matrix(std::size_t i) const { return matrices_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }

 private:
  std::vector<SymMat> matrices_;
  std::vector<double> weights_;
};

struct SolverOptions {
  std::optional<double> tol;
  std::optional<int> max_iter;
};

inline constexpr double kRiemannianTol = 1e-9;
inline constexpr int kRiemannianMaxIter = 200;
inline constexpr double kWgpaTol = 1e-10;
inline constexpr int kWgpaMaxIter = 1000;

struct MeanResult {
  SymMat mean;
  std::vector<double> objective_trace;
  int iterations = 0;
};

struct WgpaResult {
  SymMat mean;
  Matrix mean_factor;                   // sum_i w_i Q_i R_i
  std::vector<OrthogonalMat> rotations;  // accumulated R_i per sample
  std::vector<Matrix> aligned_factors;   // Q_i R_i
  std::vector<double> objective_trace;   // S_c after initialization and each sweep
  int iterations = 0;
};

/// sum_i w_i d(S_i, sigma)^2
inline double frechet_objective(const MetricId& metric, const WeightedSample& sample, const SymMat& sigma) {
  double f = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double d = distance(metric, sample.matrix(i), sigma);
    f += sample.weight(i) * d * d;
  }
  return f;
}

namespace detail {

inline double wgpa_objective(const std::vector<Matrix>& q, const std::vector<double>& w) {
  Matrix mean = Matrix::Zero(q.front().rows(), q.front().cols());
  for (std::size_t i = 0; i < q.size(); ++i) mean += w[i] * q[i];
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) s += w[i] * (q[i] - mean).squaredNorm();
  return s;
}

inline Matrix weighted_factor_mean(const std::vector<Matrix>& q, const std::vector<double>& w) {
  Matrix mean = Matrix::Zero(q.front().rows(), q.front().cols());
  for (std::size_t i = 0; i < q.size(); ++i) mean += w[i] * q[i];
  return mean;
}

}  // namespace detail

/// Weighted Generalized Procrustes Algorithm. Rotations are updated in place
/// one sample at a time within each sweep; the loop stops when successive
/// objective values differ by at most `tol`.
inline WgpaResult wgpa(const WeightedSample& sample, double tol = kWgpaTol, int max_iter = kWgpaMaxIter) {
  const std::size_t n = sample.size();
  const int k = sample.dim();
  const std::vector<double>& w = sample.weights();

  std::vector<Matrix> q;
  q.reserve(n);
  for (const SymMat& s : sample.matrices()) q.push_back(factor_psd(s));
  std::vector<Matrix> rot(n, Matrix::Identity(k, k));

  auto finish = [&](std::vector<double> trace, int iterations) {
    const Matrix qbar = detail::weighted_factor_mean(q, w);
    std::vector<OrthogonalMat> rotations;
    rotations.reserve(n);
    for (const Matrix& r : rot) rotations.emplace_back(r);
    return WgpaResult{SymMat(qbar * qbar.transpose()), qbar, std::move(rotations), q,
                      std::move(trace), iterations};
  };

  for (std::size_t i = 0; i < n; ++i) {
    if (w[i] == 1.0) {
      // All weight on one sample; the leave-one-out mean would divide by zero.
      WgpaResult r = finish({0.0}, 0);
      r.mean = sample.matrix(i);
      r.mean_factor = q[i];
      return r;
    }
  }

  double s_prev = 0.0;
  double s_cur = detail::wgpa_objective(q, w);
  std::vector<double> trace{s_cur};
  int iterations = 0;
  while (std::abs(s_prev - s_cur) > tol) {
    if (iterations >= max_iter) {
      const Matrix qbar = detail::weighted_factor_mean(q, w);
      throw NonConvergenceError("WGPA exceeded max_iter", qbar * qbar.transpose(), s_cur);
    }
    Matrix total = detail::weighted_factor_mean(q, w);
    for (std::size_t i = 0; i < n; ++i) {
      const Matrix others = (total - w[i] * q[i]) / (1.0 - w[i]);
      const Matrix r = opa_rotation(others, q[i]).matrix();
      const Matrix updated = q[i] * r;
      // Skip rotations that do not reduce the residual (roundoff near the optimum).
      if (!((updated - others).squaredNorm() < (q[i] - others).squaredNorm())) continue;
      total += w[i] * (updated - q[i]);
      q[i] = updated;
      rot[i] = rot[i] * r;
    }
    s_prev = s_cur;
    s_cur = detail::wgpa_objective(q, w);
    trace.push_back(s_cur);
    ++iterations;
  }
  return finish(std::move(trace), iterations);
}

/// Karcher mean for the affine-invariant metric, started from the
/// log-Euclidean mean. Converged when the whitened tangent mean has
/// Frobenius norm below `tol`.
inline MeanResult riemannian_mean_detailed(const WeightedSample& sample, double tol = kRiemannianTol,
                                           int max_iter = kRiemannianMaxIter) {
  const MetricId metric(MetricKind::Riemannian);
  Matrix acc = Matrix::Zero(sample.dim(), sample.dim());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    acc += sample.weight(i) * mat_func(sample.matrix(i), MatFunc::log()).matrix();
  }
  SymMat sigma = mat_func(SymMat(acc), MatFunc::exp());
  double f = frechet_objective(metric, sample, sigma);
  std::vector<double> trace{f};

  for (int it = 0;; ++it) {
    const EigenPair e = sym_eig(sigma);
    const Vector root = e.values.cwiseSqrt();
    const Matrix half = e.vectors * root.asDiagonal() * e.vectors.transpose();
    const Matrix inv_half = e.vectors * root.cwiseInverse().asDiagonal() * e.vectors.transpose();

    Matrix tangent = Matrix::Zero(sample.dim(), sample.dim());
    for (std::size_t i = 0; i < sample.size(); ++i) {
      const SymMat whitened(inv_half * sample.matrix(i).matrix() * inv_half);
      tangent += sample.weight(i) * mat_func(whitened, MatFunc::log()).matrix();
    }
    if (tangent.norm() < tol) return MeanResult{sigma, std::move(trace), it};
    if (it >= max_iter) {
      throw NonConvergenceError("Riemannian mean exceeded max_iter", sigma.matrix(), f);
    }

    double step = 1.0;
    for (;;) {
      const SymMat candidate(half * mat_func(SymMat(step * tangent), MatFunc::exp()).matrix() * half);
      const double fc = frechet_objective(metric, sample, candidate);
      if (fc <= f || step < 1e-8) {
        sigma = candidate;
        f = fc;
        break;
      }
      step *= 0.5;
    }
    trace.push_back(f);
  }
}

inline SymMat riemannian_mean(const WeightedSample& sample, double tol = kRiemannianTol,
                              int max_iter = kRiemannianMaxIter) {
  return riemannian_mean_detailed(sample, tol, max_iter).mean;
}

/// Full Procrustes (shape) mean. Shapes are unit-norm Cholesky factors; the
/// returned factor is rescaled to the weighted mean input size
/// sum_i w_i ||chol(S_i)||, so a single-point sample returns itself.
inline MeanResult full_procrustes_mean(const WeightedSample& sample, double tol = kWgpaTol,
                                       int max_iter = kWgpaMaxIter) {
  const std::size_t n = sample.size();
  const int k = sample.dim();
  const std::vector<double>& w = sample.weights();

  std::vector<Matrix> z;
  z.reserve(n);
  double size = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Matrix q = cholesky_lower(sample.matrix(i)).matrix();
    const double norm = q.norm();
    size += w[i] * norm;
    z.push_back(q / norm);
  }

  auto objective = [&](const Matrix& m) {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double rho = procrustes_trace(m, z[i]);
      f += w[i] * std::max(0.0, 1.0 - rho * rho);
    }
    return f;
  };

  Matrix m = detail::weighted_factor_mean(z, w);
  if (m.norm() < 1e-12) {
    const auto heaviest = static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
    m = z[heaviest];
  }
  m /= m.norm();
  double f = objective(m);
  std::vector<double> trace{f};

  const int dim2 = k * k;
  int it = 0;
  for (;; ++it) {
    if (it >= max_iter) {
      throw NonConvergenceError("full Procrustes mean exceeded max_iter", size * size * m * m.transpose(), f);
    }
    Matrix scatter = Matrix::Zero(dim2, dim2);
    Matrix aligned_sum = Matrix::Zero(k, k);
    for (std::size_t i = 0; i < n; ++i) {
      const Matrix y = z[i] * opa_rotation(m, z[i]).matrix();
      const Eigen::Map<const Vector> v(y.data(), dim2);
      scatter += w[i] * v * v.transpose();
      aligned_sum += w[i] * y;
    }
    const EigenPair e = sym_eig(SymMat(scatter));
    Matrix next = Eigen::Map<const Matrix>(e.vectors.col(0).data(), k, k);
    if ((next.array() * aligned_sum.array()).sum() < 0.0) next = -next;
    const double fn = objective(next);
    m = next;
    const double change = std::abs(f - fn);
    f = fn;
    trace.push_back(f);
    if (change <= tol) break;
  }
  return MeanResult{SymMat(size * size * m * m.transpose()), std::move(trace), it + 1};
}

/// Weighted Frechet mean with the objective trace where the solver is iterative.
inline MeanResult frechet_mean_detailed(const MetricId& metric, const WeightedSample& sample,
                                        const SolverOptions& opts = {}) {
  switch (metric.kind()) {
    case MetricKind::Riemannian:
      return riemannian_mean_detailed(sample, opts.tol.value_or(kRiemannianTol),
                                      opts.max_iter.value_or(kRiemannianMaxIter));
    case MetricKind::ProcrustesSizeShape: {
      WgpaResult r = wgpa(sample, opts.tol.value_or(kWgpaTol), opts.max_iter.value_or(kWgpaMaxIter));
      return MeanResult{std::move(r.mean), std::move(r.objective_trace), r.iterations};
    }
    case MetricKind::FullProcrustes:
      return full_procrustes_mean(sample, opts.tol.value_or(kWgpaTol), opts.max_iter.value_or(kWgpaMaxIter));
    default: {
      Matrix acc = Matrix::Zero(sample.dim(), sample.dim());
      for (std::size_t i = 0; i < sample.size(); ++i) {
        if (sample.weight(i) == 0.0) continue;
        acc += sample.weight(i) * to_flat(metric, sample.matrix(i));
      }
      return MeanResult{from_flat(metric, acc), {}, 0};
    }
  }
}

inline SymMat frechet_mean(const MetricId& metric, const WeightedSample& sample, const SolverOptions& opts = {}) {
  return frechet_mean_detailed(metric, sample, opts).mean;
}

}  // namespace spdstats
