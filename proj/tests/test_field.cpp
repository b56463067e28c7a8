#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace spdstats;
using namespace spdstats::testing;

namespace {

TensorField constant_field(std::array<int, 3> dims, const SymMat& s) {
  TensorField f(dims, {1.0, 1.0, 1.0}, s.dim());
  for (std::size_t i = 0; i < f.size(); ++i) f.set(i, s);
  return f;
}

TensorField random_field(Rng& rng, std::array<int, 3> dims) {
  TensorField f(dims, {1.0, 1.0, 1.0}, 3);
  for (std::size_t i = 0; i < f.size(); ++i) f.set(i, random_pd(rng, 3, 0.7));
  return f;
}

// Golden-section minimization on [lo, hi].
template <typename F>
double golden(F f, double lo, double hi) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  while (b - a > 1e-12) {
    if (f(c) < f(d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - g * (b - a);
    d = a + g * (b - a);
  }
  return 0.5 * (a + b);
}

}  // namespace

TEST(TensorField, IndexingIsXFastest) {
  TensorField f({3, 4, 5}, {1.0, 2.0, 0.5}, 3);
  EXPECT_EQ(f.size(), 60u);
  EXPECT_EQ(f.index(1, 0, 0), 1u);
  EXPECT_EQ(f.index(0, 1, 0), 3u);
  EXPECT_EQ(f.index(0, 0, 1), 12u);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto c = f.coords(i);
    EXPECT_EQ(f.index(c[0], c[1], c[2]), i);
  }
  EXPECT_EQ(f.position(f.index(2, 3, 4)), Point3(2.0, 6.0, 2.0));
  EXPECT_DOUBLE_EQ(f.min_spacing(), 0.5);
}

TEST(TensorField, Validation) {
  EXPECT_THROW_CODE(TensorField({0, 1, 1}, {1.0, 1.0, 1.0}, 3), ErrorCode::InvalidInput);
  EXPECT_THROW_CODE(TensorField({1, 1, 1}, {1.0, -1.0, 1.0}, 3), ErrorCode::InvalidInput);
  TensorField f({2, 1, 1}, {1.0, 1.0, 1.0}, 3);
  EXPECT_THROW_CODE(f.set(0, SymMat::identity(2)), ErrorCode::InvalidInput);
  Matrix bad = Matrix::Identity(3, 3);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW_CODE(f.set(0, SymMat(bad)), ErrorCode::InvalidInput);
  EXPECT_EQ(f.present_count(), 0u);
}

TEST(Kernel, TwoPointWeights) {
  const std::vector<Point3> pos{Point3(0, 0, 0), Point3(1, 0, 0)};
  const auto w = kernel_weights(pos, Point3(0, 0, 0), KernelSpec{});
  EXPECT_NEAR(w[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(w[1], std::exp(-1.0) / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(w[0], 0.7311, 1e-4);
}

TEST(Kernel, SupportAndSharpKernels) {
  const std::vector<Point3> pos{Point3(0, 0, 0), Point3(5, 0, 0)};
  const auto w = kernel_weights(pos, Point3(0.5, 0, 0), KernelSpec{1.0, 3.0});
  EXPECT_DOUBLE_EQ(w[0], 1.0);
  EXPECT_DOUBLE_EQ(w[1], 0.0);
  // Would underflow without the shift to the nearest point.
  const auto s = kernel_weights(pos, Point3(2.4, 0, 0), KernelSpec{500.0, 3.0});
  EXPECT_DOUBLE_EQ(s[0], 1.0);
  EXPECT_THROW_CODE(kernel_weights(pos, Point3(20, 0, 0), KernelSpec{}), ErrorCode::EmptyNeighborhood);
  EXPECT_THROW_CODE(KernelSpec({0.0, 3.0}).validate(), ErrorCode::InvalidInput);
}

TEST(Interpolate, ConstantFieldIsReproduced) {
  Rng rng(51);
  const SymMat s = random_pd(rng, 3);
  const TensorField f = constant_field({4, 4, 3}, s);
  for (MetricKind kind : kAllMetricKinds) {
    const SymMat got = interpolate(f, Point3(1.3, 2.2, 0.7), kind, KernelSpec{});
    EXPECT_MAT_NEAR(got.matrix(), s.matrix(), 1e-9) << metric_name(kind);
    EXPECT_MAT_NEAR(interpolate_linear(f, Point3(1.3, 2.2, 0.7), kind).matrix(), s.matrix(), 1e-9);
  }
}

TEST(Interpolate, LogEuclideanMidpointOfScalars) {
  TensorField f({2, 1, 1}, {1.0, 1.0, 1.0}, 3);
  f.set(0, 2.0 * SymMat::identity(3));
  f.set(1, 18.0 * SymMat::identity(3));
  const SymMat mid = interpolate_linear(f, Point3(0.5, 0, 0), MetricKind::LogEuclidean);
  EXPECT_MAT_NEAR(mid.matrix(), 6.0 * Matrix::Identity(3, 3), 1e-10);
  // The kernel estimate at the midpoint weighs both voxels equally.
  EXPECT_MAT_NEAR(interpolate(f, Point3(0.5, 0, 0), MetricKind::LogEuclidean, KernelSpec{}).matrix(),
                  6.0 * Matrix::Identity(3, 3), 1e-10);
}

TEST(Interpolate, MaskedVoxelsAndBounds) {
  TensorField f({3, 1, 1}, {1.0, 1.0, 1.0}, 3);
  f.set(0, SymMat::identity(3));
  EXPECT_MAT_NEAR(interpolate(f, Point3(1.0, 0, 0), MetricKind::Euclidean, KernelSpec{}).matrix(),
                  Matrix::Identity(3, 3), 0.0);
  EXPECT_THROW_CODE(interpolate(f, Point3(2.0, 0, 0), MetricKind::Euclidean, KernelSpec{1.0, 1.0}),
                    ErrorCode::EmptyNeighborhood);
  EXPECT_THROW_CODE(interpolate(f, Point3(50.0, 0, 0), MetricKind::Euclidean, KernelSpec{}), ErrorCode::InvalidInput);
  EXPECT_THROW_CODE(interpolate_linear(f, Point3(1.5, 0, 0), MetricKind::Euclidean), ErrorCode::EmptyNeighborhood);
}

TEST(Upsample, DimensionsAndSpacing) {
  const TensorField f = constant_field({3, 2, 1}, SymMat::identity(3));
  const TensorField u = upsample(f, 2, MetricKind::Euclidean, KernelSpec{});
  EXPECT_EQ(u.dims(), (std::array<int, 3>{7, 4, 1}));
  EXPECT_DOUBLE_EQ(u.spacing()[0], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(u.spacing()[2], 1.0);
  EXPECT_EQ(u.present_count(), u.size());
  const TensorField same = upsample(f, 0, MetricKind::Euclidean, KernelSpec{});
  EXPECT_EQ(same.dims(), f.dims());
  EXPECT_THROW_CODE(upsample(f, -1, MetricKind::Euclidean, KernelSpec{}), ErrorCode::InvalidInput);
}

TEST(Upsample, LinearPathFollowsGeodesic) {
  TensorField f({2, 1, 1}, {1.0, 1.0, 1.0}, 3);
  const double a = 1.5, b = 12.0;
  f.set(0, a * SymMat::identity(3));
  f.set(1, b * SymMat::identity(3));
  for (MetricKind kind : {MetricKind::LogEuclidean, MetricKind::Riemannian}) {
    const TensorField u = upsample(f, 2, kind, KernelSpec{}, InterpMode::LinearPath);
    ASSERT_EQ(u.dims()[0], 4);
    for (int i = 0; i < 4; ++i) {
      const double t = i / 3.0;
      const double expected = std::pow(a, 1.0 - t) * std::pow(b, t);
      EXPECT_MAT_NEAR(u.at(i, 0, 0)->matrix(), expected * Matrix::Identity(3, 3), 1e-8);
    }
  }
}

TEST(Upsample, LinearPathRiemannianGeneralPair) {
  Rng rng(52);
  TensorField f({2, 1, 1}, {1.0, 1.0, 1.0}, 3);
  const SymMat a = random_pd(rng, 3), b = random_pd(rng, 3);
  f.set(0, a);
  f.set(1, b);
  const TensorField u = upsample(f, 2, MetricKind::Riemannian, KernelSpec{}, InterpMode::LinearPath);
  EXPECT_MAT_NEAR(u.at(1, 0, 0)->matrix(), riemannian_geodesic(a, b, 1.0 / 3.0).matrix(), 1e-8);
  EXPECT_MAT_NEAR(u.at(2, 0, 0)->matrix(), riemannian_geodesic(a, b, 2.0 / 3.0).matrix(), 1e-8);
}

TEST(Upsample, KeepsOriginalVoxelsUnderSharpKernel) {
  Rng rng(53);
  const TensorField f = random_field(rng, {3, 3, 1});
  const TensorField u = upsample(f, 1, MetricKind::Euclidean, KernelSpec{200.0, 3.0});
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) EXPECT_MAT_NEAR(u.at(2 * x, 2 * y, 0)->matrix(), f.at(x, y, 0)->matrix(), 1e-12);
}

TEST(Upsample, EmptyNeighbourhoodsStayMasked) {
  TensorField f({5, 1, 1}, {1.0, 1.0, 1.0}, 3);
  f.set(0, SymMat::identity(3));
  const TensorField u = upsample(f, 1, MetricKind::Euclidean, KernelSpec{1.0, 1.0});
  EXPECT_TRUE(u.at(0, 0, 0).has_value());
  EXPECT_TRUE(u.at(2, 0, 0).has_value());
  EXPECT_FALSE(u.at(3, 0, 0).has_value());
  EXPECT_FALSE(u.at(8, 0, 0).has_value());
}

TEST(Upsample, IndependentOfThreadCount) {
  Rng rng(54);
  const TensorField f = random_field(rng, {4, 3, 2});
  ::setenv("SPDSTATS_THREADS", "1", 1);
  const TensorField one = upsample(f, 1, MetricKind::Riemannian, KernelSpec{});
  ::setenv("SPDSTATS_THREADS", "4", 1);
  const TensorField four = upsample(f, 1, MetricKind::Riemannian, KernelSpec{});
  ::unsetenv("SPDSTATS_THREADS");
  for (std::size_t i = 0; i < one.size(); ++i) EXPECT_EQ(one.at(i)->matrix(), four.at(i)->matrix());
}

// ---------------------------------------------------------------------------

TEST(Smoothing, SpecValidation) {
  SmoothSpec s;
  s.beta = 3;
  EXPECT_THROW_CODE(s.validate(), ErrorCode::UnsupportedCase);
  s = SmoothSpec{};
  s.metric = MetricKind::Riemannian;
  s.beta = 1;
  EXPECT_THROW_CODE(s.validate(), ErrorCode::UnsupportedCase);
  s = SmoothSpec{};
  s.lambda = -1.0;
  EXPECT_THROW_CODE(s.validate(), ErrorCode::InvalidInput);
  s = SmoothSpec{};
  s.omega = 2;
  s.lambda = 1.0;
  s.mu = MuChoice::Zero;
  s.metric = MetricKind::LogEuclidean;
  EXPECT_THROW_CODE(resolve_mu(constant_field({1, 1, 1}, SymMat::identity(3)), s), ErrorCode::UnsupportedCase);
  s.metric = MetricKind::Cholesky;
  EXPECT_EQ(resolve_mu(constant_field({1, 1, 1}, SymMat::identity(3)), s)->matrix(), Matrix::Zero(3, 3));
}

TEST(Smoothing, WeightedMeanAndZeroLambda) {
  Rng rng(55);
  std::vector<SymMat> ts{random_pd(rng, 3), random_pd(rng, 3), random_pd(rng, 3)};
  const std::vector<double> w{0.2, 0.5, 0.3};
  for (MetricKind kind : kAllMetricKinds) {
    SmoothSpec spec;
    spec.metric = kind;
    const SymMat expected = frechet_mean(kind, WeightedSample(ts, w));
    EXPECT_MAT_NEAR(solve_smoothing(spec, ts, w, std::nullopt).matrix(), expected.matrix(), 1e-12);
    if (!is_flat(kind)) continue;
    spec.omega = 2;  // lambda = 0: the penalty term is absent
    EXPECT_MAT_NEAR(solve_smoothing(spec, ts, w, std::nullopt).matrix(), expected.matrix(), 1e-12);
  }
}

TEST(Smoothing, ShrinkageMatchesOneDimensionalSearch) {
  Rng rng(56);
  std::vector<SymMat> ts{random_pd(rng, 3), random_pd(rng, 3), random_pd(rng, 3), random_pd(rng, 3)};
  const std::vector<double> w{0.1, 0.4, 0.3, 0.2};
  const SymMat mu = SymMat::identity(3);
  for (MetricKind kind : {MetricKind::Euclidean, MetricKind::LogEuclidean, MetricKind::RootEuclidean}) {
    SmoothSpec spec;
    spec.metric = kind;
    spec.omega = 2;
    spec.lambda = 0.7;
    const SymMat got = solve_smoothing(spec, ts, w, mu);
    // The minimizer lies on the flat segment between the weighted mean and mu.
    const Matrix mean = to_flat(kind, frechet_mean(kind, WeightedSample(ts, w)));
    const Matrix m = to_flat(kind, mu);
    auto at = [&](double s) { return from_flat(kind, mean + s * (m - mean)); };
    const double s = golden([&](double x) { return smoothing_objective(spec, ts, w, mu, at(x)); }, 0.0, 1.0);
    EXPECT_MAT_NEAR(got.matrix(), at(s).matrix(), 1e-6) << metric_name(kind);
    EXPECT_NEAR(s, 0.7 / 1.7, 1e-6);
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix e = gaussian_matrix(rng, 3, 3) * 1e-4;
      EXPECT_LE(smoothing_objective(spec, ts, w, mu, got),
                smoothing_objective(spec, ts, w, mu, SymMat(got.matrix() + e + e.transpose())) + 1e-14);
    }
  }
}

TEST(Smoothing, RadialPenaltyIsOptimal) {
  Rng rng(57);
  std::vector<SymMat> ts{random_pd(rng, 3), random_pd(rng, 3), random_pd(rng, 3)};
  const std::vector<double> w{0.3, 0.3, 0.4};
  const SymMat mu = SymMat::identity(3);
  SmoothSpec spec;
  spec.omega = 1;
  for (double lambda : {0.05, 0.5, 50.0}) {
    spec.lambda = lambda;
    const SymMat got = solve_smoothing(spec, ts, w, mu);
    const double f0 = smoothing_objective(spec, ts, w, mu, got);
    for (int trial = 0; trial < 30; ++trial) {
      const Matrix e = gaussian_matrix(rng, 3, 3) * 1e-3;
      EXPECT_LE(f0, smoothing_objective(spec, ts, w, mu, SymMat(got.matrix() + e + e.transpose())) + 1e-12);
    }
  }
  // A large penalty pins the estimate to mu.
  spec.lambda = 50.0;
  EXPECT_MAT_NEAR(solve_smoothing(spec, ts, w, mu).matrix(), mu.matrix(), 0.0);
}

TEST(Weiszfeld, FirstOrderCondition) {
  Rng rng(58);
  std::vector<Matrix> pts;
  for (int i = 0; i < 7; ++i) pts.push_back(gaussian_matrix(rng, 3, 3));
  const std::vector<double> w{0.1, 0.2, 0.1, 0.15, 0.15, 0.2, 0.1};
  const WeiszfeldResult r = weiszfeld(pts, w);
  ASSERT_TRUE(r.converged);
  Matrix grad = Matrix::Zero(3, 3);
  for (std::size_t i = 0; i < pts.size(); ++i) grad += w[i] * (r.point - pts[i]) / (r.point - pts[i]).norm();
  EXPECT_LE(grad.norm(), 1e-6);
}

TEST(Weiszfeld, DataPointOptimum) {
  const std::vector<Matrix> pts{Matrix::Zero(2, 2), Matrix::Identity(2, 2), 2.0 * Matrix::Identity(2, 2)};
  const WeiszfeldResult r = weiszfeld(pts, {0.6, 0.2, 0.2});
  EXPECT_EQ(r.point, pts[0]);
  // Collinear points: the median is the middle one.
  EXPECT_MAT_NEAR(weiszfeld(pts, {1.0 / 3, 1.0 / 3, 1.0 / 3}).point, pts[1], 1e-9);
}

TEST(Weiszfeld, ResistsOutlier) {
  Rng rng(59);
  std::vector<SymMat> ts;
  for (int i = 0; i < 9; ++i) {
    const Matrix e = gaussian_matrix(rng, 3, 3) * 0.02;
    ts.emplace_back(Matrix::Identity(3, 3) + e + e.transpose());
  }
  ts.push_back(10.0 * SymMat::identity(3));
  const std::vector<double> w(ts.size(), 0.1);
  SmoothSpec median;
  median.beta = 1;
  const SymMat med = solve_smoothing(median, ts, w, std::nullopt);
  const SymMat mean = solve_smoothing(SmoothSpec{}, ts, w, std::nullopt);
  const SymMat id = SymMat::identity(3);
  EXPECT_LT(distance(MetricKind::Euclidean, med, id), distance(MetricKind::Euclidean, mean, id));
  EXPECT_LT(distance(MetricKind::Euclidean, med, id), 0.2);
}

TEST(Smooth, ConstantFieldUnchangedForEveryMetric) {
  Rng rng(60);
  const SymMat s = random_pd(rng, 3);
  const TensorField f = constant_field({3, 3, 2}, s);
  for (MetricKind kind : kAllMetricKinds) {
    SmoothSpec spec;
    spec.metric = kind;
    const TensorField out = smooth(f, spec, KernelSpec{});
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_MAT_NEAR(out.at(i)->matrix(), s.matrix(), 1e-9);
  }
}

TEST(Smooth, MaskPreserved) {
  TensorField f = constant_field({3, 1, 1}, SymMat::identity(3));
  f.set(1, std::nullopt);
  const TensorField out = smooth(f, SmoothSpec{}, KernelSpec{});
  EXPECT_TRUE(out.at(0).has_value());
  EXPECT_FALSE(out.at(1).has_value());
  EXPECT_TRUE(out.at(2).has_value());
}

TEST(Smooth, UsesOriginalValues) {
  TensorField f({3, 1, 1}, {1.0, 1.0, 1.0}, 2);
  f.set(0, SymMat::identity(2));
  f.set(1, 2.0 * SymMat::identity(2));
  f.set(2, 3.0 * SymMat::identity(2));
  const TensorField out = smooth(f, SmoothSpec{}, KernelSpec{1.0, 1.0});
  const double e = std::exp(-1.0);
  EXPECT_NEAR((*out.at(0))(0, 0), (1.0 + 2.0 * e) / (1.0 + e), 1e-14);
  EXPECT_NEAR((*out.at(1))(0, 0), 2.0, 1e-14);
}
