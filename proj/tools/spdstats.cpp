// spdstats command-line interface.
//
// Exit status: 0 on success, 1 on domain errors (the message names the error
// code), 2 on usage errors.

#include "spdstats/spdstats.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace spdstats;

std::string fmt12(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

MetricId metric_from(const std::string& name, const std::optional<double>& alpha) {
  if (alpha && name != "power") fail(ErrorCode::InvalidInput, "--alpha only applies to the power metric");
  return parse_metric(name, alpha);
}

Point3 point_from_csv(const std::vector<double>& v, const char* what) {
  if (v.size() != 3) fail(ErrorCode::InvalidInput, std::string(what) + " needs three values");
  return {v[0], v[1], v[2]};
}

void emit(const std::optional<std::string>& path, const Json& j) {
  if (path) {
    write_json(*path, j);
  } else {
    std::cout << dump_json(j);
  }
}

SymMat read_symmat(const std::string& path) { return symmat_from_json(read_json(path)); }

const std::vector<std::string> kMetricNames = {"euclidean", "log-euclidean", "riemannian",      "cholesky",
                                               "root-euclidean", "procrustes", "full-procrustes", "power"};

struct KernelArgs {
  double gamma = KernelSpec{}.gamma;
  double support = KernelSpec{}.support_radius;
  KernelSpec spec() const { return {gamma, support}; }
};

void add_kernel(CLI::App* app, KernelArgs& k) {
  app->add_option("--gamma", k.gamma, "Gaussian kernel sharpness (physical units^-2)")->capture_default_str();
  app->add_option("--support", k.support, "kernel support radius in voxels")->capture_default_str();
}

struct MetricArgs {
  std::string name = "euclidean";
  std::optional<double> alpha;
  MetricId id() const { return metric_from(name, alpha); }
};

void add_metric(CLI::App* app, MetricArgs& m, bool required) {
  auto* opt = app->add_option("--metric", m.name, "metric")->check(CLI::IsMember(kMetricNames));
  if (required) {
    opt->required();
  } else {
    opt->capture_default_str();
  }
  app->add_option("--alpha", m.alpha, "exponent of the power metric (default 0.5)");
}

struct SolverArgs {
  std::optional<double> tol;
  std::optional<int> max_iter;
  SolverOptions options() const { return {tol, max_iter}; }
};

void add_solver(CLI::App* app, SolverArgs& s) {
  app->add_option("--tol", s.tol, "iterative solver tolerance");
  app->add_option("--max-iter", s.max_iter, "iterative solver iteration cap");
}

// ---------------------------------------------------------------------------

struct DistArgs {
  MetricArgs metric;
  std::string a, b;
};

int run_dist(const DistArgs& args) {
  std::cout << fmt12(distance(args.metric.id(), read_symmat(args.a), read_symmat(args.b))) << '\n';
  return 0;
}

struct MeanArgs {
  MetricArgs metric;
  SolverArgs solver;
  std::string input;
  std::vector<double> weights;
  std::optional<std::string> output;
  std::optional<std::string> trace;
};

int run_mean(const MeanArgs& args) {
  MatrixList list = matrix_list_from_json(read_json(args.input));
  std::vector<double> w;
  if (!args.weights.empty()) {
    w = args.weights;
  } else if (list.weights) {
    w = *list.weights;
  } else {
    w.assign(list.matrices.size(), 1.0);
  }
  const WeightedSample sample(std::move(list.matrices), std::move(w));
  const MeanResult r = frechet_mean_detailed(args.metric.id(), sample, args.solver.options());
  if (args.trace) {
    std::string csv = "iteration,objective\n";
    for (std::size_t i = 0; i < r.objective_trace.size(); ++i) {
      csv += std::to_string(i) + "," + format_double(r.objective_trace[i]) + "\n";
    }
    write_file_atomic(*args.trace, csv);
  }
  emit(args.output, Json{{"matrix", matrix_to_json(r.mean.matrix())},
                         {"metric", std::string(metric_name(args.metric.id().kind()))},
                         {"iterations", r.iterations}});
  return 0;
}

struct AnisotropyArgs {
  std::string measure;
  std::string input;
  std::optional<std::string> output;
};

int run_anisotropy(const AnisotropyArgs& args) {
  const AnisotropyMeasure m = parse_measure(args.measure);
  const Json j = read_json(args.input);
  if (!is_field_json(j)) {
    std::cout << fmt12(anisotropy(m, symmat_from_json(j))) << '\n';
    return 0;
  }
  const TensorField f = field_from_json(j);
  Json values = Json::array();
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.at(i)) {
      values.push_back(anisotropy(m, *f.at(i)));
    } else {
      values.push_back(nullptr);
    }
  }
  emit(args.output, Json{{"measure", args.measure}, {"dims", f.dims()}, {"spacing", f.spacing()},
                         {"values", std::move(values)}});
  return 0;
}

struct InterpArgs {
  MetricArgs metric;
  SolverArgs solver;
  KernelArgs kernel;
  std::string input;
  std::string mode = "kernel";
  int factor = 1;
  std::vector<double> at;
  std::optional<std::string> output;
};

int run_interp(const InterpArgs& args) {
  const TensorField f = read_field(args.input);
  const InterpMode mode = parse_interp_mode(args.mode);
  if (!args.at.empty()) {
    const Point3 p = point_from_csv(args.at, "--at");
    const SymMat s = mode == InterpMode::Kernel
                         ? interpolate(f, p, args.metric.id(), args.kernel.spec(), args.solver.options())
                         : interpolate_linear(f, p, args.metric.id(), args.solver.options());
    emit(args.output, Json{{"matrix", matrix_to_json(s.matrix())}});
    return 0;
  }
  if (!args.output) fail(ErrorCode::InvalidInput, "--output is required when upsampling");
  write_field(*args.output,
              upsample(f, args.factor, args.metric.id(), args.kernel.spec(), mode, args.solver.options()));
  return 0;
}

struct SmoothArgs {
  MetricArgs metric;
  SolverArgs solver;
  KernelArgs kernel;
  std::string input, output;
  int beta = 2, omega = 0;
  double lambda = 0.0;
  std::string mu = "identity";
};

int run_smooth(const SmoothArgs& args) {
  SmoothSpec spec;
  spec.beta = args.beta;
  spec.omega = args.omega;
  spec.lambda = args.lambda;
  spec.mu = parse_mu(args.mu);
  spec.metric = args.metric.id();
  write_field(args.output, smooth(read_field(args.input), spec, args.kernel.spec(), args.solver.options()));
  return 0;
}

struct SimulateArgs {
  std::string phantom;
  std::optional<std::string> scheme;
  std::optional<std::string> directions;
  double b = 1000.0;
  std::optional<std::string> scheme_out;
  std::string noise = "none";
  double sigma = 0.0;
  std::uint64_t seed = 0;
  double z0 = 1.0;
  std::string output;
};

GradientScheme scheme_from_args(const SimulateArgs& args) {
  if (args.scheme && args.directions) fail(ErrorCode::InvalidInput, "give either --scheme or --directions");
  if (args.scheme) return scheme_from_json(read_json(*args.scheme));
  const std::string d = args.directions.value_or("electrostatic:15");
  GradientScheme s;
  s.b = args.b;
  if (d == "classic6") {
    s.directions = classic_six_directions();
  } else if (d.rfind("electrostatic:", 0) == 0) {
    int m = 0;
    try {
      m = std::stoi(d.substr(14));
    } catch (const std::exception&) {
      fail(ErrorCode::InvalidInput, "electrostatic:N needs an integer N");
    }
    s.directions = electrostatic_directions(m);
  } else {
    fail(ErrorCode::InvalidInput, "--directions must be classic6 or electrostatic:N");
  }
  s.validate();
  return s;
}

TensorField field_from_phantom_or_file(const std::string& path) {
  const Json j = read_json(path);
  if (is_field_json(j)) return field_from_json(j);
  return make_phantom(phantom_spec_from_json(j)).field;
}

int run_simulate(const SimulateArgs& args) {
  const TensorField f = field_from_phantom_or_file(args.phantom);
  const GradientScheme scheme = scheme_from_args(args);
  const NoiseKind kind = parse_noise(args.noise);
  NoiseModel{kind, args.sigma, args.seed}.validate();
  DwiVolume v{f.dims(), f.spacing(), std::vector<std::optional<SignalSet>>(f.size())};
  parallel_for(f.size(), [&](std::size_t i) {
    if (!f.at(i)) return;
    const NoiseModel noise{kind, args.sigma, splitmix64(args.seed + i)};
    v.voxels[i] = simulate_signals(*f.at(i), scheme, args.z0, noise);
  });
  if (args.scheme_out) write_json(*args.scheme_out, scheme_to_json(scheme));
  write_json(args.output, dwi_to_json(v));
  return 0;
}

struct FitArgs {
  std::string input, scheme, output;
  bool project_psd = false;
  bool fit_z0 = false;
};

int run_fit(const FitArgs& args) {
  const DwiVolume v = dwi_from_json(read_json(args.input));
  const GradientScheme scheme = scheme_from_json(read_json(args.scheme));
  TensorField f(v.dims, v.spacing, 3);
  std::vector<std::optional<SymMat>> out(f.size());
  const FitOptions opts{args.project_psd, args.fit_z0};
  parallel_for(f.size(), [&](std::size_t i) {
    if (v.voxels[i]) out[i] = fit_tensor_ls(*v.voxels[i], scheme, opts);
  });
  for (std::size_t i = 0; i < f.size(); ++i) f.set(i, std::move(out[i]));
  write_field(args.output, f);
  return 0;
}

struct PgaArgs {
  std::string input, output;
  int components = 1;
  SolverArgs solver;
};

int run_pga(const PgaArgs& args) {
  const MatrixList list = matrix_list_from_json(read_json(args.input));
  const PgaModel m = pga_fit(list.matrices, args.components, args.solver.tol.value_or(kWgpaTol),
                             args.solver.max_iter.value_or(kWgpaMaxIter));
  write_json(args.output, pga_to_json(m));
  return 0;
}

struct PgaPathArgs {
  std::string model;
  int component = 0;
  std::string t_range = "-1:1:11";
  std::optional<std::string> output;
};

int run_pga_path(const PgaPathArgs& args) {
  const PgaModel m = pga_from_json(read_json(args.model));
  double a = 0, b = 0;
  int steps = 0;
  char c1 = 0, c2 = 0;
  std::istringstream in(args.t_range);
  if (!(in >> a >> c1 >> b >> c2 >> steps) || c1 != ':' || c2 != ':' || !in.eof() || steps < 1) {
    fail(ErrorCode::InvalidInput, "--t-range must look like a:b:steps with steps >= 1");
  }
  Json ts = Json::array();
  Json mats = Json::array();
  for (int i = 0; i < steps; ++i) {
    const double t = steps == 1 ? a : a + (b - a) * i / (steps - 1);
    ts.push_back(t);
    mats.push_back(matrix_to_json(geodesic_point(m, args.component, t).matrix()));
  }
  emit(args.output, Json{{"component", args.component}, {"t", std::move(ts)}, {"matrices", std::move(mats)}});
  return 0;
}

struct PgaSimArgs {
  int n_points = 11;
  int n_paths = 3;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::optional<std::string> start, direction;
  std::optional<std::string> output;
};

int run_pga_sim(const PgaSimArgs& args) {
  GeodesicPathSpec path = default_geodesic_path(1.0, args.n_points);
  if (args.start) path.start = matrix_from_json(read_json(*args.start));
  if (args.direction) path.direction = matrix_from_json(read_json(*args.direction));
  emit(args.output, matrix_list_to_json(simulate_noisy_geodesic(path, args.sigma, args.n_paths, args.seed)));
  return 0;
}

struct TrackArgs {
  MetricArgs metric;
  KernelArgs kernel;
  std::string input, seeds, output;
  std::optional<double> step;
  double fa_min = TrackSpec{}.fa_threshold;
  int max_steps = TrackSpec{}.max_steps;
  double angle = TrackSpec{}.angle_threshold_deg;
  std::string stop_measure = "fa";
  bool skip_invalid_seeds = false;
};

int run_track(const TrackArgs& args) {
  const TensorField f = read_field(args.input);
  const std::vector<Point3> seeds = seeds_from_json(read_json(args.seeds));
  TrackSpec spec;
  spec.step = args.step;
  spec.fa_threshold = args.fa_min;
  spec.max_steps = args.max_steps;
  spec.angle_threshold_deg = args.angle;
  spec.metric = args.metric.id();
  spec.kernel = args.kernel.spec();
  spec.stop_measure = parse_measure(args.stop_measure);
  spec.validate();
  std::vector<std::optional<Streamline>> lines(seeds.size());
  std::vector<std::string> skipped(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) {
    try {
      lines[i] = track(f, seeds[i], spec);
    } catch (const Error& e) {
      const bool seed_error = e.code() == ErrorCode::SeedBelowThreshold || e.code() == ErrorCode::SeedOutOfBounds;
      if (!args.skip_invalid_seeds || !seed_error) throw;
      skipped[i] = e.what();
    }
  });
  std::vector<Streamline> kept;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (lines[i]) {
      kept.push_back(std::move(*lines[i]));
    } else {
      std::cerr << "skipped seed " << i << ": " << skipped[i] << '\n';
    }
  }
  write_json(args.output, tracks_to_json(kept));
  return 0;
}

struct RenderArgs {
  std::string measure, slice, input, output;
};

int run_render(const RenderArgs& args) {
  const MapImage img = render_map(read_field(args.input), parse_measure(args.measure), parse_slice(args.slice));
  if (img.undefined > 0) {
    std::cerr << img.undefined << " voxel(s) where " << args.measure << " is undefined rendered as 0\n";
  }
  write_file_atomic(args.output, encode_pgm(img));
  return 0;
}

struct PhantomArgs {
  std::optional<std::string> spec_file;
  std::optional<std::string> kind;
  std::vector<int> dims;
  std::vector<double> spacing;
  std::optional<double> sigma;
  std::optional<std::uint64_t> seed;
  std::string output;
  std::optional<std::string> truth;
};

int run_phantom(const PhantomArgs& args) {
  if (args.spec_file.has_value() == args.kind.has_value()) {
    fail(ErrorCode::InvalidInput, "give exactly one of --spec and --kind");
  }
  PhantomSpec spec = args.spec_file ? phantom_spec_from_json(read_json(*args.spec_file)) : PhantomSpec{};
  if (args.kind) spec.kind = parse_phantom(*args.kind);
  if (!args.dims.empty()) {
    if (args.dims.size() != 3) fail(ErrorCode::InvalidInput, "--dims needs three values");
    spec.dims = std::array<int, 3>{args.dims[0], args.dims[1], args.dims[2]};
  }
  if (!args.spacing.empty()) {
    if (args.spacing.size() != 3) fail(ErrorCode::InvalidInput, "--spacing needs three values");
    spec.spacing = {args.spacing[0], args.spacing[1], args.spacing[2]};
  }
  if (args.sigma) spec.sigma = *args.sigma;
  if (args.seed) spec.seed = *args.seed;
  if (spec.kind == PhantomKind::NoisyGeodesicGrid && !args.seed && !(args.spec_file && read_json(*args.spec_file).contains("seed"))) {
    fail(ErrorCode::InvalidInput, "the noisy-geodesic-grid phantom needs --seed");
  }
  const Phantom p = make_phantom(spec);
  write_field(args.output, p.field);
  if (args.truth) write_json(*args.truth, phantom_truth_to_json(spec.kind, p));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Statistics, interpolation, smoothing and tractography for fields of covariance matrices"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  std::function<int()> action;

  DistArgs dist;
  auto* c = app.add_subcommand("dist", "Distance between two matrices");
  add_metric(c, dist.metric, true);
  c->add_option("--a", dist.a, "first matrix (JSON)")->required();
  c->add_option("--b", dist.b, "second matrix (JSON)")->required();
  c->callback([&] { action = [&] { return run_dist(dist); }; });

  MeanArgs mean;
  c = app.add_subcommand("mean", "Weighted Frechet mean of a list of matrices");
  add_metric(c, mean.metric, true);
  add_solver(c, mean.solver);
  c->add_option("--input", mean.input, "matrices (JSON)")->required();
  c->add_option("--weights", mean.weights, "comma-separated weights")->delimiter(',');
  c->add_option("--output", mean.output, "output file (default stdout)");
  c->add_option("--trace", mean.trace, "write the objective trace as CSV");
  c->callback([&] { action = [&] { return run_mean(mean); }; });

  AnisotropyArgs aniso;
  c = app.add_subcommand("anisotropy", "Anisotropy of a matrix or of every voxel of a field");
  c->add_option("--measure", aniso.measure, "fa, pa, ga or tga")->required()->check(CLI::IsMember({"fa", "pa", "ga", "tga"}));
  c->add_option("--input", aniso.input, "matrix or tensor field (JSON)")->required();
  c->add_option("--output", aniso.output, "output file for field input (default stdout)");
  c->callback([&] { action = [&] { return run_anisotropy(aniso); }; });

  InterpArgs interp;
  c = app.add_subcommand("interp", "Interpolate a field at a point or upsample it");
  add_metric(c, interp.metric, false);
  add_solver(c, interp.solver);
  add_kernel(c, interp.kernel);
  c->add_option("--input", interp.input, "tensor field (JSON)")->required();
  c->add_option("--mode", interp.mode, "kernel or linear")->check(CLI::IsMember({"kernel", "linear"}))->capture_default_str();
  c->add_option("--factor", interp.factor, "points inserted between neighbouring voxels")->capture_default_str();
  c->add_option("--at", interp.at, "interpolate at x,y,z instead of upsampling")->delimiter(',');
  c->add_option("--output", interp.output, "output file");
  c->callback([&] { action = [&] { return run_interp(interp); }; });

  SmoothArgs sm;
  c = app.add_subcommand("smooth", "Kernel smoothing of a tensor field");
  add_metric(c, sm.metric, false);
  add_solver(c, sm.solver);
  add_kernel(c, sm.kernel);
  c->add_option("--input", sm.input, "tensor field (JSON)")->required();
  c->add_option("--output", sm.output, "output tensor field")->required();
  c->add_option("--beta", sm.beta, "data term exponent (1 or 2)")->capture_default_str();
  c->add_option("--omega", sm.omega, "penalty exponent (0, 1 or 2)")->capture_default_str();
  c->add_option("--lambda", sm.lambda, "penalty weight")->capture_default_str();
  c->add_option("--mu", sm.mu, "penalty reference: identity, zero or average")
      ->check(CLI::IsMember({"identity", "zero", "average"}))
      ->capture_default_str();
  c->callback([&] { action = [&] { return run_smooth(sm); }; });

  SimulateArgs sim;
  c = app.add_subcommand("simulate", "Simulate diffusion-weighted signals for a phantom or field");
  c->add_option("--phantom", sim.phantom, "phantom spec or tensor field (JSON)")->required();
  c->add_option("--scheme", sim.scheme, "gradient scheme (JSON)");
  c->add_option("--directions", sim.directions, "generate directions: classic6 or electrostatic:N");
  c->add_option("--b", sim.b, "b-value for generated schemes")->capture_default_str();
  c->add_option("--scheme-out", sim.scheme_out, "write the scheme used");
  c->add_option("--noise", sim.noise, "none, log-gaussian, gaussian or rician")
      ->check(CLI::IsMember({"none", "log-gaussian", "gaussian", "rician"}))
      ->capture_default_str();
  c->add_option("--sigma", sim.sigma, "noise scale")->capture_default_str();
  c->add_option("--seed", sim.seed, "random seed")->required();
  c->add_option("--z0", sim.z0, "baseline signal")->capture_default_str();
  c->add_option("--output", sim.output, "DWI volume (JSON)")->required();
  c->callback([&] { action = [&] { return run_simulate(sim); }; });

  FitArgs fit;
  c = app.add_subcommand("fit", "Least-squares tensor estimation from a DWI volume");
  c->add_option("--input", fit.input, "DWI volume (JSON)")->required();
  c->add_option("--scheme", fit.scheme, "gradient scheme (JSON)")->required();
  c->add_option("--output", fit.output, "tensor field (JSON)")->required();
  c->add_flag("--project-psd", fit.project_psd, "clamp negative eigenvalues to zero");
  c->add_flag("--fit-z0", fit.fit_z0, "estimate the baseline signal as well");
  c->callback([&] { action = [&] { return run_fit(fit); }; });

  PgaArgs pga;
  c = app.add_subcommand("pga", "Principal geodesic analysis of a list of matrices");
  add_solver(c, pga.solver);
  c->add_option("--input", pga.input, "matrices (JSON)")->required();
  c->add_option("--components", pga.components, "number of components")->capture_default_str();
  c->add_option("--output", pga.output, "model (JSON)")->required();
  c->callback([&] { action = [&] { return run_pga(pga); }; });

  PgaPathArgs path;
  c = app.add_subcommand("pga-path", "Matrices along a principal geodesic");
  c->add_option("--model", path.model, "model (JSON)")->required();
  c->add_option("--component", path.component, "component index")->capture_default_str();
  c->add_option("--t-range", path.t_range, "a:b:steps")->capture_default_str();
  c->add_option("--output", path.output, "output file (default stdout)");
  c->callback([&] { action = [&] { return run_pga_path(path); }; });

  PgaSimArgs psim;
  c = app.add_subcommand("pga-sim", "Noisy samples along a factor-space geodesic");
  c->add_option("--n-points", psim.n_points, "points per path")->capture_default_str();
  c->add_option("--n-paths", psim.n_paths, "number of noisy paths")->capture_default_str();
  c->add_option("--sigma", psim.sigma, "entrywise factor noise")->capture_default_str();
  c->add_option("--seed", psim.seed, "random seed")->required();
  c->add_option("--start", psim.start, "start factor (JSON matrix)");
  c->add_option("--direction", psim.direction, "direction factor (JSON matrix)");
  c->add_option("--output", psim.output, "output file (default stdout)");
  c->callback([&] { action = [&] { return run_pga_sim(psim); }; });

  TrackArgs tr;
  c = app.add_subcommand("track", "Streamline tractography");
  add_metric(c, tr.metric, false);
  add_kernel(c, tr.kernel);
  c->add_option("--input", tr.input, "tensor field (JSON)")->required();
  c->add_option("--seeds", tr.seeds, "seed points (JSON)")->required();
  c->add_option("--output", tr.output, "tracks (JSON)")->required();
  c->add_option("--step", tr.step, "step length (default half the smallest spacing)");
  c->add_option("--fa-min", tr.fa_min, "stop below this anisotropy")->capture_default_str();
  c->add_option("--max-steps", tr.max_steps, "steps per direction")->capture_default_str();
  c->add_option("--angle", tr.angle, "maximum turn per step in degrees")->capture_default_str();
  c->add_option("--stop-measure", tr.stop_measure, "fa, pa, ga or tga")
      ->check(CLI::IsMember({"fa", "pa", "ga", "tga"}))
      ->capture_default_str();
  c->add_flag("--skip-invalid-seeds", tr.skip_invalid_seeds, "skip seeds that fail validation");
  c->callback([&] { action = [&] { return run_track(tr); }; });

  RenderArgs render;
  c = app.add_subcommand("render-map", "Grayscale PGM anisotropy map of one slice");
  c->add_option("--measure", render.measure, "fa, pa, ga or tga")->required()->check(CLI::IsMember({"fa", "pa", "ga", "tga"}));
  c->add_option("--slice", render.slice, "z=N, y=N or x=N")->required();
  c->add_option("--input", render.input, "tensor field (JSON)")->required();
  c->add_option("--output", render.output, "PGM file")->required();
  c->callback([&] { action = [&] { return run_render(render); }; });

  PhantomArgs ph;
  c = app.add_subcommand("phantom", "Write an analytic phantom field");
  c->add_option("--spec", ph.spec_file, "phantom spec (JSON)");
  c->add_option("--kind", ph.kind, "constant, two-bundle-crossing, quarter-circle or noisy-geodesic-grid")
      ->check(CLI::IsMember({"constant", "two-bundle-crossing", "quarter-circle", "noisy-geodesic-grid"}));
  c->add_option("--dims", ph.dims, "nx,ny,nz")->delimiter(',');
  c->add_option("--spacing", ph.spacing, "sx,sy,sz")->delimiter(',');
  c->add_option("--sigma", ph.sigma, "factor noise (noisy-geodesic-grid)");
  c->add_option("--seed", ph.seed, "random seed (noisy-geodesic-grid)");
  c->add_option("--output", ph.output, "tensor field (JSON)")->required();
  c->add_option("--truth", ph.truth, "ground-truth sidecar (JSON)");
  c->callback([&] { action = [&] { return run_phantom(ph); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    return action ? action() : 2;
  } catch (const spdstats::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: InvalidInput: " << e.what() << '\n';
    return 1;
  }
}
