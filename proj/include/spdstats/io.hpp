#pragma once
// JSON file formats. Numbers are written with 17 significant digits so that
// parse -> serialize round-trips bit-identically; files are replaced
// atomically via a temporary file and rename.

#include "spdstats/dwi.hpp"
#include "spdstats/error.hpp"
#include "spdstats/field.hpp"
#include "spdstats/linalg.hpp"
#include "spdstats/pga.hpp"
#include "spdstats/phantom.hpp"
#include "spdstats/tract.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace spdstats {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Serialization primitives

inline std::string format_double(double x) {
  if (!std::isfinite(x)) fail(ErrorCode::InvalidInput, "cannot serialize a non-finite number");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline void write_json(std::ostream& os, const Json& j, int indent, int depth) {
  const auto pad = [&](int d) {
    if (indent > 0) os << '\n' << std::string(static_cast<std::size_t>(indent * d), ' ');
  };
  // Arrays of scalars stay on one line.
  const auto flat = [](const Json& a) {
    for (const auto& e : a) {
      if (e.is_structured()) return false;
    }
    return true;
  };
  switch (j.type()) {
    case Json::value_t::null: os << "null"; break;
    case Json::value_t::boolean: os << (j.get<bool>() ? "true" : "false"); break;
    case Json::value_t::number_integer: os << j.get<std::int64_t>(); break;
    case Json::value_t::number_unsigned: os << j.get<std::uint64_t>(); break;
    case Json::value_t::number_float: os << format_double(j.get<double>()); break;
    case Json::value_t::string: os << Json(j.get<std::string>()).dump(); break;
    case Json::value_t::array: {
      os << '[';
      const bool one_line = flat(j);
      bool first = true;
      for (const auto& e : j) {
        if (!first) os << (one_line ? ", " : ",");
        if (!one_line) pad(depth + 1);
        write_json(os, e, indent, depth + 1);
        first = false;
      }
      if (!one_line && !j.empty()) pad(depth);
      os << ']';
      break;
    }
    case Json::value_t::object: {
      os << '{';
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) os << ',';
        pad(depth + 1);
        os << Json(key).dump() << ": ";
        write_json(os, value, indent, depth + 1);
        first = false;
      }
      if (!j.empty()) pad(depth);
      os << '}';
      break;
    }
    default: fail(ErrorCode::InvalidInput, "unsupported JSON value");
  }
}

}  // namespace detail

inline std::string dump_json(const Json& j, int indent = 1) {
  std::ostringstream os;
  detail::write_json(os, j, indent, 0);
  os << '\n';
  return os.str();
}

inline void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::InvalidInput, "cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::InvalidInput, "write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorCode::InvalidInput, "cannot replace '" + path.string() + "'");
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::InvalidInput, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json parse_json(const std::string& text, const std::string& what = "input") {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    fail(ErrorCode::InvalidInput, what + " is not valid JSON: " + e.what());
  }
}

inline Json read_json(const std::filesystem::path& path) { return parse_json(read_file(path), path.string()); }

inline void write_json(const std::filesystem::path& path, const Json& j) { write_file_atomic(path, dump_json(j)); }

// ---------------------------------------------------------------------------
// Field accessors with domain errors instead of library exceptions

namespace detail {

inline const Json& member(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) fail(ErrorCode::InvalidInput, std::string("missing field '") + key + "'");
  return j.at(key);
}

inline double number(const Json& j, const char* what) {
  if (!j.is_number()) fail(ErrorCode::InvalidInput, std::string(what) + " must be a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) fail(ErrorCode::InvalidInput, std::string(what) + " must be finite");
  return x;
}

inline int integer(const Json& j, const char* what) {
  if (!j.is_number_integer()) fail(ErrorCode::InvalidInput, std::string(what) + " must be an integer");
  return j.get<int>();
}

inline std::vector<double> numbers(const Json& j, const char* what) {
  if (!j.is_array()) fail(ErrorCode::InvalidInput, std::string(what) + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(number(e, what));
  return out;
}

template <std::size_t N>
std::array<double, N> fixed_numbers(const Json& j, const char* what) {
  const auto v = numbers(j, what);
  if (v.size() != N) fail(ErrorCode::InvalidInput, std::string(what) + " has the wrong length");
  std::array<double, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

inline std::array<int, 3> dims_from(const Json& j) {
  if (!j.is_array() || j.size() != 3) fail(ErrorCode::InvalidInput, "dims must be [nx, ny, nz]");
  return {integer(j[0], "dims"), integer(j[1], "dims"), integer(j[2], "dims")};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Matrices

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) fail(ErrorCode::InvalidInput, "matrix must be a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].is_array() ? j[0].size() : 0);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto row = detail::numbers(j[static_cast<std::size_t>(r)], "matrix row");
    if (static_cast<Eigen::Index>(row.size()) != cols) fail(ErrorCode::InvalidInput, "matrix rows differ in length");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

/// A symmetric matrix given as [[...], ...] or {"matrix": [[...], ...]}.
/// Input must be symmetric to 1e-12 relative.
inline SymMat symmat_from_json(const Json& j) {
  const Json& body = j.is_object() ? detail::member(j, "matrix") : j;
  const Matrix m = matrix_from_json(body);
  if (m.rows() != m.cols() || m.rows() < 2) fail(ErrorCode::InvalidInput, "matrix must be square with k >= 2");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    fail(ErrorCode::InvalidInput, "matrix is not symmetric");
  }
  return SymMat(m);
}

// ---------------------------------------------------------------------------
// Tensor fields

inline Json field_to_json(const TensorField& f) {
  Json tensors = Json::array();
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.at(i)) {
      tensors.push_back(f.at(i)->upper());
    } else {
      tensors.push_back(nullptr);
    }
  }
  return Json{{"k", f.k()},
              {"dims", f.dims()},
              {"spacing", f.spacing()},
              {"tensors", std::move(tensors)}};
}

inline bool is_field_json(const Json& j) { return j.is_object() && j.contains("tensors") && j.contains("dims"); }

inline TensorField field_from_json(const Json& j) {
  const int k = detail::integer(detail::member(j, "k"), "k");
  TensorField f(detail::dims_from(detail::member(j, "dims")), detail::fixed_numbers<3>(detail::member(j, "spacing"), "spacing"),
                k);
  const Json& tensors = detail::member(j, "tensors");
  if (!tensors.is_array() || tensors.size() != f.size()) {
    fail(ErrorCode::InvalidInput, "tensors must have nx * ny * nz entries");
  }
  const std::size_t m = static_cast<std::size_t>(k) * (k + 1) / 2;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (tensors[i].is_null()) continue;
    const auto upper = detail::numbers(tensors[i], "tensor");
    if (upper.size() != m) fail(ErrorCode::InvalidInput, "tensor entry must hold k(k+1)/2 values");
    f.set(i, SymMat::from_upper(k, upper));
  }
  return f;
}

inline TensorField read_field(const std::filesystem::path& p) { return field_from_json(read_json(p)); }
inline void write_field(const std::filesystem::path& p, const TensorField& f) { write_json(p, field_to_json(f)); }

/// A list of matrices: [[[..]..], ...], {"matrices": [...], "weights": [...]}
/// or a tensor field (present voxels, x-fastest).
struct MatrixList {
  std::vector<SymMat> matrices;
  std::optional<std::vector<double>> weights;
};

inline MatrixList matrix_list_from_json(const Json& j) {
  MatrixList out;
  if (is_field_json(j)) {
    const TensorField f = field_from_json(j);
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (f.at(i)) out.matrices.push_back(*f.at(i));
    }
    return out;
  }
  const Json& list = j.is_object() ? detail::member(j, "matrices") : j;
  if (!list.is_array()) fail(ErrorCode::InvalidInput, "expected an array of matrices");
  for (const auto& m : list) out.matrices.push_back(symmat_from_json(m));
  if (j.is_object() && j.contains("weights")) out.weights = detail::numbers(j.at("weights"), "weights");
  return out;
}

inline Json matrix_list_to_json(const std::vector<SymMat>& ms) {
  Json list = Json::array();
  for (const auto& m : ms) list.push_back(matrix_to_json(m.matrix()));
  return Json{{"matrices", std::move(list)}};
}

// ---------------------------------------------------------------------------
// Gradient schemes and DWI volumes

inline Json scheme_to_json(const GradientScheme& s) {
  Json dirs = Json::array();
  for (const auto& g : s.directions) dirs.push_back({g.x(), g.y(), g.z()});
  return Json{{"b", s.b}, {"directions", std::move(dirs)}};
}

inline GradientScheme scheme_from_json(const Json& j) {
  GradientScheme s;
  s.b = detail::number(detail::member(j, "b"), "b");
  const Json& dirs = detail::member(j, "directions");
  if (!dirs.is_array()) fail(ErrorCode::InvalidInput, "directions must be an array");
  for (const auto& d : dirs) {
    const auto g = detail::fixed_numbers<3>(d, "direction");
    s.directions.emplace_back(g[0], g[1], g[2]);
  }
  s.validate();
  return s;
}

struct DwiVolume {
  std::array<int, 3> dims{1, 1, 1};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  std::vector<std::optional<SignalSet>> voxels;  // x-fastest; nullopt = masked
};

inline Json dwi_to_json(const DwiVolume& v) {
  Json z0 = Json::array();
  Json signals = Json::array();
  for (const auto& s : v.voxels) {
    if (s) {
      z0.push_back(s->z0);
      signals.push_back(s->z);
    } else {
      z0.push_back(nullptr);
      signals.push_back(nullptr);
    }
  }
  return Json{{"dims", v.dims}, {"spacing", v.spacing}, {"z0", std::move(z0)}, {"signals", std::move(signals)}};
}

inline DwiVolume dwi_from_json(const Json& j) {
  DwiVolume v;
  v.dims = detail::dims_from(detail::member(j, "dims"));
  v.spacing = detail::fixed_numbers<3>(detail::member(j, "spacing"), "spacing");
  for (int a = 0; a < 3; ++a) {
    if (v.dims[a] < 1 || !(v.spacing[a] > 0.0)) fail(ErrorCode::InvalidInput, "invalid DWI geometry");
  }
  const std::size_t n = static_cast<std::size_t>(v.dims[0]) * v.dims[1] * v.dims[2];
  const Json& z0 = detail::member(j, "z0");
  const Json& sig = detail::member(j, "signals");
  if (!z0.is_array() || !sig.is_array() || z0.size() != n || sig.size() != n) {
    fail(ErrorCode::InvalidInput, "z0 and signals must have nx * ny * nz entries");
  }
  v.voxels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (z0[i].is_null() != sig[i].is_null()) fail(ErrorCode::InvalidInput, "z0 and signals disagree on the mask");
    if (z0[i].is_null()) continue;
    SignalSet s{detail::number(z0[i], "z0"), detail::numbers(sig[i], "signals")};
    if (!(s.z0 > 0.0)) fail(ErrorCode::InvalidInput, "z0 must be positive", s.z0);
    for (double z : s.z) {
      if (z < 0.0) fail(ErrorCode::InvalidInput, "signals must be nonnegative", z);
    }
    v.voxels[i] = std::move(s);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Tracks and seeds

inline Json point_to_json(const Point3& p) { return Json{p.x(), p.y(), p.z()}; }

inline Point3 point_from_json(const Json& j) {
  const auto a = detail::fixed_numbers<3>(j, "point");
  return {a[0], a[1], a[2]};
}

inline Json tracks_to_json(const std::vector<Streamline>& lines) {
  Json out = Json::array();
  for (const auto& l : lines) {
    Json pts = Json::array();
    for (const auto& p : l.points) pts.push_back(point_to_json(p));
    out.push_back(Json{{"points", std::move(pts)},
                       {"termination",
                        {std::string(termination_name(l.termination[0])), std::string(termination_name(l.termination[1]))}}});
  }
  return out;
}

inline std::vector<Streamline> tracks_from_json(const Json& j) {
  if (!j.is_array()) fail(ErrorCode::InvalidInput, "tracks file must be an array");
  std::vector<Streamline> out;
  for (const auto& t : j) {
    Streamline l;
    const Json& pts = detail::member(t, "points");
    if (!pts.is_array() || pts.empty()) fail(ErrorCode::InvalidInput, "a track needs at least one point");
    for (const auto& p : pts) l.points.push_back(point_from_json(p));
    const Json& term = detail::member(t, "termination");
    if (!term.is_array() || term.size() != 2 || !term[0].is_string() || !term[1].is_string()) {
      fail(ErrorCode::InvalidInput, "termination must be two reason strings");
    }
    l.termination = {parse_termination(term[0].get<std::string>()), parse_termination(term[1].get<std::string>())};
    out.push_back(std::move(l));
  }
  return out;
}

inline std::vector<Point3> seeds_from_json(const Json& j) {
  const Json& list = j.is_object() ? detail::member(j, "seeds") : j;
  if (!list.is_array()) fail(ErrorCode::InvalidInput, "seeds must be an array of [x, y, z]");
  std::vector<Point3> out;
  for (const auto& p : list) out.push_back(point_from_json(p));
  return out;
}

inline Json seeds_to_json(const std::vector<Point3>& seeds) {
  Json out = Json::array();
  for (const auto& p : seeds) out.push_back(point_to_json(p));
  return out;
}

// ---------------------------------------------------------------------------
// PGA models

inline Json pga_to_json(const PgaModel& m) {
  Json loadings = Json::array();
  for (const auto& u : m.loadings) loadings.push_back(std::vector<double>(u.data(), u.data() + u.size()));
  return Json{{"k", m.mean.dim()},
              {"mean", matrix_to_json(m.mean.matrix())},
              {"mean_factor", matrix_to_json(m.mean_factor)},
              {"loadings", std::move(loadings)},
              {"variances", m.variances},
              {"scores", matrix_to_json(m.scores)},
              {"total_variance", m.total_variance}};
}

inline PgaModel pga_from_json(const Json& j) {
  const int k = detail::integer(detail::member(j, "k"), "k");
  PgaModel m{symmat_from_json(detail::member(j, "mean")), matrix_from_json(detail::member(j, "mean_factor")), {}, {},
             matrix_from_json(detail::member(j, "scores")),
             detail::number(detail::member(j, "total_variance"), "total_variance")};
  if (m.mean.dim() != k || m.mean_factor.rows() != k || m.mean_factor.cols() != k) {
    fail(ErrorCode::InvalidInput, "PGA model dimensions are inconsistent");
  }
  for (const auto& u : detail::member(j, "loadings")) {
    const auto v = detail::numbers(u, "loading");
    if (v.size() != static_cast<std::size_t>(k) * k) fail(ErrorCode::InvalidInput, "loadings must have k^2 entries");
    m.loadings.push_back(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  m.variances = detail::numbers(detail::member(j, "variances"), "variances");
  if (m.variances.size() != m.loadings.size()) fail(ErrorCode::InvalidInput, "one variance per loading expected");
  return m;
}

// ---------------------------------------------------------------------------
// Phantom specifications and ground truth

inline PhantomSpec phantom_spec_from_json(const Json& j) {
  PhantomSpec s;
  const Json& kind = detail::member(j, "kind");
  if (!kind.is_string()) fail(ErrorCode::InvalidInput, "phantom kind must be a string");
  s.kind = parse_phantom(kind.get<std::string>());
  if (j.contains("dims")) s.dims = detail::dims_from(j.at("dims"));
  if (j.contains("spacing")) s.spacing = detail::fixed_numbers<3>(j.at("spacing"), "spacing");
  if (j.contains("tensor")) s.tensor = symmat_from_json(j.at("tensor"));
  if (j.contains("lambda1")) s.lambda1 = detail::number(j.at("lambda1"), "lambda1");
  if (j.contains("lambda2")) s.lambda2 = detail::number(j.at("lambda2"), "lambda2");
  if (j.contains("background")) s.background = detail::number(j.at("background"), "background");
  if (j.contains("bundle_half_width")) s.bundle_half_width = detail::number(j.at("bundle_half_width"), "bundle_half_width");
  if (j.contains("inner_radius")) s.inner_radius = detail::number(j.at("inner_radius"), "inner_radius");
  if (j.contains("sigma")) s.sigma = detail::number(j.at("sigma"), "sigma");
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer()) {
      fail(ErrorCode::InvalidInput, "seed must be an integer");
    }
    s.seed = j.at("seed").get<std::uint64_t>();
  }
  return s;
}

inline Json phantom_truth_to_json(PhantomKind kind, const Phantom& p) {
  Json tracks = Json::array();
  for (const auto& t : p.tracks) {
    Json pts = Json::array();
    for (const auto& q : t.points) pts.push_back(point_to_json(q));
    tracks.push_back(std::move(pts));
  }
  return Json{{"kind", std::string(phantom_name(kind))}, {"truth", field_to_json(p.truth)}, {"tracks", std::move(tracks)}};
}

}  // namespace spdstats
