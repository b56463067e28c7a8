#pragma once
// Grayscale anisotropy maps of one field slice, written as binary PGM.

#include "spdstats/anisotropy.hpp"
#include "spdstats/error.hpp"
#include "spdstats/field.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spdstats {

struct SliceSpec {
  int axis = 2;  // 0 = x, 1 = y, 2 = z
  int index = 0;
};

/// "z=N", "y=N" or "x=N".
inline SliceSpec parse_slice(std::string_view s) {
  if (s.size() < 3 || s[1] != '=' || (s[0] != 'x' && s[0] != 'y' && s[0] != 'z')) {
    fail(ErrorCode::InvalidInput, "slice must look like z=N, y=N or x=N");
  }
  int index = 0;
  for (char c : s.substr(2)) {
    if (c < '0' || c > '9') fail(ErrorCode::InvalidInput, "slice index must be a nonnegative integer");
    index = index * 10 + (c - '0');
    if (index > 1'000'000) fail(ErrorCode::InvalidInput, "slice index too large");
  }
  return {s[0] - 'x', index};
}

struct MapImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, row 0 first
  std::size_t undefined = 0;         // present voxels where the measure is undefined
};

/// Pixel (u, v) of the slice is voxel (u, v) in the two remaining axes, in
/// x, y, z order. Values map linearly from [0, vmax] to [0, 255], with
/// vmax = 1 for bounded measures and the 99th percentile for GA. Masked
/// voxels and voxels where the measure is undefined render as 0.
inline MapImage render_map(const TensorField& field, AnisotropyMeasure measure, const SliceSpec& slice) {
  if (slice.axis < 0 || slice.axis > 2) fail(ErrorCode::InvalidInput, "slice axis must be x, y or z");
  if (slice.index < 0 || slice.index >= field.dims()[slice.axis]) {
    fail(ErrorCode::IndexOutOfRange, "slice index outside the field", slice.index);
  }
  const int ua = slice.axis == 0 ? 1 : 0;
  const int va = slice.axis == 2 ? 1 : 2;
  MapImage img;
  img.width = field.dims()[ua];
  img.height = field.dims()[va];

  std::vector<std::optional<double>> values(static_cast<std::size_t>(img.width) * img.height);
  std::vector<double> defined;
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      std::array<int, 3> c{};
      c[slice.axis] = slice.index;
      c[ua] = u;
      c[va] = v;
      const auto& t = field.at(c[0], c[1], c[2]);
      if (!t) continue;
      try {
        const double a = anisotropy(measure, *t);
        values[static_cast<std::size_t>(v) * img.width + u] = a;
        defined.push_back(a);
      } catch (const Error&) {
        ++img.undefined;
      }
    }
  }

  double vmax = 1.0;
  if (measure == AnisotropyMeasure::GA && !defined.empty()) {
    // Nearest-rank 99th percentile.
    std::sort(defined.begin(), defined.end());
    const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(defined.size())));
    vmax = defined[std::max<std::size_t>(rank, 1) - 1];
    if (!(vmax > 0.0)) vmax = 1.0;
  }
  img.pixels.assign(values.size(), 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i]) continue;
    const double x = std::clamp(*values[i] / vmax, 0.0, 1.0);
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * x));
  }
  return img;
}

inline std::string encode_pgm(const MapImage& img) {
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(img.pixels.begin(), img.pixels.end());
  return out;
}

}  // namespace spdstats
