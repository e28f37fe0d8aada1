#include "opencam/scenes.hpp"

#include <algorithm>
#include <cmath>

#include "opencam/error.hpp"
#include "opencam/fft.hpp"
#include "opencam/noise.hpp"
#include "opencam/png_io.hpp"

namespace opencam {

namespace {

double smoothstep(double edge0, double edge1, double x) {
  const double t = std::clamp((x - edge0) / (edge1 - edge0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace

Tensor synthetic_scene(std::size_t rows, std::size_t cols, std::size_t channels, Rng& rng) {
  const std::size_t side = std::max(rows, cols);
  const Grid texture = fft::crop(colored_noise_grid({std::max<std::size_t>(side, 2), 2.0}, rng), 0, 0, rows, cols);
  const Grid background = rescale(texture, 0.15, 0.85);

  const double ramp_angle = rng.uniform(0.0, 6.283185307179586);
  const double ramp_strength = rng.uniform(0.0, 0.2);
  std::vector<double> tint(channels);
  for (auto& t : tint) t = rng.uniform(0.85, 1.15);

  std::vector<Grid> planes(channels, Grid(rows, cols));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double y = (static_cast<double>(r) / rows) - 0.5;
      const double x = (static_cast<double>(c) / cols) - 0.5;
      const double ramp = ramp_strength * (std::cos(ramp_angle) * x + std::sin(ramp_angle) * y);
      for (std::size_t ch = 0; ch < channels; ++ch) planes[ch](r, c) = (background(r, c) + ramp) * tint[ch];
    }
  }

  const std::size_t shapes = 3 + static_cast<std::size_t>(rng.below(4));
  for (std::size_t k = 0; k < shapes; ++k) {
    const bool disc = rng.uniform() < 0.5;
    const double cy = rng.uniform(0.0, static_cast<double>(rows));
    const double cx = rng.uniform(0.0, static_cast<double>(cols));
    const double radius = rng.uniform(0.08, 0.25) * static_cast<double>(side);
    const double aspect = rng.uniform(0.4, 1.0);
    std::vector<double> value(channels);
    const double base_value = rng.uniform();
    for (auto& v : value) v = std::clamp(base_value * rng.uniform(0.85, 1.15), 0.0, 1.0);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const double dy = static_cast<double>(r) - cy;
        const double dx = static_cast<double>(c) - cx;
        // Signed distance (negative inside), with a one-pixel soft edge.
        const double dist = disc ? std::hypot(dx, dy) - radius
                                 : std::max(std::abs(dy) - radius, std::abs(dx) - radius * aspect);
        const double w = 1.0 - smoothstep(-0.5, 0.5, dist);
        if (w <= 0.0) continue;
        for (std::size_t ch = 0; ch < channels; ++ch) {
          planes[ch](r, c) = (1.0 - w) * planes[ch](r, c) + w * value[ch];
        }
      }
    }
  }
  for (auto& p : planes) {
    for (auto& v : p.data) v = std::clamp(v, 0.0, 1.0);
  }
  return Tensor::from_planes(planes);
}

std::vector<NamedScene> builtin_scenes(std::size_t count, std::size_t rows, std::size_t cols, std::size_t channels,
                                       std::uint64_t seed) {
  std::vector<NamedScene> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(Rng::derive_seed(seed, 0x5CE0 + i));
    out.push_back({"scene-" + std::to_string(i), synthetic_scene(rows, cols, channels, rng)});
  }
  return out;
}

Tensor resize_bilinear(const Tensor& t, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw Error(ErrorCode::InvalidDims, "resize target must be positive");
  std::vector<Grid> planes;
  for (std::size_t ch = 0; ch < t.channels(); ++ch) {
    const Grid src = t.plane(ch);
    Grid dst(rows, cols);
    const double sy = static_cast<double>(src.rows) / rows;
    const double sx = static_cast<double>(src.cols) / cols;
    for (std::size_t r = 0; r < rows; ++r) {
      const double y = std::clamp((r + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.rows - 1));
      const auto y0 = static_cast<std::size_t>(y);
      const std::size_t y1 = std::min(y0 + 1, src.rows - 1);
      const double fy = y - y0;
      for (std::size_t c = 0; c < cols; ++c) {
        const double x = std::clamp((c + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.cols - 1));
        const auto x0 = static_cast<std::size_t>(x);
        const std::size_t x1 = std::min(x0 + 1, src.cols - 1);
        const double fx = x - x0;
        dst(r, c) = (1 - fy) * ((1 - fx) * src(y0, x0) + fx * src(y0, x1)) +
                    fy * ((1 - fx) * src(y1, x0) + fx * src(y1, x1));
      }
    }
    planes.push_back(std::move(dst));
  }
  return Tensor::from_planes(planes, t.ndim() == 3);
}

std::vector<NamedScene> load_scene_directory(const std::filesystem::path& dir, std::size_t rows, std::size_t cols,
                                             std::size_t channels) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::FileMissing, "scene directory " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::EmptySet, "no PNG scenes in " + dir.string());
  std::vector<NamedScene> out;
  for (const auto& f : files) {
    Tensor t = load_png_as_scene(f, static_cast<int>(channels));
    if (t.rows() != rows || t.cols() != cols) t = resize_bilinear(t, rows, cols);
    out.push_back({f.stem().string(), std::move(t)});
  }
  return out;
}

}  // namespace opencam
