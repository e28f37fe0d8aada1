#include "opencam/noise.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "opencam/error.hpp"
#include "opencam/fft.hpp"

namespace opencam {

namespace {

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

// Ken Perlin's improved-noise gradient set restricted to 2-D.
double gradient_dot(std::size_t hash, double dx, double dy) {
  switch (hash & 7u) {
    case 0: return dx + dy;
    case 1: return -dx + dy;
    case 2: return dx - dy;
    case 3: return -dx - dy;
    case 4: return dx;
    case 5: return -dx;
    case 6: return dy;
    default: return -dy;
  }
}

}  // namespace

PerlinSpec PerlinSpec::random(std::size_t side, std::size_t feature_size, Rng& rng) {
  PerlinSpec spec{side, feature_size, random_permutation(side, rng)};
  spec.validate();
  return spec;
}

void PerlinSpec::validate() const {
  if (side == 0 || feature_size == 0) throw Error(ErrorCode::InvalidSpec, "side and feature size must be positive");
  if (side % feature_size != 0) {
    throw Error(ErrorCode::InvalidSpec, "side " + std::to_string(side) + " not divisible by feature size " +
                                            std::to_string(feature_size));
  }
  if (permutation.size() != side) throw Error(ErrorCode::InvalidSpec, "permutation length must equal side");
  std::vector<bool> seen(side, false);
  for (auto v : permutation) {
    if (v >= side || seen[v]) throw Error(ErrorCode::InvalidSpec, "permutation is not a permutation of 0..side-1");
    seen[v] = true;
  }
}

Grid perlin_grid(const PerlinSpec& spec) {
  spec.validate();
  const std::size_t n = spec.side;
  const auto& perm = spec.permutation;
  auto hash = [&](std::size_t i, std::size_t j) { return perm[(perm[i % n] + j) % n]; };

  Grid out(n, n);
  const double inv = 1.0 / static_cast<double>(spec.feature_size);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t yi = r / spec.feature_size;
    const double yf = static_cast<double>(r % spec.feature_size) * inv;
    const double v = fade(yf);
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t xi = c / spec.feature_size;
      const double xf = static_cast<double>(c % spec.feature_size) * inv;
      const double u = fade(xf);
      const double n00 = gradient_dot(hash(xi, yi), xf, yf);
      const double n10 = gradient_dot(hash(xi + 1, yi), xf - 1.0, yf);
      const double n01 = gradient_dot(hash(xi, yi + 1), xf, yf - 1.0);
      const double n11 = gradient_dot(hash(xi + 1, yi + 1), xf - 1.0, yf - 1.0);
      const double a = n00 + u * (n10 - n00);
      const double b = n01 + u * (n11 - n01);
      out(r, c) = a + v * (b - a);
    }
  }
  return out;
}

Tensor perlin_field(const PerlinSpec& spec) { return Tensor::from_plane(perlin_grid(spec)); }

void ColoredNoiseSpec::validate() const {
  if (side < 2) throw Error(ErrorCode::InvalidSpec, "colored noise side must be at least 2");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw Error(ErrorCode::InvalidSpec, "beta must be finite and >= 0");
}

double colored_psd(double beta, double u, double v) {
  const double r2 = u * u + v * v;
  if (r2 == 0.0) return 0.0;
  return std::pow(r2, -beta / 2.0);
}

Grid white_noise_grid(std::size_t rows, std::size_t cols, Rng& rng) {
  Grid g(rows, cols);
  for (auto& v : g.data) v = rng.normal();
  return g;
}

Grid colored_noise_grid(const ColoredNoiseSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t n = spec.side;
  auto f = fft::forward(white_noise_grid(n, n, rng));
  for (std::size_t r = 0; r < n; ++r) {
    const double u = r <= n / 2 ? static_cast<double>(r) : static_cast<double>(r) - static_cast<double>(n);
    for (std::size_t c = 0; c < f.half_cols(); ++c) {
      f(r, c) *= std::sqrt(colored_psd(spec.beta, u, static_cast<double>(c)));
    }
  }
  Grid g = fft::inverse(f);

  double mean = 0.0;
  for (double v : g.data) mean += v;
  mean /= static_cast<double>(g.size());
  double var = 0.0;
  for (double& v : g.data) {
    v -= mean;
    var += v * v;
  }
  var /= static_cast<double>(g.size());
  if (!(var > 0.0)) throw Error(ErrorCode::DegenerateNoise, "colored noise field has zero variance");
  const double scale = 1.0 / std::sqrt(var);
  for (double& v : g.data) v *= scale;
  return g;
}

Tensor colored_noise(const ColoredNoiseSpec& spec, Rng& rng) {
  return Tensor::from_plane(colored_noise_grid(spec, rng));
}

Grid rescale(const Grid& g, double lo, double hi) {
  const auto [mn, mx] = std::minmax_element(g.data.begin(), g.data.end());
  const double range = *mx - *mn;
  if (!(range > 1e-12 * std::max(1.0, std::abs(*mx)))) {
    throw Error(ErrorCode::DegenerateNoise, "cannot rescale a constant field");
  }
  Grid out(g.rows, g.cols);
  const double base = *mn;
  for (std::size_t i = 0; i < g.size(); ++i) out.data[i] = lo + (hi - lo) * (g.data[i] - base) / range;
  return out;
}

}  // namespace opencam
