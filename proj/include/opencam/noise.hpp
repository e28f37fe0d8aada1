#pragma once

#include <cstddef>
#include <vector>

#include "opencam/rng.hpp"
#include "opencam/tensor.hpp"

namespace opencam {

/// Improved-Perlin gradient noise on a side x side grid. One lattice cell
/// spans `feature_size` pixels; corner gradients are hashed through
/// `permutation`, which must be a permutation of 0..side-1.
struct PerlinSpec {
  std::size_t side = 0;
  std::size_t feature_size = 0;
  std::vector<std::size_t> permutation;

  static PerlinSpec random(std::size_t side, std::size_t feature_size, Rng& rng);
  void validate() const;
};

/// Values lie in [-1, 1] and vanish on lattice points (multiples of
/// feature_size). Depends only on the spec.
Tensor perlin_field(const PerlinSpec& spec);
Grid perlin_grid(const PerlinSpec& spec);

/// Colored noise with power spectral density H(u,v) = 1 / (u^2 + v^2)^(beta/2),
/// frequencies in integer DFT bins, H(0,0) := 0.
struct ColoredNoiseSpec {
  std::size_t side = 0;
  double beta = 0.0;

  void validate() const;
};

double colored_psd(double beta, double u, double v);

/// Real white Gaussian field shaped by sqrt(H) in the Fourier domain,
/// re-centered to zero mean and scaled to unit variance.
Tensor colored_noise(const ColoredNoiseSpec& spec, Rng& rng);
Grid colored_noise_grid(const ColoredNoiseSpec& spec, Rng& rng);

/// Unit-variance white Gaussian field.
Grid white_noise_grid(std::size_t rows, std::size_t cols, Rng& rng);

/// Affine map of `g` onto [lo, hi]; throws DegenerateNoise for constant input.
Grid rescale(const Grid& g, double lo, double hi);

}  // namespace opencam
