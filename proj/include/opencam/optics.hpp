#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "opencam/keygen.hpp"
#include "opencam/rng.hpp"
#include "opencam/tensor.hpp"

namespace opencam {

/// Additive i.i.d. Gaussian sensor noise, standard deviation in measurement units.
struct NoiseModel {
  double sigma = 0.0;
};

/// Sensor-plane ciphertext plus provenance.
struct Measurement {
  Tensor data;
  std::string key_id;
  std::string scene_id;
  double sigma = 0.0;
  std::uint64_t seed = 0;

  nlohmann::json metadata() const;
};

/// Linear convolution with zero-padded boundaries, per channel, via FFT.
/// Output is (H1+H2-1) x (W1+W2-1); channel counts must match.
Tensor full_convolve(const Tensor& x, const Tensor& p);

/// Y = P * X + N.
Measurement forward_single(const Tensor& x, const Tensor& p, const NoiseModel& noise, Rng& rng);
/// Y = S . (P * X) + N.
Measurement forward_double(const Tensor& x, const Tensor& psf, const Tensor& scaling, const NoiseModel& noise,
                           Rng& rng);
Measurement forward_double(const Tensor& x, const Key& key, const NoiseModel& noise, Rng& rng);

/// Response to a constant scene of the key's scene size.
Measurement uniform_scene_response(const Key& key, double level, const NoiseModel& noise, Rng& rng);

struct SceneSpec {
  enum class Kind { Natural, Uniform, Impulse, BrightSource };

  Kind kind = Kind::Uniform;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t channels = 1;
  std::filesystem::path file;   // Natural / BrightSource base; empty => builtin synthetic scene
  std::optional<Tensor> base;   // in-memory base for BrightSource, takes precedence over file
  double level = 0.0;           // Uniform
  double amplitude = 1.0;       // Impulse
  double relative_intensity = 1e3;  // BrightSource: amplitude = r * max(base)
  std::optional<std::size_t> row;   // Impulse / BrightSource position, default scene center
  std::optional<std::size_t> col;
};

Tensor synthesize_scene(const SceneSpec& spec, Rng& rng);

/// Adds r * max(base) at (row, col) in every channel.
Tensor add_bright_source(const Tensor& base, double relative_intensity, std::size_t row, std::size_t col);

/// Writes `<path>` (OPENCAM1) and `<path>.json` (metadata).
void save_measurement(const Measurement& m, const std::filesystem::path& path);
Measurement load_measurement(const std::filesystem::path& path);

}  // namespace opencam
