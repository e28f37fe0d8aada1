#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "opencam/tensor.hpp"

namespace opencam {

inline constexpr int kGeneratorVersion = 1;

/// Generator parameters for one camera key.
struct KeySpec {
  std::uint64_t seed = 0;
  std::size_t psf_side = 0;
  std::size_t sensor_rows = 0;  // H3
  std::size_t sensor_cols = 0;  // W3
  std::size_t channels = 1;
  double alpha = 0.5;           // colored-noise weight in the PSF blend
  double beta = 2.0;            // colored-noise roll-off, shared by P and S
  std::size_t feature_size = 0; // Perlin lattice cell, pixels
  double s_min = 0.2;           // scaling-mask floor
  double contour_fill = 0.10;   // target fraction of contour pixels

  std::size_t scene_rows() const { return sensor_rows - psf_side + 1; }
  std::size_t scene_cols() const { return sensor_cols - psf_side + 1; }
  void validate() const;
};

/// Sub-seed stream ids. Public so tests can regenerate key components.
namespace streams {
inline constexpr std::uint64_t kSpec = 0x0001;
inline constexpr std::uint64_t kPermutation = 0x0002;
inline constexpr std::uint64_t kPsfNoise = 0x1000;      // + 16*attempt + channel
inline constexpr std::uint64_t kScalingNoise = 0x2000;  // + 16*attempt + channel
inline constexpr std::uint64_t kBaseline = 0x3000;
inline constexpr std::uint64_t kRegenerate = 0x4000;    // + attempt, CLI key regeneration
}  // namespace streams

enum class MaskDesign { OpenCam, WhiteBlend, PhlatcamContour, MultiPinhole, RandomBinary, RandomSpeckle };

std::string_view to_string(MaskDesign d);
MaskDesign parse_mask_design(std::string_view name);

/// The encryption key: multiplexing PSF P and scaling mask S.
struct Key {
  Tensor psf;      // psf_side x psf_side (x C), non-negative, each channel sums to 1
  Tensor scaling;  // sensor_rows x sensor_cols (x C), values in [s_min, 1]
  KeySpec spec;
  MaskDesign design = MaskDesign::OpenCam;

  std::string id() const;
};

/// alpha ~ U(0,1), beta ~ U(1,10) from the seeded stream; feature_size =
/// psf_side/8, s_min = 0.2, contour_fill = 0.10.
KeySpec draw_keyspec(std::uint64_t seed, std::size_t psf_side, std::size_t sensor_rows,
                     std::size_t sensor_cols, std::size_t channels);

/// Binary contour mask: pixels where |perlin| <= tau, tau found by bisection
/// so the fill fraction matches spec.contour_fill.
Grid perlin_contour_grid(const KeySpec& spec);
Tensor perlin_contour_psf(const KeySpec& spec);

/// Colored-noise component of the PSF for one channel, min-max scaled to [0,1].
Grid psf_colored_component(const KeySpec& spec, std::size_t channel);

/// P = alpha * P_colr + (1 - alpha) * P_cont, each channel sum-normalized.
Tensor make_opencam_psf(const KeySpec& spec);
/// Colored noise (same beta) mapped onto [s_min, 1] per channel.
Tensor make_scaling_mask(const KeySpec& spec);
Key make_key(const KeySpec& spec);
/// Key whose PSF comes from `design`; the scaling mask is always the
/// colored-noise mask of `spec`.
Key make_key(const KeySpec& spec, MaskDesign design);

Tensor baseline_psf(MaskDesign kind, const KeySpec& spec);

/// Throws DegenerateKey if P or S violate the key invariants.
void validate_key(const Key& key);

/// min |DFT(P)| / max |DFT(P)| over channels, with P zero-padded onto the
/// sensor grid (the grid keyed decryption inverts on).
double psf_spectrum_floor(const Tensor& psf, std::size_t grid_rows, std::size_t grid_cols);
inline constexpr double kSpectrumFloorLimit = 1e-6;
bool is_degenerate(const Key& key);

/// Draws and builds a key; a degenerate key is redrawn from seed
/// derive_seed(seed, kRegenerate + attempt). Throws DegenerateKey when
/// `max_attempts` draws are all degenerate.
Key generate_key(std::uint64_t seed, std::size_t psf_side, std::size_t sensor_rows, std::size_t sensor_cols,
                 std::size_t channels, MaskDesign design = MaskDesign::OpenCam, int max_attempts = 8);

/// Binary support of the key's PSF: the contour for contour-based designs,
/// P > 0 otherwise.
Tensor key_support(const Key& key);

nlohmann::json key_spec_to_json(const KeySpec& spec, MaskDesign design);
KeySpec key_spec_from_json(const nlohmann::json& j);

/// Writes psf.ocam, scaling.ocam and key.json into `dir`.
void save_key(const Key& key, const std::filesystem::path& dir);
Key load_key(const std::filesystem::path& dir);

}  // namespace opencam
