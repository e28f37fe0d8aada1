#include "opencam/keygen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "opencam/error.hpp"
#include "opencam/fft.hpp"
#include "opencam/noise.hpp"
#include "opencam/rng.hpp"
#include "opencam/tensor_io.hpp"

namespace opencam {

namespace {

constexpr int kNoiseAttempts = 8;
constexpr std::size_t kPinholeCount = 16;

double fill_fraction(const Grid& field, double tau) {
  std::size_t count = 0;
  for (double v : field.data) count += std::abs(v) <= tau ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(field.size());
}

Grid normalize_sum(Grid g) {
  double total = 0.0;
  for (double v : g.data) total += v;
  if (!(total > 0.0)) throw Error(ErrorCode::DegenerateKey, "PSF has no light");
  for (double& v : g.data) v /= total;
  return g;
}

// Colored noise drawn from successive sub-seeds until it is not constant.
Grid colored_unit_range(const KeySpec& spec, std::size_t side, std::uint64_t base_stream,
                        std::size_t channel, double lo, double hi) {
  for (int attempt = 0; attempt < kNoiseAttempts; ++attempt) {
    Rng rng(Rng::derive_seed(spec.seed, base_stream + 16u * attempt + channel));
    try {
      return rescale(colored_noise_grid({side, spec.beta}, rng), lo, hi);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateNoise) throw;
    }
  }
  throw Error(ErrorCode::DegenerateNoise, "colored noise stayed constant across sub-seeds");
}

Grid colored_field(const KeySpec& spec, std::uint64_t base_stream, std::size_t channel, std::size_t rows,
                   std::size_t cols, double lo, double hi) {
  // Square synthesis on the larger side, then cropped to the requested shape.
  const std::size_t side = std::max(rows, cols);
  Grid g = colored_unit_range(spec, side, base_stream, channel, lo, hi);
  if (rows == side && cols == side) return g;
  return rescale(fft::crop(g, 0, 0, rows, cols), lo, hi);
}

}  // namespace

void KeySpec::validate() const {
  if (psf_side == 0 || sensor_rows < psf_side || sensor_cols < psf_side) {
    throw Error(ErrorCode::InvalidDims, "sensor must be at least as large as the PSF");
  }
  if (channels != 1 && channels != 3) throw Error(ErrorCode::InvalidDims, "channels must be 1 or 3");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidSpec, "alpha must lie in [0,1]");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw Error(ErrorCode::InvalidSpec, "beta must be >= 0");
  if (!(s_min > 0.0 && s_min < 1.0)) throw Error(ErrorCode::InvalidSpec, "s_min must lie in (0,1)");
  if (!(contour_fill > 0.0 && contour_fill < 1.0)) throw Error(ErrorCode::InvalidSpec, "contour_fill must lie in (0,1)");
  if (feature_size == 0 || psf_side % feature_size != 0) {
    throw Error(ErrorCode::InvalidSpec, "feature size must divide the PSF side");
  }
}

std::string_view to_string(MaskDesign d) {
  switch (d) {
    case MaskDesign::OpenCam: return "opencam";
    case MaskDesign::WhiteBlend: return "white_blend";
    case MaskDesign::PhlatcamContour: return "phlatcam_contour";
    case MaskDesign::MultiPinhole: return "multi_pinhole";
    case MaskDesign::RandomBinary: return "random_binary";
    case MaskDesign::RandomSpeckle: return "random_speckle";
  }
  return "unknown";
}

MaskDesign parse_mask_design(std::string_view name) {
  for (auto d : {MaskDesign::OpenCam, MaskDesign::WhiteBlend, MaskDesign::PhlatcamContour,
                 MaskDesign::MultiPinhole, MaskDesign::RandomBinary, MaskDesign::RandomSpeckle}) {
    if (to_string(d) == name) return d;
  }
  throw Error(ErrorCode::UnknownKind, "unknown mask design '" + std::string(name) + "'");
}

std::string Key::id() const { return std::string(to_string(design)) + "-" + std::to_string(spec.seed); }

KeySpec draw_keyspec(std::uint64_t seed, std::size_t psf_side, std::size_t sensor_rows, std::size_t sensor_cols,
                     std::size_t channels) {
  if (psf_side == 0 || sensor_rows == 0 || sensor_cols == 0 || channels == 0) {
    throw Error(ErrorCode::InvalidDims, "dimensions must be positive");
  }
  Rng rng(Rng::derive_seed(seed, streams::kSpec));
  KeySpec spec;
  spec.seed = seed;
  spec.psf_side = psf_side;
  spec.sensor_rows = sensor_rows;
  spec.sensor_cols = sensor_cols;
  spec.channels = channels;
  spec.alpha = rng.uniform();
  spec.beta = rng.uniform(1.0, 10.0);
  spec.feature_size = std::max<std::size_t>(1, psf_side / 8);
  spec.s_min = 0.2;
  spec.contour_fill = 0.10;
  spec.validate();
  return spec;
}

Grid perlin_contour_grid(const KeySpec& spec) {
  spec.validate();
  Rng rng(Rng::derive_seed(spec.seed, streams::kPermutation));
  const Grid field = perlin_grid(PerlinSpec::random(spec.psf_side, spec.feature_size, rng));

  double lo = 0.0;
  double hi = 0.0;
  for (double v : field.data) hi = std::max(hi, std::abs(v));
  double best_tau = hi;
  double best_err = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 64; ++it) {
    const double tau = 0.5 * (lo + hi);
    const double fill = fill_fraction(field, tau);
    const double err = std::abs(fill - spec.contour_fill);
    if (err < best_err) {
      best_err = err;
      best_tau = tau;
    }
    if (err < 1e-3) break;
    (fill < spec.contour_fill ? lo : hi) = tau;
  }
  Grid mask(field.rows, field.cols);
  for (std::size_t i = 0; i < field.size(); ++i) mask.data[i] = std::abs(field.data[i]) <= best_tau ? 1.0 : 0.0;
  return mask;
}

Tensor perlin_contour_psf(const KeySpec& spec) { return Tensor::from_plane(perlin_contour_grid(spec)); }

Grid psf_colored_component(const KeySpec& spec, std::size_t channel) {
  spec.validate();
  return colored_unit_range(spec, spec.psf_side, streams::kPsfNoise, channel, 0.0, 1.0);
}

Tensor make_opencam_psf(const KeySpec& spec) {
  const Grid contour = perlin_contour_grid(spec);
  std::vector<Grid> planes;
  for (std::size_t ch = 0; ch < spec.channels; ++ch) {
    const Grid colored = psf_colored_component(spec, ch);
    Grid p(contour.rows, contour.cols);
    for (std::size_t i = 0; i < p.size(); ++i) {
      p.data[i] = spec.alpha * colored.data[i] + (1.0 - spec.alpha) * contour.data[i];
    }
    planes.push_back(normalize_sum(std::move(p)));
  }
  return Tensor::from_planes(planes);
}

Tensor make_scaling_mask(const KeySpec& spec) {
  spec.validate();
  std::vector<Grid> planes;
  for (std::size_t ch = 0; ch < spec.channels; ++ch) {
    planes.push_back(colored_field(spec, streams::kScalingNoise, ch, spec.sensor_rows, spec.sensor_cols,
                                   spec.s_min, 1.0));
  }
  return Tensor::from_planes(planes);
}

Tensor baseline_psf(MaskDesign kind, const KeySpec& spec) {
  spec.validate();
  const std::size_t n = spec.psf_side;
  Rng rng(Rng::derive_seed(spec.seed, streams::kBaseline));
  Grid pattern(n, n);
  switch (kind) {
    case MaskDesign::OpenCam:
      return make_opencam_psf(spec);
    case MaskDesign::WhiteBlend: {
      const Grid contour = perlin_contour_grid(spec);
      const Grid white = rescale(white_noise_grid(n, n, rng), 0.0, 1.0);
      for (std::size_t i = 0; i < pattern.size(); ++i) {
        pattern.data[i] = spec.alpha * white.data[i] + (1.0 - spec.alpha) * contour.data[i];
      }
      break;
    }
    case MaskDesign::PhlatcamContour:
      pattern = perlin_contour_grid(spec);
      break;
    case MaskDesign::MultiPinhole: {
      const auto order = random_permutation(n * n, rng);
      for (std::size_t k = 0; k < std::min(kPinholeCount, n * n); ++k) pattern.data[order[k]] = 1.0;
      break;
    }
    case MaskDesign::RandomBinary:
      for (auto& v : pattern.data) v = rng.uniform() < 0.5 ? 1.0 : 0.0;
      break;
    case MaskDesign::RandomSpeckle:
      for (auto& v : pattern.data) v = rng.uniform();
      break;
  }
  const Grid normalized = normalize_sum(std::move(pattern));
  return Tensor::from_planes(std::vector<Grid>(spec.channels, normalized));
}

void validate_key(const Key& key) {
  const auto& spec = key.spec;
  if (key.psf.rows() != spec.psf_side || key.psf.cols() != spec.psf_side || key.psf.channels() != spec.channels) {
    throw Error(ErrorCode::DegenerateKey, "PSF shape does not match the key spec");
  }
  if (key.scaling.rows() != spec.sensor_rows || key.scaling.cols() != spec.sensor_cols ||
      key.scaling.channels() != spec.channels) {
    throw Error(ErrorCode::DegenerateKey, "scaling mask shape does not match the key spec");
  }
  for (std::size_t ch = 0; ch < spec.channels; ++ch) {
    const Grid p = key.psf.plane(ch);
    double total = 0.0;
    for (double v : p.data) {
      if (v < 0.0) throw Error(ErrorCode::DegenerateKey, "PSF has negative light");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-5) throw Error(ErrorCode::DegenerateKey, "PSF channel does not sum to 1");
  }
  const float lo = static_cast<float>(spec.s_min);
  for (float v : key.scaling.values()) {
    if (!(v > 0.0f) || v < lo - 1e-6f || v > 1.0f + 1e-6f) {
      throw Error(ErrorCode::DegenerateKey, "scaling mask outside [s_min, 1]");
    }
  }
}

Key make_key(const KeySpec& spec, MaskDesign design) {
  Key key{baseline_psf(design, spec), make_scaling_mask(spec), spec, design};
  validate_key(key);
  return key;
}

Key make_key(const KeySpec& spec) { return make_key(spec, MaskDesign::OpenCam); }

double psf_spectrum_floor(const Tensor& psf, std::size_t grid_rows, std::size_t grid_cols) {
  double floor = std::numeric_limits<double>::infinity();
  for (std::size_t ch = 0; ch < psf.channels(); ++ch) {
    const auto spec = fft::forward(fft::embed(psf.plane(ch), grid_rows, grid_cols));
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const auto& v : spec.data) {
      const double m = std::abs(v);
      lo = std::min(lo, m);
      hi = std::max(hi, m);
    }
    floor = std::min(floor, hi > 0.0 ? lo / hi : 0.0);
  }
  return floor;
}

bool is_degenerate(const Key& key) {
  return psf_spectrum_floor(key.psf, key.spec.sensor_rows, key.spec.sensor_cols) < kSpectrumFloorLimit;
}

Key generate_key(std::uint64_t seed, std::size_t psf_side, std::size_t sensor_rows, std::size_t sensor_cols,
                 std::size_t channels, MaskDesign design, int max_attempts) {
  std::uint64_t s = seed;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    if (attempt > 0) s = Rng::derive_seed(seed, streams::kRegenerate + static_cast<std::uint64_t>(attempt));
    Key key = make_key(draw_keyspec(s, psf_side, sensor_rows, sensor_cols, channels), design);
    if (!is_degenerate(key)) return key;
  }
  throw Error(ErrorCode::DegenerateKey,
              "no invertible key after " + std::to_string(max_attempts) + " attempts from seed " + std::to_string(seed));
}

Tensor key_support(const Key& key) {
  switch (key.design) {
    case MaskDesign::OpenCam:
    case MaskDesign::WhiteBlend:
    case MaskDesign::PhlatcamContour:
      return perlin_contour_psf(key.spec);
    default: {
      Grid s = key.psf.plane(0);
      for (auto& v : s.data) v = v > 0.0 ? 1.0 : 0.0;
      return Tensor::from_plane(s);
    }
  }
}

nlohmann::json key_spec_to_json(const KeySpec& spec, MaskDesign design) {
  return {
      {"seed", spec.seed},
      {"alpha", spec.alpha},
      {"beta", spec.beta},
      {"dims",
       {{"psf_side", spec.psf_side},
        {"sensor", {spec.sensor_rows, spec.sensor_cols}},
        {"scene", {spec.scene_rows(), spec.scene_cols()}},
        {"channels", spec.channels}}},
      {"feature_size", spec.feature_size},
      {"s_min", spec.s_min},
      {"contour_fill", spec.contour_fill},
      {"design", std::string(to_string(design))},
      {"generator_version", kGeneratorVersion},
  };
}

KeySpec key_spec_from_json(const nlohmann::json& j) {
  try {
    KeySpec spec;
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.alpha = j.at("alpha").get<double>();
    spec.beta = j.at("beta").get<double>();
    const auto& dims = j.at("dims");
    spec.psf_side = dims.at("psf_side").get<std::size_t>();
    spec.sensor_rows = dims.at("sensor").at(0).get<std::size_t>();
    spec.sensor_cols = dims.at("sensor").at(1).get<std::size_t>();
    spec.channels = dims.at("channels").get<std::size_t>();
    spec.feature_size = j.at("feature_size").get<std::size_t>();
    spec.s_min = j.at("s_min").get<double>();
    spec.contour_fill = j.at("contour_fill").get<double>();
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("malformed key spec: ") + e.what());
  }
}

void save_key(const Key& key, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string());
  write_tensor(key.psf, dir / "psf.ocam");
  write_tensor(key.scaling, dir / "scaling.ocam");
  write_json(key_spec_to_json(key.spec, key.design), dir / "key.json");
}

Key load_key(const std::filesystem::path& dir) {
  const auto j = read_json(dir / "key.json");
  Key key;
  key.spec = key_spec_from_json(j);
  key.design = parse_mask_design(j.value("design", std::string("opencam")));
  key.psf = read_tensor(dir / "psf.ocam");
  key.scaling = read_tensor(dir / "scaling.ocam");
  validate_key(key);
  return key;
}

}  // namespace opencam
