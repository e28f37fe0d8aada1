#include "opencam/optics.hpp"

#include <string>

#include "opencam/error.hpp"
#include "opencam/fft.hpp"
#include "opencam/png_io.hpp"
#include "opencam/scenes.hpp"
#include "opencam/tensor_io.hpp"

namespace opencam {

namespace {

std::vector<Grid> convolve_planes(const Tensor& x, const Tensor& p) {
  if (x.channels() != p.channels()) {
    throw Error(ErrorCode::ChannelMismatch, "scene has " + std::to_string(x.channels()) + " channels, PSF has " +
                                                std::to_string(p.channels()));
  }
  std::vector<Grid> out;
  out.reserve(x.channels());
  for (std::size_t ch = 0; ch < x.channels(); ++ch) out.push_back(fft::convolve_full(x.plane(ch), p.plane(ch)));
  return out;
}

// Noise is drawn in row-major, channel-last order so the stream layout
// matches the tensor layout.
Tensor finish(std::vector<Grid> planes, const NoiseModel& noise, Rng& rng, bool force_3d) {
  if (noise.sigma < 0.0) throw Error(ErrorCode::InvalidSpec, "noise sigma must be >= 0");
  if (noise.sigma > 0.0) {
    const std::size_t n = planes.front().size();
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& g : planes) g.data[i] += noise.sigma * rng.normal();
    }
  }
  return Tensor::from_planes(planes, force_3d);
}

}  // namespace

nlohmann::json Measurement::metadata() const {
  return {{"key_id", key_id}, {"scene_id", scene_id}, {"sigma", sigma}, {"seed", seed}, {"dims", data.dims()}};
}

Tensor full_convolve(const Tensor& x, const Tensor& p) {
  return Tensor::from_planes(convolve_planes(x, p), x.ndim() == 3);
}

Measurement forward_single(const Tensor& x, const Tensor& p, const NoiseModel& noise, Rng& rng) {
  Measurement m;
  m.data = finish(convolve_planes(x, p), noise, rng, x.ndim() == 3);
  m.sigma = noise.sigma;
  m.seed = rng.seed();
  return m;
}

Measurement forward_double(const Tensor& x, const Tensor& psf, const Tensor& scaling, const NoiseModel& noise,
                           Rng& rng) {
  auto planes = convolve_planes(x, psf);
  const auto& front = planes.front();
  if (scaling.rows() != front.rows || scaling.cols() != front.cols || scaling.channels() != planes.size()) {
    throw Error(ErrorCode::DimMismatch, "scaling mask is " + std::to_string(scaling.rows()) + "x" +
                                            std::to_string(scaling.cols()) + ", convolution output is " +
                                            std::to_string(front.rows) + "x" + std::to_string(front.cols));
  }
  for (std::size_t ch = 0; ch < planes.size(); ++ch) {
    const Grid s = scaling.plane(ch);
    for (std::size_t i = 0; i < s.size(); ++i) planes[ch].data[i] *= s.data[i];
  }
  Measurement m;
  m.data = finish(std::move(planes), noise, rng, x.ndim() == 3);
  m.sigma = noise.sigma;
  m.seed = rng.seed();
  return m;
}

Measurement forward_double(const Tensor& x, const Key& key, const NoiseModel& noise, Rng& rng) {
  auto m = forward_double(x, key.psf, key.scaling, noise, rng);
  m.key_id = key.id();
  return m;
}

Measurement uniform_scene_response(const Key& key, double level, const NoiseModel& noise, Rng& rng) {
  const auto& spec = key.spec;
  const Tensor scene = spec.channels == 1 && key.psf.ndim() == 2
                           ? Tensor(spec.scene_rows(), spec.scene_cols(), static_cast<float>(level))
                           : Tensor(spec.scene_rows(), spec.scene_cols(), spec.channels, static_cast<float>(level));
  auto m = forward_double(scene, key, noise, rng);
  m.scene_id = "uniform-" + std::to_string(level);
  return m;
}

Tensor add_bright_source(const Tensor& base, double relative_intensity, std::size_t row, std::size_t col) {
  if (row >= base.rows() || col >= base.cols()) throw Error(ErrorCode::DimMismatch, "bright source outside scene");
  Tensor out = base;
  const double amplitude = relative_intensity * static_cast<double>(base.max());
  for (std::size_t ch = 0; ch < base.channels(); ++ch) {
    out.at(row, col, ch) = static_cast<float>(out.at(row, col, ch) + amplitude);
  }
  return out;
}

Tensor synthesize_scene(const SceneSpec& spec, Rng& rng) {
  if (spec.rows == 0 || spec.cols == 0 || (spec.channels != 1 && spec.channels != 3)) {
    throw Error(ErrorCode::InvalidDims, "scene dims must be positive with 1 or 3 channels");
  }
  auto blank = [&](float v) {
    return spec.channels == 1 ? Tensor(spec.rows, spec.cols, v) : Tensor(spec.rows, spec.cols, std::size_t{3}, v);
  };
  auto natural = [&]() -> Tensor {
    if (spec.file.empty()) return synthetic_scene(spec.rows, spec.cols, spec.channels, rng);
    if (!std::filesystem::exists(spec.file)) throw Error(ErrorCode::FileMissing, spec.file.string());
    Tensor t = spec.file.extension() == ".png" ? load_png_as_scene(spec.file, static_cast<int>(spec.channels))
                                               : read_tensor(spec.file);
    if (t.rows() != spec.rows || t.cols() != spec.cols) t = resize_bilinear(t, spec.rows, spec.cols);
    return t;
  };
  const std::size_t row = spec.row.value_or(spec.rows / 2);
  const std::size_t col = spec.col.value_or(spec.cols / 2);

  switch (spec.kind) {
    case SceneSpec::Kind::Natural:
      return natural();
    case SceneSpec::Kind::Uniform:
      if (spec.level < 0.0) throw Error(ErrorCode::InvalidSpec, "scene level must be >= 0");
      return blank(static_cast<float>(spec.level));
    case SceneSpec::Kind::Impulse: {
      if (spec.amplitude < 0.0) throw Error(ErrorCode::InvalidSpec, "impulse amplitude must be >= 0");
      if (row >= spec.rows || col >= spec.cols) throw Error(ErrorCode::DimMismatch, "impulse outside scene");
      Tensor t = blank(0.0f);
      for (std::size_t ch = 0; ch < spec.channels; ++ch) t.at(row, col, ch) = static_cast<float>(spec.amplitude);
      return t;
    }
    case SceneSpec::Kind::BrightSource: {
      const Tensor base = spec.base ? *spec.base : natural();
      return add_bright_source(base, spec.relative_intensity, row, col);
    }
  }
  throw Error(ErrorCode::UnknownKind, "unknown scene kind");
}

void save_measurement(const Measurement& m, const std::filesystem::path& path) {
  write_tensor(m.data, path);
  write_json(m.metadata(), std::filesystem::path(path.string() + ".json"));
}

Measurement load_measurement(const std::filesystem::path& path) {
  Measurement m;
  m.data = read_tensor(path);
  const std::filesystem::path meta(path.string() + ".json");
  if (std::filesystem::exists(meta)) {
    const auto j = read_json(meta);
    m.key_id = j.value("key_id", std::string());
    m.scene_id = j.value("scene_id", std::string());
    m.sigma = j.value("sigma", 0.0);
    m.seed = j.value("seed", std::uint64_t{0});
  }
  return m;
}

}  // namespace opencam
