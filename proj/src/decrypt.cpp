#include "opencam/decrypt.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "opencam/error.hpp"
#include "opencam/fft.hpp"

namespace opencam {

void WienerConfig::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw Error(ErrorCode::InvalidSpec, "gamma must be >= 0");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw Error(ErrorCode::InvalidSpec, "epsilon must be > 0");
}

Tensor scaling_normalize(const Tensor& y, const Tensor& scaling, double epsilon) {
  if (!y.same_shape(scaling)) throw Error(ErrorCode::DimMismatch, "measurement and scaling mask differ in shape");
  if (epsilon < 0.0) throw Error(ErrorCode::InvalidSpec, "epsilon must be >= 0");
  std::vector<Grid> planes = y.planes();
  for (std::size_t ch = 0; ch < planes.size(); ++ch) {
    const Grid s = scaling.plane(ch);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double d = s.data[i] + epsilon;
      if (d == 0.0) throw Error(ErrorCode::DegenerateKey, "scaling mask is zero with epsilon = 0");
      planes[ch].data[i] /= d;
    }
  }
  return Tensor::from_planes(planes, y.ndim() == 3);
}

namespace {

Tensor wiener_impl(const Tensor& y_n, const Tensor& p, const WienerConfig& cfg, std::size_t scene_rows,
                   std::size_t scene_cols, bool clamp) {
  if (y_n.channels() != p.channels()) throw Error(ErrorCode::ChannelMismatch, "measurement and PSF channels differ");
  if (scene_rows + p.rows() - 1 != y_n.rows() || scene_cols + p.cols() - 1 != y_n.cols()) {
    throw Error(ErrorCode::DimMismatch, "measurement is " + std::to_string(y_n.rows()) + "x" +
                                            std::to_string(y_n.cols()) + ", expected full convolution of " +
                                            std::to_string(scene_rows) + "x" + std::to_string(scene_cols) +
                                            " with " + std::to_string(p.rows()) + "x" + std::to_string(p.cols()));
  }
  if (cfg.gamma < 0.0) throw Error(ErrorCode::InvalidSpec, "gamma must be >= 0");
  const std::size_t rows = y_n.rows();
  const std::size_t cols = y_n.cols();
  std::vector<Grid> out;
  for (std::size_t ch = 0; ch < y_n.channels(); ++ch) {
    const auto h = fft::forward(fft::embed(p.plane(ch), rows, cols));
    auto y = fft::forward(y_n.plane(ch));
    for (std::size_t i = 0; i < y.data.size(); ++i) {
      const double power = std::norm(h.data[i]);
      const double denom = power + cfg.gamma;
      if (denom == 0.0) throw Error(ErrorCode::DegenerateKey, "PSF spectrum has an exact zero and gamma = 0");
      y.data[i] = std::conj(h.data[i]) * y.data[i] / denom;
    }
    Grid x = fft::crop(fft::inverse(y), 0, 0, scene_rows, scene_cols);
    if (clamp) {
      for (auto& v : x.data) v = std::max(v, 0.0);
    }
    out.push_back(std::move(x));
  }
  return Tensor::from_planes(out, y_n.ndim() == 3);
}

}  // namespace

Tensor wiener_decrypt(const Tensor& y_n, const Tensor& p, const WienerConfig& cfg, std::size_t scene_rows,
                      std::size_t scene_cols) {
  return wiener_impl(y_n, p, cfg, scene_rows, scene_cols, true);
}

Tensor wiener_decrypt_unclamped(const Tensor& y_n, const Tensor& p, const WienerConfig& cfg,
                                std::size_t scene_rows, std::size_t scene_cols) {
  return wiener_impl(y_n, p, cfg, scene_rows, scene_cols, false);
}

Tensor keyed_decrypt(const Tensor& y, const Tensor& psf, const Tensor& scaling, const WienerConfig& cfg,
                     std::size_t scene_rows, std::size_t scene_cols) {
  return wiener_decrypt(scaling_normalize(y, scaling, cfg.epsilon), psf, cfg, scene_rows, scene_cols);
}

Tensor keyed_decrypt(const Tensor& y, const Key& key, const WienerConfig& cfg) {
  if (y.rows() < key.psf.rows() || y.cols() < key.psf.cols()) {
    throw Error(ErrorCode::DimMismatch, "measurement smaller than PSF");
  }
  return keyed_decrypt(y, key.psf, key.scaling, cfg, y.rows() - key.psf.rows() + 1, y.cols() - key.psf.cols() + 1);
}

}  // namespace opencam
