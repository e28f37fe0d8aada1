#include "opencam/montage.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "opencam/error.hpp"

namespace opencam {

Tensor montage(const std::vector<Tensor>& panels, std::size_t gap) {
  if (panels.empty()) throw Error(ErrorCode::EmptySet, "montage needs at least one panel");
  std::size_t rows = 0, cols = 0, channels = 1;
  for (const auto& p : panels) {
    rows = std::max(rows, p.rows());
    cols += p.cols();
    channels = std::max(channels, p.channels());
  }
  cols += gap * (panels.size() - 1);
  Tensor out = channels == 1 ? Tensor(rows, cols, 1.0f) : Tensor(rows, cols, channels, 1.0f);
  std::size_t c0 = 0;
  for (const auto& p : panels) {
    for (std::size_t r = 0; r < p.rows(); ++r) {
      for (std::size_t c = 0; c < p.cols(); ++c) {
        for (std::size_t ch = 0; ch < channels; ++ch) {
          const float v = p.at(r, c, p.channels() == 1 ? 0 : ch);
          out.at(r, c0 + c, ch) = std::clamp(v, 0.0f, 1.0f);
        }
      }
    }
    c0 += p.cols() + gap;
  }
  return out;
}

Tensor scatter_plot(const std::vector<ScatterSeries>& series, std::size_t side) {
  static constexpr std::array<std::array<float, 3>, 6> kColors{{{0.85f, 0.10f, 0.10f},
                                                                {0.10f, 0.35f, 0.85f},
                                                                {0.10f, 0.60f, 0.20f},
                                                                {0.80f, 0.50f, 0.00f},
                                                                {0.55f, 0.10f, 0.65f},
                                                                {0.20f, 0.20f, 0.20f}}};
  if (side < 32) throw Error(ErrorCode::InvalidDims, "scatter plot side must be >= 32");
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (double v : s.x) xmin = std::min(xmin, v), xmax = std::max(xmax, v);
    for (double v : s.y) ymin = std::min(ymin, v), ymax = std::max(ymax, v);
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  const double xpad = std::max((xmax - xmin) * 0.1, 0.5);
  const double ypad = std::max((ymax - ymin) * 0.1, 0.5);
  xmin -= xpad, xmax += xpad, ymin -= ypad, ymax += ypad;

  Tensor img(side, side, std::size_t{3}, 1.0f);
  const std::size_t margin = side / 10;
  const std::size_t lo = margin, hi = side - margin;
  for (std::size_t i = lo; i <= hi; ++i) {
    for (std::size_t ch = 0; ch < 3; ++ch) {
      img.at(lo, i, ch) = img.at(hi, i, ch) = 0.0f;
      img.at(i, lo, ch) = img.at(i, hi, ch) = 0.0f;
    }
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& color = kColors[k % kColors.size()];
    const auto& s = series[k];
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      const double fx = (s.x[i] - xmin) / (xmax - xmin);
      const double fy = (s.y[i] - ymin) / (ymax - ymin);
      const auto px = static_cast<long>(std::lround(lo + fx * (hi - lo)));
      const auto py = static_cast<long>(std::lround(hi - fy * (hi - lo)));
      for (long dr = -2; dr <= 2; ++dr) {
        for (long dc = -2; dc <= 2; ++dc) {
          const long r = py + dr, c = px + dc;
          if (r < 0 || c < 0 || r >= static_cast<long>(side) || c >= static_cast<long>(side)) continue;
          for (std::size_t ch = 0; ch < 3; ++ch) img.at(r, c, ch) = color[ch];
        }
      }
    }
  }
  return img;
}

}  // namespace opencam
