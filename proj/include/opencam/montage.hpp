#pragma once

#include <string>
#include <vector>

#include "opencam/tensor.hpp"

namespace opencam {

/// Panels side by side on a white background, each clamped to [0, 1] and
/// top-aligned. Single-channel panels are promoted when any panel is RGB.
Tensor montage(const std::vector<Tensor>& panels, std::size_t gap = 2);

struct ScatterSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Minimal RGB scatter plot: axes box, one color per series, axis ranges
/// padded around the data.
Tensor scatter_plot(const std::vector<ScatterSeries>& series, std::size_t side = 256);

}  // namespace opencam
