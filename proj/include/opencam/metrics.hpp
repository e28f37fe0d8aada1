#pragma once

#include <map>
#include <string>

#include "opencam/tensor.hpp"

namespace opencam {

struct MetricResult {
  std::string name;
  double value = 0.0;
  std::map<std::string, double> params;
};

inline constexpr double kPsnrCap = 100.0;

double mse(const Tensor& a, const Tensor& b);

/// 10 log10(peak^2 / MSE), capped at 100 dB.
double psnr(const Tensor& a, const Tensor& b, double peak = 1.0);

struct SsimParams {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

/// Gaussian-windowed SSIM over all fully contained windows, averaged over
/// windows and then channels. Throws TooSmall when a side is below the window.
double ssim(const Tensor& a, const Tensor& b, const SsimParams& params = {});

struct ScaleFit {
  double error = 0.0;
  double scale = 0.0;
};

/// min_c ||est - c truth|| / ||truth||.
ScaleFit scale_optimal_error(const Tensor& est, const Tensor& truth);

/// |a and b| / |a or b| over nonzero elements; 1 when both are empty.
double support_iou(const Tensor& a, const Tensor& b);

}  // namespace opencam
