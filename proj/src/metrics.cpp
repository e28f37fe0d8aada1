#include "opencam/metrics.hpp"

#include <cmath>
#include <vector>

#include "opencam/error.hpp"

namespace opencam {

namespace {

void require_same(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw Error(ErrorCode::DimMismatch, "metric inputs differ in shape");
  if (a.empty()) throw Error(ErrorCode::InvalidTensor, "metric input is empty");
}

// Valid-mode separable filtering with a 1-D kernel.
Grid filter_valid(const Grid& g, const std::vector<double>& k) {
  const std::size_t w = k.size();
  const std::size_t out_r = g.rows - w + 1;
  const std::size_t out_c = g.cols - w + 1;
  Grid tmp(g.rows, out_c);
  for (std::size_t r = 0; r < g.rows; ++r) {
    for (std::size_t c = 0; c < out_c; ++c) {
      double acc = 0.0;
      for (std::size_t i = 0; i < w; ++i) acc += k[i] * g(r, c + i);
      tmp(r, c) = acc;
    }
  }
  Grid out(out_r, out_c);
  for (std::size_t r = 0; r < out_r; ++r) {
    for (std::size_t c = 0; c < out_c; ++c) {
      double acc = 0.0;
      for (std::size_t i = 0; i < w; ++i) acc += k[i] * tmp(r + i, c);
      out(r, c) = acc;
    }
  }
  return out;
}

}  // namespace

double mse(const Tensor& a, const Tensor& b) {
  require_same(a, b);
  const auto va = a.values();
  const auto vb = b.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double d = static_cast<double>(va[i]) - static_cast<double>(vb[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(va.size());
}

double psnr(const Tensor& a, const Tensor& b, double peak) {
  const double m = mse(a, b);
  if (m == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / m));
}

double ssim(const Tensor& a, const Tensor& b, const SsimParams& params) {
  require_same(a, b);
  if (a.rows() < params.window || a.cols() < params.window) {
    throw Error(ErrorCode::TooSmall, "SSIM needs at least " + std::to_string(params.window) + " pixels per side");
  }
  std::vector<double> k(params.window);
  const double half = (static_cast<double>(params.window) - 1.0) / 2.0;
  double total = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double d = static_cast<double>(i) - half;
    k[i] = std::exp(-d * d / (2.0 * params.sigma * params.sigma));
    total += k[i];
  }
  for (auto& v : k) v /= total;

  const double c1 = std::pow(params.k1 * params.data_range, 2);
  const double c2 = std::pow(params.k2 * params.data_range, 2);
  double sum = 0.0;
  for (std::size_t ch = 0; ch < a.channels(); ++ch) {
    const Grid x = a.plane(ch);
    const Grid y = b.plane(ch);
    Grid xx(x.rows, x.cols), yy(x.rows, x.cols), xy(x.rows, x.cols);
    for (std::size_t i = 0; i < x.size(); ++i) {
      xx.data[i] = x.data[i] * x.data[i];
      yy.data[i] = y.data[i] * y.data[i];
      xy.data[i] = x.data[i] * y.data[i];
    }
    const Grid mx = filter_valid(x, k), my = filter_valid(y, k);
    const Grid sxx = filter_valid(xx, k), syy = filter_valid(yy, k), sxy = filter_valid(xy, k);
    double acc = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double ux = mx.data[i], uy = my.data[i];
      const double vx = sxx.data[i] - ux * ux;
      const double vy = syy.data[i] - uy * uy;
      const double cxy = sxy.data[i] - ux * uy;
      acc += ((2 * ux * uy + c1) * (2 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
    }
    sum += acc / static_cast<double>(mx.size());
  }
  return sum / static_cast<double>(a.channels());
}

ScaleFit scale_optimal_error(const Tensor& est, const Tensor& truth) {
  require_same(est, truth);
  const auto e = est.values();
  const auto t = truth.values();
  double et = 0.0, tt = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    et += static_cast<double>(e[i]) * t[i];
    tt += static_cast<double>(t[i]) * t[i];
  }
  if (tt == 0.0) throw Error(ErrorCode::ZeroTruth, "reference tensor is all zeros");
  const double c = et / tt;
  double rr = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double d = e[i] - c * t[i];
    rr += d * d;
  }
  return {std::sqrt(rr / tt), c};
}

double support_iou(const Tensor& a, const Tensor& b) {
  require_same(a, b);
  const auto va = a.values();
  const auto vb = b.values();
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    const bool x = va[i] != 0.0f;
    const bool y = vb[i] != 0.0f;
    inter += x && y;
    uni += x || y;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace opencam
