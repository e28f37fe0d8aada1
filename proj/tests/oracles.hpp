#pragma once

// Brute-force reference implementations used by the tests. They avoid the
// library's FFT and filtering paths on purpose and are only meant for small
// inputs.

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace oracle {

struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> v;
  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), v(r * c, fill) {}
  double& operator()(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
};

// Direct-sum full linear convolution.
inline Mat convolve(const Mat& x, const Mat& p) {
  Mat y(x.rows + p.rows - 1, x.cols + p.cols - 1);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j)
      for (std::size_t k = 0; k < p.rows; ++k)
        for (std::size_t l = 0; l < p.cols; ++l) y(i + k, j + l) += x(i, j) * p(k, l);
  return y;
}

// Dense matrix of x -> full_conv(x, p), x vectorized row-major.
inline Mat linear_conv_matrix(const Mat& p, std::size_t xr, std::size_t xc) {
  const std::size_t yr = xr + p.rows - 1, yc = xc + p.cols - 1;
  Mat A(yr * yc, xr * xc);
  for (std::size_t i = 0; i < xr; ++i)
    for (std::size_t j = 0; j < xc; ++j)
      for (std::size_t k = 0; k < p.rows; ++k)
        for (std::size_t l = 0; l < p.cols; ++l) A((i + k) * yc + (j + l), i * xc + j) += p(k, l);
  return A;
}

// Dense matrix of circular convolution with p zero-padded to n x m.
inline Mat circular_conv_matrix(const Mat& p, std::size_t n, std::size_t m) {
  Mat A(n * m, n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < p.rows; ++k)
        for (std::size_t l = 0; l < p.cols; ++l) A(((i + k) % n) * m + (j + l) % m, i * m + j) += p(k, l);
  return A;
}

// Solves (A^T A + gamma I) x = A^T y with a Cholesky factorization.
inline std::vector<double> tikhonov(const Mat& A, const std::vector<double>& y, double gamma) {
  const std::size_t n = A.cols;
  std::vector<double> N(n * n, 0.0), b(n, 0.0);
  for (std::size_t r = 0; r < A.rows; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      const double a = A(r, i);
      if (a == 0.0) continue;
      b[i] += a * y[r];
      for (std::size_t j = 0; j < n; ++j) N[i * n + j] += a * A(r, j);
    }
  }
  for (std::size_t i = 0; i < n; ++i) N[i * n + i] += gamma;
  // In-place Cholesky, lower triangle.
  for (std::size_t j = 0; j < n; ++j) {
    double d = N[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= N[j * n + k] * N[j * n + k];
    if (!(d > 0.0)) throw std::runtime_error("normal matrix not positive definite");
    d = std::sqrt(d);
    N[j * n + j] = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = N[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= N[i * n + k] * N[j * n + k];
      N[i * n + j] = s / d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= N[i * n + k] * b[k];
    b[i] = s / N[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= N[k * n + i] * b[k];
    b[i] = s / N[i * n + i];
  }
  return b;
}

inline double mse(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

inline double psnr(const std::vector<double>& a, const std::vector<double>& b) {
  return 10.0 * std::log10(1.0 / mse(a, b));
}

// Per-window SSIM with a 2-D Gaussian window, weights computed directly.
inline double ssim(const Mat& a, const Mat& b, std::size_t w = 11, double sigma = 1.5) {
  Mat g(w, w);
  double tot = 0.0;
  const double h = (static_cast<double>(w) - 1.0) / 2.0;
  for (std::size_t i = 0; i < w; ++i)
    for (std::size_t j = 0; j < w; ++j) {
      const double di = i - h, dj = j - h;
      g(i, j) = std::exp(-(di * di + dj * dj) / (2 * sigma * sigma));
      tot += g(i, j);
    }
  for (auto& v : g.v) v /= tot;
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r + w <= a.rows; ++r)
    for (std::size_t c = 0; c + w <= a.cols; ++c) {
      double mx = 0, my = 0;
      for (std::size_t i = 0; i < w; ++i)
        for (std::size_t j = 0; j < w; ++j) {
          mx += g(i, j) * a(r + i, c + j);
          my += g(i, j) * b(r + i, c + j);
        }
      double vx = 0, vy = 0, cxy = 0;
      for (std::size_t i = 0; i < w; ++i)
        for (std::size_t j = 0; j < w; ++j) {
          const double dx = a(r + i, c + j) - mx, dy = b(r + i, c + j) - my;
          vx += g(i, j) * dx * dx;
          vy += g(i, j) * dy * dy;
          cxy += g(i, j) * dx * dy;
        }
      acc += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  return acc / static_cast<double>(count);
}

// min_c ||e - c t|| / ||t|| by a coarse-to-fine grid search over c.
inline double scale_search(const std::vector<double>& e, const std::vector<double>& t, double lo, double hi) {
  auto err = [&](double c) {
    double s = 0.0, n = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      s += (e[i] - c * t[i]) * (e[i] - c * t[i]);
      n += t[i] * t[i];
    }
    return std::sqrt(s / n);
  };
  for (int level = 0; level < 12; ++level) {
    double best = lo, best_e = err(lo);
    for (int k = 0; k <= 200; ++k) {
      const double c = lo + (hi - lo) * k / 200.0;
      const double v = err(c);
      if (v < best_e) best_e = v, best = c;
    }
    const double span = (hi - lo) / 100.0;
    lo = best - span;
    hi = best + span;
  }
  return err(0.5 * (lo + hi));
}

// Direct 2-D DFT power |X(u,v)|^2 via separable O(n^3) transforms.
inline Mat power_spectrum(const Mat& x) {
  const std::size_t n = x.rows, m = x.cols;
  const double tau = 6.283185307179586;
  std::vector<std::complex<double>> rows(n * m);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t v = 0; v < m; ++v) {
      std::complex<double> s = 0;
      for (std::size_t c = 0; c < m; ++c) s += x(r, c) * std::polar(1.0, -tau * double(v * c % m) / double(m));
      rows[r * m + v] = s;
    }
  Mat p(n, m);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < m; ++v) {
      std::complex<double> s = 0;
      for (std::size_t r = 0; r < n; ++r) s += rows[r * m + v] * std::polar(1.0, -tau * double(u * r % n) / double(n));
      p(u, v) = std::norm(s);
    }
  return p;
}

// Least-squares slope of log(radially averaged power) vs log(radius),
// integer radii 2..n/4 (well inside the Nyquist disc).
inline double psd_slope(const Mat& power) {
  const std::size_t n = power.rows;
  std::vector<double> sum(n, 0.0), cnt(n, 0.0);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < power.cols; ++v) {
      const double fu = u <= n / 2 ? double(u) : double(u) - double(n);
      const double fv = v <= power.cols / 2 ? double(v) : double(v) - double(power.cols);
      const auto r = static_cast<std::size_t>(std::lround(std::hypot(fu, fv)));
      if (r < n) sum[r] += power(u, v), cnt[r] += 1;
    }
  double sx = 0, sy = 0, sxx = 0, sxy = 0, k = 0;
  for (std::size_t r = 2; r <= n / 4; ++r) {
    if (cnt[r] == 0) continue;
    const double x = std::log(double(r)), y = std::log(sum[r] / cnt[r]);
    sx += x, sy += y, sxx += x * x, sxy += x * y, k += 1;
  }
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

// Direct circular autocorrelation, zero lag at (0, 0).
inline Mat circular_autocorrelation(const Mat& x) {
  Mat a(x.rows, x.cols);
  for (std::size_t dr = 0; dr < x.rows; ++dr)
    for (std::size_t dc = 0; dc < x.cols; ++dc) {
      double s = 0.0;
      for (std::size_t r = 0; r < x.rows; ++r)
        for (std::size_t c = 0; c < x.cols; ++c) s += x(r, c) * x((r + dr) % x.rows, (c + dc) % x.cols);
      a(dr, dc) = s;
    }
  return a;
}

}  // namespace oracle
