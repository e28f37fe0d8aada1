#include "opencam/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

#include "opencam/error.hpp"

namespace opencam::fft {

namespace {

struct PlanPair {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

// FFTW planning is not thread-safe; execution of an existing plan on new
// arrays is. Plans are created once per shape and never destroyed.
class PlanCache {
 public:
  const PlanPair& get(std::size_t rows, std::size_t cols) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find({rows, cols});
    if (it != plans_.end()) return it->second;

    const int n0 = static_cast<int>(rows);
    const int n1 = static_cast<int>(cols);
    const std::size_t half = rows * (cols / 2 + 1);
    double* real = fftw_alloc_real(rows * cols);
    fftw_complex* cplx = fftw_alloc_complex(half);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    PlanPair pair;
    pair.r2c = fftw_plan_dft_r2c_2d(n0, n1, real, cplx, flags);
    pair.c2r = fftw_plan_dft_c2r_2d(n0, n1, cplx, real, flags);
    fftw_free(real);
    fftw_free(cplx);
    if (!pair.r2c || !pair.c2r) throw Error(ErrorCode::InvalidDims, "FFT planning failed");
    return plans_.emplace(std::make_pair(rows, cols), pair).first->second;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<std::size_t, std::size_t>, PlanPair> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

}  // namespace

Spectrum forward(const Grid& g) {
  if (g.rows == 0 || g.cols == 0) throw Error(ErrorCode::InvalidDims, "empty grid");
  const auto& plan = cache().get(g.rows, g.cols);
  Spectrum s;
  s.rows = g.rows;
  s.cols = g.cols;
  s.data.resize(g.rows * s.half_cols());
  Grid input = g;  // FFTW's new-array API takes non-const input
  fftw_execute_dft_r2c(plan.r2c, input.data.data(), reinterpret_cast<fftw_complex*>(s.data.data()));
  return s;
}

Grid inverse(const Spectrum& s) {
  const auto& plan = cache().get(s.rows, s.cols);
  auto scratch = s.data;  // c2r overwrites its input
  Grid g(s.rows, s.cols);
  fftw_execute_dft_c2r(plan.c2r, reinterpret_cast<fftw_complex*>(scratch.data()), g.data.data());
  const double norm = 1.0 / static_cast<double>(s.rows * s.cols);
  for (auto& v : g.data) v *= norm;
  return g;
}

std::size_t fast_size(std::size_t n) {
  for (std::size_t m = std::max<std::size_t>(n, 1);; ++m) {
    std::size_t r = m;
    for (std::size_t f : {2, 3, 5, 7}) {
      while (r % f == 0) r /= f;
    }
    if (r == 1) return m;
  }
}

Grid embed(const Grid& g, std::size_t rows, std::size_t cols, std::size_t r0, std::size_t c0) {
  if (r0 + g.rows > rows || c0 + g.cols > cols) throw Error(ErrorCode::DimMismatch, "embed out of bounds");
  Grid out(rows, cols);
  for (std::size_t r = 0; r < g.rows; ++r) {
    for (std::size_t c = 0; c < g.cols; ++c) out(r0 + r, c0 + c) = g(r, c);
  }
  return out;
}

Grid crop(const Grid& g, std::size_t r0, std::size_t c0, std::size_t rows, std::size_t cols) {
  if (r0 + rows > g.rows || c0 + cols > g.cols) throw Error(ErrorCode::DimMismatch, "crop out of bounds");
  Grid out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = g(r0 + r, c0 + c);
  }
  return out;
}

Grid convolve_full(const Grid& x, const Grid& p) {
  const std::size_t out_rows = x.rows + p.rows - 1;
  const std::size_t out_cols = x.cols + p.cols - 1;
  const std::size_t pr = fast_size(out_rows);
  const std::size_t pc = fast_size(out_cols);
  auto fx = forward(embed(x, pr, pc));
  const auto fp = forward(embed(p, pr, pc));
  for (std::size_t i = 0; i < fx.data.size(); ++i) fx.data[i] *= fp.data[i];
  auto full = inverse(fx);
  return crop(full, 0, 0, out_rows, out_cols);
}

Grid circular_autocorrelation(const Grid& g) {
  auto f = forward(g);
  for (auto& v : f.data) v = std::norm(v);
  return inverse(f);
}

Grid fftshift(const Grid& g) {
  Grid out(g.rows, g.cols);
  for (std::size_t r = 0; r < g.rows; ++r) {
    for (std::size_t c = 0; c < g.cols; ++c) {
      out((r + g.rows / 2) % g.rows, (c + g.cols / 2) % g.cols) = g(r, c);
    }
  }
  return out;
}

}  // namespace opencam::fft
