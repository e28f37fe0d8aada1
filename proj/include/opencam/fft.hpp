#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "opencam/tensor.hpp"

namespace opencam::fft {

/// Half-plane spectrum of a real grid: rows x (cols/2 + 1) bins, the layout
/// produced by a real-to-complex 2-D DFT.
struct Spectrum {
  std::size_t rows = 0;
  std::size_t cols = 0;  // spatial width; stored width is cols/2 + 1
  std::vector<std::complex<double>> data;

  std::size_t half_cols() const { return cols / 2 + 1; }
  std::complex<double>& operator()(std::size_t r, std::size_t c) { return data[r * half_cols() + c]; }
  const std::complex<double>& operator()(std::size_t r, std::size_t c) const {
    return data[r * half_cols() + c];
  }
};

/// Unnormalized forward DFT.
Spectrum forward(const Grid& g);
/// Inverse DFT including the 1/(rows*cols) factor, so inverse(forward(g)) == g.
Grid inverse(const Spectrum& s);

/// Smallest n' >= n whose only prime factors are 2, 3, 5 and 7.
std::size_t fast_size(std::size_t n);

/// Zero-padded copy of `g` placed at (r0, c0) inside a rows x cols grid.
Grid embed(const Grid& g, std::size_t rows, std::size_t cols, std::size_t r0 = 0, std::size_t c0 = 0);
Grid crop(const Grid& g, std::size_t r0, std::size_t c0, std::size_t rows, std::size_t cols);

/// Linear (zero-padded) convolution; output is (H1+H2-1) x (W1+W2-1).
Grid convolve_full(const Grid& x, const Grid& p);

/// Circular autocorrelation IDFT(|DFT(g)|^2), zero lag at (0, 0).
Grid circular_autocorrelation(const Grid& g);

/// Moves the zero-lag element to (rows/2, cols/2).
Grid fftshift(const Grid& g);

}  // namespace opencam::fft
