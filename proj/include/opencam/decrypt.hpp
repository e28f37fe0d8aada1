#pragma once

#include <cstddef>

#include "opencam/keygen.hpp"
#include "opencam/tensor.hpp"

namespace opencam {

struct WienerConfig {
  double gamma = 3e-4;    // Tikhonov weight
  double epsilon = 1e-3;  // floor in Y / (S + eps)

  void validate() const;
};

/// Element-wise Y / (S + epsilon).
Tensor scaling_normalize(const Tensor& y, const Tensor& scaling, double epsilon);

/// Per-channel Fourier-domain Tikhonov inverse of full convolution with `p`.
/// The filter conj(H) / (|H|^2 + gamma) is applied on the measurement grid,
/// where circular and linear convolution coincide, so the scene sits at
/// offset (0, 0). Output is scene_rows x scene_cols, clamped to >= 0.
Tensor wiener_decrypt(const Tensor& y_n, const Tensor& p, const WienerConfig& cfg, std::size_t scene_rows,
                      std::size_t scene_cols);

/// Same filter without the nonnegativity clamp.
Tensor wiener_decrypt_unclamped(const Tensor& y_n, const Tensor& p, const WienerConfig& cfg,
                                std::size_t scene_rows, std::size_t scene_cols);

/// scaling_normalize followed by wiener_decrypt.
Tensor keyed_decrypt(const Tensor& y, const Tensor& psf, const Tensor& scaling, const WienerConfig& cfg,
                     std::size_t scene_rows, std::size_t scene_cols);
Tensor keyed_decrypt(const Tensor& y, const Key& key, const WienerConfig& cfg);

}  // namespace opencam
