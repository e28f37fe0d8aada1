#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "opencam/decrypt.hpp"
#include "opencam/keygen.hpp"
#include "opencam/tensor.hpp"

namespace opencam {

/// Where things sit: scene and PSF sizes, and the bright source / impulse
/// position in scene coordinates. The sensor is the full-convolution grid.
struct AttackGeometry {
  std::size_t scene_rows = 0;
  std::size_t scene_cols = 0;
  std::size_t psf_rows = 0;
  std::size_t psf_cols = 0;
  std::size_t source_row = 0;
  std::size_t source_col = 0;

  std::size_t sensor_rows() const { return scene_rows + psf_rows - 1; }
  std::size_t sensor_cols() const { return scene_cols + psf_cols - 1; }
  /// Source at the scene center.
  static AttackGeometry centered(std::size_t scene_rows, std::size_t scene_cols, std::size_t psf_rows,
                                 std::size_t psf_cols);
  static AttackGeometry for_key(const Key& key);
  void validate() const;
};

struct TraceRow {
  std::size_t iteration = 0;
  double objective = 0.0;
  double step = 0.0;
  bool s_accepted = false;
  std::size_t p_accepted = 0;
};

struct AttackReport {
  std::string kind;
  std::optional<Tensor> estimated_psf;
  std::optional<Tensor> estimated_scaling;
  std::optional<Tensor> estimated_support;
  std::optional<Tensor> decrypted;
  std::map<std::string, double> metrics;
  std::vector<TraceRow> trace;

  nlohmann::json to_json() const;
  std::string trace_csv() const;
};

/// Adds psnr (and ssim when the scene is large enough) against `truth`.
void score_decryption(AttackReport& report, const Tensor& truth);

// ---- Autocorrelation diagnostic ----

/// Per channel IDFT(|DFT(t)|^2), zero lag moved to (rows/2, cols/2) and
/// divided by the zero-lag value.
Tensor autocorrelation(const Tensor& t);

/// 1 - (sum of |a|^p over the central 3x3) / (sum of |a|^p), averaged over
/// channels. p = 2 is plain energy; the default p = 4 suppresses the
/// sqrt(N) fluctuation floor of finite random fields.
double impulse_likeness(const Tensor& acorr, double exponent = 4.0);

/// impulse_likeness of the autocorrelation of the mean-removed PSF.
double psf_impulse_likeness(const Tensor& psf, double exponent = 4.0);

// ---- Binary threshold attack ----

std::vector<double> threshold_grid(double max_value, std::size_t count = 64);

struct ThresholdResult {
  Tensor support;  // best estimate, PSF-sized
  double best_iou = 0.0;
  double best_tau = 0.0;
  std::vector<double> iou;  // per tau
};

/// Crops the point-source measurement at the source position to PSF size,
/// thresholds at every tau and scores IoU against `true_support`.
ThresholdResult threshold_support_attack(const Tensor& y_bright, const Tensor& true_support,
                                         const AttackGeometry& geo, const std::vector<double>& taus);
ThresholdResult threshold_support_attack(const Tensor& y_bright, const Tensor& true_support,
                                         const AttackGeometry& geo);

// ---- Known-plaintext attacks ----

/// Crop at the source position, clamp >= 0, sum-normalize per channel.
Tensor psf_from_bright_measurement(const Tensor& y_bright, const AttackGeometry& geo);

/// Impulse KPA: the bright-source response stands in for the PSF; the
/// target is Wiener-decrypted with S assumed to be 1.
AttackReport ikpa(const Tensor& y_bright, const Tensor& y_target, const WienerConfig& cfg,
                  const AttackGeometry& geo);

/// Uniform-scene KPA: S is estimated by the max-normalized USR.
AttackReport ukpa_usr(const Tensor& y_usr, const Tensor& y_target, const Tensor& psf_guess,
                      const WienerConfig& cfg);

/// Averaging KPA: S is estimated by the max-normalized mean measurement.
AttackReport ukpa_average(const std::vector<Tensor>& measurements, const Tensor& y_target, const Tensor& psf_guess,
                          const WienerConfig& cfg);

/// Mean of same-shaped tensors; EmptySet when empty.
Tensor mean_tensor(const std::vector<Tensor>& ts);

struct AlsConfig {
  std::size_t outer_iters = 50;
  std::size_t psf_step_count = 5;
  double initial_step = 0.0;  // 0 => 1 / (Lipschitz bound)
  std::size_t max_halvings = 30;
  double epsilon_ls = 1e-12;  // ridge in the S-step, relative to the largest denominator
  double s_floor = 0.2;       // lower clamp of S; the design floor is public
  bool nonneg_projection = true;

  void validate() const;
};

struct AlsState {
  Tensor scaling;  // sensor-sized
  Tensor psf;      // PSF-sized, sums to 1 per channel
  std::vector<double> amplitude;  // per-channel scale of the impulse plaintext
};

struct AlsResult {
  AlsState state;
  std::vector<TraceRow> trace;
};

/// Objective sum_ch ||Y1 - S.(P*1)||^2 + ||Y2 - c S.(P*delta)||^2.
double uikpa_objective(const Tensor& y_usr, const Tensor& y_bright, const AlsState& st, const AttackGeometry& geo);

/// Warm start from the two known responses.
AlsState uikpa_initial_state(const Tensor& y_usr, const Tensor& y_bright, const AttackGeometry& geo,
                             double epsilon = 1e-3);

/// Alternating minimization. `init` defaults to uikpa_initial_state.
AlsResult uikpa_solve(const Tensor& y_usr, const Tensor& y_bright, const AttackGeometry& geo, const AlsConfig& als,
                      const std::optional<AlsState>& init = std::nullopt);

/// Closed-form per-pixel S minimizer for fixed P (unclamped, no ridge).
Tensor uikpa_scaling_step(const Tensor& y_usr, const Tensor& y_bright, const Tensor& psf,
                          const std::vector<double>& amplitude, const AttackGeometry& geo, double epsilon_ls = 0.0);

/// Joint estimation followed by keyed decryption of the target with (S, P).
AttackReport uikpa(const Tensor& y_usr, const Tensor& y_bright, const Tensor& y_target, const AlsConfig& als,
                   const WienerConfig& cfg, const AttackGeometry& geo);

}  // namespace opencam
