#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "opencam/attacks.hpp"
#include "opencam/decrypt.hpp"
#include "opencam/keygen.hpp"
#include "opencam/scenes.hpp"

namespace opencam {

/// Full description of a seeded run. Every field has a desk-scale default and
/// can be given in JSON under the same name (wiener and als as objects).
struct ExperimentConfig {
  std::size_t scene_rows = 128;
  std::size_t scene_cols = 128;
  std::size_t psf_side = 128;
  std::size_t channels = 1;
  std::vector<std::uint64_t> key_seeds;   // default 1..20
  std::string scene_source = "builtin";   // "builtin" or a directory of PNGs
  std::size_t scene_count = 8;            // builtin set size
  std::uint64_t scene_seed = 2024;
  std::uint64_t noise_seed = 7;
  double sigma = 0.0;
  WienerConfig wiener;
  AlsConfig als;
  std::vector<std::string> attacks;       // autocorr, threshold, ikpa, ukpa-usr, ukpa-avg, uikpa
  std::vector<MaskDesign> designs{MaskDesign::OpenCam};
  std::vector<std::string> cameras{"double"};  // "single" and/or "double"
  std::vector<double> r_grid{1e2, 1e3, 1e4, 1e5};
  double relative_intensity = 1e3;
  std::size_t ukpa_average_count = 500;
  std::filesystem::path output_dir = "opencam_run";
  std::size_t workers = 1;
  bool save_tensors = true;
  bool save_montages = true;

  ExperimentConfig();
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  /// Throws ConfigError.
  void validate() const;
  std::size_t sensor_rows() const { return scene_rows + psf_side - 1; }
  std::size_t sensor_cols() const { return scene_cols + psf_side - 1; }
};

struct ResultRow {
  std::string study;
  std::string design;
  std::string camera;
  std::string attack;
  std::uint64_t key_seed = 0;
  std::string scene_id;
  std::optional<double> r;
  std::map<std::string, double> metrics;
  std::string artifact_dir;  // relative to output_dir, empty when nothing was stored
};

struct RunSummary {
  std::string study;   // keyed | attack
  std::string attack;  // attack kind, "keyed" or "none"
  std::vector<ResultRow> rows;
  std::map<std::string, double> aggregates;
  nlohmann::json provenance;

  /// Deterministic CSV (no timestamps).
  std::string csv() const;
  nlohmann::json to_json() const;
  /// Writes <name>.csv and <name>.json into `dir`.
  void write(const std::filesystem::path& dir, const std::string& name) const;
};

std::vector<NamedScene> load_scenes(const ExperimentConfig& cfg);

/// Correct-key and wrong-key decryption rows for every (design, camera, key, scene).
RunSummary run_keyed_study(const ExperimentConfig& cfg);

/// One attack kind over the configured designs, cameras, keys and scenes.
RunSummary run_attack_study(const ExperimentConfig& cfg, const std::string& attack_kind);

/// One summary per configured attack; a single empty "none" summary when
/// the list is empty.
std::vector<RunSummary> run_attack_studies(const ExperimentConfig& cfg);

struct PrivacyUtilityRow {
  std::string design;
  std::string camera;
  std::string attack;
  double utility_psnr = 0.0;
  double utility_ssim = 0.0;
  double privacy_psnr = 0.0;
  double privacy_ssim = 0.0;
  std::size_t samples = 0;
};

/// Utility = keyed means, privacy = attack means, per (design, camera,
/// attack). Throws MissingStudy when a design lacks a keyed or an attack study.
std::vector<PrivacyUtilityRow> privacy_utility_table(const std::vector<RunSummary>& summaries);
std::string privacy_utility_csv(const std::vector<PrivacyUtilityRow>& rows);
/// CSV plus a scatter plot (privacy PSNR vs utility PSNR) into `dir`.
void write_privacy_utility(const std::vector<PrivacyUtilityRow>& rows, const std::filesystem::path& dir);

/// Shortest round-trip decimal form used in all CSV output.
std::string format_number(double v);

/// FNV-1a 64 of the config's canonical JSON dump, hex.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace opencam
