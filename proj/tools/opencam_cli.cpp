// opencam: command-line front end.
//
// Exit codes: 0 ok, 1 other failure, 2 bad arguments or input files,
// 3 degenerate key, 4 dimension mismatch, 5 attack failure. Failures print
// {"error", "message", "exit_code"} JSON on stderr.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <json.hpp>

#include "opencam/attacks.hpp"
#include "opencam/decrypt.hpp"
#include "opencam/error.hpp"
#include "opencam/experiment.hpp"
#include "opencam/keygen.hpp"
#include "opencam/metrics.hpp"
#include "opencam/montage.hpp"
#include "opencam/optics.hpp"
#include "opencam/png_io.hpp"
#include "opencam/scenes.hpp"
#include "opencam/tensor_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace opencam;

namespace {

enum Exit : int { kOk = 0, kOther = 1, kArgs = 2, kDegenerate = 3, kDims = 4, kAttack = 5 };

// --config JSON: top-level scalars set global flags, objects named after a
// subcommand set that subcommand's flags (keys are long flag names). The
// "study" object is an experiment config and is read by the study command.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::exception& e) {
      throw CLI::ConversionError("config is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [k, v] : j.items()) {
      if (k == "study") continue;
      if (v.is_object()) {
        for (const auto& [k2, v2] : v.items()) items.push_back(item(k2, v2, {k}));
      } else {
        items.push_back(item(k, v, {}));
      }
    }
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }
  static CLI::ConfigItem item(const std::string& name, const json& v, std::vector<std::string> parents) {
    CLI::ConfigItem it;
    it.name = name;
    it.parents = std::move(parents);
    if (v.is_array()) {
      for (const auto& e : v) it.inputs.push_back(scalar(e));
    } else {
      it.inputs.push_back(scalar(v));
    }
    return it;
  }
};

struct Globals {
  std::uint64_t seed = 1;
  std::string out;
  bool quiet = false;
  std::string config;
};

struct Failure {
  int code;
  std::string kind;
  std::string message;
};

[[noreturn]] void fail(int code, std::string kind, std::string message) {
  throw Failure{code, std::move(kind), std::move(message)};
}

int exit_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::DegenerateKey:
      return kDegenerate;
    case ErrorCode::DimMismatch:
    case ErrorCode::ChannelMismatch:
    case ErrorCode::InvalidDims:
      return kDims;
    case ErrorCode::BadMagic:
    case ErrorCode::TruncatedPayload:
    case ErrorCode::UnsupportedVersion:
    case ErrorCode::DecodeFailure:
    case ErrorCode::UnsupportedBitDepth:
    case ErrorCode::InvalidSpec:
    case ErrorCode::UnknownKind:
    case ErrorCode::FileMissing:
    case ErrorCode::ConfigError:
      return kArgs;
    default:
      return kOther;
  }
}

int report_error(int code, const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << '\n';
  return code;
}

void print(const Globals& g, const json& j) {
  if (!g.quiet) std::cout << j.dump(2) << '\n';
}

void require_out(const Globals& g, const CLI::App* sub) {
  if (g.out.empty()) {
    std::cerr << sub->help();
    fail(kArgs, "InvalidArgs", "--out is required for " + sub->get_name());
  }
}

std::pair<std::size_t, std::size_t> parse_dims(const std::string& s) {
  static const std::regex re(R"((\d+)[xX](\d+))");
  std::smatch m;
  if (!std::regex_match(s, m, re)) fail(kArgs, "InvalidArgs", "dims must look like HxW, got '" + s + "'");
  const auto r = std::stoul(m[1]), c = std::stoul(m[2]);
  if (r == 0 || c == 0) fail(kArgs, "InvalidArgs", "dims must be positive");
  return {r, c};
}

struct BrightSpec {
  double r;
  std::size_t row, col;
};

BrightSpec parse_bright(const std::string& s) {
  static const std::regex re(R"(([0-9.eE+-]+)@(\d+),(\d+))");
  std::smatch m;
  if (!std::regex_match(s, m, re)) fail(kArgs, "InvalidArgs", "--bright must look like r@row,col, got '" + s + "'");
  return {std::stod(m[1]), std::stoul(m[2]), std::stoul(m[3])};
}

Tensor load_scene_file(const fs::path& p, std::size_t channels) {
  if (!fs::exists(p)) throw Error(ErrorCode::FileMissing, p.string());
  Tensor t = p.extension() == ".png" ? load_png_as_scene(p, static_cast<int>(channels)) : read_tensor(p);
  return t;
}

void check_scene_dims(const Tensor& x, const Key& key) {
  if (x.rows() != key.spec.scene_rows() || x.cols() != key.spec.scene_cols() || x.channels() != key.spec.channels) {
    throw Error(ErrorCode::DimMismatch, "scene is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                                            "x" + std::to_string(x.channels()) + ", key expects " +
                                            std::to_string(key.spec.scene_rows()) + "x" +
                                            std::to_string(key.spec.scene_cols()) + "x" +
                                            std::to_string(key.spec.channels));
  }
}

Tensor scene_for_key(const std::string& file, const Key& key, std::uint64_t seed) {
  if (file.empty()) {
    Rng rng(Rng::derive_seed(seed, 0x5CE));
    return synthetic_scene(key.spec.scene_rows(), key.spec.scene_cols(), key.spec.channels, rng);
  }
  Tensor x = load_scene_file(file, key.spec.channels);
  if (key.spec.channels == 1 && x.ndim() == 3 && x.channels() == 1) x = Tensor::from_plane(x.plane(0));
  check_scene_dims(x, key);
  return x;
}

void save_preview(const Tensor& t, const fs::path& path) { save_png_visualization(t, path, true); }

// ---- subcommands ----

struct KeygenArgs {
  std::size_t psf_side = 128;
  std::string scene_dims = "128x128";
  std::size_t channels = 1;
  std::string baseline;
};

void cmd_keygen(const Globals& g, const KeygenArgs& a, const CLI::App* sub) {
  require_out(g, sub);
  const auto [rows, cols] = parse_dims(a.scene_dims);
  if (a.psf_side == 0) fail(kArgs, "InvalidArgs", "--psf-side must be positive");
  if (a.channels != 1 && a.channels != 3) fail(kArgs, "InvalidArgs", "--channels must be 1 or 3");
  const MaskDesign design = a.baseline.empty() ? MaskDesign::OpenCam : parse_mask_design(a.baseline);
  const Key key = generate_key(g.seed, a.psf_side, rows + a.psf_side - 1, cols + a.psf_side - 1, a.channels, design);
  const fs::path dir(g.out);
  save_key(key, dir);
  save_preview(key.psf, dir / "psf.png");
  save_preview(key.scaling, dir / "scaling.png");
  print(g, {{"key_id", key.id()},
            {"design", std::string(to_string(design))},
            {"seed", key.spec.seed},
            {"alpha", key.spec.alpha},
            {"beta", key.spec.beta},
            {"spectrum_floor", psf_spectrum_floor(key.psf, key.spec.sensor_rows, key.spec.sensor_cols)},
            {"out", dir.string()}});
}

struct EncryptArgs {
  std::string key;
  std::string scene;
  double sigma = 0.0;
  std::string bright;
  bool single = false;
};

void cmd_encrypt(const Globals& g, const EncryptArgs& a, const CLI::App* sub) {
  require_out(g, sub);
  if (a.sigma < 0.0) fail(kArgs, "InvalidArgs", "--sigma must be >= 0");
  const Key key = load_key(a.key);
  Tensor x = scene_for_key(a.scene, key, g.seed);
  if (!a.bright.empty()) {
    const auto b = parse_bright(a.bright);
    x = add_bright_source(x, b.r, b.row, b.col);
  }
  Rng rng(Rng::derive_seed(g.seed, 0xE0));
  Measurement m = a.single ? forward_single(x, key.psf, NoiseModel{a.sigma}, rng)
                           : forward_double(x, key, NoiseModel{a.sigma}, rng);
  m.key_id = key.id();
  m.scene_id = a.scene.empty() ? "synthetic-" + std::to_string(g.seed) : fs::path(a.scene).stem().string();
  const fs::path out(g.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_measurement(m, out);
  save_preview(m.data, out.string() + ".png");
  print(g, {{"out", out.string()}, {"metadata", m.metadata()}});
}

struct DecryptArgs {
  std::string key;
  std::string measurement;
  double gamma = 3e-4;
  double epsilon = 1e-3;
  std::string truth;
  bool single = false;
};

void cmd_decrypt(const Globals& g, const DecryptArgs& a, const CLI::App* sub) {
  require_out(g, sub);
  const WienerConfig cfg{a.gamma, a.epsilon};
  cfg.validate();
  const Key key = load_key(a.key);
  const Measurement m = load_measurement(a.measurement);
  if (!m.data.same_shape(key.scaling)) {
    throw Error(ErrorCode::DimMismatch, "measurement does not match the key's sensor dims");
  }
  const Tensor x = a.single ? wiener_decrypt(m.data, key.psf, cfg, key.spec.scene_rows(), key.spec.scene_cols())
                            : keyed_decrypt(m.data, key, cfg);
  const fs::path out(g.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_tensor(x, out);
  save_png_visualization(x, out.string() + ".png", false);
  json metrics{{"gamma", cfg.gamma}, {"epsilon", cfg.epsilon}, {"key_id", key.id()}, {"single", a.single}};
  if (!a.truth.empty()) {
    Tensor t = load_scene_file(a.truth, key.spec.channels);
    if (!t.same_shape(x)) throw Error(ErrorCode::DimMismatch, "truth does not match the decrypted scene");
    metrics["psnr"] = psnr(x, t);
    if (t.rows() >= 11 && t.cols() >= 11) metrics["ssim"] = ssim(x, t);
  }
  write_json(metrics, out.string() + ".json");
  print(g, metrics);
}

struct AttackArgs {
  std::string kind;
  std::string key;
  std::string scene;
  double sigma = 0.0;
  double r = 1e3;
  double gamma = 3e-4;
  double epsilon = 1e-3;
  std::size_t count = 500;
  std::size_t iters = 50;
  bool single = false;
};

void cmd_attack(const Globals& g, const AttackArgs& a, const CLI::App* sub) {
  require_out(g, sub);
  static const std::vector<std::string> kinds{"autocorr", "threshold", "ikpa", "ukpa-usr", "ukpa-avg", "uikpa"};
  if (std::find(kinds.begin(), kinds.end(), a.kind) == kinds.end()) {
    fail(kArgs, "UnknownKind", "unknown attack kind '" + a.kind + "'");
  }
  const WienerConfig cfg{a.gamma, a.epsilon};
  cfg.validate();
  const Key key = load_key(a.key);
  const fs::path dir(g.out);
  fs::create_directories(dir);
  const std::string camera = a.single ? "single" : "double";
  const AttackGeometry geo = AttackGeometry::for_key(key);

  auto capture = [&](const Tensor& x, std::uint64_t stream) {
    Rng rng(Rng::derive_seed(g.seed, stream));
    return a.single ? forward_single(x, key.psf, NoiseModel{a.sigma}, rng).data
                    : forward_double(x, key, NoiseModel{a.sigma}, rng).data;
  };
  auto keyed = [&](const Tensor& y) {
    return a.single ? wiener_decrypt(y, key.psf, cfg, geo.scene_rows, geo.scene_cols) : keyed_decrypt(y, key, cfg);
  };
  const bool channels3 = key.spec.channels == 3;
  auto constant = [&](float v) {
    return channels3 ? Tensor(geo.scene_rows, geo.scene_cols, std::size_t{3}, v)
                     : Tensor(geo.scene_rows, geo.scene_cols, v);
  };

  AttackReport rep;
  rep.kind = a.kind;
  std::optional<Tensor> truth, reference;
  if (a.kind == "autocorr") {
    rep.metrics["impulse_likeness"] = psf_impulse_likeness(key.psf);
    rep.metrics["impulse_likeness_energy"] = psf_impulse_likeness(key.psf, 2.0);
    write_tensor(autocorrelation(key.psf), dir / "psf_autocorrelation.ocam");
    save_preview(autocorrelation(key.psf), dir / "psf_autocorrelation.png");
  } else if (a.kind == "threshold") {
    Tensor x = constant(0.0f);
    for (std::size_t ch = 0; ch < x.channels(); ++ch) x.at(geo.source_row, geo.source_col, ch) = 1.0f;
    const auto res = threshold_support_attack(capture(x, 0xA1), key_support(key), geo);
    rep.metrics["best_iou"] = res.best_iou;
    rep.metrics["best_tau"] = res.best_tau;
    rep.estimated_support = res.support;
    write_tensor(res.support, dir / "estimated_support.ocam");
  } else {
    truth = scene_for_key(a.scene, key, g.seed);
    const Tensor y = capture(*truth, 0xA2);
    reference = keyed(y);
    Rng scene_rng(Rng::derive_seed(g.seed, 0xA3));
    const Tensor bright_base =
        synthetic_scene(geo.scene_rows, geo.scene_cols, key.spec.channels, scene_rng);
    if (a.kind == "ikpa") {
      rep = ikpa(capture(add_bright_source(bright_base, a.r, geo.source_row, geo.source_col), 0xA4), y, cfg, geo);
      rep.metrics["r"] = a.r;
    } else if (a.kind == "ukpa-usr") {
      rep = ukpa_usr(capture(constant(1.0f), 0xA5), y, key.psf, cfg);
    } else if (a.kind == "ukpa-avg") {
      if (a.count == 0) throw Error(ErrorCode::EmptySet, "--count must be positive");
      std::vector<Tensor> ms;
      for (std::size_t i = 0; i < a.count; ++i) {
        Rng rng(Rng::derive_seed(g.seed, 0xB000 + i));
        ms.push_back(capture(synthetic_scene(geo.scene_rows, geo.scene_cols, key.spec.channels, rng), 0xC000 + i));
      }
      rep = ukpa_average(ms, y, key.psf, cfg);
      rep.metrics["measurements"] = static_cast<double>(a.count);
    } else {
      AlsConfig als;
      als.outer_iters = a.iters;
      const Tensor y_bright = capture(add_bright_source(bright_base, a.r, geo.source_row, geo.source_col), 0xA4);
      rep = uikpa(capture(constant(1.0f), 0xA5), y_bright, y, als, cfg, geo);
      rep.metrics["r"] = a.r;
      write_text(rep.trace_csv(), dir / "trace.csv");
    }
    score_decryption(rep, *truth);
    rep.metrics["keyed_psnr"] = psnr(*reference, *truth);
    rep.metrics["gap_db"] = rep.metrics["keyed_psnr"] - rep.metrics["psnr"];
    if (rep.estimated_psf) rep.metrics["psf_error"] = scale_optimal_error(*rep.estimated_psf, key.psf).error;
    if (rep.estimated_scaling && !a.single) {
      rep.metrics["scaling_error"] = scale_optimal_error(*rep.estimated_scaling, key.scaling).error;
    }
    write_tensor(*rep.decrypted, dir / "decrypted.ocam");
    if (rep.estimated_psf) write_tensor(*rep.estimated_psf, dir / "estimated_psf.ocam");
    if (rep.estimated_scaling) write_tensor(*rep.estimated_scaling, dir / "estimated_scaling.ocam");
    save_png_visualization(montage({*truth, *reference, *rep.decrypted}), dir / "montage.png", false);
  }
  json j = rep.to_json();
  j["camera"] = camera;
  j["key_id"] = key.id();
  j["seed"] = g.seed;
  write_json(j, dir / "report.json");
  print(g, j);
}

struct StudyArgs {
  std::string experiment;
  std::size_t workers = 0;
};

void cmd_study(const Globals& g, const StudyArgs& a, const CLI::App* sub, const CLI::Option* seed_opt) {
  json j = json::object();
  if (!a.experiment.empty()) {
    j = read_json(a.experiment);
  } else if (!g.config.empty()) {
    const json root = read_json(g.config);
    if (root.contains("study")) j = root.at("study");
  }
  ExperimentConfig cfg = ExperimentConfig::from_json(j);
  if (!g.out.empty()) cfg.output_dir = g.out;
  if (!j.contains("output_dir")) require_out(g, sub);
  if (a.workers > 0) cfg.workers = a.workers;
  if (seed_opt->count() > 0) {
    cfg.noise_seed = g.seed;
    cfg.scene_seed = g.seed;
  }
  cfg.validate();
  fs::create_directories(cfg.output_dir);
  write_json(cfg.to_json(), cfg.output_dir / "config.json");

  std::vector<RunSummary> all;
  all.push_back(run_keyed_study(cfg));
  all.back().write(cfg.output_dir, "keyed");
  for (auto& s : run_attack_studies(cfg)) {
    s.write(cfg.output_dir, "attack-" + s.attack);
    all.push_back(std::move(s));
  }
  json result{{"output_dir", cfg.output_dir.string()}, {"config_hash", config_hash(cfg)}};
  json counts = json::object();
  for (const auto& s : all) counts[s.study == "keyed" ? "keyed" : "attack-" + s.attack] = s.rows.size();
  result["rows"] = counts;
  try {
    const auto table = privacy_utility_table(all);
    write_privacy_utility(table, cfg.output_dir);
    result["privacy_utility_rows"] = table.size();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MissingStudy) throw;
    result["privacy_utility_rows"] = 0;
  }
  print(g, result);
}

void cmd_inspect(const Globals& g, const std::string& target) {
  const fs::path p(target);
  if (!fs::exists(p)) throw Error(ErrorCode::FileMissing, target);
  json j;
  if (fs::is_directory(p)) {
    const Key key = load_key(p);
    j = key_spec_to_json(key.spec, key.design);
    j["key_id"] = key.id();
    j["spectrum_floor"] = psf_spectrum_floor(key.psf, key.spec.sensor_rows, key.spec.sensor_cols);
    j["degenerate"] = is_degenerate(key);
    j["impulse_likeness"] = psf_impulse_likeness(key.psf);
  } else if (p.extension() == ".json") {
    j = read_json(p);
  } else {
    const Tensor t = read_tensor(p);
    double sum = t.sum();
    j = {{"format", "OPENCAM1"},
         {"version", 1},
         {"ndim", t.ndim()},
         {"dims", t.dims()},
         {"bytes", fs::file_size(p)},
         {"min", float_to_json_number(t.min())},
         {"max", float_to_json_number(t.max())},
         {"mean", sum / static_cast<double>(t.size())}};
  }
  std::cout << j.dump(2) << '\n';
  (void)g;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"opencam: double-mask lensless encryption simulator and cryptanalysis toolkit", "opencam"};
  app.set_version_flag("--version", OPENCAM_VERSION);
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.allow_config_extras(CLI::config_extras_mode::error);

  Globals g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Master seed; all randomness derives from it")->capture_default_str();
  app.add_option("--out", g.out, "Output file or directory");
  app.add_flag("--quiet", g.quiet, "Suppress the JSON summary on stdout");
  app.set_config("--config", "", "JSON config: global flags at top level, subcommand flags under its name")
      ->check(CLI::ExistingFile)
      ->each([&g](const std::string& s) { g.config = s; });

  KeygenArgs ka;
  auto* keygen = app.add_subcommand("keygen", "Generate an encryption key (PSF and scaling mask)");
  keygen->add_option("--psf-side", ka.psf_side, "PSF side in pixels")->capture_default_str();
  keygen->add_option("--scene-dims", ka.scene_dims, "Scene size HxW")->capture_default_str();
  keygen->add_option("--channels", ka.channels, "1 or 3")->capture_default_str();
  keygen->add_option("--baseline", ka.baseline,
                     "Baseline PSF design: white_blend, phlatcam_contour, multi_pinhole, random_binary, "
                     "random_speckle");

  EncryptArgs ea;
  auto* encrypt = app.add_subcommand("encrypt", "Simulate an encrypted capture of a scene");
  encrypt->add_option("--key", ea.key, "Key directory")->required()->check(CLI::ExistingDirectory);
  encrypt->add_option("--scene", ea.scene, "Scene PNG or OPENCAM1 tensor (default: synthetic scene)");
  encrypt->add_option("--sigma", ea.sigma, "Gaussian sensor noise std")->capture_default_str();
  encrypt->add_option("--bright", ea.bright, "Add a bright source r@row,col (amplitude r * max(scene))");
  encrypt->add_flag("--single", ea.single, "Single-mask camera (no scaling mask)");

  DecryptArgs da;
  auto* decrypt = app.add_subcommand("decrypt", "Keyed decryption of a measurement");
  decrypt->add_option("--key", da.key, "Key directory")->required()->check(CLI::ExistingDirectory);
  decrypt->add_option("--measurement", da.measurement, "Measurement tensor")->required()->check(CLI::ExistingFile);
  decrypt->add_option("--gamma", da.gamma, "Tikhonov weight")->capture_default_str();
  decrypt->add_option("--epsilon", da.epsilon, "Scaling-normalization floor")->capture_default_str();
  decrypt->add_option("--truth", da.truth, "Ground-truth scene for PSNR/SSIM")->check(CLI::ExistingFile);
  decrypt->add_flag("--single", da.single, "Measurement is from a single-mask camera");

  AttackArgs aa;
  auto* attack = app.add_subcommand("attack", "Run a classical attack against a simulated camera");
  attack->add_option("--kind", aa.kind, "autocorr | threshold | ikpa | ukpa-usr | ukpa-avg | uikpa")->required();
  attack->add_option("--key", aa.key, "Key directory of the attacked camera")->required()->check(CLI::ExistingDirectory);
  attack->add_option("--scene", aa.scene, "Target scene (default: synthetic scene)");
  attack->add_option("--sigma", aa.sigma, "Sensor noise std")->capture_default_str();
  attack->add_option("--r", aa.r, "Bright-source relative intensity (ikpa, uikpa)")->capture_default_str();
  attack->add_option("--gamma", aa.gamma, "Tikhonov weight")->capture_default_str();
  attack->add_option("--epsilon", aa.epsilon, "Scaling-normalization floor")->capture_default_str();
  attack->add_option("--count", aa.count, "Measurements to average (ukpa-avg)")->capture_default_str();
  attack->add_option("--iters", aa.iters, "ALS outer iterations (uikpa)")->capture_default_str();
  attack->add_flag("--single", aa.single, "Attack a single-mask camera");

  StudyArgs sa;
  auto* study = app.add_subcommand("study", "Run keyed and attack studies from an experiment config");
  study->add_option("--experiment", sa.experiment, "Experiment config JSON (default: 'study' object of --config)")
      ->check(CLI::ExistingFile);
  study->add_option("--workers", sa.workers, "Worker threads (overrides config)");

  std::string inspect_target;
  auto* inspect = app.add_subcommand("inspect", "Describe a tensor file, key directory or JSON file");
  inspect->add_option("target", inspect_target, "Path to inspect")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return report_error(kArgs, "InvalidArgs", e.what());
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    if (active == keygen) cmd_keygen(g, ka, keygen);
    else if (active == encrypt) cmd_encrypt(g, ea, encrypt);
    else if (active == decrypt) cmd_decrypt(g, da, decrypt);
    else if (active == attack) cmd_attack(g, aa, attack);
    else if (active == study) cmd_study(g, sa, study, seed_opt);
    else if (active == inspect) cmd_inspect(g, inspect_target);
    return kOk;
  } catch (const Failure& f) {
    return report_error(f.code, f.kind, f.message);
  } catch (const Error& e) {
    int code = exit_for(e.code());
    if (active == attack && code != kArgs) code = kAttack;
    return report_error(code, std::string(to_string(e.code())), e.what());
  } catch (const std::exception& e) {
    return report_error(active == attack ? kAttack : kOther, "Failure", e.what());
  }
}
