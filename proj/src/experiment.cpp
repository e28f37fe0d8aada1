#include "opencam/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

#include "opencam/error.hpp"
#include "opencam/metrics.hpp"
#include "opencam/montage.hpp"
#include "opencam/optics.hpp"
#include "opencam/png_io.hpp"
#include "opencam/tensor_io.hpp"

#ifndef OPENCAM_VERSION
#define OPENCAM_VERSION "0.0.0"
#endif

namespace opencam {

namespace {

const std::set<std::string> kAttackKinds{"autocorr", "threshold", "ikpa", "ukpa-usr", "ukpa-avg", "uikpa"};

// Stream ids for per-job noise and auxiliary draws.
constexpr std::uint64_t kWrongKeyStream = 0x77;
constexpr std::uint64_t kAverageScenes = 0xA7E;
enum Purpose : std::uint64_t { kTarget = 1, kBright = 2, kUsr = 3, kImpulse = 4, kAverage = 5 };

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

template <class F>
void parallel_for(std::size_t n, std::size_t workers, F&& f) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t count = std::min(std::max<std::size_t>(workers, 1), std::max<std::size_t>(n, 1));
  if (count == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < count; ++w) pool.emplace_back(work);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

Rng job_rng(const ExperimentConfig& cfg, std::uint64_t key_seed, std::size_t scene_index, std::uint64_t purpose,
            std::size_t extra = 0) {
  std::uint64_t s = Rng::derive_seed(cfg.noise_seed, key_seed);
  s = Rng::derive_seed(s, scene_index);
  s = Rng::derive_seed(s, purpose);
  return Rng(Rng::derive_seed(s, extra));
}

struct CameraKey {
  MaskDesign design;
  std::uint64_t seed;
  Key key;
  Key wrong;
};

std::vector<CameraKey> build_keys(const ExperimentConfig& cfg, bool with_wrong) {
  std::vector<CameraKey> keys;
  for (auto d : cfg.designs) {
    for (auto s : cfg.key_seeds) keys.push_back({d, s, {}, {}});
  }
  parallel_for(keys.size(), cfg.workers, [&](std::size_t i) {
    auto& k = keys[i];
    k.key = generate_key(k.seed, cfg.psf_side, cfg.sensor_rows(), cfg.sensor_cols(), cfg.channels, k.design);
    if (with_wrong) {
      k.wrong = generate_key(Rng::derive_seed(k.seed, kWrongKeyStream), cfg.psf_side, cfg.sensor_rows(),
                             cfg.sensor_cols(), cfg.channels, k.design);
    }
  });
  return keys;
}

Tensor capture(const Key& key, const std::string& camera, const Tensor& x, double sigma, Rng& rng) {
  const NoiseModel nm{sigma};
  return camera == "single" ? forward_single(x, key.psf, nm, rng).data : forward_double(x, key, nm, rng).data;
}

Tensor decrypt_for(const Key& key, const std::string& camera, const Tensor& y, const WienerConfig& w) {
  if (camera == "single") return wiener_decrypt(y, key.psf, w, key.spec.scene_rows(), key.spec.scene_cols());
  return keyed_decrypt(y, key, w);
}

void add_quality(std::map<std::string, double>& m, const std::string& prefix, const Tensor& est,
                 const Tensor& truth) {
  m[prefix + "psnr"] = psnr(est, truth);
  if (truth.rows() >= 11 && truth.cols() >= 11) m[prefix + "ssim"] = ssim(est, truth);
}

std::string r_label(double r) { return "r" + format_number(r); }

std::string row_dir(const std::string& study, MaskDesign d, const std::string& camera, std::uint64_t seed,
                    const std::string& scene, std::optional<double> r = std::nullopt) {
  std::string p = study + "/" + std::string(to_string(d)) + "-" + camera + "/k" + std::to_string(seed) + "/" + scene;
  if (r) p += "/" + r_label(*r);
  return p;
}

struct ArtifactWriter {
  const ExperimentConfig& cfg;

  void tensor(const std::string& dir, const std::string& name, const Tensor& t) const {
    if (!cfg.save_tensors) return;
    const auto p = cfg.output_dir / dir;
    std::filesystem::create_directories(p);
    write_tensor(t, p / name);
  }
  void panels(const std::string& dir, const std::vector<Tensor>& ts) const {
    if (!cfg.save_montages) return;
    const auto p = cfg.output_dir / dir;
    std::filesystem::create_directories(p);
    save_png_visualization(montage(ts), p / "montage.png", false);
  }
  std::string stored(const std::string& dir) const { return cfg.save_tensors || cfg.save_montages ? dir : ""; }
};

void aggregate(RunSummary& s) {
  std::map<std::string, std::vector<double>> groups;
  for (const auto& row : s.rows) {
    std::string base = row.design + "/" + row.camera + "/" + row.attack;
    if (row.r) base += "/" + r_label(*row.r);
    for (const auto& [k, v] : row.metrics) groups[base + "/" + k].push_back(v);
  }
  for (const auto& [k, vs] : groups) {
    double mean = 0.0;
    for (double v : vs) mean += v;
    mean /= static_cast<double>(vs.size());
    double var = 0.0;
    for (double v : vs) var += (v - mean) * (v - mean);
    s.aggregates[k + "/mean"] = mean;
    s.aggregates[k + "/std"] = std::sqrt(var / static_cast<double>(vs.size()));
  }
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

nlohmann::json provenance(const ExperimentConfig& cfg) {
  return {{"config_hash", config_hash(cfg)}, {"code_version", OPENCAM_VERSION}, {"timestamp", utc_timestamp()}};
}

RunSummary finish(const ExperimentConfig& cfg, std::string study, std::string attack,
                  std::vector<std::vector<ResultRow>> slots) {
  RunSummary s;
  s.study = std::move(study);
  s.attack = std::move(attack);
  for (auto& slot : slots) {
    for (auto& row : slot) s.rows.push_back(std::move(row));
  }
  aggregate(s);
  s.provenance = provenance(cfg);
  return s;
}

}  // namespace

// ---- config ----

ExperimentConfig::ExperimentConfig() {
  for (std::uint64_t s = 1; s <= 20; ++s) key_seeds.push_back(s);
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) config_error("config must be a JSON object");
  static const std::set<std::string> known{
      "scene_dims", "scene_rows",  "scene_cols", "psf_side",         "channels",     "key_seeds",
      "scene_source", "scene_count", "scene_seed", "noise_seed",     "sigma",        "wiener",
      "als",        "attacks",     "designs",    "cameras",          "r_grid",       "relative_intensity",
      "ukpa_average_count", "output_dir", "workers", "save_tensors", "save_montages"};
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) config_error("unknown config field '" + k + "'");
  }
  ExperimentConfig c;
  try {
    if (j.contains("scene_dims")) {
      const auto& d = j.at("scene_dims");
      if (!d.is_array() || d.size() != 2) config_error("scene_dims must be [rows, cols]");
      c.scene_rows = d[0].get<std::size_t>();
      c.scene_cols = d[1].get<std::size_t>();
    }
    c.scene_rows = j.value("scene_rows", c.scene_rows);
    c.scene_cols = j.value("scene_cols", c.scene_cols);
    c.psf_side = j.value("psf_side", c.psf_side);
    c.channels = j.value("channels", c.channels);
    if (j.contains("key_seeds")) c.key_seeds = j.at("key_seeds").get<std::vector<std::uint64_t>>();
    c.scene_source = j.value("scene_source", c.scene_source);
    c.scene_count = j.value("scene_count", c.scene_count);
    c.scene_seed = j.value("scene_seed", c.scene_seed);
    c.noise_seed = j.value("noise_seed", c.noise_seed);
    c.sigma = j.value("sigma", c.sigma);
    if (j.contains("wiener")) {
      const auto& w = j.at("wiener");
      c.wiener.gamma = w.value("gamma", c.wiener.gamma);
      c.wiener.epsilon = w.value("epsilon", c.wiener.epsilon);
    }
    if (j.contains("als")) {
      const auto& a = j.at("als");
      c.als.outer_iters = a.value("outer_iters", c.als.outer_iters);
      c.als.psf_step_count = a.value("psf_step_count", c.als.psf_step_count);
      c.als.initial_step = a.value("initial_step", c.als.initial_step);
      c.als.max_halvings = a.value("max_halvings", c.als.max_halvings);
      c.als.epsilon_ls = a.value("epsilon_ls", c.als.epsilon_ls);
      c.als.s_floor = a.value("s_floor", c.als.s_floor);
      c.als.nonneg_projection = a.value("nonneg_projection", c.als.nonneg_projection);
    }
    if (j.contains("attacks")) c.attacks = j.at("attacks").get<std::vector<std::string>>();
    if (j.contains("designs")) {
      c.designs.clear();
      for (const auto& d : j.at("designs")) c.designs.push_back(parse_mask_design(d.get<std::string>()));
    }
    if (j.contains("cameras")) c.cameras = j.at("cameras").get<std::vector<std::string>>();
    if (j.contains("r_grid")) c.r_grid = j.at("r_grid").get<std::vector<double>>();
    c.relative_intensity = j.value("relative_intensity", c.relative_intensity);
    c.ukpa_average_count = j.value("ukpa_average_count", c.ukpa_average_count);
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    c.workers = j.value("workers", c.workers);
    c.save_tensors = j.value("save_tensors", c.save_tensors);
    c.save_montages = j.value("save_montages", c.save_montages);
  } catch (const nlohmann::json::exception& e) {
    config_error(std::string("bad config value: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    config_error(e.what());
  }
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json designs_j = nlohmann::json::array();
  for (auto d : designs) designs_j.push_back(std::string(to_string(d)));
  return {{"scene_dims", {scene_rows, scene_cols}},
          {"psf_side", psf_side},
          {"channels", channels},
          {"key_seeds", key_seeds},
          {"scene_source", scene_source},
          {"scene_count", scene_count},
          {"scene_seed", scene_seed},
          {"noise_seed", noise_seed},
          {"sigma", sigma},
          {"wiener", {{"gamma", wiener.gamma}, {"epsilon", wiener.epsilon}}},
          {"als",
           {{"outer_iters", als.outer_iters},
            {"psf_step_count", als.psf_step_count},
            {"initial_step", als.initial_step},
            {"max_halvings", als.max_halvings},
            {"epsilon_ls", als.epsilon_ls},
            {"s_floor", als.s_floor},
            {"nonneg_projection", als.nonneg_projection}}},
          {"attacks", attacks},
          {"designs", designs_j},
          {"cameras", cameras},
          {"r_grid", r_grid},
          {"relative_intensity", relative_intensity},
          {"ukpa_average_count", ukpa_average_count},
          {"output_dir", output_dir.string()},
          {"workers", workers},
          {"save_tensors", save_tensors},
          {"save_montages", save_montages}};
}

void ExperimentConfig::validate() const {
  if (scene_rows == 0 || scene_cols == 0 || psf_side == 0) config_error("dimensions must be positive");
  if (channels != 1 && channels != 3) config_error("channels must be 1 or 3");
  if (key_seeds.empty()) config_error("key_seeds is empty");
  if (designs.empty()) config_error("designs is empty");
  if (scene_count == 0 && scene_source == "builtin") config_error("scene_count must be positive");
  if (scene_source != "builtin" && !std::filesystem::is_directory(scene_source)) {
    config_error("scene_source directory does not exist: " + scene_source);
  }
  if (!(sigma >= 0.0)) config_error("sigma must be >= 0");
  if (!(relative_intensity > 0.0)) config_error("relative_intensity must be > 0");
  if (workers == 0) config_error("workers must be >= 1");
  if (cameras.empty()) config_error("cameras is empty");
  for (const auto& c : cameras) {
    if (c != "single" && c != "double") config_error("unknown camera '" + c + "'");
  }
  for (const auto& a : attacks) {
    if (!kAttackKinds.count(a)) config_error("unknown attack '" + a + "'");
  }
  if (r_grid.empty()) config_error("r_grid is empty");
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    if (!(r_grid[i] > 0.0)) config_error("r_grid values must be > 0");
    if (i > 0 && !(r_grid[i] > r_grid[i - 1])) config_error("r_grid must be strictly increasing");
  }
  try {
    wiener.validate();
    als.validate();
  } catch (const Error& e) {
    config_error(e.what());
  }
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string dump = cfg.to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

// ---- summaries ----

std::string RunSummary::csv() const {
  std::set<std::string> names;
  for (const auto& r : rows) {
    for (const auto& [k, v] : r.metrics) names.insert(k);
  }
  std::ostringstream os;
  os << "study,design,camera,attack,key_seed,scene_id,r";
  for (const auto& n : names) os << ',' << n;
  os << ",artifact_dir\n";
  for (const auto& r : rows) {
    os << r.study << ',' << r.design << ',' << r.camera << ',' << r.attack << ',' << r.key_seed << ','
       << r.scene_id << ',' << (r.r ? format_number(*r.r) : "");
    for (const auto& n : names) {
      os << ',';
      if (auto it = r.metrics.find(n); it != r.metrics.end()) os << format_number(it->second);
    }
    os << ',' << r.artifact_dir << '\n';
  }
  return os.str();
}

nlohmann::json RunSummary::to_json() const {
  nlohmann::json agg = nlohmann::json::object();
  for (const auto& [k, v] : aggregates) agg[k] = v;
  return {{"study", study}, {"attack", attack}, {"row_count", rows.size()}, {"aggregates", agg},
          {"provenance", provenance}};
}

void RunSummary::write(const std::filesystem::path& dir, const std::string& name) const {
  std::filesystem::create_directories(dir);
  write_text(csv(), dir / (name + ".csv"));
  write_json(to_json(), dir / (name + ".json"));
}

std::vector<NamedScene> load_scenes(const ExperimentConfig& cfg) {
  if (cfg.scene_source == "builtin") {
    return builtin_scenes(cfg.scene_count, cfg.scene_rows, cfg.scene_cols, cfg.channels, cfg.scene_seed);
  }
  return load_scene_directory(cfg.scene_source, cfg.scene_rows, cfg.scene_cols, cfg.channels);
}

// ---- keyed study ----

RunSummary run_keyed_study(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto scenes = load_scenes(cfg);
  const auto keys = build_keys(cfg, true);
  const ArtifactWriter out{cfg};

  struct Job {
    std::size_t key, scene;
    std::string camera;
  };
  std::vector<Job> jobs;
  for (std::size_t k = 0; k < keys.size(); ++k) {
    for (const auto& cam : cfg.cameras) {
      for (std::size_t s = 0; s < scenes.size(); ++s) jobs.push_back({k, s, cam});
    }
  }
  std::vector<std::vector<ResultRow>> slots(jobs.size());
  parallel_for(jobs.size(), cfg.workers, [&](std::size_t i) {
    const auto& job = jobs[i];
    const auto& ck = keys[job.key];
    const auto& sc = scenes[job.scene];
    Rng rng = job_rng(cfg, ck.seed, job.scene, kTarget);
    const Tensor y = capture(ck.key, job.camera, sc.scene, cfg.sigma, rng);
    const Tensor good = decrypt_for(ck.key, job.camera, y, cfg.wiener);
    const Tensor bad = decrypt_for(ck.wrong, job.camera, y, cfg.wiener);

    const std::string dir = row_dir("keyed", ck.design, job.camera, ck.seed, sc.id);
    out.tensor(dir, "measurement.ocam", y);
    out.tensor(dir, "keyed.ocam", good);
    out.tensor(dir, "wrong_key.ocam", bad);
    out.panels(dir, {sc.scene, good, bad});

    ResultRow base{"keyed", std::string(to_string(ck.design)), job.camera, "keyed", ck.seed, sc.id, {}, {},
                   out.stored(dir)};
    ResultRow wrong = base;
    wrong.attack = "wrong-key";
    add_quality(base.metrics, "", good, sc.scene);
    add_quality(wrong.metrics, "", bad, sc.scene);
    slots[i] = {std::move(base), std::move(wrong)};
  });
  return finish(cfg, "keyed", "keyed", std::move(slots));
}

// ---- attack studies ----

RunSummary run_attack_study(const ExperimentConfig& cfg, const std::string& kind) {
  cfg.validate();
  if (kind.empty() || kind == "none") return finish(cfg, "attack", "none", {});
  if (!kAttackKinds.count(kind)) throw Error(ErrorCode::UnknownKind, "unknown attack '" + kind + "'");

  const auto keys = build_keys(cfg, false);
  const ArtifactWriter out{cfg};
  const bool per_key = kind == "autocorr" || kind == "threshold";
  const auto scenes = per_key ? std::vector<NamedScene>{} : load_scenes(cfg);

  std::vector<NamedScene> average_set;
  if (kind == "ukpa-avg") {
    average_set = builtin_scenes(cfg.ukpa_average_count, cfg.scene_rows, cfg.scene_cols, cfg.channels,
                                 Rng::derive_seed(cfg.scene_seed, kAverageScenes));
  }

  struct Job {
    std::size_t key;
    std::string camera;
    std::size_t scene;
  };
  std::vector<Job> jobs;
  for (std::size_t k = 0; k < keys.size(); ++k) {
    if (kind == "autocorr") {
      jobs.push_back({k, "n/a", 0});
      continue;
    }
    for (const auto& cam : cfg.cameras) {
      if (per_key || kind == "ukpa-avg") {
        jobs.push_back({k, cam, 0});
      } else {
        for (std::size_t s = 0; s < scenes.size(); ++s) jobs.push_back({k, cam, s});
      }
    }
  }

  const AttackGeometry geo = AttackGeometry::centered(cfg.scene_rows, cfg.scene_cols, cfg.psf_side, cfg.psf_side);
  std::vector<std::vector<ResultRow>> slots(jobs.size());

  parallel_for(jobs.size(), cfg.workers, [&](std::size_t i) {
    const auto& job = jobs[i];
    const auto& ck = keys[job.key];
    const Key& key = ck.key;
    const std::string design(to_string(ck.design));
    auto& rows = slots[i];

    if (kind == "autocorr") {
      ResultRow row{"attack", design, job.camera, kind, ck.seed, "-", {}, {}, ""};
      row.metrics["impulse_likeness"] = psf_impulse_likeness(key.psf);
      row.metrics["impulse_likeness_energy"] = psf_impulse_likeness(key.psf, 2.0);
      const std::string dir = row_dir("attack-autocorr", ck.design, job.camera, ck.seed, "psf");
      out.tensor(dir, "autocorrelation.ocam", autocorrelation(key.psf));
      row.artifact_dir = cfg.save_tensors ? dir : "";
      rows.push_back(std::move(row));
      return;
    }

    if (kind == "threshold") {
      SceneSpec spec;
      spec.kind = SceneSpec::Kind::Impulse;
      spec.rows = cfg.scene_rows;
      spec.cols = cfg.scene_cols;
      spec.channels = cfg.channels;
      Rng rng = job_rng(cfg, ck.seed, 0, kImpulse);
      const Tensor x = synthesize_scene(spec, rng);
      const Tensor y = capture(key, job.camera, x, cfg.sigma, rng);
      const auto res = threshold_support_attack(y, key_support(key), geo);
      ResultRow row{"attack", design, job.camera, kind, ck.seed, "impulse", {}, {}, ""};
      row.metrics["best_iou"] = res.best_iou;
      row.metrics["best_tau"] = res.best_tau;
      const std::string dir = row_dir("attack-threshold", ck.design, job.camera, ck.seed, "impulse");
      out.tensor(dir, "support.ocam", res.support);
      row.artifact_dir = cfg.save_tensors ? dir : "";
      rows.push_back(std::move(row));
      return;
    }

    if (kind == "ukpa-avg") {
      std::vector<Tensor> ms;
      ms.reserve(average_set.size());
      for (std::size_t s = 0; s < average_set.size(); ++s) {
        Rng rng = job_rng(cfg, ck.seed, s, kAverage);
        ms.push_back(capture(key, job.camera, average_set[s].scene, cfg.sigma, rng));
      }
      const Tensor s_hat = mean_tensor(ms);
      ms.clear();
      for (std::size_t s = 0; s < scenes.size(); ++s) {
        const auto& sc = scenes[s];
        Rng rng = job_rng(cfg, ck.seed, s, kTarget);
        const Tensor y = capture(key, job.camera, sc.scene, cfg.sigma, rng);
        const Tensor keyed = decrypt_for(key, job.camera, y, cfg.wiener);
        AttackReport rep = ukpa_average({s_hat}, y, key.psf, cfg.wiener);
        ResultRow row{"attack", design, job.camera, kind, ck.seed, sc.id, {}, {}, ""};
        add_quality(row.metrics, "", *rep.decrypted, sc.scene);
        add_quality(row.metrics, "keyed_", keyed, sc.scene);
        row.metrics["gap_db"] = row.metrics["keyed_psnr"] - row.metrics["psnr"];
        row.metrics["scaling_error"] = scale_optimal_error(*rep.estimated_scaling, key.scaling).error;
        row.metrics["measurements"] = static_cast<double>(average_set.size());
        const std::string dir = row_dir("attack-ukpa-avg", ck.design, job.camera, ck.seed, sc.id);
        out.tensor(dir, "decrypted.ocam", *rep.decrypted);
        if (s == 0) out.tensor(dir, "estimated_scaling.ocam", *rep.estimated_scaling);
        out.panels(dir, {sc.scene, keyed, *rep.decrypted});
        row.artifact_dir = out.stored(dir);
        rows.push_back(std::move(row));
      }
      return;
    }

    const auto& sc = scenes[job.scene];
    const auto& bright_base = scenes[(job.scene + 1) % scenes.size()].scene;
    Rng target_rng = job_rng(cfg, ck.seed, job.scene, kTarget);
    const Tensor y = capture(key, job.camera, sc.scene, cfg.sigma, target_rng);
    const Tensor keyed = decrypt_for(key, job.camera, y, cfg.wiener);

    auto make_row = [&](const AttackReport& rep, std::optional<double> r, const std::string& dir) {
      ResultRow row{"attack", design, job.camera, kind, ck.seed, sc.id, r, rep.metrics, ""};
      add_quality(row.metrics, "", *rep.decrypted, sc.scene);
      add_quality(row.metrics, "keyed_", keyed, sc.scene);
      row.metrics["gap_db"] = row.metrics["keyed_psnr"] - row.metrics["psnr"];
      if (rep.estimated_psf) row.metrics["psf_error"] = scale_optimal_error(*rep.estimated_psf, key.psf).error;
      if (rep.estimated_scaling && job.camera == "double") {
        row.metrics["scaling_error"] = scale_optimal_error(*rep.estimated_scaling, key.scaling).error;
      }
      out.tensor(dir, "decrypted.ocam", *rep.decrypted);
      if (rep.estimated_psf) out.tensor(dir, "estimated_psf.ocam", *rep.estimated_psf);
      if (rep.estimated_scaling) out.tensor(dir, "estimated_scaling.ocam", *rep.estimated_scaling);
      if (!rep.trace.empty() && cfg.save_tensors) write_text(rep.trace_csv(), cfg.output_dir / dir / "trace.csv");
      out.panels(dir, {sc.scene, keyed, *rep.decrypted});
      row.artifact_dir = out.stored(dir);
      return row;
    };

    auto bright_capture = [&](double r) {
      Rng rng = job_rng(cfg, ck.seed, job.scene, kBright, static_cast<std::size_t>(std::llround(r)));
      const Tensor xb = add_bright_source(bright_base, r, geo.source_row, geo.source_col);
      return capture(key, job.camera, xb, cfg.sigma, rng);
    };
    auto usr_capture = [&] {
      Rng rng = job_rng(cfg, ck.seed, job.scene, kUsr);
      const Tensor ones = cfg.channels == 1 ? Tensor(cfg.scene_rows, cfg.scene_cols, 1.0f)
                                            : Tensor(cfg.scene_rows, cfg.scene_cols, cfg.channels, 1.0f);
      return capture(key, job.camera, ones, cfg.sigma, rng);
    };

    if (kind == "ikpa") {
      const std::optional<double> r = cfg.relative_intensity;
      const std::string dir = row_dir("attack-ikpa", ck.design, job.camera, ck.seed, sc.id);
      AttackReport rep = ikpa(bright_capture(*r), y, cfg.wiener, geo);
      ResultRow row = make_row(rep, r, dir);
      row.metrics["break"] = row.metrics["gap_db"] <= 1.0 ? 1.0 : 0.0;
      rows.push_back(std::move(row));
    } else if (kind == "ukpa-usr") {
      const std::string dir = row_dir("attack-ukpa-usr", ck.design, job.camera, ck.seed, sc.id);
      rows.push_back(make_row(ukpa_usr(usr_capture(), y, key.psf, cfg.wiener), std::nullopt, dir));
    } else if (kind == "uikpa") {
      const Tensor y_usr = usr_capture();
      for (double r : cfg.r_grid) {
        const std::string dir = row_dir("attack-uikpa", ck.design, job.camera, ck.seed, sc.id, r);
        AttackReport rep = uikpa(y_usr, bright_capture(r), y, cfg.als, cfg.wiener, geo);
        bool monotone = true;
        for (std::size_t t = 1; t < rep.trace.size(); ++t) {
          monotone = monotone && rep.trace[t].objective <= rep.trace[t - 1].objective;
        }
        ResultRow row = make_row(rep, r, dir);
        row.metrics["monotone"] = monotone ? 1.0 : 0.0;
        rows.push_back(std::move(row));
      }
      bool trend = true;
      for (std::size_t t = 1; t < rows.size(); ++t) trend = trend && rows[t].metrics["psnr"] >= rows[t - 1].metrics["psnr"];
      for (auto& row : rows) row.metrics["trend_ok"] = trend ? 1.0 : 0.0;
    }
  });
  return finish(cfg, "attack", kind, std::move(slots));
}

std::vector<RunSummary> run_attack_studies(const ExperimentConfig& cfg) {
  std::vector<RunSummary> out;
  if (cfg.attacks.empty()) {
    out.push_back(run_attack_study(cfg, "none"));
    return out;
  }
  for (const auto& a : cfg.attacks) out.push_back(run_attack_study(cfg, a));
  return out;
}

// ---- privacy / utility ----

std::vector<PrivacyUtilityRow> privacy_utility_table(const std::vector<RunSummary>& summaries) {
  struct Acc {
    double psnr = 0.0, ssim = 0.0;
    std::size_t n = 0;
    void add(const ResultRow& r, const std::string& prefix) {
      psnr += r.metrics.at(prefix + "psnr");
      if (auto it = r.metrics.find(prefix + "ssim"); it != r.metrics.end()) ssim += it->second;
      ++n;
    }
  };
  std::map<std::pair<std::string, std::string>, Acc> utility;  // (design, camera)
  std::map<std::tuple<std::string, std::string, std::string>, Acc> privacy;
  std::set<std::string> keyed_designs, attack_designs;
  for (const auto& s : summaries) {
    for (const auto& r : s.rows) {
      if (!r.metrics.count("psnr")) continue;
      if (s.study == "keyed") {
        keyed_designs.insert(r.design);
        if (r.attack == "keyed") utility[{r.design, r.camera}].add(r, "");
      } else {
        attack_designs.insert(r.design);
        privacy[{r.design, r.camera, r.attack}].add(r, "");
      }
    }
  }
  if (keyed_designs.empty()) throw Error(ErrorCode::MissingStudy, "no keyed study among the summaries");
  if (attack_designs.empty()) throw Error(ErrorCode::MissingStudy, "no attack study with decryption rows");
  for (const auto& d : attack_designs) {
    if (!keyed_designs.count(d)) throw Error(ErrorCode::MissingStudy, "design '" + d + "' has no keyed study");
  }
  for (const auto& d : keyed_designs) {
    if (!attack_designs.count(d)) throw Error(ErrorCode::MissingStudy, "design '" + d + "' has no attack study");
  }

  // Attack rows carry their own keyed reference, used when the keyed study
  // did not cover that camera.
  std::map<std::pair<std::string, std::string>, Acc> fallback;
  for (const auto& s : summaries) {
    if (s.study == "keyed") continue;
    for (const auto& r : s.rows) {
      if (r.metrics.count("keyed_psnr")) fallback[{r.design, r.camera}].add(r, "keyed_");
    }
  }

  std::vector<PrivacyUtilityRow> rows;
  for (const auto& [k, acc] : privacy) {
    const auto& [design, camera, attack] = k;
    const Acc* u = nullptr;
    if (auto it = utility.find({design, camera}); it != utility.end()) u = &it->second;
    else if (auto jt = fallback.find({design, camera}); jt != fallback.end()) u = &jt->second;
    if (!u) throw Error(ErrorCode::MissingStudy, "no keyed reference for " + design + "/" + camera);
    PrivacyUtilityRow row;
    row.design = design;
    row.camera = camera;
    row.attack = attack;
    row.utility_psnr = u->psnr / static_cast<double>(u->n);
    row.utility_ssim = u->ssim / static_cast<double>(u->n);
    row.privacy_psnr = acc.psnr / static_cast<double>(acc.n);
    row.privacy_ssim = acc.ssim / static_cast<double>(acc.n);
    row.samples = acc.n;
    rows.push_back(row);
  }
  return rows;
}

std::string privacy_utility_csv(const std::vector<PrivacyUtilityRow>& rows) {
  std::ostringstream os;
  os << "design,camera,attack,utility_psnr,utility_ssim,privacy_psnr,privacy_ssim,samples\n";
  for (const auto& r : rows) {
    os << r.design << ',' << r.camera << ',' << r.attack << ',' << format_number(r.utility_psnr) << ','
       << format_number(r.utility_ssim) << ',' << format_number(r.privacy_psnr) << ','
       << format_number(r.privacy_ssim) << ',' << r.samples << '\n';
  }
  return os.str();
}

void write_privacy_utility(const std::vector<PrivacyUtilityRow>& rows, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(privacy_utility_csv(rows), dir / "privacy_utility.csv");
  std::map<std::string, ScatterSeries> by_attack;
  for (const auto& r : rows) {
    auto& s = by_attack[r.attack];
    s.label = r.attack;
    s.x.push_back(r.privacy_psnr);
    s.y.push_back(r.utility_psnr);
  }
  std::vector<ScatterSeries> series;
  nlohmann::json legend = nlohmann::json::array();
  for (auto& [k, s] : by_attack) {
    legend.push_back(k);
    series.push_back(std::move(s));
  }
  save_png_visualization(scatter_plot(series), dir / "privacy_utility.png", false);
  write_json({{"x", "attack PSNR (dB)"}, {"y", "keyed PSNR (dB)"}, {"series", legend}},
             dir / "privacy_utility_legend.json");
}

}  // namespace opencam
