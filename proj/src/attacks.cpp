#include "opencam/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "opencam/error.hpp"
#include "opencam/fft.hpp"
#include "opencam/metrics.hpp"
#include "opencam/tensor_io.hpp"

namespace opencam {

// ---- geometry / report ----

AttackGeometry AttackGeometry::centered(std::size_t scene_rows, std::size_t scene_cols, std::size_t psf_rows,
                                        std::size_t psf_cols) {
  return {scene_rows, scene_cols, psf_rows, psf_cols, scene_rows / 2, scene_cols / 2};
}

AttackGeometry AttackGeometry::for_key(const Key& key) {
  return centered(key.spec.scene_rows(), key.spec.scene_cols(), key.psf.rows(), key.psf.cols());
}

void AttackGeometry::validate() const {
  if (scene_rows == 0 || scene_cols == 0 || psf_rows == 0 || psf_cols == 0) {
    throw Error(ErrorCode::InvalidDims, "attack geometry has a zero dimension");
  }
  if (source_row >= scene_rows || source_col >= scene_cols) {
    throw Error(ErrorCode::DimMismatch, "source position outside the scene");
  }
}

nlohmann::json AttackReport::to_json() const {
  nlohmann::json j;
  j["attack_kind"] = kind;
  nlohmann::json m = nlohmann::json::object();
  for (const auto& [k, v] : metrics) m[k] = v;
  j["metrics"] = m;
  j["has_estimated_psf"] = estimated_psf.has_value();
  j["has_estimated_scaling"] = estimated_scaling.has_value();
  j["has_decrypted"] = decrypted.has_value();
  j["trace_length"] = trace.size();
  return j;
}

std::string AttackReport::trace_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "iteration,objective,step,s_accepted,p_accepted\n";
  for (const auto& t : trace) {
    os << t.iteration << ',' << t.objective << ',' << t.step << ',' << (t.s_accepted ? 1 : 0) << ','
       << t.p_accepted << '\n';
  }
  return os.str();
}

void score_decryption(AttackReport& report, const Tensor& truth) {
  if (!report.decrypted) return;
  report.metrics["psnr"] = psnr(*report.decrypted, truth);
  if (truth.rows() >= 11 && truth.cols() >= 11) report.metrics["ssim"] = ssim(*report.decrypted, truth);
}

// ---- autocorrelation ----

Tensor autocorrelation(const Tensor& t) {
  std::vector<Grid> out;
  for (std::size_t ch = 0; ch < t.channels(); ++ch) {
    Grid a = fft::fftshift(fft::circular_autocorrelation(t.plane(ch)));
    const double peak = a(a.rows / 2, a.cols / 2);
    if (peak > 0.0) {
      for (auto& v : a.data) v /= peak;
    }
    out.push_back(std::move(a));
  }
  return Tensor::from_planes(out, t.ndim() == 3);
}

double impulse_likeness(const Tensor& acorr, double exponent) {
  double score = 0.0;
  for (std::size_t ch = 0; ch < acorr.channels(); ++ch) {
    const Grid a = acorr.plane(ch);
    const std::size_t r0 = a.rows / 2;
    const std::size_t c0 = a.cols / 2;
    double total = 0.0, center = 0.0;
    for (std::size_t r = 0; r < a.rows; ++r) {
      for (std::size_t c = 0; c < a.cols; ++c) {
        const double e = std::pow(std::abs(a(r, c)), exponent);
        total += e;
        if (r + 1 >= r0 && r <= r0 + 1 && c + 1 >= c0 && c <= c0 + 1) center += e;
      }
    }
    score += total > 0.0 ? 1.0 - center / total : 0.0;
  }
  return score / static_cast<double>(acorr.channels());
}

double psf_impulse_likeness(const Tensor& psf, double exponent) {
  std::vector<Grid> planes = psf.planes();
  for (auto& p : planes) {
    double mean = 0.0;
    for (double v : p.data) mean += v;
    mean /= static_cast<double>(p.size());
    for (auto& v : p.data) v -= mean;
  }
  return impulse_likeness(autocorrelation(Tensor::from_planes(planes, psf.ndim() == 3)), exponent);
}

// ---- threshold attack ----

std::vector<double> threshold_grid(double max_value, std::size_t count) {
  std::vector<double> taus(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(count - 1);
    taus[k] = max_value * std::pow(10.0, -4.0 + 4.0 * t);
  }
  return taus;
}

namespace {

Tensor crop_at_source(const Tensor& y, const AttackGeometry& geo) {
  geo.validate();
  if (y.rows() != geo.sensor_rows() || y.cols() != geo.sensor_cols()) {
    throw Error(ErrorCode::DimMismatch, "measurement is not sensor-sized for this geometry");
  }
  std::vector<Grid> out;
  for (std::size_t ch = 0; ch < y.channels(); ++ch) {
    out.push_back(fft::crop(y.plane(ch), geo.source_row, geo.source_col, geo.psf_rows, geo.psf_cols));
  }
  return Tensor::from_planes(out, y.ndim() == 3);
}

}  // namespace

ThresholdResult threshold_support_attack(const Tensor& y_bright, const Tensor& true_support,
                                         const AttackGeometry& geo, const std::vector<double>& taus) {
  const Tensor crop = crop_at_source(y_bright, geo);
  if (!crop.same_shape(true_support)) throw Error(ErrorCode::DimMismatch, "support and PSF shapes differ");
  ThresholdResult res;
  res.support = Tensor::from_planes(crop.planes(), crop.ndim() == 3);
  bool have = false;
  for (double tau : taus) {
    Tensor est = crop;
    for (auto& v : est.values()) v = v > tau ? 1.0f : 0.0f;
    const double iou = support_iou(est, true_support);
    res.iou.push_back(iou);
    if (!have || iou > res.best_iou) {
      have = true;
      res.best_iou = iou;
      res.best_tau = tau;
      res.support = std::move(est);
    }
  }
  return res;
}

ThresholdResult threshold_support_attack(const Tensor& y_bright, const Tensor& true_support,
                                         const AttackGeometry& geo) {
  return threshold_support_attack(y_bright, true_support, geo, threshold_grid(y_bright.max()));
}

// ---- I-KPA / U-KPA ----

Tensor psf_from_bright_measurement(const Tensor& y_bright, const AttackGeometry& geo) {
  std::vector<Grid> planes = crop_at_source(y_bright, geo).planes();
  for (auto& p : planes) {
    double sum = 0.0;
    for (auto& v : p.data) {
      v = std::max(v, 0.0);
      sum += v;
    }
    if (sum <= 0.0) throw Error(ErrorCode::DegenerateKey, "bright-source crop is empty");
    for (auto& v : p.data) v /= sum;
  }
  return Tensor::from_planes(planes, y_bright.ndim() == 3);
}

AttackReport ikpa(const Tensor& y_bright, const Tensor& y_target, const WienerConfig& cfg,
                  const AttackGeometry& geo) {
  if (!y_bright.same_shape(y_target)) throw Error(ErrorCode::DimMismatch, "bright and target measurements differ");
  AttackReport rep;
  rep.kind = "ikpa";
  rep.estimated_psf = psf_from_bright_measurement(y_bright, geo);
  rep.decrypted = wiener_decrypt(y_target, *rep.estimated_psf, cfg, geo.scene_rows, geo.scene_cols);
  return rep;
}

namespace {

Tensor max_normalized(const Tensor& t) {
  const float m = t.max();
  if (!(m > 0.0f)) throw Error(ErrorCode::DegenerateKey, "scaling estimate has no positive values");
  Tensor out = t;
  for (auto& v : out.values()) v = std::max(v / m, 0.0f);
  return out;
}

AttackReport scaling_estimate_attack(std::string kind, const Tensor& s_hat, const Tensor& y_target,
                                     const Tensor& psf_guess, const WienerConfig& cfg) {
  if (!s_hat.same_shape(y_target)) throw Error(ErrorCode::DimMismatch, "scaling estimate and target differ");
  if (y_target.rows() < psf_guess.rows() || y_target.cols() < psf_guess.cols()) {
    throw Error(ErrorCode::DimMismatch, "target smaller than PSF");
  }
  AttackReport rep;
  rep.kind = std::move(kind);
  rep.estimated_scaling = max_normalized(s_hat);
  rep.estimated_psf = psf_guess;
  rep.decrypted = keyed_decrypt(y_target, psf_guess, *rep.estimated_scaling, cfg,
                                y_target.rows() - psf_guess.rows() + 1, y_target.cols() - psf_guess.cols() + 1);
  return rep;
}

}  // namespace

AttackReport ukpa_usr(const Tensor& y_usr, const Tensor& y_target, const Tensor& psf_guess,
                      const WienerConfig& cfg) {
  return scaling_estimate_attack("ukpa-usr", y_usr, y_target, psf_guess, cfg);
}

Tensor mean_tensor(const std::vector<Tensor>& ts) {
  if (ts.empty()) throw Error(ErrorCode::EmptySet, "no measurements to average");
  std::vector<double> acc(ts.front().size(), 0.0);
  for (const auto& t : ts) {
    if (!t.same_shape(ts.front())) throw Error(ErrorCode::DimMismatch, "measurements differ in shape");
    const auto v = t.values();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
  }
  Tensor out = ts.front();
  auto o = out.values();
  const double n = static_cast<double>(ts.size());
  for (std::size_t i = 0; i < acc.size(); ++i) o[i] = static_cast<float>(acc[i] / n);
  return out;
}

AttackReport ukpa_average(const std::vector<Tensor>& measurements, const Tensor& y_target, const Tensor& psf_guess,
                          const WienerConfig& cfg) {
  return scaling_estimate_attack("ukpa-avg", mean_tensor(measurements), y_target, psf_guess, cfg);
}

// ---- UI-KPA ----

void AlsConfig::validate() const {
  if (outer_iters < 1) throw Error(ErrorCode::InvalidSpec, "outer_iters must be >= 1");
  if (epsilon_ls < 0.0) throw Error(ErrorCode::InvalidSpec, "epsilon_ls must be >= 0");
  if (!(s_floor > 0.0 && s_floor <= 1.0)) throw Error(ErrorCode::InvalidSpec, "s_floor must be in (0, 1]");
}

namespace {

// Inclusive-exclusive 2-D prefix sums: I(r, c) = sum of g over [0, r) x [0, c).
Grid integral(const Grid& g) {
  Grid I(g.rows + 1, g.cols + 1);
  for (std::size_t r = 0; r < g.rows; ++r) {
    double row = 0.0;
    for (std::size_t c = 0; c < g.cols; ++c) {
      row += g(r, c);
      I(r + 1, c + 1) = I(r, c + 1) + row;
    }
  }
  return I;
}

double box(const Grid& I, std::size_t r0, std::size_t c0, std::size_t r1, std::size_t c1) {
  return I(r1, c1) - I(r0, c1) - I(r1, c0) + I(r0, c0);
}

// P * ones(scene): each sensor pixel sums the PSF over the window of taps
// whose shifted copy lands inside the scene.
Grid ones_response(const Grid& p, const AttackGeometry& g) {
  const Grid I = integral(p);
  Grid z(g.sensor_rows(), g.sensor_cols());
  for (std::size_t r = 0; r < z.rows; ++r) {
    const std::size_t r0 = r + 1 > g.scene_rows ? r + 1 - g.scene_rows : 0;
    const std::size_t r1 = std::min(r + 1, g.psf_rows);
    for (std::size_t c = 0; c < z.cols; ++c) {
      const std::size_t c0 = c + 1 > g.scene_cols ? c + 1 - g.scene_cols : 0;
      const std::size_t c1 = std::min(c + 1, g.psf_cols);
      z(r, c) = box(I, r0, c0, r1, c1);
    }
  }
  return z;
}

Grid impulse_response(const Grid& p, const AttackGeometry& g) {
  return fft::embed(p, g.sensor_rows(), g.sensor_cols(), g.source_row, g.source_col);
}

struct Channel {
  Grid y1, y2;  // measurements
  Grid s, p;    // estimates
  double c = 1.0;
  double step = 0.0;
};

double channel_objective(const Channel& ch, const AttackGeometry& g) {
  const Grid z1 = ones_response(ch.p, g);
  double f = 0.0;
  for (std::size_t i = 0; i < z1.size(); ++i) {
    const double d = ch.s.data[i] * z1.data[i] - ch.y1.data[i];
    f += d * d;
  }
  // The impulse term is nonzero only under the PSF footprint; elsewhere it is y2 alone.
  for (std::size_t i = 0; i < ch.y2.size(); ++i) f += ch.y2.data[i] * ch.y2.data[i];
  for (std::size_t r = 0; r < g.psf_rows; ++r) {
    for (std::size_t c = 0; c < g.psf_cols; ++c) {
      const std::size_t sr = g.source_row + r, sc = g.source_col + c;
      const double y = ch.y2(sr, sc);
      const double d = ch.c * ch.s(sr, sc) * ch.p(r, c) - y;
      f += d * d - y * y;
    }
  }
  return f;
}

Grid scaling_step(const Channel& ch, const AttackGeometry& g, double epsilon_ls) {
  const Grid z1 = ones_response(ch.p, g);
  const Grid z2 = impulse_response(ch.p, g);
  Grid num(z1.rows, z1.cols), den(z1.rows, z1.cols);
  double max_den = 0.0;
  for (std::size_t i = 0; i < z1.size(); ++i) {
    const double cz2 = ch.c * z2.data[i];
    num.data[i] = ch.y1.data[i] * z1.data[i] + ch.y2.data[i] * cz2;
    den.data[i] = z1.data[i] * z1.data[i] + cz2 * cz2;
    max_den = std::max(max_den, den.data[i]);
  }
  const double ridge = epsilon_ls * max_den;
  Grid s = ch.s;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double d = den.data[i] + ridge;
    if (d > 0.0) s.data[i] = num.data[i] / d;
  }
  return s;
}

double amplitude_step(const Channel& ch, const AttackGeometry& g) {
  double num = 0.0, den = 0.0;
  for (std::size_t r = 0; r < g.psf_rows; ++r) {
    for (std::size_t c = 0; c < g.psf_cols; ++c) {
      const std::size_t sr = g.source_row + r, sc = g.source_col + c;
      const double m = ch.s(sr, sc) * ch.p(r, c);
      num += ch.y2(sr, sc) * m;
      den += m * m;
    }
  }
  return den > 0.0 ? num / den : ch.c;
}

// Exact S-step together with the impulse amplitude: for each candidate c
// the per-pixel S is closed form (clamped), and c itself is found by a
// golden-section search in log c around its current value. Only pixels
// under the PSF footprint depend on c.
void refit_scaling(Channel& ch, const AttackGeometry& g, const AlsConfig& als) {
  const Grid z1 = ones_response(ch.p, g);
  std::vector<double> a, y1, y2, b;
  double max_a2 = 0.0, max_b2 = 0.0;
  for (std::size_t i = 0; i < z1.size(); ++i) max_a2 = std::max(max_a2, z1.data[i] * z1.data[i]);
  for (std::size_t r = 0; r < g.psf_rows; ++r) {
    for (std::size_t c = 0; c < g.psf_cols; ++c) {
      const std::size_t sr = g.source_row + r, sc = g.source_col + c;
      a.push_back(z1(sr, sc));
      y1.push_back(ch.y1(sr, sc));
      y2.push_back(ch.y2(sr, sc));
      b.push_back(ch.p(r, c));
      max_b2 = std::max(max_b2, b.back() * b.back());
    }
  }
  auto window_cost = [&](double amp) {
    const double ridge = als.epsilon_ls * std::max(max_a2, amp * amp * max_b2);
    double f = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double cb = amp * b[i];
      const double den = a[i] * a[i] + cb * cb + ridge;
      const double sv = den > 0.0 ? std::clamp((a[i] * y1[i] + cb * y2[i]) / den, als.s_floor, 1.0) : 1.0;
      f += (sv * a[i] - y1[i]) * (sv * a[i] - y1[i]) + (sv * cb - y2[i]) * (sv * cb - y2[i]);
    }
    return f;
  };
  const double c0 = ch.c > 0.0 ? ch.c : 1.0;
  double best_c = c0, best_f = window_cost(c0);
  constexpr double kGolden = 0.6180339887498949;
  double lo = std::log(c0) - std::log(10.0), hi = std::log(c0) + std::log(10.0);
  double x1 = hi - kGolden * (hi - lo), x2 = lo + kGolden * (hi - lo);
  double f1 = window_cost(std::exp(x1)), f2 = window_cost(std::exp(x2));
  for (int it = 0; it < 60; ++it) {
    if (f1 <= f2) {
      hi = x2, x2 = x1, f2 = f1;
      x1 = hi - kGolden * (hi - lo);
      f1 = window_cost(std::exp(x1));
    } else {
      lo = x1, x1 = x2, f1 = f2;
      x2 = lo + kGolden * (hi - lo);
      f2 = window_cost(std::exp(x2));
    }
  }
  for (auto [x, fx] : {std::pair{x1, f1}, std::pair{x2, f2}}) {
    if (fx < best_f) best_f = fx, best_c = std::exp(x);
  }
  ch.c = best_c;
  ch.s = scaling_step(ch, g, als.epsilon_ls);
  for (auto& v : ch.s.data) v = std::clamp(v, als.s_floor, 1.0);
}

// Gradient of the objective with respect to P.
Grid psf_gradient(const Channel& ch, const AttackGeometry& g) {
  const Grid z1 = ones_response(ch.p, g);
  Grid r1(z1.rows, z1.cols);
  for (std::size_t i = 0; i < z1.size(); ++i) {
    r1.data[i] = 2.0 * ch.s.data[i] * (ch.s.data[i] * z1.data[i] - ch.y1.data[i]);
  }
  const Grid I = integral(r1);
  Grid grad(g.psf_rows, g.psf_cols);
  for (std::size_t r = 0; r < g.psf_rows; ++r) {
    for (std::size_t c = 0; c < g.psf_cols; ++c) {
      const std::size_t sr = g.source_row + r, sc = g.source_col + c;
      const double s = ch.s(sr, sc);
      const double r2 = 2.0 * ch.c * s * (ch.c * s * ch.p(r, c) - ch.y2(sr, sc));
      grad(r, c) = box(I, r, c, r + g.scene_rows, c + g.scene_cols) + r2;
    }
  }
  return grad;
}

// Diagonal preconditioner for the P-step. With S eliminated, the curvature
// at a PSF tap grows like 1/P^2, so the gradient is scaled by P^2 (floored
// at a small fraction of the mean tap).
double psf_weight(double p, std::size_t n) {
  const double floor = 1e-2 / static_cast<double>(n);
  const double v = std::max(p, floor);
  return v * v;
}

// D (g - lambda) with lambda chosen so the direction sums to zero, which
// keeps sum(P) fixed along the step.
Grid precondition(const Grid& grad, const Grid& p) {
  Grid d(grad.rows, grad.cols);
  double dg = 0.0, dsum = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    d.data[i] = psf_weight(p.data[i], p.size());
    dg += d.data[i] * grad.data[i];
    dsum += d.data[i];
  }
  const double lambda = dg / dsum;
  for (std::size_t i = 0; i < d.size(); ++i) d.data[i] *= grad.data[i] - lambda;
  return d;
}

Grid project_psf(Grid p, bool nonneg) {
  double sum = 0.0;
  for (auto& v : p.data) {
    if (nonneg) v = std::max(v, 0.0);
    sum += v;
  }
  if (sum > 0.0) {
    for (auto& v : p.data) v /= sum;
  }
  return p;
}

void check_finite(double f, const std::vector<TraceRow>& trace) {
  if (std::isfinite(f)) return;
  std::ostringstream os;
  os << "ALS objective became non-finite after " << trace.size() << " iterations";
  if (!trace.empty()) os << " (last finite objective " << trace.back().objective << ")";
  throw Error(ErrorCode::NonFiniteObjective, os.str());
}

void check_inputs(const Tensor& y_usr, const Tensor& y_bright, const AttackGeometry& geo) {
  geo.validate();
  if (!y_usr.same_shape(y_bright)) throw Error(ErrorCode::DimMismatch, "USR and bright measurements differ");
  if (y_usr.rows() != geo.sensor_rows() || y_usr.cols() != geo.sensor_cols()) {
    throw Error(ErrorCode::DimMismatch, "measurements are not sensor-sized for this geometry");
  }
}

std::vector<Channel> make_channels(const Tensor& y_usr, const Tensor& y_bright, const AlsState& st) {
  std::vector<Channel> chs(y_usr.channels());
  for (std::size_t k = 0; k < chs.size(); ++k) {
    chs[k].y1 = y_usr.plane(k);
    chs[k].y2 = y_bright.plane(k);
    chs[k].s = st.scaling.plane(k);
    chs[k].p = st.psf.plane(k);
    chs[k].c = k < st.amplitude.size() ? st.amplitude[k] : 1.0;
  }
  return chs;
}

AlsState to_state(const std::vector<Channel>& chs, bool force_3d) {
  AlsState st;
  std::vector<Grid> s, p;
  for (const auto& ch : chs) {
    s.push_back(ch.s);
    p.push_back(ch.p);
    st.amplitude.push_back(ch.c);
  }
  st.scaling = Tensor::from_planes(s, force_3d);
  st.psf = Tensor::from_planes(p, force_3d);
  return st;
}

}  // namespace

double uikpa_objective(const Tensor& y_usr, const Tensor& y_bright, const AlsState& st, const AttackGeometry& geo) {
  check_inputs(y_usr, y_bright, geo);
  double f = 0.0;
  for (const auto& ch : make_channels(y_usr, y_bright, st)) f += channel_objective(ch, geo);
  return f;
}

Tensor uikpa_scaling_step(const Tensor& y_usr, const Tensor& y_bright, const Tensor& psf,
                          const std::vector<double>& amplitude, const AttackGeometry& geo, double epsilon_ls) {
  check_inputs(y_usr, y_bright, geo);
  AlsState st{y_usr, psf, amplitude};
  std::vector<Grid> out;
  for (const auto& ch : make_channels(y_usr, y_bright, st)) out.push_back(scaling_step(ch, geo, epsilon_ls));
  return Tensor::from_planes(out, y_usr.ndim() == 3);
}

AlsState uikpa_initial_state(const Tensor& y_usr, const Tensor& y_bright, const AttackGeometry& geo,
                             double epsilon) {
  check_inputs(y_usr, y_bright, geo);
  AlsState st;
  std::vector<Grid> s_planes, p_planes;
  const float m = y_usr.max();
  if (!(m > 0.0f)) throw Error(ErrorCode::DegenerateKey, "uniform-scene response has no positive values");
  for (std::size_t k = 0; k < y_usr.channels(); ++k) {
    Grid s = y_usr.plane(k);
    for (auto& v : s.data) v = std::clamp(v / m, 1e-6, 1.0);
    const Grid y2 = y_bright.plane(k);
    Grid p(geo.psf_rows, geo.psf_cols);
    for (std::size_t r = 0; r < p.rows; ++r) {
      for (std::size_t c = 0; c < p.cols; ++c) {
        const std::size_t sr = geo.source_row + r, sc = geo.source_col + c;
        p(r, c) = y2(sr, sc) / (s(sr, sc) + epsilon);
      }
    }
    p = project_psf(std::move(p), true);
    if (std::all_of(p.data.begin(), p.data.end(), [](double v) { return v == 0.0; })) {
      std::fill(p.data.begin(), p.data.end(), 1.0 / static_cast<double>(p.size()));
    }
    s_planes.push_back(std::move(s));
    p_planes.push_back(std::move(p));
  }
  st.scaling = Tensor::from_planes(s_planes, y_usr.ndim() == 3);
  st.psf = Tensor::from_planes(p_planes, y_usr.ndim() == 3);
  auto chs = make_channels(y_usr, y_bright, st);
  for (auto& ch : chs) st.amplitude.push_back(amplitude_step(ch, geo));
  return st;
}

AlsResult uikpa_solve(const Tensor& y_usr, const Tensor& y_bright, const AttackGeometry& geo, const AlsConfig& als,
                      const std::optional<AlsState>& init) {
  als.validate();
  check_inputs(y_usr, y_bright, geo);
  const AlsState start = init ? *init : uikpa_initial_state(y_usr, y_bright, geo);
  if (!start.scaling.same_shape(y_usr) || start.psf.rows() != geo.psf_rows || start.psf.cols() != geo.psf_cols ||
      start.psf.channels() != y_usr.channels()) {
    throw Error(ErrorCode::DimMismatch, "initial ALS state has the wrong shape");
  }
  auto chs = make_channels(y_usr, y_bright, start);
  for (auto& ch : chs) {
    for (auto& v : ch.s.data) v = std::clamp(v, als.s_floor, 1.0);
  }

  double smax = 0.0;
  for (const auto& ch : chs) smax = std::max(smax, *std::max_element(ch.s.data.begin(), ch.s.data.end()));
  smax = std::max(smax, 1.0);

  std::vector<double> f(chs.size());
  std::vector<TraceRow> trace;
  for (std::size_t k = 0; k < chs.size(); ++k) {
    f[k] = channel_objective(chs[k], geo);
    // Lipschitz bound of the P-gradient: 2 smax^2 (||A_ones||^2 + c^2).
    const double n_scene = static_cast<double>(geo.scene_rows * geo.scene_cols);
    const double n_psf = static_cast<double>(geo.psf_rows * geo.psf_cols);
    const double lip = 2.0 * smax * smax * (n_scene * n_psf + chs[k].c * chs[k].c);
    const double dmax = psf_weight(*std::max_element(chs[k].p.data.begin(), chs[k].p.data.end()), chs[k].p.size());
    chs[k].step = als.initial_step > 0.0 ? als.initial_step : 1.0 / (lip * dmax);
  }
  auto total = [&] {
    double t = 0.0;
    for (double v : f) t += v;
    return t;
  };
  check_finite(total(), trace);
  trace.push_back({0, total(), chs.front().step, false, 0});

  for (std::size_t it = 1; it <= als.outer_iters; ++it) {
    bool s_accepted = true;
    std::size_t p_accepted = 0;
    for (std::size_t k = 0; k < chs.size(); ++k) {
      Channel& ch = chs[k];

      // S-step: closed form per pixel, clamped into (0, 1], jointly with
      // the impulse amplitude.
      Channel trial = ch;
      refit_scaling(trial, geo, als);
      double ft = channel_objective(trial, geo);
      check_finite(ft, trace);
      if (ft <= f[k]) {
        ch = std::move(trial);
        f[k] = ft;
      } else {
        s_accepted = false;
      }

      // P-step: projected, preconditioned gradient with backtracking. Each
      // trial P is scored with its own closed-form S, so the search runs on
      // the objective with S eliminated; a bright impulse term otherwise
      // pins S.P in the PSF window and stalls P.
      for (std::size_t j = 0; j < als.psf_step_count; ++j) {
        Grid grad = precondition(psf_gradient(ch, geo), ch.p);

        bool accepted = false;
        double step = ch.step;
        for (std::size_t h = 0; h <= als.max_halvings; ++h, step *= 0.5) {
          trial = ch;
          for (std::size_t i = 0; i < grad.size(); ++i) trial.p.data[i] -= step * grad.data[i];
          trial.p = project_psf(std::move(trial.p), als.nonneg_projection);
          refit_scaling(trial, geo, als);
          ft = channel_objective(trial, geo);
          check_finite(ft, trace);
          if (ft <= f[k]) {
            ch = std::move(trial);
            f[k] = ft;
            accepted = true;
            break;
          }
        }
        if (!accepted) break;
        ++p_accepted;
        ch.step = step * 2.0;
      }
    }
    trace.push_back({it, total(), chs.front().step, s_accepted, p_accepted});
  }
  return {to_state(chs, y_usr.ndim() == 3), std::move(trace)};
}

AttackReport uikpa(const Tensor& y_usr, const Tensor& y_bright, const Tensor& y_target, const AlsConfig& als,
                   const WienerConfig& cfg, const AttackGeometry& geo) {
  if (!y_target.same_shape(y_usr)) throw Error(ErrorCode::DimMismatch, "target and USR measurements differ");
  AlsResult res = uikpa_solve(y_usr, y_bright, geo, als);
  AttackReport rep;
  rep.kind = "uikpa";
  rep.decrypted = keyed_decrypt(y_target, res.state.psf, res.state.scaling, cfg, geo.scene_rows, geo.scene_cols);
  rep.estimated_psf = std::move(res.state.psf);
  rep.estimated_scaling = std::move(res.state.scaling);
  rep.trace = std::move(res.trace);
  rep.metrics["objective_initial"] = rep.trace.front().objective;
  rep.metrics["objective_final"] = rep.trace.back().objective;
  return rep;
}

}  // namespace opencam
