#include <doctest.h>

#include <cmath>

#include "opencam/attacks.hpp"
#include "opencam/error.hpp"
#include "opencam/keygen.hpp"
#include "opencam/metrics.hpp"
#include "opencam/noise.hpp"
#include "opencam/optics.hpp"
#include "opencam/scenes.hpp"
#include "test_util.hpp"

using namespace opencam;

namespace {

Tensor impulse_scene(std::size_t rows, std::size_t cols, std::size_t r, std::size_t c, float amp) {
  Tensor t(rows, cols);
  t.at(r, c) = amp;
  return t;
}

struct Setup {
  Key key;
  AttackGeometry geo;
  Tensor y_usr, y_bright;
};

// Noise-free responses that match the UI-KPA model exactly.
Setup exact_setup(std::uint64_t seed, std::size_t psf, std::size_t scene, double amp) {
  Setup s{generate_key(seed, psf, scene + psf - 1, scene + psf - 1, 1), {}, {}, {}};
  s.geo = AttackGeometry::for_key(s.key);
  Rng rng(1);
  s.y_usr = uniform_scene_response(s.key, 1.0, {}, rng).data;
  s.y_bright = forward_double(impulse_scene(scene, scene, s.geo.source_row, s.geo.source_col, float(amp)), s.key,
                              {}, rng)
                   .data;
  return s;
}

}  // namespace

TEST_CASE("autocorrelation") {
  Tensor d(9, 9);
  d.at(3, 5) = 2.0f;
  const Tensor a = autocorrelation(d);
  CHECK(a.at(4, 4) == doctest::Approx(1.0));
  CHECK(a.sum() == doctest::Approx(1.0));
  CHECK(impulse_likeness(a) == doctest::Approx(0.0));

  Rng rng(1);
  const Tensor x = testutil::random_tensor(8, 8, 1, rng);
  const oracle::Mat ref = oracle::circular_autocorrelation(testutil::to_mat(x));
  const Tensor ax = autocorrelation(x);
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t c = 0; c < 8; ++c) {
      CHECK(ax.at((r + 4) % 8, (c + 4) % 8) == doctest::Approx(ref(r, c) / ref(0, 0)).epsilon(1e-5));
    }
  // Point symmetry about the zero lag.
  for (std::size_t r = 1; r < 8; ++r)
    for (std::size_t c = 1; c < 8; ++c) CHECK(ax.at(r, c) == doctest::Approx(ax.at(8 - r, 8 - c)).epsilon(1e-5));

  // Constant field: every lag equals the peak.
  const std::size_t n = 16;
  CHECK(impulse_likeness(autocorrelation(Tensor(n, n, 0.3f))) == doctest::Approx(1.0 - 9.0 / (n * n)));
}

TEST_CASE("impulse likeness invariances") {
  Rng rng(2);
  const Tensor x = testutil::random_tensor(32, 32, 1, rng);
  Tensor shifted(32, 32), scaled = x;
  for (std::size_t r = 0; r < 32; ++r)
    for (std::size_t c = 0; c < 32; ++c) shifted.at((r + 5) % 32, (c + 11) % 32) = x.at(r, c);
  for (auto& v : scaled.values()) v *= 7.0f;
  const double base = impulse_likeness(autocorrelation(x));
  CHECK(impulse_likeness(autocorrelation(shifted)) == doctest::Approx(base).epsilon(1e-5));
  CHECK(impulse_likeness(autocorrelation(scaled)) == doctest::Approx(base).epsilon(1e-5));
  CHECK(psf_impulse_likeness(x) == doctest::Approx(psf_impulse_likeness(scaled)).epsilon(1e-5));
}

TEST_CASE("white noise is impulse-like, colored noise is not") {
  double p4 = 0.0, p2 = 0.0, colored = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    Rng rng(100 + s);
    const Tensor w = Tensor::from_plane(white_noise_grid(64, 64, rng));
    p4 += psf_impulse_likeness(w) / 10;
    p2 += psf_impulse_likeness(w, 2.0) / 10;
    Rng crng(200 + s);
    colored += psf_impulse_likeness(Tensor::from_plane(colored_noise_grid({64, 3.0}, crng))) / 10;
  }
  CHECK(p4 < 0.05);
  // The plain energy ratio sits near one half for white noise.
  CHECK(p2 == doctest::Approx(0.5).epsilon(0.1));
  CHECK(colored > 0.5);
  MESSAGE("white noise: p=4 ", p4, ", p=2 ", p2, "; colored beta=3: ", colored);
}

TEST_CASE("threshold attack") {
  const std::size_t psf = 16, scene = 16;
  const AttackGeometry geo = AttackGeometry::centered(scene, scene, psf, psf);
  Tensor support(psf, psf);
  Rng rng(3);
  for (auto& v : support.values()) v = rng.uniform() < 0.3 ? 1.0f : 0.0f;
  Tensor p = support;
  for (auto& v : p.values()) v /= static_cast<float>(support.sum());
  Rng n(1);
  const Tensor y = forward_single(impulse_scene(scene, scene, geo.source_row, geo.source_col, 1000.0f), p, {}, n).data;
  const ThresholdResult res = threshold_support_attack(y, support, geo);
  CHECK(res.best_iou >= 0.99);
  CHECK(res.iou.size() == 64);
  CHECK(res.support == support);

  const auto taus = threshold_grid(2.0);
  CHECK(taus.front() == doctest::Approx(2e-4));
  CHECK(taus.back() == doctest::Approx(2.0));
  for (std::size_t i = 1; i < taus.size(); ++i) CHECK(taus[i] / taus[i - 1] == doctest::Approx(taus[1] / taus[0]));

  const ThresholdResult zero = threshold_support_attack(Tensor(geo.sensor_rows(), geo.sensor_cols()), support, geo,
                                                        threshold_grid(1.0));
  CHECK(zero.best_iou == 0.0);
  CHECK_ERROR_CODE(threshold_support_attack(Tensor(5, 5), support, geo), ErrorCode::DimMismatch);
}

TEST_CASE("impulse KPA recovers the single-mask PSF") {
  const Key key = generate_key(5, 16, 47, 47, 1);
  const AttackGeometry geo = AttackGeometry::for_key(key);
  Rng rng(4);
  const Tensor base = testutil::random_tensor(32, 32, 1, rng);
  const Tensor bright = add_bright_source(base, 1e5, geo.source_row, geo.source_col);
  const Tensor yb = forward_single(bright, key.psf, {}, rng).data;
  const Tensor p_hat = psf_from_bright_measurement(yb, geo);
  CHECK(p_hat.sum() == doctest::Approx(1.0));
  CHECK(testutil::rel_l2(testutil::as_vector(p_hat), testutil::as_vector(key.psf)) < 0.01);
  const Tensor x = synthetic_scene(32, 32, 1, rng);
  const AttackReport rep = ikpa(yb, forward_single(x, key.psf, {}, rng).data, {}, geo);
  CHECK(psnr(*rep.decrypted, x) > 25.0);
}

TEST_CASE("uniform-scene KPA") {
  const Key key = generate_key(6, 16, 47, 47, 1);
  Rng rng(5);
  const Tensor usr = uniform_scene_response(key, 1.0, {}, rng).data;
  const Tensor x = testutil::random_tensor(32, 32, 1, rng);
  const Tensor y = forward_double(x, key, {}, rng).data;
  const AttackReport a = ukpa_usr(usr, y, key.psf, {});
  CHECK(a.estimated_scaling->max() == doctest::Approx(1.0));
  const AttackReport b = ukpa_average({usr, usr, usr}, y, key.psf, {});
  CHECK(*a.decrypted == *b.decrypted);
  CHECK_ERROR_CODE(mean_tensor({}), ErrorCode::EmptySet);
  CHECK_ERROR_CODE(mean_tensor({Tensor(2, 2), Tensor(2, 3)}), ErrorCode::DimMismatch);
  const Tensor m = mean_tensor({Tensor(2, 2, 1.0f), Tensor(2, 2, 3.0f)});
  CHECK(m.min() == 2.0f);
}

TEST_CASE("UI-KPA objective and S-step") {
  const Setup s = exact_setup(7, 8, 12, 50.0);
  const AlsState truth{s.key.scaling, s.key.psf, {50.0}};
  CHECK(uikpa_objective(s.y_usr, s.y_bright, truth, s.geo) < 1e-6);

  // Per-pixel least squares with A = P*1 and B = c P*delta.
  Rng rng(8);
  const Tensor p = testutil::random_tensor(8, 8, 1, rng);
  const oracle::Mat A = oracle::convolve(oracle::Mat(12, 12, 1.0), testutil::to_mat(p));
  oracle::Mat d(12, 12);
  d(s.geo.source_row, s.geo.source_col) = 2.0;
  const oracle::Mat B = oracle::convolve(d, testutil::to_mat(p));
  const Tensor step = uikpa_scaling_step(s.y_usr, s.y_bright, p, {2.0}, s.geo);
  for (std::size_t r = 0; r < A.rows; ++r)
    for (std::size_t c = 0; c < A.cols; ++c) {
      const double y1 = s.y_usr.at(r, c), y2 = s.y_bright.at(r, c);
      const double ref = (A(r, c) * y1 + B(r, c) * y2) / (A(r, c) * A(r, c) + B(r, c) * B(r, c));
      CHECK(step.at(r, c) == doctest::Approx(ref).epsilon(1e-4));
    }
}

TEST_CASE("UI-KPA fixed point and monotone descent") {
  const Setup s = exact_setup(9, 8, 16, 50.0);
  AlsConfig als;
  als.outer_iters = 10;
  const AlsState truth{s.key.scaling, s.key.psf, {50.0}};
  const AlsResult fixed = uikpa_solve(s.y_usr, s.y_bright, s.geo, als, truth);
  CHECK(fixed.trace.back().objective < 1e-6);
  CHECK(testutil::rel_l2(testutil::as_vector(fixed.state.psf), testutil::as_vector(s.key.psf)) < 1e-3);

  Rng rng(10);
  Tensor noisy_usr = s.y_usr, noisy_bright = s.y_bright;
  for (auto& v : noisy_usr.values()) v += static_cast<float>(0.01 * rng.normal());
  for (auto& v : noisy_bright.values()) v += static_cast<float>(0.01 * rng.normal());
  als.outer_iters = 25;
  const AlsResult res = uikpa_solve(noisy_usr, noisy_bright, s.geo, als);
  REQUIRE(res.trace.size() == 26);
  for (std::size_t i = 1; i < res.trace.size(); ++i) CHECK(res.trace[i].objective <= res.trace[i - 1].objective);
  CHECK(res.trace.back().objective < res.trace.front().objective);
  CHECK(res.state.psf.min() >= 0.0f);
  CHECK(res.state.psf.sum() == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(res.state.scaling.max() <= 1.0f);
  CHECK(res.state.scaling.min() >= 1e-6f);

  AlsConfig bad;
  bad.outer_iters = 0;
  CHECK_ERROR_CODE(uikpa_solve(s.y_usr, s.y_bright, s.geo, bad), ErrorCode::InvalidSpec);
  Tensor inf_usr = s.y_usr;
  inf_usr.at(0, 0) = std::numeric_limits<float>::infinity();
  CHECK_THROWS_AS(uikpa_solve(inf_usr, s.y_bright, s.geo, als), Error);
}

TEST_CASE("UI-KPA report") {
  const Setup s = exact_setup(11, 8, 16, 50.0);
  Rng rng(12);
  const Tensor x = testutil::random_tensor(16, 16, 1, rng);
  const Tensor y = forward_double(x, s.key, {}, rng).data;
  AlsConfig als;
  als.outer_iters = 5;
  const AttackReport rep = uikpa(s.y_usr, s.y_bright, y, als, {}, s.geo);
  CHECK(rep.kind == "uikpa");
  CHECK(rep.metrics.at("objective_final") <= rep.metrics.at("objective_initial"));
  CHECK(rep.decrypted->rows() == 16);
  const auto j = rep.to_json();
  CHECK(j.at("attack_kind") == "uikpa");
  CHECK(rep.trace_csv().find("iteration") == 0);
}
