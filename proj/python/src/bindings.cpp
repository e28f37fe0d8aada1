#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <string>

#include "opencam/attacks.hpp"
#include "opencam/decrypt.hpp"
#include "opencam/error.hpp"
#include "opencam/experiment.hpp"
#include "opencam/keygen.hpp"
#include "opencam/metrics.hpp"
#include "opencam/optics.hpp"
#include "opencam/scenes.hpp"
#include "opencam/tensor_io.hpp"

namespace py = pybind11;
using namespace opencam;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const FloatArray& a) {
  if (a.ndim() != 2 && a.ndim() != 3) throw Error(ErrorCode::InvalidDims, "expected a 2-D or 3-D array");
  std::vector<std::uint32_t> dims;
  for (py::ssize_t i = 0; i < a.ndim(); ++i) dims.push_back(static_cast<std::uint32_t>(a.shape(i)));
  return Tensor::from_data(std::move(dims), std::vector<float>(a.data(), a.data() + a.size()));
}

py::array_t<float> to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape;
  for (auto d : t.dims()) shape.push_back(d);
  py::array_t<float> out(shape);
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

py::object optional_array(const std::optional<Tensor>& t) { return t ? py::object(to_array(*t)) : py::none(); }

py::dict report_dict(const AttackReport& r) {
  py::dict d;
  d["kind"] = r.kind;
  d["psf"] = optional_array(r.estimated_psf);
  d["scaling"] = optional_array(r.estimated_scaling);
  d["support"] = optional_array(r.estimated_support);
  d["decrypted"] = optional_array(r.decrypted);
  d["metrics"] = r.metrics;
  std::vector<double> objective;
  for (const auto& row : r.trace) objective.push_back(row.objective);
  d["objective"] = objective;
  return d;
}

AttackGeometry geometry(const FloatArray& y, std::size_t psf_side) {
  const Tensor t = to_tensor(y);
  if (t.rows() < psf_side || t.cols() < psf_side) throw Error(ErrorCode::DimMismatch, "PSF larger than sensor");
  return AttackGeometry::centered(t.rows() - psf_side + 1, t.cols() - psf_side + 1, psf_side, psf_side);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the opencam package";
  m.attr("__version__") = OPENCAM_VERSION;

  static py::exception<Error> exc(m, "OpenCamError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = py::reinterpret_borrow<py::object>(exc.ptr())(e.what());
      err.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(exc.ptr(), err.ptr());
    }
  });

  py::class_<Key>(m, "Key")
      .def_property_readonly("psf", [](const Key& k) { return to_array(k.psf); })
      .def_property_readonly("scaling", [](const Key& k) { return to_array(k.scaling); })
      .def_property_readonly("id", &Key::id)
      .def_property_readonly("design", [](const Key& k) { return std::string(to_string(k.design)); })
      .def_property_readonly("spec", [](const Key& k) { return key_spec_to_json(k.spec, k.design).dump(); })
      .def("save", [](const Key& k, const std::string& dir) { save_key(k, dir); }, py::arg("dir"));

  m.def(
      "generate_key",
      [](std::uint64_t seed, std::size_t psf_side, std::size_t sensor_rows, std::size_t sensor_cols,
         std::size_t channels, const std::string& design) {
        return generate_key(seed, psf_side, sensor_rows, sensor_cols, channels, parse_mask_design(design));
      },
      py::arg("seed"), py::arg("psf_side"), py::arg("sensor_rows"), py::arg("sensor_cols"), py::arg("channels") = 1,
      py::arg("design") = "opencam");
  m.def("load_key", [](const std::string& dir) { return load_key(dir); }, py::arg("dir"));

  m.def(
      "synthetic_scene",
      [](std::size_t rows, std::size_t cols, std::size_t channels, std::uint64_t seed) {
        Rng rng(seed);
        return to_array(synthetic_scene(rows, cols, channels, rng));
      },
      py::arg("rows"), py::arg("cols"), py::arg("channels") = 1, py::arg("seed") = 0);

  m.def(
      "full_convolve", [](const FloatArray& x, const FloatArray& p) { return to_array(full_convolve(to_tensor(x), to_tensor(p))); },
      py::arg("x"), py::arg("psf"));
  m.def(
      "forward_single",
      [](const FloatArray& x, const FloatArray& p, double sigma, std::uint64_t seed) {
        Rng rng(seed);
        return to_array(forward_single(to_tensor(x), to_tensor(p), {sigma}, rng).data);
      },
      py::arg("x"), py::arg("psf"), py::arg("sigma") = 0.0, py::arg("seed") = 0);
  m.def(
      "forward_double",
      [](const FloatArray& x, const FloatArray& p, const FloatArray& s, double sigma, std::uint64_t seed) {
        Rng rng(seed);
        return to_array(forward_double(to_tensor(x), to_tensor(p), to_tensor(s), {sigma}, rng).data);
      },
      py::arg("x"), py::arg("psf"), py::arg("scaling"), py::arg("sigma") = 0.0, py::arg("seed") = 0);

  m.def(
      "keyed_decrypt",
      [](const FloatArray& y, const FloatArray& p, const FloatArray& s, double gamma, double epsilon) {
        const Tensor pt = to_tensor(p), yt = to_tensor(y);
        return to_array(keyed_decrypt(yt, pt, to_tensor(s), {gamma, epsilon}, yt.rows() - pt.rows() + 1,
                                      yt.cols() - pt.cols() + 1));
      },
      py::arg("y"), py::arg("psf"), py::arg("scaling"), py::arg("gamma") = WienerConfig{}.gamma,
      py::arg("epsilon") = WienerConfig{}.epsilon);
  m.def(
      "wiener_decrypt",
      [](const FloatArray& y, const FloatArray& p, double gamma) {
        const Tensor pt = to_tensor(p), yt = to_tensor(y);
        return to_array(wiener_decrypt(yt, pt, {gamma, WienerConfig{}.epsilon}, yt.rows() - pt.rows() + 1,
                                       yt.cols() - pt.cols() + 1));
      },
      py::arg("y"), py::arg("psf"), py::arg("gamma") = WienerConfig{}.gamma);

  m.def("mse", [](const FloatArray& a, const FloatArray& b) { return mse(to_tensor(a), to_tensor(b)); });
  m.def(
      "psnr", [](const FloatArray& a, const FloatArray& b, double peak) { return psnr(to_tensor(a), to_tensor(b), peak); },
      py::arg("a"), py::arg("b"), py::arg("peak") = 1.0);
  m.def("ssim", [](const FloatArray& a, const FloatArray& b) { return ssim(to_tensor(a), to_tensor(b)); });
  m.def("scale_optimal_error", [](const FloatArray& est, const FloatArray& truth) {
    const ScaleFit f = scale_optimal_error(to_tensor(est), to_tensor(truth));
    return py::make_tuple(f.error, f.scale);
  });
  m.def("support_iou", [](const FloatArray& a, const FloatArray& b) { return support_iou(to_tensor(a), to_tensor(b)); });

  m.def("autocorrelation", [](const FloatArray& t) { return to_array(autocorrelation(to_tensor(t))); });
  m.def(
      "psf_impulse_likeness",
      [](const FloatArray& p, double exponent) { return psf_impulse_likeness(to_tensor(p), exponent); },
      py::arg("psf"), py::arg("exponent") = 4.0);
  m.def(
      "ikpa",
      [](const FloatArray& y_bright, const FloatArray& y_target, std::size_t psf_side, double gamma,
         double epsilon) {
        return report_dict(
            ikpa(to_tensor(y_bright), to_tensor(y_target), {gamma, epsilon}, geometry(y_bright, psf_side)));
      },
      py::arg("y_bright"), py::arg("y_target"), py::arg("psf_side"), py::arg("gamma") = WienerConfig{}.gamma,
      py::arg("epsilon") = WienerConfig{}.epsilon);
  m.def(
      "uikpa",
      [](const FloatArray& y_usr, const FloatArray& y_bright, const FloatArray& y_target, std::size_t psf_side,
         std::size_t outer_iters, double gamma, double epsilon) {
        AlsConfig als;
        als.outer_iters = outer_iters;
        return report_dict(uikpa(to_tensor(y_usr), to_tensor(y_bright), to_tensor(y_target), als,
                                 {gamma, epsilon}, geometry(y_usr, psf_side)));
      },
      py::arg("y_usr"), py::arg("y_bright"), py::arg("y_target"), py::arg("psf_side"),
      py::arg("outer_iters") = AlsConfig{}.outer_iters, py::arg("gamma") = WienerConfig{}.gamma,
      py::arg("epsilon") = WienerConfig{}.epsilon);

  m.def("read_tensor", [](const std::string& path) { return to_array(read_tensor(path)); });
  m.def("write_tensor", [](const FloatArray& t, const std::string& path) { write_tensor(to_tensor(t), path); });

  m.def(
      "run_study",
      [](const std::string& config_json, const std::string& attack) {
        const auto cfg = ExperimentConfig::from_json(nlohmann::json::parse(config_json));
        py::gil_scoped_release release;
        const RunSummary s = attack == "keyed" ? run_keyed_study(cfg) : run_attack_study(cfg, attack);
        return s.to_json().dump();
      },
      py::arg("config_json"), py::arg("attack") = "keyed");
}
