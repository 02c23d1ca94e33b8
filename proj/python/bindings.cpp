#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "mmhcan/commands.hpp"

namespace py = pybind11;
using namespace mmhcan;

namespace {

using Doubles = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::span<const double> as_span(const Doubles& a) {
  return {a.data(), static_cast<std::size_t>(a.size())};
}

RealMatrix as_matrix(const Doubles& a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-D array");
  RealMatrix m{static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)), {}};
  m.data.assign(a.data(), a.data() + a.size());
  return m;
}

py::array_t<double> to_array(const RealMatrix& m) {
  py::array_t<double> out({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), out.mutable_data());
  return out;
}

WindowSpec window_spec(const std::string& kind, std::size_t length, std::size_t hop,
                       std::size_t fft_size, double band_hz) {
  WindowSpec w{parse_window_kind(kind), length, hop, fft_size, band_hz};
  validate(w);
  return w;
}

}  // namespace

PYBIND11_MODULE(_mmhcan, m) {
  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ContractError>(m, "ContractError", base.ptr());
  py::register_exception<NonFiniteError>(m, "NonFiniteError", base.ptr());

  m.def("default_config", [] { return default_config().dump(); });
  m.def("command_names", &command_names);
  m.def(
      "run_command",
      [](const std::string& command, const std::filesystem::path& out,
         std::optional<std::filesystem::path> config, std::vector<std::string> overrides,
         std::optional<std::uint64_t> seed) {
        std::ostringstream log;
        {
          py::gil_scoped_release release;
          run_command(CommandOptions{command, std::move(config), std::move(overrides), out, seed}, log);
        }
        return log.str();
      },
      py::arg("command"), py::arg("out"), py::arg("config") = py::none(),
      py::arg("overrides") = std::vector<std::string>{}, py::arg("seed") = py::none());

  m.def(
      "stft",
      [](const Doubles& x, const std::string& window, std::size_t length, std::size_t hop,
         std::size_t fft_size) {
        auto frames = stft(as_span(x), window_spec(window, length, hop, fft_size, 0));
        py::array_t<std::complex<double>> out({frames.frames, frames.bins});
        std::copy(frames.data.begin(), frames.data.end(), out.mutable_data());
        return out;
      },
      py::arg("x"), py::arg("window") = "hann", py::arg("length") = 128, py::arg("hop") = 4,
      py::arg("fft_size") = 128);
  m.def(
      "spectrogram",
      [](const Doubles& x, double sample_rate_hz, const std::string& window, std::size_t length,
         std::size_t hop, std::size_t fft_size, double band_hz, std::size_t rows, std::size_t cols) {
        auto s = spectrogram(as_span(x), window_spec(window, length, hop, fft_size, band_hz),
                             sample_rate_hz, rows, cols);
        return py::make_tuple(to_array(s.values), s.freq_resolution_hz, s.time_step_s);
      },
      py::arg("x"), py::arg("sample_rate_hz"), py::arg("window") = "hann", py::arg("length") = 128,
      py::arg("hop") = 4, py::arg("fft_size") = 128, py::arg("band_hz") = 0.0, py::arg("rows") = 64,
      py::arg("cols") = 64);
  m.def("preset", [](const std::string& name) {
    auto p = regime_preset(name);
    py::dict d;
    d["window"] = to_string(p.window.kind);
    d["length"] = p.window.length;
    d["hop"] = p.window.hop;
    d["fft_size"] = p.window.fft_size;
    d["band_hz"] = p.window.band_limit_hz;
    d["sample_rate_hz"] = p.sample_rate_hz;
    d["segment_length"] = p.segment_length;
    return d;
  });
  m.def("preset_names", &regime_preset_names);

  m.def(
      "hyperedge_members",
      [](const Doubles& profiles, std::size_t k, double threshold) {
        return hyperedge_members(as_matrix(profiles), k, threshold);
      },
      py::arg("profiles"), py::arg("k"), py::arg("threshold"));
  m.def(
      "laplacian",
      [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> h) {
        if (h.ndim() != 2) throw DimensionError("expected a 2-D incidence matrix");
        std::vector<std::uint8_t> inc(h.data(), h.data() + h.size());
        auto g = from_incidence(h.shape(0), h.shape(1), std::move(inc));
        return to_array(g.laplacian);
      },
      py::arg("incidence"));

  m.def(
      "metrics",
      [](const Doubles& probs, std::vector<int> labels, std::size_t classes) {
        return to_json(compute_metrics(as_span(probs), labels, classes)).dump();
      },
      py::arg("probs"), py::arg("labels"), py::arg("classes"));

  m.def(
      "perturb",
      [](const Doubles& x, const std::string& kind, std::uint64_t seed, double sample_rate_hz,
         double base_freq_hz) {
        Perturbation p = make_perturbation(kind);
        if (auto* h = std::get_if<perturbation::Harmonics>(&p)) {
          h->sample_rate_hz = sample_rate_hz;
          h->base_freq_hz = base_freq_hz;
        }
        auto y = perturb(as_span(x), p, seed);
        py::array_t<double> out(y.size());
        std::copy(y.begin(), y.end(), out.mutable_data());
        return out;
      },
      py::arg("x"), py::arg("kind"), py::arg("seed") = 0, py::arg("sample_rate_hz") = 1000.0,
      py::arg("base_freq_hz") = 60.0);
  m.def(
      "snr_db", [](const Doubles& clean, const Doubles& noisy) {
        return snr_db(as_span(clean), as_span(noisy));
      },
      py::arg("clean"), py::arg("noisy"));
}
