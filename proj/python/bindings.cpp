#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "streamcqr/cli_io.hpp"
#include "streamcqr/errors.hpp"
#include "streamcqr/lpi.hpp"
#include "streamcqr/optimal_weights.hpp"

namespace py = pybind11;
using namespace streamcqr;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw InvalidArgument("expected a one-dimensional array");
  return {a.data(), a.data() + a.size()};
}

Array to_array(const std::vector<double>& v) { return Array(static_cast<py::ssize_t>(v.size()), v.data()); }

Chunk make_chunk(const Array& x, const Array& y) {
  Chunk c{to_vector(x), to_vector(y)};
  if (c.x.size() != c.y.size()) throw InvalidArgument("x and y must have equal length");
  return c;
}

ErrorLaw law_by_name(const std::string& name) {
  if (name == "logistic") return logistic_law();
  if (name == "uniform") return uniform01_law();
  return make_error_law(parse_error_kind(name));
}

}  // namespace

PYBIND11_MODULE(streamcqr, m) {
  m.doc() = "Streaming weighted composite quantile regression";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  auto data = py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", data.ptr());
  auto state = py::register_exception<StateError>(m, "StateError", base.ptr());
  py::register_exception<CheckpointError>(m, "CheckpointError", state.ptr());

  py::class_<Session>(m, "Session")
      .def(py::init([](const std::string& config_text) { return new_session(parse_config(config_text)); }),
           py::arg("config"))
      .def_static(
          "with_validation",
          [](const std::string& config_text, const Array& x, const Array& y) {
            const Chunk v = make_chunk(x, y);
            return new_session(parse_config(config_text), &v);
          },
          py::arg("config"), py::arg("x"), py::arg("y"))
      .def(
          "update",
          [](Session& s, const Array& x, const Array& y, std::optional<std::int64_t> seq) {
            session_update(s, make_chunk(x, y), seq);
          },
          py::arg("x"), py::arg("y"), py::arg("seq") = py::none())
      .def(
          "estimate",
          [](const Session& s, const std::string& what, const std::string& mode, bool lenient) {
            const CurveEstimate c = session_estimate(s, parse_estimate_kind(what, mode), lenient);
            return py::make_tuple(to_array(c.grid), to_array(c.values));
          },
          py::arg("what") = "mean", py::arg("mode") = "ntm", py::arg("lenient") = false,
          "Returns (grid, values); skipped points are NaN.")
      .def("save", [](const Session& s, const std::string& path) { save_checkpoint(path, s); })
      .def_static("load", &load_checkpoint)
      .def("payload", &checkpoint_payload)
      .def_property_readonly("ready", [](const Session& s) { return s.state.has_value(); })
      .def_property_readonly("N", [](const Session& s) { return s.state ? s.state->N : std::uint64_t{0}; })
      .def_property_readonly("C_h", [](const Session& s) { return s.C_h; })
      .def_property_readonly("chunks", [](const Session& s) { return s.chunks; })
      .def_property_readonly("last_seq", [](const Session& s) { return s.last_seq; });

  m.def(
      "parse_chunk_csv",
      [](const std::string& text, bool drop) {
        const CsvChunk c = parse_chunk_csv(text, drop);
        return py::make_tuple(to_array(c.chunk.x), to_array(c.chunk.y), c.dropped);
      },
      py::arg("text"), py::arg("drop_nonfinite") = false);

  m.def(
      "generate",
      [](int model, const std::string& error, double lambda, std::size_t n, std::uint64_t seed) {
        StreamSpec spec;
        spec.model = model;
        spec.error = parse_error_kind(error);
        spec.lambda = lambda;
        CounterRng rng(seed);
        const Chunk c = generate(spec, n, rng);
        return py::make_tuple(to_array(c.x), to_array(c.y));
      },
      py::arg("model"), py::arg("error"), py::arg("lam") = 1.0, py::arg("n"), py::arg("seed"));

  m.def(
      "simulate",
      [](const std::string& scenario_text) { return report_csv(run_scenario(parse_scenario(scenario_text)).rows); },
      py::arg("scenario"), "Runs a scenario given as key = value text and returns the report CSV.");

  m.def("oracle_bandwidth", &oracle_bandwidth, py::arg("C_h"), py::arg("N_total"));

  m.def(
      "lpi",
      [](const Array& nodes, const Array& values, int degree, const Array& y) {
        const Interpolant p(to_vector(nodes), to_vector(values), degree);
        std::vector<double> out;
        for (double v : to_vector(y)) out.push_back(p(v));
        return to_array(out);
      },
      py::arg("nodes"), py::arg("values"), py::arg("degree"), py::arg("y"));

  m.def(
      "optimal_mean_weight",
      [](const std::string& law, double alpha, const Array& taus) {
        const auto sol = optimal_weight(Target::Mean, law_by_name(law), alpha, 1.0 - alpha);
        std::vector<double> out;
        for (double t : to_vector(taus)) out.push_back(sol.J_star(t));
        return py::make_tuple(to_array(out), sol.V_star);
      },
      py::arg("law"), py::arg("alpha"), py::arg("taus"), "J* sampled at taus and its variance functional.");

  m.attr("CHECKPOINT_VERSION") = kCheckpointVersion;
}
