#include <optional>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qpgp/bench.hpp"
#include "qpgp/circuit_io.hpp"
#include "qpgp/grad.hpp"
#include "qpgp/noise.hpp"
#include "qpgp/pgp.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

qpgp::NoiseModel noise_from(const py::dict& d) {
  qpgp::NoiseModel m = qpgp::NoiseModel::default_preset();
  for (auto [key, value] : d) {
    const auto k = key.cast<std::string>();
    if (k == "p1") m.p1 = value.cast<double>();
    else if (k == "p2") m.p2 = value.cast<double>();
    else if (k == "readout_flip") m.readout_flip = value.cast<double>();
    else if (k == "shots") m.shots = value.cast<int>();
    else if (k == "trajectories") m.trajectories = value.cast<int>();
    else if (k == "sample_shots") m.sample_shots = value.cast<bool>();
    else throw py::key_error("unknown noise key '" + k + "'");
  }
  m.validate();
  return m;
}

py::array_t<double> to_matrix(const std::vector<qpgp::Sample>& samples, std::size_t width) {
  py::array_t<double> out({samples.size(), width});
  auto view = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = 0; j < width; ++j) view(i, j) = samples[i].features[j];
  return out;
}

py::array_t<std::int64_t> to_labels(const std::vector<qpgp::Sample>& samples) {
  std::vector<std::int64_t> labels;
  labels.reserve(samples.size());
  for (const auto& s : samples) labels.push_back(static_cast<std::int64_t>(s.label));
  return py::array_t<std::int64_t>(static_cast<py::ssize_t>(labels.size()), labels.data());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Statevector simulation, parameter-shift gradients and pruned training";

  py::class_<qpgp::Circuit>(m, "Circuit")
      .def_static("from_text", &qpgp::circuit_from_text, py::arg("text"))
      .def("to_text", &qpgp::circuit_to_text)
      .def_readonly("num_qubits", &qpgp::Circuit::num_qubits)
      .def_readonly("num_params", &qpgp::Circuit::num_params)
      .def_readonly("num_features", &qpgp::Circuit::num_features)
      .def_property_readonly("num_gates", [](const qpgp::Circuit& c) { return c.gates.size(); })
      .def("occurrences", &qpgp::Circuit::occurrences, py::arg("param"))
      .def("__repr__", [](const qpgp::Circuit& c) {
        return "<Circuit qubits=" + std::to_string(c.num_qubits) + " params=" + std::to_string(c.num_params) +
               " gates=" + std::to_string(c.gates.size()) + ">";
      });

  m.def(
      "model_circuit",
      [](const std::string& task, std::optional<std::size_t> repetitions) {
        return qpgp::build_circuit(qpgp::model_spec_for(qpgp::parse_task(task), repetitions));
      },
      py::arg("task"), py::arg("repetitions") = py::none());

  m.def(
      "run_circuit",
      [](const qpgp::Circuit& c, const std::vector<double>& params, const std::vector<double>& features,
         std::optional<py::dict> noise, std::uint64_t stream) {
        std::optional<qpgp::NoiseModel> model;
        if (noise) model = noise_from(*noise);
        qpgp::RunOptions o;
        o.noise = model ? &*model : nullptr;
        o.stream = stream;
        return qpgp::run_circuit(c, params, features, o);
      },
      py::arg("circuit"), py::arg("params"), py::arg("features") = std::vector<double>{},
      py::arg("noise") = py::none(), py::arg("stream") = 0,
      "Per-qubit <Z>. `noise` is a dict of p1, p2, readout_flip, shots, trajectories, sample_shots.");

  m.def(
      "param_shift_gradient",
      [](const qpgp::Circuit& c, const std::vector<double>& params, std::size_t index,
         const std::vector<double>& features) {
        return qpgp::param_shift_gradient(qpgp::make_oracle(c), c, params, index, features);
      },
      py::arg("circuit"), py::arg("params"), py::arg("index"), py::arg("features") = std::vector<double>{});

  m.def(
      "jacobian",
      [](const qpgp::Circuit& c, const std::vector<double>& params, const std::vector<double>& features) {
        const qpgp::GradientReport r = qpgp::jacobian(qpgp::make_oracle(c), c, params, features);
        py::array_t<double> out({r.jacobian.rows, r.jacobian.cols});
        auto view = out.mutable_unchecked<2>();
        for (std::size_t i = 0; i < r.jacobian.rows; ++i)
          for (std::size_t j = 0; j < r.jacobian.cols; ++j) view(i, j) = r.jacobian(i, j);
        return out;
      },
      py::arg("circuit"), py::arg("params"), py::arg("features") = std::vector<double>{});

  m.def(
      "sample_subset",
      [](const std::vector<double>& magnitude, double ratio, const std::string& mode, std::uint64_t seed) {
        qpgp::Rng rng(seed);
        return qpgp::sample_subset(magnitude, ratio, qpgp::parse_pruning_mode(mode), rng);
      },
      py::arg("magnitude"), py::arg("ratio"), py::arg("mode") = "probabilistic", py::arg("seed") = 0);

  m.def(
      "load_dataset",
      [](const std::string& task, std::uint64_t seed, std::optional<std::string> root) {
        const auto spec = qpgp::dataset_spec_for(qpgp::parse_task(task), seed);
        const qpgp::Dataset d = root ? qpgp::load_task_dataset(spec, *root) : qpgp::load_task_dataset(spec);
        py::dict out;
        out["train_x"] = to_matrix(d.train, d.num_features);
        out["train_y"] = to_labels(d.train);
        out["val_x"] = to_matrix(d.val, d.num_features);
        out["val_y"] = to_labels(d.val);
        out["num_classes"] = d.num_classes;
        return out;
      },
      py::arg("task"), py::arg("seed") = 0, py::arg("root") = py::none());

  m.def("default_config", [](const std::string& task) { return qpgp::default_config(qpgp::parse_task(task)).dump(); },
        py::arg("task"), "Default experiment config as JSON text.");

  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        const auto cfg = qpgp::ExperimentConfig::from_json(json::parse(config_json));
        std::vector<qpgp::RunRecord> records;
        {
          py::gil_scoped_release release;
          records = qpgp::run_experiment(cfg);
        }
        json out = json::array();
        for (const auto& r : records) {
          json s = qpgp::record_summary(r);
          s["trace"] = qpgp::trace_to_string(r.result.trace);
          s["params"] = r.result.params;
          out.push_back(std::move(s));
        }
        return out.dump();
      },
      py::arg("config_json"), "Runs every seed of a JSON config; returns JSON text with one summary per seed.");

  m.def(
      "scaling_bench",
      [](const std::vector<std::size_t>& qubits, std::size_t repetitions) {
        py::list out;
        for (const auto& r : qpgp::scaling_bench(qubits, repetitions)) {
          py::dict d;
          d["qubits"] = r.qubits;
          d["mean_seconds"] = r.mean_seconds;
          d["min_seconds"] = r.min_seconds;
          d["memory_bytes"] = r.memory_bytes;
          d["skipped"] = r.skipped;
          out.append(d);
        }
        return out;
      },
      py::arg("qubits"), py::arg("repetitions") = 50);
}
