#include "qpgp/bench.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "qpgp/rng.hpp"

namespace qpgp {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw std::invalid_argument("unknown config key '" + where + key + "'");
}

NoiseModel parse_noise(const json& j) {
  if (j.is_null()) return NoiseModel::noiseless();
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    if (name == "none") return NoiseModel::noiseless();
    if (name == "default") return NoiseModel::default_preset();
    throw std::invalid_argument("unknown noise preset '" + name + "'");
  }
  reject_unknown(j, {"p1", "p2", "readout_flip", "shots", "trajectories", "sample_shots", "enabled"}, "noise.");
  NoiseModel m = NoiseModel::default_preset();
  m.p1 = j.value("p1", m.p1);
  m.p2 = j.value("p2", m.p2);
  m.readout_flip = j.value("readout_flip", m.readout_flip);
  m.shots = j.value("shots", m.shots);
  m.trajectories = j.value("trajectories", m.trajectories);
  m.sample_shots = j.value("sample_shots", m.sample_shots);
  m.enabled = j.value("enabled", true);
  m.validate();
  return m;
}

nlohmann::ordered_json trace_row(const MetricsRow& r) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["stage"] = r.stage;
  j["phase"] = r.phase;
  j["loss"] = r.loss;
  if (r.val_accuracy)
    j["val_accuracy"] = *r.val_accuracy;
  else
    j["val_accuracy"] = nullptr;
  if (r.val_accuracy_noise_free) j["val_accuracy_noise_free"] = *r.val_accuracy_noise_free;
  j["circuit_runs"] = r.circuit_runs;
  j["active_param_count"] = r.active_param_count;
  j["lr"] = r.lr;
  return j;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

json set_path(json base, const std::string& path, const json& value) {
  json* node = &base;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) throw std::invalid_argument("bad config path '" + path + "'");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    if (!node->contains(key) || !(*node)[key].is_object()) (*node)[key] = json::object();
    node = &(*node)[key];
    start = dot + 1;
  }
  return base;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("experiment config must be a JSON object");
  reject_unknown(j,
                 {"task", "setting", "model", "noise", "pruning", "optimizer", "batch_size", "total_steps",
                  "circuit_budget", "eval_every", "eval_noise_free", "seeds", "seed", "data_seed", "output_dir"},
                 "");
  ExperimentConfig c;
  c.source = j;
  if (!j.contains("task")) throw std::invalid_argument("config needs a 'task'");
  c.task = parse_task(j.at("task").get<std::string>());

  if (j.contains("model")) {
    const json& m = j.at("model");
    reject_unknown(m, {"repetitions", "encoder_scale"}, "model.");
    if (m.contains("repetitions") && !m["repetitions"].is_null()) c.repetitions = m["repetitions"].get<std::size_t>();
    if (m.contains("encoder_scale") && !m["encoder_scale"].is_null())
      c.encoder_scale = m["encoder_scale"].get<double>();
  }

  TrainConfig& t = c.train;
  t.noise = parse_noise(j.value("noise", json("none")));
  if (!t.noise->enabled) t.noise.reset();

  if (j.contains("pruning")) {
    const json& p = j.at("pruning");
    reject_unknown(p, {"mode", "accumulation_window", "pruning_window", "ratio"}, "pruning.");
    t.pruning.mode = parse_pruning_mode(p.value("mode", std::string("probabilistic")));
    t.pruning.accumulation_window = p.value("accumulation_window", t.pruning.accumulation_window);
    t.pruning.pruning_window = p.value("pruning_window", t.pruning.pruning_window);
    t.pruning.ratio = p.value("ratio", t.pruning.ratio);
  }
  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    reject_unknown(o, {"kind", "lr_start", "lr_end", "momentum"}, "optimizer.");
    t.optimizer.kind = parse_optimizer(o.value("kind", std::string("adam")));
    t.optimizer.momentum = o.value("momentum", t.optimizer.momentum);
    t.lr_start = o.value("lr_start", t.lr_start);
    t.lr_end = o.value("lr_end", t.lr_end);
  }
  t.batch_size = j.value("batch_size", t.batch_size);
  t.total_steps = j.value("total_steps", t.total_steps);
  t.circuit_budget = j.value("circuit_budget", t.circuit_budget);
  t.eval_every = j.value("eval_every", t.eval_every);
  t.eval_noise_free = j.value("eval_noise_free", t.eval_noise_free);

  if (j.contains("setting")) {
    const std::string setting = j.at("setting").get<std::string>();
    if (setting == "classical-train") {
      t.noise.reset();
      t.pruning.mode = PruningMode::Off;
    } else if (setting == "qc-train" || setting == "qc-train-pgp") {
      if (!t.noise) t.noise = NoiseModel::default_preset();
      if (setting == "qc-train") t.pruning.mode = PruningMode::Off;
      else if (t.pruning.mode == PruningMode::Off) t.pruning.mode = PruningMode::Probabilistic;
    } else {
      throw std::invalid_argument("unknown setting '" + setting + "'");
    }
  }

  if (j.contains("seeds")) {
    c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  } else if (j.contains("seed")) {
    c.seeds = {j.at("seed").get<std::uint64_t>()};
  }
  if (c.seeds.empty()) throw std::invalid_argument("config needs at least one seed");
  c.data_seed = j.value("data_seed", c.data_seed);
  c.output_dir = j.value("output_dir", std::string());
  t.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw std::runtime_error("config " + path.string() + ": " + e.what());
  }
}

std::string ExperimentConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(source.dump())));
  return buf;
}

ModelSpec ExperimentConfig::model_spec() const { return model_spec_for(task, repetitions, encoder_scale); }

DatasetSpec ExperimentConfig::dataset_spec() const { return dataset_spec_for(task, data_seed); }

void apply_override(json& config, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw std::invalid_argument("override must look like key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  config = set_path(std::move(config), sweep_path(key), value);
}

json default_config(TaskName task) {
  json j;
  j["task"] = std::string(task_name(task));
  j["noise"] = "none";
  j["pruning"] = {{"mode", "off"},
                  {"accumulation_window", 1},
                  {"pruning_window", 2},
                  {"ratio", task == TaskName::Fashion4 ? 0.7 : 0.5}};
  j["optimizer"] = {{"kind", "adam"}, {"lr_start", 0.3}, {"lr_end", 0.03}};
  j["batch_size"] = 32;
  j["total_steps"] = 150;
  j["eval_every"] = 10;
  j["seeds"] = {0};
  j["data_seed"] = 0;
  return j;
}

void write_trace(std::ostream& out, const std::vector<MetricsRow>& trace) {
  for (const MetricsRow& r : trace) out << trace_row(r).dump() << '\n';
}

std::string trace_to_string(const std::vector<MetricsRow>& trace) {
  std::ostringstream ss;
  write_trace(ss, trace);
  return ss.str();
}

json record_summary(const RunRecord& record) {
  const TrainResult& r = record.result;
  json j;
  j["seed"] = record.seed;
  j["config_hash"] = record.config_hash;
  j["steps"] = r.steps;
  j["circuit_runs"] = r.circuit_runs;
  j["param_evaluations"] = r.param_evaluations;
  j["unpruned_param_evaluations"] = r.unpruned_param_evaluations;
  j["skipped_fraction"] = r.skipped_fraction();
  j["final_val_accuracy"] = r.final_val_accuracy;
  j["final_val_accuracy_noise_free"] =
      r.final_val_accuracy_noise_free ? json(*r.final_val_accuracy_noise_free) : json(nullptr);
  j["final_train_accuracy"] = r.final_train_accuracy;
  j["wall_clock_seconds"] = record.wall_clock_seconds;
  return j;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config, const Dataset& data, bool write_outputs) {
  const Model model(config.model_spec());
  if (data.num_features != model.circuit.num_features)
    throw std::invalid_argument("dataset width does not match the model encoder");
  const bool write = write_outputs && !config.output_dir.empty();
  if (write) std::filesystem::create_directories(config.output_dir);

  std::vector<RunRecord> records;
  for (std::uint64_t seed : config.seeds) {
    TrainConfig tc = config.train;
    tc.seed = seed;
    const auto start = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.seed = seed;
    rec.config_hash = config.hash();
    rec.result = train(model, data, tc);
    rec.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (write) {
      const std::string tag = "seed" + std::to_string(seed);
      std::ofstream trace(config.output_dir / ("trace-" + tag + ".jsonl"), std::ios::binary);
      write_trace(trace, rec.result.trace);
      json ckpt;
      ckpt["config"] = config.source;
      ckpt["seed"] = seed;
      ckpt["steps"] = rec.result.steps;
      ckpt["params"] = rec.result.params;
      ckpt["final_val_accuracy"] = rec.result.final_val_accuracy;
      std::ofstream(config.output_dir / ("checkpoint-" + tag + ".json")) << ckpt.dump(2) << '\n';
    }
    records.push_back(std::move(rec));
  }

  if (write) {
    json summary = json::array();
    for (const RunRecord& r : records) summary.push_back(record_summary(r));
    std::ofstream(config.output_dir / "summary.json") << summary.dump(2) << '\n';
    std::ofstream tsv(config.output_dir / "summary.tsv");
    tsv << "seed\tconfig_hash\tsteps\tcircuit_runs\tskipped_fraction\tfinal_val_accuracy\t"
           "final_val_accuracy_noise_free\tfinal_train_accuracy\twall_clock_seconds\n";
    for (const RunRecord& r : records) {
      const TrainResult& t = r.result;
      tsv << r.seed << '\t' << r.config_hash << '\t' << t.steps << '\t' << t.circuit_runs << '\t'
          << fmt_double(t.skipped_fraction()) << '\t' << fmt_double(t.final_val_accuracy) << '\t'
          << (t.final_val_accuracy_noise_free ? fmt_double(*t.final_val_accuracy_noise_free) : "NA") << '\t'
          << fmt_double(t.final_train_accuracy) << '\t' << fmt_double(r.wall_clock_seconds) << '\n';
    }
  }
  return records;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config, bool write_outputs) {
  return run_experiment(config, load_task_dataset(config.dataset_spec()), write_outputs);
}

EvalResult evaluate_checkpoint(const json& checkpoint, const Dataset& data) {
  const ExperimentConfig config = ExperimentConfig::from_json(checkpoint.at("config"));
  const Model model(config.model_spec());
  const auto params = checkpoint.at("params").get<std::vector<double>>();
  if (params.size() != model.circuit.num_params) throw std::invalid_argument("checkpoint parameter count mismatch");
  const auto seed = checkpoint.at("seed").get<std::uint64_t>();
  const auto steps = checkpoint.at("steps").get<std::size_t>();
  const NoiseModel* noise = config.train.noise ? &*config.train.noise : nullptr;
  EvalResult r;
  r.val_accuracy = evaluate_accuracy(model, params, data.val, noise, validation_stream(seed, steps));
  if (noise) r.val_accuracy_noise_free = evaluate_accuracy(model, params, data.val);
  r.train_accuracy = evaluate_accuracy(model, params, data.train);
  return r;
}

EvalResult evaluate_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  const json ckpt = json::parse(in);
  const ExperimentConfig config = ExperimentConfig::from_json(ckpt.at("config"));
  return evaluate_checkpoint(ckpt, load_task_dataset(config.dataset_spec()));
}

Circuit scaling_circuit(std::size_t qubits) {
  if (qubits < 2) throw std::invalid_argument("scaling circuit needs at least two qubits");
  constexpr std::array<GateKind, 3> kRotations = {GateKind::RX, GateKind::RY, GateKind::RZ};
  Circuit c;
  c.num_qubits = qubits;
  std::size_t p = 0;
  for (std::size_t i = 0; i < 16; ++i) c.gates.push_back(Gate::single(kRotations[i % 3], i % qubits, Param{p++}));
  for (std::size_t i = 0; i < 32; ++i)
    c.gates.push_back(Gate::pair(GateKind::RZZ, i % qubits, (i + 1) % qubits, Param{p++}));
  c.num_params = p;
  c.validate();
  return c;
}

std::vector<ScalingRow> scaling_bench(const std::vector<std::size_t>& qubits, std::size_t repetitions,
                                      std::size_t memory_budget_bytes) {
  if (repetitions == 0) throw std::invalid_argument("repetitions must be >= 1");
  std::vector<ScalingRow> rows;
  for (std::size_t n : qubits) {
    ScalingRow row;
    row.qubits = n;
    row.repetitions = repetitions;
    row.memory_bytes = n >= 63 ? ~std::size_t{0} : (std::size_t{1} << n) * sizeof(Complex);
    if (n > kMaxQubits || row.memory_bytes > memory_budget_bytes) {
      row.skipped = true;
      rows.push_back(row);
      continue;
    }
    const Circuit circuit = scaling_circuit(n);
    Rng rng(stream_key(n, {0x5CA1EULL}));
    std::vector<double> params(circuit.num_params);
    for (double& v : params) v = 2.0 * std::numbers::pi * rng.uniform();
    volatile double sink = run_circuit(circuit, params, {})[0];  // warm-up
    double total = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < repetitions; ++r) {
      const auto start = std::chrono::steady_clock::now();
      sink = run_circuit(circuit, params, {})[0];
      const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      total += dt;
      best = std::min(best, dt);
    }
    (void)sink;
    row.mean_seconds = total / static_cast<double>(repetitions);
    row.min_seconds = best;
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_path(const std::string& key) {
  static const std::map<std::string, std::string> aliases = {{"r", "pruning.ratio"},
                                                             {"w_a", "pruning.accumulation_window"},
                                                             {"w_p", "pruning.pruning_window"},
                                                             {"optimizer", "optimizer.kind"},
                                                             {"mode", "pruning.mode"}};
  const auto it = aliases.find(key);
  return it == aliases.end() ? key : it->second;
}

std::vector<AblationRow> ablation_suite(const json& base, const std::vector<Sweep>& sweeps, const Dataset* data) {
  for (const Sweep& s : sweeps)
    if (s.values.empty()) throw std::invalid_argument("sweep '" + s.key + "' has no values");

  std::map<std::string, Dataset> datasets;
  auto dataset_for = [&](const ExperimentConfig& cfg) -> const Dataset& {
    if (data) return *data;
    const std::string key = std::string(task_name(cfg.task)) + "/" + std::to_string(cfg.data_seed);
    auto it = datasets.find(key);
    if (it == datasets.end()) it = datasets.emplace(key, load_task_dataset(cfg.dataset_spec())).first;
    return it->second;
  };

  std::vector<AblationRow> rows;
  std::vector<std::size_t> index(sweeps.size(), 0);
  while (true) {
    json cfg_json = base;
    AblationRow row;
    row.values = json::object();
    for (std::size_t s = 0; s < sweeps.size(); ++s) {
      const json& v = sweeps[s].values[index[s]];
      cfg_json = set_path(std::move(cfg_json), sweep_path(sweeps[s].key), v);
      row.values[sweeps[s].key] = v;
    }
    cfg_json.erase("output_dir");
    const ExperimentConfig cfg = ExperimentConfig::from_json(cfg_json);
    const std::vector<RunRecord> records = run_experiment(cfg, dataset_for(cfg), false);

    std::vector<double> acc, acc_nf;
    double runs = 0.0;
    for (const RunRecord& r : records) {
      acc.push_back(r.result.final_val_accuracy);
      if (r.result.final_val_accuracy_noise_free) acc_nf.push_back(*r.result.final_val_accuracy_noise_free);
      runs += static_cast<double>(r.result.circuit_runs);
    }
    row.seeds = acc.size();
    row.mean_accuracy = std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
    double var = 0.0;
    for (double a : acc) var += (a - row.mean_accuracy) * (a - row.mean_accuracy);
    row.std_accuracy = acc.size() > 1 ? std::sqrt(var / static_cast<double>(acc.size() - 1)) : 0.0;
    if (!acc_nf.empty())
      row.mean_accuracy_noise_free =
          std::accumulate(acc_nf.begin(), acc_nf.end(), 0.0) / static_cast<double>(acc_nf.size());
    row.mean_circuit_runs = runs / static_cast<double>(records.size());
    rows.push_back(std::move(row));

    std::size_t s = sweeps.size();
    while (s > 0) {
      --s;
      if (++index[s] < sweeps[s].values.size()) break;
      index[s] = 0;
      if (s == 0) return rows;
    }
    if (sweeps.empty()) return rows;
  }
}

void write_ablation_table(std::ostream& out, const std::vector<AblationRow>& rows) {
  if (rows.empty()) return;
  for (const auto& [key, _] : rows.front().values.items()) out << key << '\t';
  out << "seeds\tmean_accuracy\tstd_accuracy\tmean_accuracy_noise_free\tmean_circuit_runs\n";
  for (const AblationRow& r : rows) {
    for (const auto& [_, v] : r.values.items()) out << (v.is_string() ? v.get<std::string>() : v.dump()) << '\t';
    out << r.seeds << '\t' << fmt_double(r.mean_accuracy) << '\t' << fmt_double(r.std_accuracy) << '\t'
        << (r.mean_accuracy_noise_free ? fmt_double(*r.mean_accuracy_noise_free) : "NA") << '\t'
        << fmt_double(r.mean_circuit_runs) << '\n';
  }
}

}  // namespace qpgp
