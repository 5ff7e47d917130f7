#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qpgp/bench.hpp"

using nlohmann::json;

namespace {

struct ConfigArgs {
  std::string config_path;
  std::string task;
  std::string setting;
  std::vector<std::string> overrides;
  std::vector<std::uint64_t> seeds;
  std::optional<std::size_t> steps;
  std::string out;
  std::string data_root;
};

void add_config_options(CLI::App* cmd, ConfigArgs& a) {
  cmd->add_option("-c,--config", a.config_path, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("-t,--task", a.task, "task used when no config is given (mnist2, mnist4, fashion2, fashion4, vowel4)");
  cmd->add_option("--setting", a.setting, "classical-train, qc-train or qc-train-pgp");
  cmd->add_option("-s,--set", a.overrides, "override a config key, e.g. --set pruning.ratio=0.7")->take_all();
  cmd->add_option("--seed", a.seeds, "seeds to run (replaces the config list)");
  cmd->add_option("--steps", a.steps, "total training steps");
  cmd->add_option("-o,--out", a.out, "output directory");
  cmd->add_option("--data-root", a.data_root, "dataset root (default: $QPGP_DATA_ROOT)");
}

json resolve_config(const ConfigArgs& a) {
  json j;
  if (!a.config_path.empty()) {
    std::ifstream in(a.config_path);
    j = json::parse(in);
  } else if (!a.task.empty()) {
    j = qpgp::default_config(qpgp::parse_task(a.task));
  } else {
    throw std::invalid_argument("give --config or --task");
  }
  if (!a.setting.empty()) j["setting"] = a.setting;
  for (const std::string& o : a.overrides) qpgp::apply_override(j, o);
  if (!a.seeds.empty()) {
    j.erase("seed");
    j["seeds"] = a.seeds;
  }
  if (a.steps) j["total_steps"] = *a.steps;
  if (!a.out.empty()) j["output_dir"] = a.out;
  return j;
}

void apply_data_root(const std::string& root) {
  if (!root.empty()) setenv("QPGP_DATA_ROOT", root.c_str(), 1);
}

int cmd_train(const ConfigArgs& a) {
  apply_data_root(a.data_root);
  const auto cfg = qpgp::ExperimentConfig::from_json(resolve_config(a));
  std::cerr << "config " << cfg.hash() << ", task " << qpgp::task_name(cfg.task) << ", data root "
            << qpgp::data_root().string() << '\n';
  const auto records = qpgp::run_experiment(cfg);
  std::printf("seed\tsteps\tcircuit_runs\tskipped\tval_acc\tval_acc_noise_free\ttrain_acc\tseconds\n");
  for (const auto& r : records) {
    const auto& t = r.result;
    std::printf("%llu\t%zu\t%zu\t%.4f\t%.4f\t%s\t%.4f\t%.2f\n", static_cast<unsigned long long>(r.seed), t.steps,
                t.circuit_runs, t.skipped_fraction(), t.final_val_accuracy,
                t.final_val_accuracy_noise_free ? std::to_string(*t.final_val_accuracy_noise_free).c_str() : "NA",
                t.final_train_accuracy, r.wall_clock_seconds);
  }
  if (!cfg.output_dir.empty()) std::cerr << "wrote " << cfg.output_dir.string() << '\n';
  return 0;
}

qpgp::Sweep parse_sweep(const std::string& text) {
  const std::size_t eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw std::invalid_argument("sweep must look like key=v1,v2: " + text);
  qpgp::Sweep s;
  s.key = text.substr(0, eq);
  std::stringstream ss(text.substr(eq + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    json v = json::parse(item, nullptr, false);
    s.values.push_back(v.is_discarded() ? json(item) : v);
  }
  return s;
}

int cmd_ablate(const ConfigArgs& a, const std::vector<std::string>& sweep_args) {
  apply_data_root(a.data_root);
  json base = resolve_config(a);
  std::vector<qpgp::Sweep> sweeps;
  for (const auto& s : sweep_args) sweeps.push_back(parse_sweep(s));
  const auto rows = qpgp::ablation_suite(base, sweeps);
  qpgp::write_ablation_table(std::cout, rows);
  if (!a.out.empty()) {
    std::filesystem::create_directories(a.out);
    std::ofstream f(std::filesystem::path(a.out) / "ablation.tsv");
    qpgp::write_ablation_table(f, rows);
  }
  return 0;
}

int cmd_scale(const std::vector<std::size_t>& qubits, std::size_t reps, double budget_gib, const std::string& out) {
  const auto rows =
      qpgp::scaling_bench(qubits, reps, static_cast<std::size_t>(budget_gib * static_cast<double>(1ULL << 30)));
  std::ostringstream table;
  table << "qubits\trepetitions\tmean_seconds\tmin_seconds\tmemory_bytes\tstatus\n";
  for (const auto& r : rows) {
    if (r.skipped) std::cerr << "skipping n=" << r.qubits << ": statevector exceeds the memory budget\n";
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%zu\t%zu\t%.9f\t%.9f\t%zu\t%s\n", r.qubits, r.repetitions, r.mean_seconds,
                  r.min_seconds, r.memory_bytes, r.skipped ? "skipped" : "ok");
    table << buf;
  }
  std::cout << table.str();
  if (!out.empty()) std::ofstream(out) << table.str();
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& data_root) {
  apply_data_root(data_root);
  const auto r = qpgp::evaluate_checkpoint(std::filesystem::path(checkpoint));
  std::printf("val_accuracy\t%.6f\n", r.val_accuracy);
  if (r.val_accuracy_noise_free) std::printf("val_accuracy_noise_free\t%.6f\n", *r.val_accuracy_noise_free);
  std::printf("train_accuracy\t%.6f\n", r.train_accuracy);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational quantum classifier training with probabilistic gradient pruning"};
  app.require_subcommand(1);

  ConfigArgs train_args;
  auto* train = app.add_subcommand("train", "train a task from a config");
  add_config_options(train, train_args);

  ConfigArgs ablate_args;
  std::vector<std::string> sweeps;
  auto* ablate = app.add_subcommand("ablate", "cartesian sweep over config keys");
  add_config_options(ablate, ablate_args);
  ablate->add_option("--sweep", sweeps, "key=v1,v2,... (keys: r, w_a, w_p, optimizer, mode, setting or a config path)")
      ->required();

  std::vector<std::size_t> qubits = {4, 6, 8, 10, 12, 14, 16, 18};
  std::size_t reps = 50;
  double budget_gib = 4.0;
  std::string scale_out;
  auto* scale = app.add_subcommand("scale", "time the 16-rotation + 32-RZZ circuit across qubit counts");
  scale->add_option("-n,--qubits", qubits, "qubit counts")->delimiter(',');
  scale->add_option("-r,--reps", reps, "timed executions per qubit count");
  scale->add_option("--memory-gib", budget_gib, "statevector memory budget");
  scale->add_option("-o,--out", scale_out, "write the table to this file");

  std::string checkpoint;
  std::string eval_root;
  auto* eval = app.add_subcommand("eval", "recompute accuracy from a checkpoint");
  eval->add_option("checkpoint", checkpoint, "checkpoint-seed<N>.json")->required()->check(CLI::ExistingFile);
  eval->add_option("--data-root", eval_root, "dataset root (default: $QPGP_DATA_ROOT)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(train_args);
    if (*ablate) return cmd_ablate(ablate_args, sweeps);
    if (*scale) return cmd_scale(qubits, reps, budget_gib, scale_out);
    if (*eval) return cmd_eval(checkpoint, eval_root);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
