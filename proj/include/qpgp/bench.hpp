#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qpgp/data.hpp"
#include "qpgp/models.hpp"
#include "qpgp/train.hpp"

namespace qpgp {

/// Everything needed to reproduce one experiment, parsed from JSON:
///
///   {
///     "task": "mnist2",
///     "setting": "classical-train" | "qc-train" | "qc-train-pgp",   (optional)
///     "model": {"repetitions": 1, "encoder_scale": 3.14159},          (optional overrides)
///     "noise": "none" | "default" | {"p1": .., "p2": .., "readout_flip": ..,
///                                     "shots": .., "trajectories": .., "sample_shots": true},
///     "pruning": {"mode": "probabilistic", "accumulation_window": 1,
///                 "pruning_window": 2, "ratio": 0.5},
///     "optimizer": {"kind": "adam", "lr_start": 0.3, "lr_end": 0.03},
///     "batch_size": 32, "total_steps": 150, "circuit_budget": 0, "eval_every": 1,
///     "seeds": [0, 1, 2], "data_seed": 0, "output_dir": "runs/mnist2"
///   }
///
/// "setting" selects one of three presets: noise-free without pruning,
/// noisy without pruning, or noisy with pruning. It overrides "noise"
/// and "pruning.mode" (to "off" for the first two).
struct ExperimentConfig {
  TaskName task = TaskName::Mnist2;
  std::optional<std::size_t> repetitions;
  std::optional<double> encoder_scale;
  TrainConfig train;  ///< seed field is replaced per run
  std::vector<std::uint64_t> seeds = {0};
  std::uint64_t data_seed = 0;
  std::filesystem::path output_dir;
  nlohmann::json source;  ///< effective configuration after overrides

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_file(const std::filesystem::path& path);
  /// FNV-1a 64 of the canonical (sorted-key) dump of `source`, hex-encoded.
  std::string hash() const;

  ModelSpec model_spec() const;
  DatasetSpec dataset_spec() const;
};

/// Applies "dotted.key=value" to a JSON object; the value is parsed as JSON
/// when possible and kept as a string otherwise.
void apply_override(nlohmann::json& config, const std::string& assignment);

/// Default experiment configuration for a task.
nlohmann::json default_config(TaskName task);

struct RunRecord {
  std::uint64_t seed = 0;
  std::string config_hash;
  TrainResult result;
  double wall_clock_seconds = 0.0;
};

/// Line-delimited JSON, one object per step. No wall-clock fields, so the
/// bytes depend only on configuration and seed.
void write_trace(std::ostream& out, const std::vector<MetricsRow>& trace);
std::string trace_to_string(const std::vector<MetricsRow>& trace);

nlohmann::json record_summary(const RunRecord& record);

/// Trains once per seed. When `write_outputs` and config.output_dir is set,
/// writes trace-seed<N>.jsonl, checkpoint-seed<N>.json, summary.json and
/// summary.tsv there.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config, const Dataset& data,
                                      bool write_outputs = true);
std::vector<RunRecord> run_experiment(const ExperimentConfig& config, bool write_outputs = true);

/// Recomputes validation accuracy from a checkpoint written by run_experiment.
struct EvalResult {
  double val_accuracy = 0.0;
  std::optional<double> val_accuracy_noise_free;
  double train_accuracy = 0.0;
};
EvalResult evaluate_checkpoint(const nlohmann::json& checkpoint, const Dataset& data);
EvalResult evaluate_checkpoint(const std::filesystem::path& path);

struct ScalingRow {
  std::size_t qubits = 0;
  std::size_t repetitions = 0;
  double mean_seconds = 0.0;  ///< per circuit execution
  double min_seconds = 0.0;
  std::size_t memory_bytes = 0;  ///< 2^n * sizeof(complex<double>)
  bool skipped = false;
};

/// Synthetic scaling circuit: 16 single-qubit rotations followed by 32 ring RZZ gates.
Circuit scaling_circuit(std::size_t qubits);

/// Times `repetitions` noise-free executions per qubit count. Counts whose
/// statevector exceeds `memory_budget_bytes` are reported as skipped.
std::vector<ScalingRow> scaling_bench(const std::vector<std::size_t>& qubits, std::size_t repetitions = 50,
                                      std::size_t memory_budget_bytes = std::size_t{1} << 32);

struct AblationRow {
  nlohmann::json values;  ///< sweep key -> value for this cell
  std::size_t seeds = 0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  std::optional<double> mean_accuracy_noise_free;
  double mean_circuit_runs = 0.0;
};

/// Cartesian sweep. Keys are config paths ("pruning.ratio") or the aliases
/// r, w_a, w_p, optimizer, mode, setting.
struct Sweep {
  std::string key;
  std::vector<nlohmann::json> values;
};
std::vector<AblationRow> ablation_suite(const nlohmann::json& base, const std::vector<Sweep>& sweeps,
                                        const Dataset* data = nullptr);
std::string sweep_path(const std::string& key);
void write_ablation_table(std::ostream& out, const std::vector<AblationRow>& rows);

}  // namespace qpgp
