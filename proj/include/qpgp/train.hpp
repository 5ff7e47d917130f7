#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qpgp/data.hpp"
#include "qpgp/models.hpp"
#include "qpgp/noise.hpp"
#include "qpgp/optim.hpp"
#include "qpgp/pgp.hpp"

namespace qpgp {

struct TrainConfig {
  PruningConfig pruning;
  OptimizerOptions optimizer;
  double lr_start = 0.3;
  double lr_end = 0.03;
  std::size_t batch_size = 32;
  std::size_t total_steps = 150;
  /// Stop before the first step that would push cumulative circuit runs past
  /// this budget; 0 disables the budget.
  std::size_t circuit_budget = 0;
  /// Validate every this many steps (and always after the last step); 0 only at the end.
  std::size_t eval_every = 1;
  /// Also report noise-free validation accuracy when training is noisy.
  bool eval_noise_free = true;
  std::uint64_t seed = 0;
  std::optional<NoiseModel> noise;  ///< absent or disabled: exact expectations

  void validate() const;
};

struct MetricsRow {
  std::size_t step = 0;   ///< 1-based
  std::size_t stage = 0;  ///< 1-based
  std::string phase;      ///< "accumulating", "pruning", or "full" when pruning is inactive
  double loss = 0.0;      ///< mean mini-batch loss from the forward executions
  std::optional<double> val_accuracy;
  std::optional<double> val_accuracy_noise_free;
  std::size_t circuit_runs = 0;  ///< cumulative
  std::size_t active_param_count = 0;
  double lr = 0.0;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

struct TrainResult {
  std::vector<double> initial_params;
  std::vector<double> params;
  std::vector<MetricsRow> trace;
  std::size_t steps = 0;
  std::size_t circuit_runs = 0;
  std::size_t param_evaluations = 0;           ///< evaluated (parameter, sample) gradients
  std::size_t unpruned_param_evaluations = 0;  ///< same count had every step been full
  double final_val_accuracy = 0.0;
  std::optional<double> final_val_accuracy_noise_free;
  double final_train_accuracy = 0.0;

  double skipped_fraction() const;
};

/// Argmax of the head logits (ties to the lower class).
std::size_t predict(const Model& model, std::span<const double> params, std::span<const double> features,
                    const NoiseModel* noise = nullptr, std::uint64_t stream = 0);

/// Fraction of `samples` predicted correctly. Noisy evaluations key sample i
/// by stream_key(stream, {i}).
double evaluate_accuracy(const Model& model, std::span<const double> params, const std::vector<Sample>& samples,
                         const NoiseModel* noise = nullptr, std::uint64_t stream = 0);

/// Stream key of the noisy validation pass recorded after `step`.
std::uint64_t validation_stream(std::uint64_t seed, std::size_t step);

/// Step count that fits within config.circuit_budget (capped at total_steps).
/// Exact when every parameter sits in the same number of gates.
std::size_t planned_steps(const TrainConfig& config, const Circuit& circuit);

/// Staged training with magnitude accumulation and probabilistic gradient
/// pruning. Parameters start from init_params(n, config.seed) unless `init`
/// is given.
TrainResult train(const Model& model, const Dataset& data, const TrainConfig& config,
                  std::optional<std::vector<double>> init = std::nullopt);

}  // namespace qpgp
