#include "qpgp/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "qpgp/grad.hpp"
#include "qpgp/rng.hpp"

namespace qpgp {

namespace {

constexpr std::uint64_t kBatchTag = 0xBA7C4ULL;
constexpr std::uint64_t kGradTag = 0x6EADULL;
constexpr std::uint64_t kSubsetTag = 0x5B5E7ULL;
constexpr std::uint64_t kEvalTag = 0xE7A1ULL;

std::vector<std::size_t> sample_batch(std::size_t pool, std::size_t batch, std::uint64_t key) {
  std::vector<std::size_t> idx(pool);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (batch >= pool) return idx;
  Rng rng(key);
  for (std::size_t i = 0; i < batch; ++i) std::swap(idx[i], idx[i + rng.below(pool - i)]);
  idx.resize(batch);
  return idx;
}

std::size_t occurrence_total(const Circuit& circuit, std::span<const std::size_t> subset) {
  std::size_t total = 0;
  for (std::size_t i : subset) total += circuit.occurrences(i).size();
  return total;
}

const NoiseModel* active_noise(const TrainConfig& config) {
  return config.noise && config.noise->enabled ? &*config.noise : nullptr;
}

}  // namespace

void TrainConfig::validate() const {
  pruning.validate();
  if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
  if (total_steps == 0) throw std::invalid_argument("total steps must be >= 1");
  if (!(lr_start > 0.0) || !(lr_end > 0.0)) throw std::invalid_argument("learning rates must be positive");
  if (noise) noise->validate();
}

double TrainResult::skipped_fraction() const {
  if (unpruned_param_evaluations == 0) return 0.0;
  return 1.0 - static_cast<double>(param_evaluations) / static_cast<double>(unpruned_param_evaluations);
}

std::size_t predict(const Model& model, std::span<const double> params, std::span<const double> features,
                    const NoiseModel* noise, std::uint64_t stream) {
  const std::vector<double> angles = model.encode(features);
  RunOptions opts;
  opts.noise = noise;
  opts.stream = stream;
  const ExpectationVector e = run_circuit(model.circuit, params, angles, opts);
  const std::vector<double> logits = model.head.multiply(e);
  return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

double evaluate_accuracy(const Model& model, std::span<const double> params, const std::vector<Sample>& samples,
                         const NoiseModel* noise, std::uint64_t stream) {
  if (samples.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < samples.size(); ++i)
    correct += predict(model, params, samples[i].features, noise, stream_key(stream, {i})) == samples[i].label;
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

std::uint64_t validation_stream(std::uint64_t seed, std::size_t step) {
  return stream_key(seed, {kEvalTag, step});
}

std::size_t planned_steps(const TrainConfig& config, const Circuit& circuit) {
  if (config.circuit_budget == 0) return config.total_steps;
  const std::size_t n = circuit.num_params;
  const double occ_per_param =
      n == 0 ? 0.0 : static_cast<double>(circuit.parametric_gate_count()) / static_cast<double>(n);
  const std::size_t batch = config.batch_size;
  const std::size_t stage_len = config.pruning.stage_length();
  std::size_t runs = 0;
  for (std::size_t t = 0; t < config.total_steps; ++t) {
    const bool prune = config.pruning.active() && t % stage_len >= config.pruning.accumulation_window;
    const std::size_t k = prune ? config.pruning.keep_count(n) : n;
    const auto occ = static_cast<std::size_t>(std::llround(static_cast<double>(k) * occ_per_param));
    const std::size_t cost = batch * (1 + 2 * occ);
    if (runs + cost > config.circuit_budget) return t;
    runs += cost;
  }
  return config.total_steps;
}

TrainResult train(const Model& model, const Dataset& data, const TrainConfig& config,
                  std::optional<std::vector<double>> init) {
  config.validate();
  if (data.train.empty()) throw std::invalid_argument("training set is empty");
  const Circuit& circuit = model.circuit;
  const std::size_t n = circuit.num_params;
  const NoiseModel* noise = active_noise(config);
  const Oracle oracle = make_oracle(circuit, noise ? std::optional<NoiseModel>(*noise) : std::nullopt);

  TrainResult result;
  result.params = init ? std::move(*init) : init_params(n, config.seed);
  if (result.params.size() != n) throw std::invalid_argument("initial parameter count mismatch");
  result.initial_params = result.params;

  // Encoded training features are reused every step.
  std::vector<std::vector<double>> angles;
  angles.reserve(data.train.size());
  for (const Sample& s : data.train) angles.push_back(model.encode(s.features));

  const PruningConfig& pruning = config.pruning;
  const std::size_t stage_len = pruning.stage_length();
  const std::size_t horizon = std::max<std::size_t>(planned_steps(config, circuit), 1);
  const std::size_t batch = std::min(config.batch_size, data.train.size());

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  PruningState state(n);
  Optimizer optimizer(config.optimizer, n);

  for (std::size_t t = 0; t < config.total_steps; ++t) {
    const std::size_t pos = t % stage_len;
    if (pos == 0) state.start_stage();
    const bool prune = pruning.active() && pos >= pruning.accumulation_window;
    if (prune && pos == pruning.accumulation_window) state.enter_pruning();

    std::vector<std::size_t> subset = all;
    if (prune) {
      Rng rng(stream_key(config.seed, {kSubsetTag, t}));
      subset = sample_subset(state.magnitude(), pruning.ratio, pruning.mode, rng);
    }
    const std::size_t cost = batch * (1 + 2 * occurrence_total(circuit, subset));
    if (config.circuit_budget != 0 && result.circuit_runs + cost > config.circuit_budget) break;

    const std::vector<std::size_t> members =
        sample_batch(data.train.size(), batch, stream_key(config.seed, {kBatchTag, t}));
    std::vector<double> grad(n, 0.0);
    double loss = 0.0;
    for (std::size_t j = 0; j < members.size(); ++j) {
      const Sample& s = data.train[members[j]];
      const GradientReport report =
          evaluate_sample(oracle, circuit, model.head, result.params, angles[members[j]], s.label,
                          std::span<const std::size_t>(subset), stream_key(config.seed, {kGradTag, t, j}));
      for (std::size_t i = 0; i < n; ++i) grad[i] += report.grad[i];
      loss += report.loss;
      result.circuit_runs += report.circuit_runs;
    }
    const auto b = static_cast<double>(members.size());
    for (double& g : grad) g /= b;
    loss /= b;

    // First step at lr_start, last planned step at lr_end.
    const std::size_t span = horizon - 1;
    const double lr = step_schedule(std::min(t, span), span, config.lr_start, config.lr_end);
    optimizer.step(result.params, grad, subset, lr);
    if (state.phase() == Phase::Accumulating) state.accumulate(grad);

    result.param_evaluations += members.size() * subset.size();
    result.unpruned_param_evaluations += members.size() * n;
    ++result.steps;

    MetricsRow row;
    row.step = t + 1;
    row.stage = t / stage_len + 1;
    row.phase = pruning.active() ? std::string(phase_name(state.phase())) : "full";
    row.loss = loss;
    row.circuit_runs = result.circuit_runs;
    row.active_param_count = subset.size();
    row.lr = lr;
    const bool last = t + 1 == config.total_steps;
    if (last || (config.eval_every != 0 && (t + 1) % config.eval_every == 0)) {
      row.val_accuracy = evaluate_accuracy(model, result.params, data.val, noise,
                                           validation_stream(config.seed, t + 1));
      if (noise && config.eval_noise_free)
        row.val_accuracy_noise_free = evaluate_accuracy(model, result.params, data.val);
    }
    result.trace.push_back(std::move(row));
  }

  // Budget stops can end before the scheduled last step; make sure the final
  // row carries an accuracy.
  if (!result.trace.empty() && !result.trace.back().val_accuracy) {
    MetricsRow& row = result.trace.back();
    row.val_accuracy = evaluate_accuracy(model, result.params, data.val, noise,
                                         validation_stream(config.seed, row.step));
    if (noise && config.eval_noise_free)
      row.val_accuracy_noise_free = evaluate_accuracy(model, result.params, data.val);
  }
  if (!result.trace.empty()) {
    result.final_val_accuracy = *result.trace.back().val_accuracy;
    result.final_val_accuracy_noise_free = result.trace.back().val_accuracy_noise_free;
  } else {
    result.final_val_accuracy =
        evaluate_accuracy(model, result.params, data.val, noise, validation_stream(config.seed, 0));
  }
  result.final_train_accuracy = evaluate_accuracy(model, result.params, data.train);
  return result;
}

}  // namespace qpgp
