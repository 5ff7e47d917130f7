#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "qpgp/rng.hpp"

namespace qpgp {

enum class PruningMode { Probabilistic, Deterministic, Off };

std::string_view pruning_mode_name(PruningMode mode);
PruningMode parse_pruning_mode(std::string_view name);

struct PruningConfig {
  std::size_t accumulation_window = 1;  ///< w_a
  std::size_t pruning_window = 2;       ///< w_p
  double ratio = 0.5;                   ///< r, fraction of parameters pruned per pruning step
  PruningMode mode = PruningMode::Probabilistic;

  void validate() const;
  /// Pruning has no effect when switched off or when nothing is pruned.
  bool active() const { return mode != PruningMode::Off && ratio > 0.0; }
  std::size_t stage_length() const { return accumulation_window + pruning_window; }
  /// Parameters kept per pruning step: max(1, round((1 - r) n)).
  std::size_t keep_count(std::size_t n) const;
  /// Steady-state fraction of parameter-gradient evaluations skipped:
  /// r * w_p / (w_a + w_p).
  double skipped_fraction() const;
};

enum class Phase { Accumulating, Pruning };

std::string_view phase_name(Phase phase);

/// Gradient-magnitude accumulator and stage bookkeeping.
class PruningState {
 public:
  explicit PruningState(std::size_t num_params) : magnitude_(num_params, 0.0) {}

  /// Resets the accumulator and enters the accumulation phase of the next stage.
  void start_stage();
  void enter_pruning();

  /// M += |grad|. Throws std::logic_error outside the accumulation phase.
  void accumulate(std::span<const double> grad);

  std::span<const double> magnitude() const { return magnitude_; }
  std::size_t stage() const { return stage_; }
  Phase phase() const { return phase_; }

 private:
  std::vector<double> magnitude_;
  std::size_t stage_ = 0;
  Phase phase_ = Phase::Accumulating;
};

/// Parameters to evaluate during one pruning step, sorted ascending.
///
/// Probabilistic: k draws without replacement, each draw picking a remaining
/// index with probability proportional to M_i + eps, eps = 1e-12 + 1e-6 mean(M).
/// Deterministic: the k largest M_i, ties to the lower index; `rng` is unused.
/// Off: every index.
std::vector<std::size_t> sample_subset(std::span<const double> magnitude, double ratio,
                                       PruningMode mode, Rng& rng);

}  // namespace qpgp
