#include "qpgp/pgp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace qpgp {

std::string_view pruning_mode_name(PruningMode mode) {
  switch (mode) {
    case PruningMode::Probabilistic: return "probabilistic";
    case PruningMode::Deterministic: return "deterministic";
    case PruningMode::Off: return "off";
  }
  return "?";
}

PruningMode parse_pruning_mode(std::string_view name) {
  if (name == "probabilistic") return PruningMode::Probabilistic;
  if (name == "deterministic") return PruningMode::Deterministic;
  if (name == "off") return PruningMode::Off;
  throw std::invalid_argument("unknown pruning mode '" + std::string(name) + "'");
}

std::string_view phase_name(Phase phase) {
  return phase == Phase::Accumulating ? "accumulating" : "pruning";
}

void PruningConfig::validate() const {
  if (accumulation_window < 1) throw std::invalid_argument("accumulation window must be >= 1");
  if (!(ratio >= 0.0 && ratio < 1.0)) throw std::invalid_argument("pruning ratio must lie in [0, 1)");
}

std::size_t PruningConfig::keep_count(std::size_t n) const {
  const auto k = static_cast<std::size_t>(std::llround((1.0 - ratio) * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(n, 1));
}

double PruningConfig::skipped_fraction() const {
  if (!active()) return 0.0;
  return ratio * static_cast<double>(pruning_window) / static_cast<double>(stage_length());
}

void PruningState::start_stage() {
  std::fill(magnitude_.begin(), magnitude_.end(), 0.0);
  ++stage_;
  phase_ = Phase::Accumulating;
}

void PruningState::enter_pruning() { phase_ = Phase::Pruning; }

void PruningState::accumulate(std::span<const double> grad) {
  if (phase_ != Phase::Accumulating)
    throw std::logic_error("accumulate called outside the accumulation phase");
  if (grad.size() != magnitude_.size()) throw std::invalid_argument("gradient length mismatch");
  for (std::size_t i = 0; i < grad.size(); ++i) magnitude_[i] += std::abs(grad[i]);
}

std::vector<std::size_t> sample_subset(std::span<const double> magnitude, double ratio,
                                       PruningMode mode, Rng& rng) {
  const std::size_t n = magnitude.size();
  if (n == 0) throw std::invalid_argument("cannot sample from zero parameters");
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (mode == PruningMode::Off) return all;

  const std::size_t k = PruningConfig{.ratio = ratio}.keep_count(n);
  if (k == n) return all;

  if (mode == PruningMode::Deterministic) {
    std::stable_sort(all.begin(), all.end(),
                     [&](std::size_t a, std::size_t b) { return magnitude[a] > magnitude[b]; });
    all.resize(k);
    std::sort(all.begin(), all.end());
    return all;
  }

  const double mean = std::accumulate(magnitude.begin(), magnitude.end(), 0.0) / static_cast<double>(n);
  const double eps = 1e-12 + 1e-6 * mean;
  std::vector<double> weight(n);
  for (std::size_t i = 0; i < n; ++i) weight[i] = magnitude[i] + eps;

  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  for (std::size_t draw = 0; draw < k; ++draw) {
    double total = 0.0;
    for (double w : weight) total += w;
    const double u = rng.uniform() * total;
    double acc = 0.0;
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (weight[i] == 0.0) continue;
      acc += weight[i];
      pick = i;
      if (u < acc) break;
    }
    chosen.push_back(pick);
    weight[pick] = 0.0;
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

}  // namespace qpgp
