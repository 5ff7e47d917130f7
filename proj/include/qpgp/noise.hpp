#pragma once

#include <cstddef>
#include <span>

#include "qpgp/rng.hpp"
#include "qpgp/sim.hpp"

namespace qpgp {

/// Synthetic NISQ device: stochastic Pauli errors after every gate, readout
/// bit flips and finite-shot estimation.
struct NoiseModel {
  double p1 = 1e-3;            ///< depolarizing probability per wire of a 1-qubit gate
  double p2 = 1e-2;            ///< depolarizing probability per wire of a 2-qubit gate
  double readout_flip = 0.02;  ///< independent flip probability per measured bit
  int shots = 1024;
  bool enabled = true;
  /// When false, expectations are computed exactly from the final trajectory
  /// state (readout flips applied in expectation) instead of from shots.
  bool sample_shots = true;
  /// Gate-error trajectories averaged per circuit execution.
  int trajectories = 1;

  static NoiseModel default_preset() { return {}; }
  static NoiseModel noiseless() {
    return {.p1 = 0.0, .p2 = 0.0, .readout_flip = 0.0, .shots = 1024, .enabled = false};
  }

  /// Throws std::invalid_argument when a probability or count is out of range.
  void validate() const;
};

enum class Pauli : std::uint8_t { X, Y, Z };

void apply_pauli(StateVector& state, Pauli pauli, std::size_t wire);

/// One Monte-Carlo draw of the depolarizing channel: each wire independently
/// receives, with probability p, a Pauli drawn uniformly from {X, Y, Z}.
void apply_gate_noise(StateVector& state, std::span<const std::size_t> wires, double p, Rng& rng);

/// Empirical per-qubit <Z> from `shots` projective measurements with
/// independent readout bit flips.
ExpectationVector sample_shots(const StateVector& state, int shots, double readout_flip, Rng& rng);

}  // namespace qpgp
