#include "qpgp/noise.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace qpgp {

void NoiseModel::validate() const {
  auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!in_unit(p1) || !in_unit(p2)) throw std::invalid_argument("gate error probabilities must lie in [0, 1]");
  if (!(readout_flip >= 0.0 && readout_flip <= 0.5))
    throw std::invalid_argument("readout_flip must lie in [0, 0.5]");
  if (shots < 1) throw std::invalid_argument("shots must be >= 1");
  if (trajectories < 1) throw std::invalid_argument("trajectories must be >= 1");
}

void apply_pauli(StateVector& state, Pauli pauli, std::size_t wire) {
  if (wire >= state.num_qubits()) throw std::out_of_range("noise wire out of range");
  auto amps = state.amplitudes();
  const std::size_t step = std::size_t{1} << wire;
  const std::size_t block = step << 1;
  const Complex i{0.0, 1.0};
  for (std::size_t base = 0; base < amps.size(); base += block) {
    for (std::size_t off = 0; off < step; ++off) {
      Complex& a = amps[base + off];
      Complex& b = amps[base + off + step];
      switch (pauli) {
        case Pauli::X: std::swap(a, b); break;
        case Pauli::Y: {
          const Complex a0 = a;
          a = -i * b;
          b = i * a0;
          break;
        }
        case Pauli::Z: b = -b; break;
      }
    }
  }
}

void apply_gate_noise(StateVector& state, std::span<const std::size_t> wires, double p, Rng& rng) {
  if (p <= 0.0) return;
  for (std::size_t w : wires) {
    if (rng.uniform() < p) apply_pauli(state, static_cast<Pauli>(rng.below(3)), w);
  }
}

ExpectationVector sample_shots(const StateVector& state, int shots, double readout_flip, Rng& rng) {
  if (shots < 1) throw std::invalid_argument("shots must be >= 1");
  const auto amps = state.amplitudes();
  std::vector<double> cdf(amps.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < amps.size(); ++k) {
    acc += std::norm(amps[k]);
    cdf[k] = acc;
  }
  const std::size_t n = state.num_qubits();
  std::vector<long> ones(n, 0);
  for (int s = 0; s < shots; ++s) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const auto k = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
    for (std::size_t q = 0; q < n; ++q) {
      bool bit = (k >> q) & 1U;
      if (readout_flip > 0.0 && rng.uniform() < readout_flip) bit = !bit;
      ones[q] += bit;
    }
  }
  ExpectationVector e(n);
  for (std::size_t q = 0; q < n; ++q)
    e[q] = static_cast<double>(shots - 2 * ones[q]) / static_cast<double>(shots);
  return e;
}

}  // namespace qpgp
