#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "qpgp/noise.hpp"
#include "qpgp/sim.hpp"

namespace qpgp {
namespace {

TEST(Depolarizing, ThreeQuartersIsFullyMixing) {
  double sum = 0.0;
  const int n = 100000;
  const std::array<std::size_t, 1> wire = {0};
  for (int i = 0; i < n; ++i) {
    StateVector s = StateVector::zero(1);
    Rng rng(stream_key(31, {static_cast<std::uint64_t>(i)}));
    apply_gate_noise(s, wire, 0.75, rng);
    sum += expectation_z(s, 0);
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
}

TEST(Depolarizing, ContractsBlochVector) {
  // Average over trajectories: <Z> -> (1 - 4p/3) <Z>.
  const double p = 0.3;
  const int n = 100000;
  const std::array<std::size_t, 1> wire = {0};
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    StateVector s = StateVector::zero(1);
    Rng rng(stream_key(32, {static_cast<std::uint64_t>(i)}));
    apply_gate_noise(s, wire, p, rng);
    sum += expectation_z(s, 0);
  }
  EXPECT_NEAR(sum / n, 1.0 - 4.0 * p / 3.0, 0.01);
}

TEST(Depolarizing, ZeroProbabilityLeavesStateAlone) {
  StateVector s = StateVector::zero(2);
  apply_gate(s, Gate::single(GateKind::RY, 1, Constant{0.4}), 0.4);
  const StateVector before = s;
  Rng rng(1);
  const std::array<std::size_t, 2> wires = {0, 1};
  apply_gate_noise(s, wires, 0.0, rng);
  for (std::size_t i = 0; i < s.dimension(); ++i) EXPECT_EQ(s[i], before.amplitudes()[i]);
}

TEST(Paulis, ActAsExpected) {
  StateVector s = StateVector::zero(2);
  apply_pauli(s, Pauli::X, 1);
  EXPECT_EQ(s[2], Complex(1.0));
  apply_pauli(s, Pauli::Z, 1);
  EXPECT_EQ(s[2], Complex(-1.0));
  apply_pauli(s, Pauli::Y, 0);
  EXPECT_EQ(s[3], Complex(0.0, -1.0));
}

TEST(Shots, StandardErrorMatchesBinomial) {
  StateVector s = StateVector::zero(1);
  apply_gate(s, Gate::single(GateKind::RY, 0, Constant{1.1}), 1.1);
  const double mu = std::cos(1.1);
  const int shots = 1024;
  std::vector<double> est;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(stream_key(33, {seed}));
    est.push_back(sample_shots(s, shots, 0.0, rng)[0]);
  }
  const double mean = std::accumulate(est.begin(), est.end(), 0.0) / est.size();
  double var = 0.0;
  for (double e : est) var += (e - mean) * (e - mean);
  const double sd = std::sqrt(var / (est.size() - 1));
  const double expected = std::sqrt((1 - mu * mu) / shots);
  EXPECT_NEAR(sd / expected, 1.0, 0.2);
  EXPECT_NEAR(mean, mu, 4 * expected / std::sqrt(200.0));
}

TEST(Shots, ReadoutFlipScalesExpectation) {
  StateVector s = StateVector::zero(2);
  apply_gate(s, Gate::single(GateKind::RX, 1, Constant{0.8}), 0.8);
  const double q = 0.1;
  double sum0 = 0.0, sum1 = 0.0;
  const int reps = 400;
  for (int i = 0; i < reps; ++i) {
    Rng rng(stream_key(34, {static_cast<std::uint64_t>(i)}));
    const auto e = sample_shots(s, 1024, q, rng);
    sum0 += e[0];
    sum1 += e[1];
  }
  EXPECT_NEAR(sum0 / reps, 1.0 - 2 * q, 0.005);
  EXPECT_NEAR(sum1 / reps, (1.0 - 2 * q) * std::cos(0.8), 0.005);
}

TEST(Shots, ExactValuesForBasisStates) {
  StateVector s = StateVector::zero(3);
  apply_pauli(s, Pauli::X, 2);
  Rng rng(5);
  EXPECT_EQ(sample_shots(s, 100, 0.0, rng), (ExpectationVector{1.0, 1.0, -1.0}));
}

TEST(NoisyRun, ExpectationModeAppliesReadoutFactor) {
  Circuit c{.num_qubits = 2, .num_params = 1, .num_features = 0,
            .gates = {Gate::single(GateKind::RX, 0, Param{0})}};
  NoiseModel m = NoiseModel::default_preset();
  m.p1 = m.p2 = 0.0;
  m.sample_shots = false;
  const std::vector<double> p = {0.5};
  RunOptions o;
  o.noise = &m;
  const auto e = run_circuit(c, p, {}, o);
  EXPECT_NEAR(e[0], 0.96 * std::cos(0.5), 1e-14);
  EXPECT_NEAR(e[1], 0.96, 1e-14);
}

TEST(NoisyRun, SameStreamSameResult) {
  Circuit c{.num_qubits = 3, .num_params = 2, .num_features = 0,
            .gates = {Gate::single(GateKind::RY, 0, Param{0}), Gate::pair(GateKind::RZZ, 0, 2, Param{1}),
                      Gate::cz(1, 2), Gate::single(GateKind::RX, 2, Param{0})}};
  const NoiseModel m = NoiseModel::default_preset();
  const std::vector<double> p = {0.3, -1.2};
  RunOptions o;
  o.noise = &m;
  o.stream = 77;
  EXPECT_EQ(run_circuit(c, p, {}, o), run_circuit(c, p, {}, o));
  RunOptions other = o;
  other.stream = 78;
  EXPECT_NE(run_circuit(c, p, {}, o), run_circuit(c, p, {}, other));
}

TEST(NoisyRun, DisabledModelIsExact) {
  Circuit c{.num_qubits = 1, .num_params = 1, .num_features = 0,
            .gates = {Gate::single(GateKind::RY, 0, Param{0})}};
  const NoiseModel m = NoiseModel::noiseless();
  const std::vector<double> p = {0.9};
  RunOptions o;
  o.noise = &m;
  EXPECT_EQ(run_circuit(c, p, {}, o)[0], run_circuit(c, p, {})[0]);
}

TEST(NoiseModel, ValidatesRanges) {
  NoiseModel m;
  m.p1 = -0.1;
  EXPECT_THROW(m.validate(), std::invalid_argument);
  m = NoiseModel{};
  m.readout_flip = 1.5;
  EXPECT_THROW(m.validate(), std::invalid_argument);
  m = NoiseModel{};
  m.shots = 0;
  EXPECT_THROW(m.validate(), std::invalid_argument);
  EXPECT_NO_THROW(NoiseModel::default_preset().validate());
}

}  // namespace
}  // namespace qpgp
