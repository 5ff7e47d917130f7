#include "qpgp/sim.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

#include "qpgp/noise.hpp"

namespace qpgp {

namespace {

constexpr Complex kI{0.0, 1.0};

constexpr std::array<std::string_view, 8> kGateNames = {"RX",  "RY",  "RZ",  "RXX",
                                                        "RYY", "RZZ", "RZX", "CZ"};

Matrix2 pauli_matrix(char p) {
  switch (p) {
    case 'X': return {0.0, 1.0, 1.0, 0.0};
    case 'Y': return {0.0, -kI, kI, 0.0};
    default: return {1.0, 0.0, 0.0, -1.0};
  }
}

Matrix4 kron(const Matrix2& a, const Matrix2& b) {
  Matrix4 out{};
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) out[r * 4 + c] = a[(r >> 1) * 2 + (c >> 1)] * b[(r & 1) * 2 + (c & 1)];
  return out;
}

void check_wire(const StateVector& state, std::size_t wire) {
  if (wire >= state.num_qubits())
    throw std::out_of_range("wire " + std::to_string(wire) + " out of range for " +
                            std::to_string(state.num_qubits()) + "-qubit state");
}

}  // namespace

StateVector StateVector::zero(std::size_t num_qubits) {
  if (num_qubits == 0 || num_qubits > kMaxQubits)
    throw std::invalid_argument("num_qubits must be in [1, " + std::to_string(kMaxQubits) +
                                "], got " + std::to_string(num_qubits));
  std::vector<Complex> amps(std::size_t{1} << num_qubits, Complex{});
  amps[0] = 1.0;
  return StateVector(num_qubits, std::move(amps));
}

StateVector StateVector::from_amplitudes(std::vector<Complex> amplitudes) {
  const std::size_t dim = amplitudes.size();
  if (dim < 2 || !std::has_single_bit(dim))
    throw std::invalid_argument("amplitude count must be a power of two >= 2");
  const auto n = static_cast<std::size_t>(std::countr_zero(dim));
  if (n > kMaxQubits) throw std::invalid_argument("state too large");
  return StateVector(n, std::move(amplitudes));
}

double StateVector::norm_squared() const {
  double s = 0.0;
  for (const Complex& a : amplitudes_) s += std::norm(a);
  return s;
}

std::string_view gate_name(GateKind kind) { return kGateNames[static_cast<std::size_t>(kind)]; }

GateKind parse_gate_kind(std::string_view name) {
  for (std::size_t i = 0; i < kGateNames.size(); ++i)
    if (kGateNames[i] == name) return kAllGateKinds[i];
  throw std::invalid_argument("unknown gate kind '" + std::string(name) + "'");
}

Gate Gate::single(GateKind kind, std::size_t wire, Binding binding) {
  if (is_two_qubit(kind))
    throw std::invalid_argument(std::string(gate_name(kind)) + " needs two wires");
  return Gate{kind, {wire, wire}, binding};
}

Gate Gate::pair(GateKind kind, std::size_t first, std::size_t second, Binding binding) {
  if (!is_two_qubit(kind))
    throw std::invalid_argument(std::string(gate_name(kind)) + " acts on one wire");
  if (first == second) throw std::invalid_argument("two-qubit gate wires must be distinct");
  if (kind == GateKind::CZ && binding != Binding{Constant{0.0}})
    throw std::invalid_argument("CZ is not parametric");
  return Gate{kind, {first, second}, binding};
}

Gate Gate::cz(std::size_t first, std::size_t second) {
  return pair(GateKind::CZ, first, second, Constant{0.0});
}

std::optional<std::size_t> Gate::param_index() const {
  if (const auto* p = std::get_if<Param>(&binding)) return p->index;
  return std::nullopt;
}

Matrix2 single_qubit_matrix(GateKind kind, double angle) {
  const double c = std::cos(angle / 2.0);
  const double s = std::sin(angle / 2.0);
  switch (kind) {
    case GateKind::RX: return {c, -kI * s, -kI * s, c};
    case GateKind::RY: return {c, -s, s, c};
    case GateKind::RZ: return {Complex{c, -s}, 0.0, 0.0, Complex{c, s}};
    default: throw std::invalid_argument(std::string(gate_name(kind)) + " is not a one-qubit gate");
  }
}

Matrix4 two_qubit_matrix(GateKind kind, double angle) {
  if (kind == GateKind::CZ) {
    Matrix4 u{};
    u[0] = u[5] = u[10] = 1.0;
    u[15] = -1.0;
    return u;
  }
  Matrix4 generator;
  switch (kind) {
    case GateKind::RXX: generator = kron(pauli_matrix('X'), pauli_matrix('X')); break;
    case GateKind::RYY: generator = kron(pauli_matrix('Y'), pauli_matrix('Y')); break;
    case GateKind::RZZ: generator = kron(pauli_matrix('Z'), pauli_matrix('Z')); break;
    case GateKind::RZX: generator = kron(pauli_matrix('Z'), pauli_matrix('X')); break;
    default: throw std::invalid_argument(std::string(gate_name(kind)) + " is not a two-qubit gate");
  }
  const double c = std::cos(angle / 2.0);
  const double s = std::sin(angle / 2.0);
  Matrix4 u{};
  for (std::size_t i = 0; i < 16; ++i) u[i] = -kI * s * generator[i];
  for (std::size_t d = 0; d < 4; ++d) u[d * 5] += c;
  return u;
}

namespace {

// Plain product; std::complex operator* goes through the Annex G inf/nan path.
inline Complex mul(Complex a, Complex b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

}  // namespace

void apply_matrix(StateVector& state, const Matrix2& u, std::size_t wire) {
  check_wire(state, wire);
  auto amps = state.amplitudes();
  const std::size_t n = amps.size();
  const std::size_t step = std::size_t{1} << wire;
  const std::size_t block = step << 1;
  for (std::size_t base = 0; base < n; base += block) {
    for (std::size_t off = 0; off < step; ++off) {
      const std::size_t i0 = base + off;
      const std::size_t i1 = i0 + step;
      const Complex a = amps[i0];
      const Complex b = amps[i1];
      amps[i0] = mul(u[0], a) + mul(u[1], b);
      amps[i1] = mul(u[2], a) + mul(u[3], b);
    }
  }
}

void apply_matrix(StateVector& state, const Matrix4& u, std::size_t first, std::size_t second) {
  check_wire(state, first);
  check_wire(state, second);
  if (first == second) throw std::invalid_argument("two-qubit gate wires must be distinct");
  auto amps = state.amplitudes();
  const std::size_t lo = std::min(first, second);
  const std::size_t hi = std::max(first, second);
  const std::size_t bf = std::size_t{1} << first;
  const std::size_t bs = std::size_t{1} << second;
  const std::size_t quads = amps.size() >> 2;
  for (std::size_t k = 0; k < quads; ++k) {
    // Insert zero bits at positions lo and hi.
    std::size_t i = k;
    i = ((i >> lo) << (lo + 1)) | (i & ((std::size_t{1} << lo) - 1));
    i = ((i >> hi) << (hi + 1)) | (i & ((std::size_t{1} << hi) - 1));
    const std::array<std::size_t, 4> idx = {i, i | bs, i | bf, i | bf | bs};
    const Complex v0 = amps[idx[0]], v1 = amps[idx[1]], v2 = amps[idx[2]], v3 = amps[idx[3]];
    for (std::size_t r = 0; r < 4; ++r)
      amps[idx[r]] = mul(u[r * 4], v0) + mul(u[r * 4 + 1], v1) + mul(u[r * 4 + 2], v2) + mul(u[r * 4 + 3], v3);
  }
}

void apply_gate(StateVector& state, const Gate& gate, double angle) {
  if (!std::isfinite(angle)) throw std::invalid_argument("gate angle must be finite");
  if (is_two_qubit(gate.kind))
    apply_matrix(state, two_qubit_matrix(gate.kind, angle), gate.wires[0], gate.wires[1]);
  else
    apply_matrix(state, single_qubit_matrix(gate.kind, angle), gate.wires[0]);
}

double expectation_z(const StateVector& state, std::size_t qubit) {
  check_wire(state, qubit);
  const auto amps = state.amplitudes();
  const std::size_t mask = std::size_t{1} << qubit;
  double e = 0.0;
  for (std::size_t k = 0; k < amps.size(); ++k) {
    const double p = std::norm(amps[k]);
    e += (k & mask) ? -p : p;
  }
  return e;
}

ExpectationVector expectations_z(const StateVector& state) {
  const std::size_t n = state.num_qubits();
  ExpectationVector e(n, 0.0);
  const auto amps = state.amplitudes();
  for (std::size_t k = 0; k < amps.size(); ++k) {
    const double p = std::norm(amps[k]);
    for (std::size_t q = 0; q < n; ++q) e[q] += ((k >> q) & 1U) ? -p : p;
  }
  return e;
}

void Circuit::validate() const {
  if (num_qubits == 0 || num_qubits > kMaxQubits)
    throw std::invalid_argument("circuit qubit count out of range");
  for (std::size_t g = 0; g < gates.size(); ++g) {
    const Gate& gate = gates[g];
    for (std::size_t w : gate.used_wires())
      if (w >= num_qubits)
        throw std::invalid_argument("gate " + std::to_string(g) + " wire out of range");
    if (gate.arity() == 2 && gate.wires[0] == gate.wires[1])
      throw std::invalid_argument("gate " + std::to_string(g) + " repeats a wire");
    if (const auto* p = std::get_if<Param>(&gate.binding); p && p->index >= num_params)
      throw std::invalid_argument("gate " + std::to_string(g) + " parameter index out of range");
    if (const auto* f = std::get_if<Feature>(&gate.binding); f && f->index >= num_features)
      throw std::invalid_argument("gate " + std::to_string(g) + " feature index out of range");
  }
}

std::vector<std::size_t> Circuit::occurrences(std::size_t param_index) const {
  std::vector<std::size_t> out;
  for (std::size_t g = 0; g < gates.size(); ++g)
    if (gates[g].param_index() == param_index) out.push_back(g);
  return out;
}

std::size_t Circuit::parametric_gate_count() const {
  std::size_t count = 0;
  for (const Gate& g : gates) count += g.param_index().has_value();
  return count;
}

double resolve_angle(const Gate& gate, std::span<const double> params,
                     std::span<const double> features) {
  return std::visit(
      [&](const auto& b) -> double {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, Constant>) {
          return b.angle;
        } else if constexpr (std::is_same_v<B, Feature>) {
          if (b.index >= features.size()) throw std::out_of_range("feature index out of range");
          return features[b.index];
        } else {
          if (b.index >= params.size()) throw std::out_of_range("parameter index out of range");
          return params[b.index];
        }
      },
      gate.binding);
}

namespace {

void check_inputs(const Circuit& circuit, std::span<const double> params,
                  std::span<const double> features, const std::optional<GateShift>& shift) {
  if (params.size() != circuit.num_params)
    throw std::invalid_argument("expected " + std::to_string(circuit.num_params) +
                                " parameters, got " + std::to_string(params.size()));
  if (features.size() != circuit.num_features)
    throw std::invalid_argument("expected " + std::to_string(circuit.num_features) +
                                " features, got " + std::to_string(features.size()));
  if (shift && shift->gate_index >= circuit.gates.size())
    throw std::out_of_range("shifted gate index out of range");
}

double gate_angle(const Circuit& circuit, std::size_t g, std::span<const double> params,
                  std::span<const double> features, const std::optional<GateShift>& shift) {
  double angle = resolve_angle(circuit.gates[g], params, features);
  if (shift && shift->gate_index == g) angle += shift->offset;
  return angle;
}

}  // namespace

StateVector simulate(const Circuit& circuit, std::span<const double> params,
                     std::span<const double> features, std::optional<GateShift> shift) {
  check_inputs(circuit, params, features, shift);
  StateVector state = StateVector::zero(circuit.num_qubits);
  for (std::size_t g = 0; g < circuit.gates.size(); ++g)
    apply_gate(state, circuit.gates[g], gate_angle(circuit, g, params, features, shift));
  return state;
}

ExpectationVector run_circuit(const Circuit& circuit, std::span<const double> params,
                              std::span<const double> features, const RunOptions& options) {
  const NoiseModel* noise = options.noise;
  if (noise == nullptr || !noise->enabled)
    return expectations_z(simulate(circuit, params, features, options.shift));

  check_inputs(circuit, params, features, options.shift);
  Rng rng(options.stream);
  ExpectationVector mean(circuit.num_qubits, 0.0);
  for (int t = 0; t < noise->trajectories; ++t) {
    StateVector state = StateVector::zero(circuit.num_qubits);
    for (std::size_t g = 0; g < circuit.gates.size(); ++g) {
      const Gate& gate = circuit.gates[g];
      apply_gate(state, gate, gate_angle(circuit, g, params, features, options.shift));
      apply_gate_noise(state, gate.used_wires(), gate.arity() == 2 ? noise->p2 : noise->p1, rng);
    }
    ExpectationVector e;
    if (noise->sample_shots) {
      e = sample_shots(state, noise->shots, noise->readout_flip, rng);
    } else {
      e = expectations_z(state);
      for (double& v : e) v *= 1.0 - 2.0 * noise->readout_flip;
    }
    for (std::size_t q = 0; q < e.size(); ++q) mean[q] += e[q];
  }
  if (noise->trajectories > 1)
    for (double& v : mean) v /= noise->trajectories;
  return mean;
}

}  // namespace qpgp
