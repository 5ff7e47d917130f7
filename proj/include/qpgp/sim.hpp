#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace qpgp {

using Complex = std::complex<double>;
using ExpectationVector = std::vector<double>;

/// Largest register the simulator will allocate (2^30 amplitudes = 16 GiB).
inline constexpr std::size_t kMaxQubits = 30;

/// 2^n complex amplitudes. Qubit 0 is the least-significant bit of the
/// basis-state index.
class StateVector {
 public:
  /// |0...0> on `num_qubits` qubits.
  static StateVector zero(std::size_t num_qubits);

  std::size_t num_qubits() const { return num_qubits_; }
  std::size_t dimension() const { return amplitudes_.size(); }
  std::span<Complex> amplitudes() { return amplitudes_; }
  std::span<const Complex> amplitudes() const { return amplitudes_; }
  Complex& operator[](std::size_t i) { return amplitudes_[i]; }
  const Complex& operator[](std::size_t i) const { return amplitudes_[i]; }

  double norm_squared() const;
  std::size_t memory_bytes() const { return amplitudes_.size() * sizeof(Complex); }

  /// Builds a state from explicit amplitudes; the length must be a power of two.
  static StateVector from_amplitudes(std::vector<Complex> amplitudes);

 private:
  StateVector(std::size_t n, std::vector<Complex> amps)
      : num_qubits_(n), amplitudes_(std::move(amps)) {}

  std::size_t num_qubits_;
  std::vector<Complex> amplitudes_;
};

inline StateVector init_zero_state(std::size_t num_qubits) {
  return StateVector::zero(num_qubits);
}

enum class GateKind : std::uint8_t { RX, RY, RZ, RXX, RYY, RZZ, RZX, CZ };

inline constexpr std::array<GateKind, 8> kAllGateKinds = {
    GateKind::RX,  GateKind::RY,  GateKind::RZ,  GateKind::RXX,
    GateKind::RYY, GateKind::RZZ, GateKind::RZX, GateKind::CZ};

constexpr bool is_two_qubit(GateKind k) {
  return k == GateKind::RXX || k == GateKind::RYY || k == GateKind::RZZ ||
         k == GateKind::RZX || k == GateKind::CZ;
}
constexpr bool is_parametric(GateKind k) { return k != GateKind::CZ; }

std::string_view gate_name(GateKind kind);
/// Throws std::invalid_argument on an unknown name.
GateKind parse_gate_kind(std::string_view name);

struct Constant {
  double angle = 0.0;
  friend bool operator==(const Constant&, const Constant&) = default;
};
struct Feature {
  std::size_t index = 0;
  friend bool operator==(const Feature&, const Feature&) = default;
};
struct Param {
  std::size_t index = 0;
  friend bool operator==(const Param&, const Param&) = default;
};
using Binding = std::variant<Constant, Feature, Param>;

struct Gate {
  GateKind kind = GateKind::RX;
  std::array<std::size_t, 2> wires{0, 0};
  Binding binding = Constant{};

  static Gate single(GateKind kind, std::size_t wire, Binding binding);
  static Gate pair(GateKind kind, std::size_t first, std::size_t second, Binding binding);
  static Gate cz(std::size_t first, std::size_t second);

  std::size_t arity() const { return is_two_qubit(kind) ? 2 : 1; }
  std::span<const std::size_t> used_wires() const { return {wires.data(), arity()}; }
  std::optional<std::size_t> param_index() const;

  friend bool operator==(const Gate&, const Gate&) = default;
};

/// Row-major unitaries. Two-qubit matrices act on |b_first b_second> with
/// b_first as the more significant bit of the 4-dim local index.
using Matrix2 = std::array<Complex, 4>;
using Matrix4 = std::array<Complex, 16>;

Matrix2 single_qubit_matrix(GateKind kind, double angle);
Matrix4 two_qubit_matrix(GateKind kind, double angle);

/// Applies `gate` with rotation angle `angle` in place.
void apply_gate(StateVector& state, const Gate& gate, double angle);

void apply_matrix(StateVector& state, const Matrix2& u, std::size_t wire);
void apply_matrix(StateVector& state, const Matrix4& u, std::size_t first, std::size_t second);

double expectation_z(const StateVector& state, std::size_t qubit);
/// <Z_q> for every qubit in one pass over the amplitudes.
ExpectationVector expectations_z(const StateVector& state);

struct Circuit {
  std::size_t num_qubits = 0;
  std::size_t num_params = 0;
  std::size_t num_features = 0;
  std::vector<Gate> gates;

  /// Throws std::invalid_argument when a wire or binding index is out of range.
  void validate() const;
  /// Gate indices that carry Param(index), in circuit order.
  std::vector<std::size_t> occurrences(std::size_t param_index) const;
  std::size_t parametric_gate_count() const;

  friend bool operator==(const Circuit&, const Circuit&) = default;
};

/// Adds `offset` to the resolved angle of one gate; the parameter-shift rule
/// shifts a single occurrence of a shared parameter at a time.
struct GateShift {
  std::size_t gate_index = 0;
  double offset = 0.0;
};

struct NoiseModel;

struct RunOptions {
  const NoiseModel* noise = nullptr;  ///< nullptr or disabled: exact expectations
  std::uint64_t stream = 0;           ///< key of the random stream for noisy runs
  std::optional<GateShift> shift;
};

/// Resolves the rotation angle of `gate` against parameter and feature vectors.
double resolve_angle(const Gate& gate, std::span<const double> params,
                     std::span<const double> features);

/// Final state of the circuit, noise-free.
StateVector simulate(const Circuit& circuit, std::span<const double> params,
                     std::span<const double> features, std::optional<GateShift> shift = {});

/// Circuit function: per-qubit Pauli-Z expectations of the final state.
ExpectationVector run_circuit(const Circuit& circuit, std::span<const double> params,
                              std::span<const double> features, const RunOptions& options = {});

}  // namespace qpgp
