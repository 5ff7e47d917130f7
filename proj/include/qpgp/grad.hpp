#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "qpgp/noise.hpp"
#include "qpgp/sim.hpp"

namespace qpgp {

/// Small dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  static Matrix identity(std::size_t n);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::vector<double> multiply(std::span<const double> x) const;            // A x
  std::vector<double> multiply_transposed(std::span<const double> x) const; // A^T x

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// One execution of a (possibly shifted) circuit on the quantum backend.
/// `stream` keys the random stream of that execution; noise-free backends
/// ignore it.
using Oracle = std::function<ExpectationVector(std::span<const double> params,
                                               std::span<const double> features,
                                               std::optional<GateShift> shift,
                                               std::uint64_t stream)>;

/// Oracle backed by the statevector simulator, optionally through `noise`.
Oracle make_oracle(const Circuit& circuit, std::optional<NoiseModel> noise = std::nullopt);

inline constexpr double kParamShift = std::numbers::pi / 2.0;

/// Stream keys for the individual executions of one sample's gradient.
std::uint64_t forward_stream(std::uint64_t sample_stream);
std::uint64_t shift_stream(std::uint64_t sample_stream, std::size_t param, std::size_t gate, int sign);

/// d f / d theta_index by the parameter-shift rule: for every gate carrying the
/// parameter, shift that occurrence alone by +-pi/2, take half the difference,
/// and sum over occurrences. `runs` (if given) is incremented per execution.
/// Throws std::invalid_argument if the parameter appears in no gate.
std::vector<double> param_shift_gradient(const Oracle& oracle, const Circuit& circuit,
                                         std::span<const double> params, std::size_t index,
                                         std::span<const double> features,
                                         std::uint64_t sample_stream = 0,
                                         std::size_t* runs = nullptr);

struct GradientReport {
  Matrix jacobian;                  ///< m x n, d f / d theta
  std::vector<bool> active;         ///< false: column frozen (not evaluated)
  std::vector<double> downstream;   ///< length m, dL / df
  std::vector<double> grad;         ///< length n, dL / dtheta
  double loss = 0.0;
  std::size_t circuit_runs = 0;
  std::size_t param_evaluations = 0;  ///< evaluated (parameter, sample) gradients
};

/// Parameter-shift Jacobian restricted to `subset` (all parameters when
/// absent). Columns outside the subset stay zero and are marked frozen.
/// Throws std::invalid_argument on an empty or out-of-range subset.
GradientReport jacobian(const Oracle& oracle, const Circuit& circuit,
                        std::span<const double> params, std::span<const double> features,
                        std::optional<std::span<const std::size_t>> subset = std::nullopt,
                        std::uint64_t sample_stream = 0);

struct LossResult {
  double loss = 0.0;
  std::vector<double> probabilities;
  std::vector<double> downstream;  ///< dL / dlogits = p - onehot(target)
};

/// Softmax cross-entropy on logits and its closed-form gradient.
LossResult loss_and_downstream(std::span<const double> logits, std::size_t target);

/// grad = jacobian^T * downstream.
std::vector<double> chain(const Matrix& jacobian, std::span<const double> downstream);

/// Full per-sample pipeline: one forward execution, logits = head * f,
/// softmax cross-entropy, downstream folded back through the linear head,
/// parameter-shift Jacobian over `subset`, and the chain-rule product.
GradientReport evaluate_sample(const Oracle& oracle, const Circuit& circuit, const Matrix& head,
                               std::span<const double> params, std::span<const double> features,
                               std::size_t target,
                               std::optional<std::span<const std::size_t>> subset = std::nullopt,
                               std::uint64_t sample_stream = 0);

}  // namespace qpgp
