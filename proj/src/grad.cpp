#include "qpgp/grad.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "qpgp/rng.hpp"

namespace qpgp {

namespace {
constexpr std::uint64_t kForwardTag = 0xF0F0F0F0ULL;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<double> Matrix::multiply(std::span<const double> x) const {
  if (x.size() != cols) throw std::invalid_argument("matrix-vector dimension mismatch");
  std::vector<double> y(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) y[r] += (*this)(r, c) * x[c];
  return y;
}

std::vector<double> Matrix::multiply_transposed(std::span<const double> x) const {
  if (x.size() != rows) throw std::invalid_argument("matrix-vector dimension mismatch");
  std::vector<double> y(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) y[c] += (*this)(r, c) * x[r];
  return y;
}

Oracle make_oracle(const Circuit& circuit, std::optional<NoiseModel> noise) {
  circuit.validate();
  if (noise) noise->validate();
  return [circuit, noise](std::span<const double> params, std::span<const double> features,
                          std::optional<GateShift> shift, std::uint64_t stream) {
    RunOptions opts;
    opts.noise = noise ? &*noise : nullptr;
    opts.stream = stream;
    opts.shift = shift;
    return run_circuit(circuit, params, features, opts);
  };
}

std::uint64_t forward_stream(std::uint64_t sample_stream) {
  return stream_key(sample_stream, {kForwardTag});
}

std::uint64_t shift_stream(std::uint64_t sample_stream, std::size_t param, std::size_t gate, int sign) {
  return stream_key(sample_stream, {param, gate, sign > 0 ? 1ULL : 2ULL});
}

std::vector<double> param_shift_gradient(const Oracle& oracle, const Circuit& circuit,
                                         std::span<const double> params, std::size_t index,
                                         std::span<const double> features,
                                         std::uint64_t sample_stream, std::size_t* runs) {
  const std::vector<std::size_t> gates = circuit.occurrences(index);
  if (gates.empty())
    throw std::invalid_argument("parameter " + std::to_string(index) + " appears in no gate");
  std::vector<double> grad(circuit.num_qubits, 0.0);
  for (std::size_t g : gates) {
    const ExpectationVector plus =
        oracle(params, features, GateShift{g, kParamShift}, shift_stream(sample_stream, index, g, +1));
    const ExpectationVector minus =
        oracle(params, features, GateShift{g, -kParamShift}, shift_stream(sample_stream, index, g, -1));
    if (runs) *runs += 2;
    if (plus.size() != grad.size() || minus.size() != grad.size())
      throw std::runtime_error("oracle returned a vector of the wrong length");
    for (std::size_t q = 0; q < grad.size(); ++q) grad[q] += 0.5 * (plus[q] - minus[q]);
  }
  return grad;
}

GradientReport jacobian(const Oracle& oracle, const Circuit& circuit,
                        std::span<const double> params, std::span<const double> features,
                        std::optional<std::span<const std::size_t>> subset,
                        std::uint64_t sample_stream) {
  const std::size_t n = circuit.num_params;
  GradientReport report;
  report.jacobian = Matrix(circuit.num_qubits, n);
  report.active.assign(n, false);
  if (subset) {
    if (subset->empty()) throw std::invalid_argument("jacobian subset must not be empty");
    for (std::size_t i : *subset) {
      if (i >= n) throw std::invalid_argument("jacobian subset index out of range");
      report.active[i] = true;
    }
  } else {
    std::fill(report.active.begin(), report.active.end(), true);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!report.active[i]) continue;
    ++report.param_evaluations;
    if (circuit.occurrences(i).empty()) continue;
    const std::vector<double> col =
        param_shift_gradient(oracle, circuit, params, i, features, sample_stream, &report.circuit_runs);
    for (std::size_t q = 0; q < col.size(); ++q) report.jacobian(q, i) = col[q];
  }
  return report;
}

LossResult loss_and_downstream(std::span<const double> logits, std::size_t target) {
  if (logits.empty()) throw std::invalid_argument("logits must not be empty");
  if (target >= logits.size()) throw std::invalid_argument("target class out of range");
  for (double v : logits)
    if (!std::isfinite(v)) throw std::invalid_argument("logits must be finite");
  const double peak = *std::max_element(logits.begin(), logits.end());
  LossResult out;
  out.probabilities.resize(logits.size());
  double z = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    out.probabilities[j] = std::exp(logits[j] - peak);
    z += out.probabilities[j];
  }
  for (double& p : out.probabilities) p /= z;
  // -log softmax computed in log space so saturated logits stay accurate.
  out.loss = std::log(z) - (logits[target] - peak);
  out.downstream = out.probabilities;
  out.downstream[target] -= 1.0;
  return out;
}

std::vector<double> chain(const Matrix& jac, std::span<const double> downstream) {
  if (downstream.size() != jac.rows)
    throw std::invalid_argument("downstream length " + std::to_string(downstream.size()) +
                                " does not match jacobian rows " + std::to_string(jac.rows));
  return jac.multiply_transposed(downstream);
}

GradientReport evaluate_sample(const Oracle& oracle, const Circuit& circuit, const Matrix& head,
                               std::span<const double> params, std::span<const double> features,
                               std::size_t target,
                               std::optional<std::span<const std::size_t>> subset,
                               std::uint64_t sample_stream) {
  if (head.cols != circuit.num_qubits)
    throw std::invalid_argument("head width does not match the qubit count");
  const ExpectationVector f = oracle(params, features, std::nullopt, forward_stream(sample_stream));
  const std::vector<double> logits = head.multiply(f);
  const LossResult lr = loss_and_downstream(logits, target);

  GradientReport report = jacobian(oracle, circuit, params, features, subset, sample_stream);
  report.circuit_runs += 1;
  report.loss = lr.loss;
  report.downstream = head.multiply_transposed(lr.downstream);
  report.grad = chain(report.jacobian, report.downstream);
  return report;
}

}  // namespace qpgp
