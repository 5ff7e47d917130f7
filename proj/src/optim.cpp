#include "qpgp/optim.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace qpgp {

std::string_view optimizer_name(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::SGD: return "sgd";
    case OptimizerKind::Momentum: return "momentum";
    case OptimizerKind::Adam: return "adam";
  }
  return "?";
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::SGD;
  if (name == "momentum") return OptimizerKind::Momentum;
  if (name == "adam") return OptimizerKind::Adam;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

double step_schedule(std::size_t t, std::size_t total, double start, double end) {
  if (total == 0) return start;
  if (t > total) throw std::invalid_argument("schedule step beyond total");
  const double phase = std::numbers::pi * static_cast<double>(t) / static_cast<double>(total);
  return end + 0.5 * (start - end) * (1.0 + std::cos(phase));
}

Optimizer::Optimizer(OptimizerOptions options, std::size_t num_params)
    : options_(options), m_(num_params, 0.0), v_(num_params, 0.0), steps_(num_params, 0) {}

void Optimizer::step(std::span<double> params, std::span<const double> grad,
                     std::span<const std::size_t> active, double lr) {
  const std::size_t n = m_.size();
  if (params.size() != n || grad.size() != n)
    throw std::invalid_argument("optimizer length mismatch");
  for (std::size_t i : active) {
    if (i >= n) throw std::invalid_argument("active index out of range");
    if (!std::isfinite(grad[i])) throw std::invalid_argument("non-finite gradient");
  }
  for (std::size_t i : active) {
    const double g = grad[i];
    switch (options_.kind) {
      case OptimizerKind::SGD:
        params[i] -= lr * g;
        break;
      case OptimizerKind::Momentum:
        m_[i] = options_.momentum * m_[i] + g;
        params[i] -= lr * m_[i];
        break;
      case OptimizerKind::Adam: {
        const auto t = static_cast<double>(++steps_[i]);
        m_[i] = options_.beta1 * m_[i] + (1.0 - options_.beta1) * g;
        v_[i] = options_.beta2 * v_[i] + (1.0 - options_.beta2) * g * g;
        const double m_hat = m_[i] / (1.0 - std::pow(options_.beta1, t));
        const double v_hat = v_[i] / (1.0 - std::pow(options_.beta2, t));
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + options_.epsilon);
        break;
      }
    }
  }
}

void Optimizer::step(std::span<double> params, std::span<const double> grad, double lr) {
  std::vector<std::size_t> all(m_.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  step(params, grad, all, lr);
}

}  // namespace qpgp
