#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace qpgp {

enum class OptimizerKind { SGD, Momentum, Adam };

std::string_view optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

/// Cosine decay from `start` at t = 0 to `end` at t = total.
double step_schedule(std::size_t t, std::size_t total, double start, double end);

struct OptimizerOptions {
  OptimizerKind kind = OptimizerKind::Adam;
  double momentum = 0.8;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First-order optimizers with coordinate-sparse updates: only `active`
/// indices move, and only their moment buffers and step counts advance.
class Optimizer {
 public:
  Optimizer(OptimizerOptions options, std::size_t num_params);

  /// theta_i -= lr * update_i(grad) for i in `active`. Throws
  /// std::invalid_argument on non-finite gradients or length mismatches.
  void step(std::span<double> params, std::span<const double> grad,
            std::span<const std::size_t> active, double lr);
  /// Same with every index active.
  void step(std::span<double> params, std::span<const double> grad, double lr);

  const OptimizerOptions& options() const { return options_; }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }

 private:
  OptimizerOptions options_;
  std::vector<double> m_;  // velocity for Momentum, first moment for Adam
  std::vector<double> v_;
  std::vector<std::size_t> steps_;
};

}  // namespace qpgp
