#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <set>

#include "qpgp/grad.hpp"
#include "test_util.hpp"

namespace qpgp {
namespace {

std::vector<double> central_difference(const Circuit& c, std::vector<double> params, std::size_t i,
                                       const std::vector<double>& features, double h = 1e-5) {
  const double x = params[i];
  params[i] = x + h;
  const auto up = testing::dense_expectations(c, params, features);
  params[i] = x - h;
  const auto down = testing::dense_expectations(c, params, features);
  std::vector<double> d(up.size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = (up[k] - down[k]) / (2 * h);
  return d;
}

TEST(ParameterShift, MatchesFiniteDifferencesWithSharedParameters) {
  Rng rng(stream_key(41, {}));
  double worst = 0.0;
  std::size_t shared = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Circuit c = testing::random_circuit(rng, 4, 12);
    const Oracle oracle = make_oracle(c);
    const auto params = testing::random_angles(rng, c.num_params);
    const auto features = testing::random_angles(rng, c.num_features);
    for (std::size_t i = 0; i < c.num_params; ++i) {
      shared += c.occurrences(i).size() > 1;
      const auto ps = param_shift_gradient(oracle, c, params, i, features);
      const auto fd = central_difference(c, params, i, features);
      for (std::size_t k = 0; k < ps.size(); ++k) worst = std::max(worst, std::abs(ps[k] - fd[k]));
    }
  }
  EXPECT_LT(worst, 1e-6);
  EXPECT_GT(shared, 20u);
}

TEST(ParameterShift, RxGradientIsMinusSine) {
  const Circuit c{.num_qubits = 1, .num_params = 1, .num_features = 0,
                  .gates = {Gate::single(GateKind::RX, 0, Param{0})}};
  const Oracle oracle = make_oracle(c);
  Rng rng(stream_key(42, {}));
  for (int i = 0; i < 1000; ++i) {
    const std::vector<double> p = {8.0 * rng.uniform() - 4.0};
    EXPECT_NEAR(param_shift_gradient(oracle, c, p, 0, {})[0], -std::sin(p[0]), 1e-9);
  }
}

TEST(ParameterShift, SharedParameterSumsOccurrences) {
  // RX(t) RX(t) -> <Z> = cos 2t, derivative -2 sin 2t; -2 at t = pi/4.
  const Circuit c{.num_qubits = 1, .num_params = 1, .num_features = 0,
                  .gates = {Gate::single(GateKind::RX, 0, Param{0}), Gate::single(GateKind::RX, 0, Param{0})}};
  const std::vector<double> p = {std::numbers::pi / 4};
  std::size_t runs = 0;
  EXPECT_NEAR(param_shift_gradient(make_oracle(c), c, p, 0, {}, 0, &runs)[0], -2.0, 1e-12);
  EXPECT_EQ(runs, 4u);
}

TEST(ParameterShift, RejectsUnusedParameter) {
  const Circuit c{.num_qubits = 1, .num_params = 2, .num_features = 0,
                  .gates = {Gate::single(GateKind::RX, 0, Param{0})}};
  const std::vector<double> p = {0.1, 0.2};
  EXPECT_THROW(param_shift_gradient(make_oracle(c), c, p, 1, {}), std::invalid_argument);
}

TEST(Jacobian, SubsetLeavesOtherColumnsZero) {
  Rng rng(stream_key(43, {}));
  const Circuit c = testing::random_circuit(rng, 3, 10);
  const auto params = testing::random_angles(rng, c.num_params);
  const auto features = testing::random_angles(rng, c.num_features);
  const Oracle oracle = make_oracle(c);
  const GradientReport full = jacobian(oracle, c, params, features);
  const std::vector<std::size_t> subset = {0};
  const GradientReport part = jacobian(oracle, c, params, features, std::span<const std::size_t>(subset));
  for (std::size_t r = 0; r < c.num_qubits; ++r) {
    EXPECT_EQ(part.jacobian(r, 0), full.jacobian(r, 0));
    for (std::size_t j = 1; j < c.num_params; ++j) EXPECT_EQ(part.jacobian(r, j), 0.0);
  }
  EXPECT_EQ(part.circuit_runs, 2 * c.occurrences(0).size());
  EXPECT_EQ(part.param_evaluations, 1u);
  const std::vector<std::size_t> empty;
  EXPECT_THROW(jacobian(oracle, c, params, features, std::span<const std::size_t>(empty)), std::invalid_argument);
  const std::vector<std::size_t> bad = {c.num_params};
  EXPECT_THROW(jacobian(oracle, c, params, features, std::span<const std::size_t>(bad)), std::invalid_argument);
}

TEST(Loss, DownstreamIsSoftmaxMinusOneHot) {
  const std::vector<double> logits = {0.3, -1.2, 2.0, 0.0};
  const LossResult r = loss_and_downstream(logits, 2);
  double z = 0.0;
  for (double l : logits) z += std::exp(l);
  EXPECT_NEAR(r.loss, -(2.0 - std::log(z)), 1e-14);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_NEAR(r.probabilities[k], std::exp(logits[k]) / z, 1e-15);
    EXPECT_NEAR(r.downstream[k], r.probabilities[k] - (k == 2), 1e-15);
    // Finite difference of the loss in logit k.
    auto up = logits, down = logits;
    up[k] += 1e-6;
    down[k] -= 1e-6;
    const double fd = (loss_and_downstream(up, 2).loss - loss_and_downstream(down, 2).loss) / 2e-6;
    EXPECT_NEAR(r.downstream[k], fd, 1e-8);
  }
}

TEST(Loss, StableForLargeLogits) {
  const std::vector<double> logits = {1000.0, -1000.0};
  const LossResult r = loss_and_downstream(logits, 1);
  EXPECT_NEAR(r.loss, 2000.0, 1e-9);
  EXPECT_TRUE(std::isfinite(r.downstream[0]));
  const std::vector<double> nan = {std::nan(""), 0.0};
  EXPECT_THROW(loss_and_downstream(nan, 0), std::invalid_argument);
  EXPECT_THROW(loss_and_downstream(logits, 2), std::invalid_argument);
}

TEST(Chain, IsJacobianTransposeTimesDownstream) {
  Matrix j(2, 3);
  j.data = {1, 2, 3, 4, 5, 6};
  const std::vector<double> d = {0.5, -1.0};
  EXPECT_EQ(chain(j, d), (std::vector<double>{-3.5, -4.0, -4.5}));
  const std::vector<double> wrong = {1.0};
  EXPECT_THROW(chain(j, wrong), std::invalid_argument);
}

TEST(EvaluateSample, LossGradientMatchesFiniteDifference) {
  Rng rng(stream_key(44, {}));
  for (int trial = 0; trial < 20; ++trial) {
    Circuit c = testing::random_circuit(rng, 4, 10);
    c.num_qubits = 4;
    const Matrix head = Matrix::identity(4);
    const Oracle oracle = make_oracle(c);
    const auto params = testing::random_angles(rng, c.num_params);
    const auto features = testing::random_angles(rng, c.num_features);
    const std::size_t target = rng.below(4);
    const GradientReport rep = evaluate_sample(oracle, c, head, params, features, target);
    EXPECT_EQ(rep.circuit_runs, 1 + 2 * c.parametric_gate_count());
    for (std::size_t i = 0; i < c.num_params; ++i) {
      auto up = params, down = params;
      up[i] += 1e-5;
      down[i] -= 1e-5;
      const double lu = loss_and_downstream(testing::dense_expectations(c, up, features), target).loss;
      const double ld = loss_and_downstream(testing::dense_expectations(c, down, features), target).loss;
      EXPECT_NEAR(rep.grad[i], (lu - ld) / 2e-5, 1e-6);
    }
  }
}

TEST(Streams, NoisyShiftsAreKeyedIndependently) {
  std::set<std::uint64_t> keys = {forward_stream(5)};
  for (std::size_t p = 0; p < 4; ++p)
    for (std::size_t g = 0; g < 4; ++g)
      for (int s : {-1, 1}) keys.insert(shift_stream(5, p, g, s));
  EXPECT_EQ(keys.size(), 1u + 4 * 4 * 2);
}

}  // namespace
}  // namespace qpgp
