#include <gtest/gtest.h>

#include <functional>
#include <numeric>

#include "qpgp/pgp.hpp"
#include "qpgp/rng.hpp"

namespace qpgp {
namespace {

/// Exact inclusion probabilities of k sequential weighted draws without
/// replacement, by enumerating every ordered draw sequence.
std::vector<double> inclusion_oracle(const std::vector<double>& w, std::size_t k) {
  std::vector<double> incl(w.size(), 0.0);
  std::vector<bool> used(w.size(), false);
  std::function<void(std::size_t, double)> walk = [&](std::size_t depth, double prob) {
    if (depth == k) {
      for (std::size_t i = 0; i < w.size(); ++i) incl[i] += used[i] ? prob : 0.0;
      return;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) total += used[i] ? 0.0 : w[i];
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (used[i] || w[i] == 0.0) continue;
      used[i] = true;
      walk(depth + 1, prob * w[i] / total);
      used[i] = false;
    }
  };
  walk(0, 1.0);
  return incl;
}

std::vector<double> empirical_inclusion(const std::vector<double>& m, double ratio, int trials) {
  std::vector<double> freq(m.size(), 0.0);
  for (int t = 0; t < trials; ++t) {
    Rng rng(stream_key(51, {static_cast<std::uint64_t>(t)}));
    for (std::size_t i : sample_subset(m, ratio, PruningMode::Probabilistic, rng)) freq[i] += 1.0;
  }
  for (double& f : freq) f /= trials;
  return freq;
}

TEST(KeepCount, RoundsAndClamps) {
  PruningConfig c;
  c.ratio = 0.5;
  EXPECT_EQ(c.keep_count(8), 4u);
  EXPECT_EQ(c.keep_count(7), 4u);  // round(3.5) away from zero
  c.ratio = 0.9;
  EXPECT_EQ(c.keep_count(4), 1u);
  c.ratio = 0.99;
  EXPECT_EQ(c.keep_count(3), 1u);
  c.ratio = 0.0;
  EXPECT_EQ(c.keep_count(5), 5u);
  c.ratio = 0.7;
  EXPECT_EQ(c.keep_count(24), 7u);
}

TEST(KeepCount, SkippedFractionFormula) {
  PruningConfig c{.accumulation_window = 1, .pruning_window = 2, .ratio = 0.5};
  EXPECT_DOUBLE_EQ(c.skipped_fraction(), 1.0 / 3.0);
  c.mode = PruningMode::Off;
  EXPECT_EQ(c.skipped_fraction(), 0.0);
}

TEST(Sampler, InclusionProbabilitiesMatchEnumeration) {
  const std::vector<double> m = {2.0, 1.0, 1.0, 0.0};
  const double eps = 1e-12 + 1e-6 * 1.0;
  std::vector<double> w;
  for (double x : m) w.push_back(x + eps);
  const auto want = inclusion_oracle(w, 2);
  const auto got = empirical_inclusion(m, 0.5, 100000);
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_NEAR(got[i], want[i], 0.01) << "index " << i;
  EXPECT_GT(want[0], want[1]);
}

TEST(Sampler, InclusionOnLargerVector) {
  const std::vector<double> m = {0.5, 3.0, 0.1, 1.0, 2.0, 0.2};
  std::vector<double> w;
  const double mean = std::accumulate(m.begin(), m.end(), 0.0) / m.size();
  for (double x : m) w.push_back(x + 1e-12 + 1e-6 * mean);
  const auto want = inclusion_oracle(w, 3);
  const auto got = empirical_inclusion(m, 0.5, 50000);
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_NEAR(got[i], want[i], 0.01) << "index " << i;
}

TEST(Sampler, AllZeroMagnitudesAreUniform) {
  const std::vector<double> m(5, 0.0);
  const auto got = empirical_inclusion(m, 0.6, 20000);  // keep 2 of 5
  for (double f : got) EXPECT_NEAR(f, 0.4, 0.015);
}

TEST(Sampler, SubsetsAreSortedDistinctAndSized) {
  Rng rng(3);
  std::vector<double> m(37);
  for (double& x : m) x = rng.uniform();
  for (double r : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const auto s = sample_subset(m, r, PruningMode::Probabilistic, rng);
    EXPECT_EQ(s.size(), (PruningConfig{.ratio = r}).keep_count(37));
    EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
    EXPECT_EQ(std::adjacent_find(s.begin(), s.end()), s.end());
  }
}

TEST(Sampler, DeterministicTakesTopKWithStableTies) {
  Rng rng(0);
  const std::vector<double> m = {0.1, 0.9, 0.5, 0.9, 0.2, 0.5};
  EXPECT_EQ(sample_subset(m, 0.5, PruningMode::Deterministic, rng), (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_EQ(sample_subset(m, 2.0 / 3.0, PruningMode::Deterministic, rng), (std::vector<std::size_t>{1, 3}));
}

TEST(Sampler, OffAndZeroRatioKeepEverything) {
  Rng rng(0);
  const std::vector<double> m = {1, 2, 3};
  const std::vector<std::size_t> all = {0, 1, 2};
  EXPECT_EQ(sample_subset(m, 0.5, PruningMode::Off, rng), all);
  EXPECT_EQ(sample_subset(m, 0.0, PruningMode::Probabilistic, rng), all);
  EXPECT_THROW(sample_subset({}, 0.5, PruningMode::Probabilistic, rng), std::invalid_argument);
}

TEST(Sampler, SameKeySameSubset) {
  const std::vector<double> m = {0.3, 0.2, 0.9, 0.4, 0.8, 0.1};
  Rng a(stream_key(9, {1, 2})), b(stream_key(9, {1, 2}));
  EXPECT_EQ(sample_subset(m, 0.5, PruningMode::Probabilistic, a),
            sample_subset(m, 0.5, PruningMode::Probabilistic, b));
}

TEST(PruningState, AccumulatesAbsoluteGradientsPerStage) {
  PruningState s(3);
  s.start_stage();
  EXPECT_EQ(s.stage(), 1u);
  s.accumulate(std::vector<double>{1.0, -2.0, 0.5});
  s.accumulate(std::vector<double>{-1.0, 1.0, 0.0});
  EXPECT_EQ(std::vector<double>(s.magnitude().begin(), s.magnitude().end()), (std::vector<double>{2.0, 3.0, 0.5}));
  s.enter_pruning();
  EXPECT_EQ(s.phase(), Phase::Pruning);
  EXPECT_THROW(s.accumulate(std::vector<double>{1, 1, 1}), std::logic_error);
  s.start_stage();
  EXPECT_EQ(s.stage(), 2u);
  EXPECT_EQ(s.phase(), Phase::Accumulating);
  for (double m : s.magnitude()) EXPECT_EQ(m, 0.0);
  EXPECT_THROW(s.accumulate(std::vector<double>{1, 1}), std::invalid_argument);
}

TEST(PruningConfig, Validates) {
  EXPECT_THROW((PruningConfig{.accumulation_window = 0}).validate(), std::invalid_argument);
  EXPECT_NO_THROW((PruningConfig{.pruning_window = 0}).validate());
  EXPECT_THROW((PruningConfig{.ratio = 1.0}).validate(), std::invalid_argument);
  EXPECT_THROW((PruningConfig{.ratio = -0.1}).validate(), std::invalid_argument);
  EXPECT_NO_THROW(PruningConfig{}.validate());
  EXPECT_EQ(parse_pruning_mode("deterministic"), PruningMode::Deterministic);
  EXPECT_THROW(parse_pruning_mode("random"), std::invalid_argument);
}

}  // namespace
}  // namespace qpgp
