// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "qpgp/bench.hpp"
#include "qpgp/grad.hpp"
#include "qpgp/noise.hpp"
#include "test_util.hpp"

namespace {

using namespace qpgp;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

// Seeds used by every multi-seed comparison.
const std::vector<std::uint64_t> kSeeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};

std::map<std::string, Dataset> g_datasets;
const Dataset& dataset(TaskName task) {
  const std::string key(task_name(task));
  auto it = g_datasets.find(key);
  if (it == g_datasets.end()) it = g_datasets.emplace(key, load_task_dataset(dataset_spec_for(task))).first;
  return it->second;
}

struct MultiSeed {
  double mean = 0.0;
  double worst_seconds = 0.0;
  std::vector<double> acc;
};

MultiSeed run_seeds(json cfg, const std::vector<std::uint64_t>& seeds) {
  cfg["seeds"] = seeds;
  cfg["eval_every"] = 0;
  const ExperimentConfig c = ExperimentConfig::from_json(cfg);
  MultiSeed out;
  for (const RunRecord& r : run_experiment(c, dataset(c.task), false)) {
    out.acc.push_back(r.result.final_val_accuracy);
    out.worst_seconds = std::max(out.worst_seconds, r.wall_clock_seconds);
  }
  out.mean = std::accumulate(out.acc.begin(), out.acc.end(), 0.0) / static_cast<double>(out.acc.size());
  return out;
}

json noisy_config(TaskName task, PruningMode mode) {
  json j = default_config(task);
  j["noise"] = "default";
  j["pruning"]["mode"] = std::string(pruning_mode_name(mode));
  return j;
}

// Cached so criteria 4 and 6 share the probabilistic Fashion-2 runs.
std::map<std::string, MultiSeed> g_noisy;
const MultiSeed& noisy_runs(TaskName task, PruningMode mode) {
  const std::string key = std::string(task_name(task)) + "/" + std::string(pruning_mode_name(mode));
  auto it = g_noisy.find(key);
  if (it == g_noisy.end()) it = g_noisy.emplace(key, run_seeds(noisy_config(task, mode), kSeeds)).first;
  return it->second;
}

Outcome gradient_exactness() {
  const auto start = Clock::now();
  Rng rng(stream_key(2024, {1}));
  double worst = 0.0;
  std::size_t shared = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Circuit c = testing::random_circuit(rng, 4, 12);
    const Oracle oracle = make_oracle(c);
    auto params = testing::random_angles(rng, c.num_params);
    const auto features = testing::random_angles(rng, c.num_features);
    for (std::size_t i = 0; i < c.num_params; ++i) {
      shared += c.occurrences(i).size() > 1;
      const auto ps = param_shift_gradient(oracle, c, params, i, features);
      const double x = params[i], h = 1e-5;
      params[i] = x + h;
      const auto up = run_circuit(c, params, features);
      params[i] = x - h;
      const auto down = run_circuit(c, params, features);
      params[i] = x;
      for (std::size_t k = 0; k < ps.size(); ++k) worst = std::max(worst, std::abs(ps[k] - (up[k] - down[k]) / (2 * h)));
    }
  }
  const double t = seconds_since(start);
  return {worst < 1e-6 && t < 30.0 && shared > 0,
          fmt("max |shift - fd| = %.2e over 100 circuits (%zu shared-parameter columns), %.2f s", worst, shared, t)};
}

Outcome rx_analytic() {
  const Circuit c{.num_qubits = 1, .num_params = 1, .num_features = 0,
                  .gates = {Gate::single(GateKind::RX, 0, Param{0})}};
  const Oracle oracle = make_oracle(c);
  Rng rng(stream_key(2024, {2}));
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::vector<double> p = {4.0 * std::numbers::pi * (rng.uniform() - 0.5)};
    worst = std::max(worst, std::abs(param_shift_gradient(oracle, c, p, 0, {})[0] + std::sin(p[0])));
  }
  return {worst < 1e-9, fmt("max |grad + sin(theta)| = %.2e over 1000 angles", worst)};
}

Outcome noise_free_training() {
  const std::vector<std::pair<TaskName, double>> floors = {{TaskName::Mnist2, 0.83},
                                                           {TaskName::Fashion2, 0.84},
                                                           {TaskName::Mnist4, 0.55},
                                                           {TaskName::Fashion4, 0.65},
                                                           {TaskName::Vowel4, 0.30}};
  bool pass = true;
  std::string detail;
  for (const auto& [task, floor] : floors) {
    const MultiSeed r = run_seeds(default_config(task), {0, 1, 2});
    const double lowest = *std::min_element(r.acc.begin(), r.acc.end());
    pass = pass && lowest >= floor && r.worst_seconds < 600.0;
    detail += fmt("%s min %.3f mean %.3f (>= %.2f, %.1f s); ", std::string(task_name(task)).c_str(), lowest, r.mean,
                  floor, r.worst_seconds);
  }
  return {pass, detail};
}

Outcome pgp_under_noise() {
  bool pass = true;
  std::string detail;
  for (TaskName task : {TaskName::Mnist2, TaskName::Fashion2}) {
    const double pgp = noisy_runs(task, PruningMode::Probabilistic).mean;
    const double base = noisy_runs(task, PruningMode::Off).mean;
    pass = pass && pgp - base >= -0.01;
    detail += fmt("%s pgp %.4f vs no-pruning %.4f (diff %+.4f); ", std::string(task_name(task)).c_str(), pgp, base,
                  pgp - base);
  }
  return {pass, detail + fmt("%zu seeds, default noise", kSeeds.size())};
}

Outcome cost_accounting() {
  bool pass = true;
  std::string detail;
  for (TaskName task : {TaskName::Mnist2, TaskName::Fashion4, TaskName::Mnist4}) {
    const Model m(model_spec_for(task));
    const std::size_t n = m.circuit.num_params;
    Dataset d = dataset(task);
    TrainConfig c;
    c.pruning = {.accumulation_window = 1, .pruning_window = 2, .ratio = 0.5, .mode = PruningMode::Probabilistic};
    c.total_steps = 3;
    c.batch_size = 8;
    c.eval_every = 0;
    const TrainResult r = train(m, d, c);
    const std::size_t expected = c.batch_size * (n + 2 * ((n + 1) / 2));
    const bool ok = r.param_evaluations == expected && r.unpruned_param_evaluations == c.batch_size * 3 * n;
    pass = pass && ok;
    detail += fmt("n=%zu: %zu/%zu evaluations (expected %zu/%zu), saved %.4f; ", n, r.param_evaluations,
                  r.unpruned_param_evaluations, expected, c.batch_size * 3 * n, r.skipped_fraction());
  }
  return {pass, detail};
}

Outcome probabilistic_vs_deterministic() {
  const double prob = noisy_runs(TaskName::Fashion2, PruningMode::Probabilistic).mean;
  const double det = noisy_runs(TaskName::Fashion2, PruningMode::Deterministic).mean;
  return {prob >= det, fmt("fashion2 probabilistic %.4f vs deterministic %.4f over %zu seeds", prob, det, kSeeds.size())};
}

Outcome optimizer_ordering() {
  std::map<std::string, double> mean;
  for (const char* kind : {"adam", "momentum", "sgd"}) {
    json j = default_config(TaskName::Mnist2);
    j["optimizer"]["kind"] = kind;
    mean[kind] = run_seeds(j, kSeeds).mean;
  }
  return {mean["adam"] >= mean["momentum"] && mean["momentum"] >= mean["sgd"],
          fmt("mnist2 adam %.4f, momentum %.4f, sgd %.4f over %zu seeds", mean["adam"], mean["momentum"], mean["sgd"],
              kSeeds.size())};
}

Outcome scaling() {
  const std::vector<std::size_t> qubits = {12, 14, 16, 18};
  const auto rows = scaling_bench(qubits, 50);
  bool pass = true;
  std::string detail;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    pass = pass && !rows[i].skipped && rows[i].memory_bytes == (std::size_t{1} << rows[i].qubits) * sizeof(Complex);
    if (i == 0) continue;
    const double ratio = rows[i].mean_seconds / rows[i - 1].mean_seconds;
    pass = pass && ratio >= 3.0 && ratio <= 6.0;
    detail += fmt("t(%zu)/t(%zu)=%.2f; ", rows[i].qubits, rows[i - 1].qubits, ratio);
  }
  return {pass, detail + fmt("memory(18) = %zu bytes", rows.back().memory_bytes)};
}

Outcome physics_invariants() {
  Rng rng(stream_key(2024, {9}));
  StateVector s = StateVector::zero(6);
  for (int i = 0; i < 10000; ++i) {
    const GateKind k = kAllGateKinds[rng.below(kAllGateKinds.size())];
    const std::size_t a = rng.below(6), b = (a + 1 + rng.below(5)) % 6;
    const double angle = 2.0 * std::numbers::pi * rng.uniform();
    const Gate g = k == GateKind::CZ ? Gate::cz(a, b)
                   : is_two_qubit(k) ? Gate::pair(k, a, b, Constant{angle})
                                     : Gate::single(k, a, Constant{angle});
    apply_gate(s, g, angle);
  }
  const double drift = std::abs(s.norm_squared() - 1.0);

  StateVector t = StateVector::zero(1);
  apply_gate(t, Gate::single(GateKind::RY, 0, Constant{0.9}), 0.9);
  const double mu = std::cos(0.9);
  std::vector<double> est;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng r(stream_key(2024, {10, seed}));
    est.push_back(sample_shots(t, 1024, 0.0, r)[0]);
  }
  const double mean = std::accumulate(est.begin(), est.end(), 0.0) / 200.0;
  double var = 0.0;
  for (double e : est) var += (e - mean) * (e - mean);
  const double sd = std::sqrt(var / 199.0), want = std::sqrt((1 - mu * mu) / 1024.0);
  const double rel = std::abs(sd / want - 1.0);
  return {drift < 1e-10 && rel <= 0.2,
          fmt("norm drift %.2e after 1e4 gates; shot std %.5f vs %.5f (%.1f%% off)", drift, sd, want, 100 * rel)};
}

Outcome determinism() {
  bool pass = true;
  std::string detail;
  for (const char* setting : {"classical-train", "qc-train", "qc-train-pgp"}) {
    json j = default_config(TaskName::Fashion2);
    j["setting"] = setting;
    j["total_steps"] = 30;
    j["eval_every"] = 5;
    j["seeds"] = {7};
    const ExperimentConfig c = ExperimentConfig::from_json(j);
    const auto a = run_experiment(c, dataset(c.task), false);
    const auto b = run_experiment(c, dataset(c.task), false);
    const std::string ta = trace_to_string(a[0].result.trace), tb = trace_to_string(b[0].result.trace);
    pass = pass && ta == tb && !ta.empty();
    detail += fmt("%s %s (%zu bytes); ", setting, ta == tb ? "identical" : "DIFFERENT", ta.size());
  }
  return {pass, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient exactness", gradient_exactness},
      {"RX analytic gradient", rx_analytic},
      {"noise-free training accuracy", noise_free_training},
      {"PGP vs no pruning under noise", pgp_under_noise},
      {"cost accounting", cost_accounting},
      {"probabilistic vs deterministic", probabilistic_vs_deterministic},
      {"optimizer ordering", optimizer_ordering},
      {"classical scaling", scaling},
      {"physics invariants", physics_invariants},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(),
                seconds_since(start));
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
