//
// Copyright 2026 The dplsvi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "dplsvi/bench.hpp"
#include "dplsvi/dp_mechanisms.hpp"
#include "dplsvi/linear_mdp.hpp"
#include "dplsvi/lsvi_agents.hpp"

using namespace dplsvi;
using namespace dplsvi::bench;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, double limit_seconds, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = secs < limit_seconds;
  const bool pass = o.pass && in_time;
  failures += !pass;
  std::printf("%s criterion %d: %s [%.1fs of %.0fs]%s\n", pass ? "PASS" : "FAIL", id,
              o.detail.c_str(), secs, limit_seconds, in_time ? "" : " (too slow)");
  std::fflush(stdout);
}

std::string fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

ExperimentConfig default_experiment() {
  ExperimentConfig config;  // tabular 3 x 4, H = 5, K = 2000, 10 seeds
  return config;
}

AlgorithmEntry make_entry(Algorithm mode) {
  AlgorithmEntry e;
  e.mode = mode;
  return e;
}

// The suite shared by criteria 4-7 and 9: zero-noise LSVI-UCB++ and LSVI-UCB
// on the default instance.
const SuiteResult& comparison_suite() {
  static const SuiteResult suite = [] {
    ExperimentConfig config = default_experiment();
    config.algorithms = {make_entry(Algorithm::kLsviUcbPlusPlus),
                         make_entry(Algorithm::kLsviUcb)};
    return run_suite(config);
  }();
  return suite;
}

std::vector<RunResult>& twin_runs() {
  static std::vector<RunResult> runs;
  return runs;
}

double mean_window(const std::vector<RunResult>& runs, int from, int to) {
  double total = 0.0;
  for (const auto& r : runs) {
    for (int k = from; k < to; ++k) total += r.instant_regret[k];
  }
  return total / (static_cast<double>(runs.size()) * (to - from));
}

}  // namespace

int main() {
  const ExperimentConfig defaults = default_experiment();
  const int H = defaults.instance.horizon;
  const int K = defaults.episodes;

  report(1, 1.0, [&] {
    double worst = 0.0;
    for (auto [eps, dp] : {std::pair{1.0, 1e-3}, std::pair{0.1, 1e-5}}) {
      const double rho = dp_to_zcdp(eps, dp);
      const ZcdpBudget b = per_statistic_budget(rho, H, K);
      const std::vector<double> copies(static_cast<std::size_t>(b.statistic_count),
                                       b.rho_per_statistic);
      const double back = zcdp_to_dp(compose_zcdp(copies), dp).epsilon;
      worst = std::max(worst, std::abs(back - eps));
    }
    return Outcome{worst <= 1e-9, fmt("accounting round trip, max |eps error| = %.3g", worst)};
  });

  report(2, 30.0, [&] {
    const double rho0 = per_statistic_budget(dp_to_zcdp(1.0, 1e-3), H, 100).rho_per_statistic;
    const NoiseCalibration cal = calibrate_noise(dp_to_zcdp(1.0, 1e-3), H, 100, 12, 0.05);
    const double want1 = 2.0 * H * H / rho0, want3 = 2.0 * H * H * H * H / rho0;
    const double want_goe = 1.0 / (4.0 * rho0);
    const int n = 1000000;
    Rng rng(derive_key(defaults.master_seed, {2}));
    double s1 = 0.0, s3 = 0.0, sg = 0.0;
    for (int i = 0; i < n; ++i) {
      s1 += std::pow(sample_gaussian_vector(1, cal.sigma2_value_sum, rng)(0), 2);
      s3 += std::pow(sample_gaussian_vector(1, cal.sigma2_squared_value_sum, rng)(0), 2);
    }
    bool symmetric = true;
    for (int i = 0; i < n; ++i) {
      const Eigen::MatrixXd k = sample_goe(2, rho0, rng);
      symmetric = symmetric && k(0, 1) == k(1, 0);
      sg += k(0, 1) * k(0, 1);
    }
    const double e1 = std::abs(s1 / n / want1 - 1.0);
    const double e3 = std::abs(s3 / n / want3 - 1.0);
    const double eg = std::abs(sg / n / want_goe - 1.0);
    return Outcome{e1 <= 0.05 && e3 <= 0.05 && eg <= 0.05 && symmetric,
                   fmt("relative variance errors phi1 %.4f, phi3 %.4f, GOE %.4f, symmetric %g",
                       e1, e3, eg, symmetric)};
  });

  report(3, 120.0, [&] {
    const double rho = dp_to_zcdp(1.0, 1e-3);
    const int d = 12, episodes = 100, trials = 10000;
    const NoiseCalibration cal = calibrate_noise(rho, H, episodes, d, 0.05, 1.0, 1.0);
    const double rho0 = per_statistic_budget(rho, H, episodes).rho_per_statistic;
    Rng rng(derive_key(defaults.master_seed, {3}));
    int vec_ok = 0, goe_ok = 0;
    for (int t = 0; t < trials; ++t) {
      vec_ok += sample_gaussian_vector(d, cal.sigma2_value_sum, rng).norm() <= cal.L;
      goe_ok += spectral_norm(sample_goe(d, rho0, rng)) <= cal.lambda_tilde;
    }
    const double fv = static_cast<double>(vec_ok) / trials;
    const double fg = static_cast<double>(goe_ok) / trials;
    return Outcome{fv >= 0.95 && fg >= 0.95,
                   fmt("utility events: ||phi1|| <= L in %.4f, ||K1|| <= lambda_tilde in %.4f",
                       fv, fg)};
  });

  report(4, 60.0, [&] {
    const LinearMdpSpec spec = build_instance(defaults.instance);
    const AgentConfig pp =
        make_agent_config(defaults, spec, make_entry(Algorithm::kLsviUcbPlusPlus));
    const AgentConfig twin = zero_noise_private_twin(pp);
    int identical = 0;
    for (int i = 0; i < 5; ++i) {
      const std::uint64_t seed = derive_run_seed(defaults.master_seed, i);
      const RunResult a = run_training(spec, pp, K, seed);
      RunResult b = run_training(spec, twin, K, seed);
      identical += same_outcome(a, b);
      twin_runs().push_back(std::move(b));
    }
    return Outcome{identical == 5,
                   fmt("zero-noise DP agent matches LSVI-UCB++ bit for bit on %g of 5 seeds",
                       identical)};
  });

  report(5, 300.0, [&] {
    const auto& suite = comparison_suite();
    const LinearMdpSpec& spec = suite.spec;
    const double lambda = make_agent_config(defaults, spec,
                                            make_entry(Algorithm::kLsviUcbPlusPlus))
                              .lambda_tilde;
    const double d = spec.d;
    const double bound = d * H * std::log2(1.0 + K / (d * lambda)) + d * H;
    int worst = 0, ok = 0, total = 0;
    std::vector<const RunResult*> runs;
    for (const auto& r : suite.runs[0]) runs.push_back(&r);
    for (const auto& r : twin_runs()) runs.push_back(&r);
    for (const RunResult* r : runs) {
      worst = std::max(worst, r->switch_count());
      ok += r->switch_count() <= bound && r->episodes() == K;
      ++total;
    }
    return Outcome{ok == total && total > 0,
                   fmt("max switches %g <= bound %.1f on %g of %g runs", worst, bound, ok,
                       total)};
  });

  report(6, 60.0, [&] {
    const auto& suite = comparison_suite();
    std::int64_t violations = 0, records = 0;
    std::vector<const RunResult*> runs;
    for (const auto& r : suite.runs[0]) runs.push_back(&r);
    for (const auto& r : twin_runs()) runs.push_back(&r);
    for (const RunResult* r : runs) {
      violations += r->invariants.table_and_floor_violations();
      for (const auto& rec : r->variance_records) {
        violations += !(rec.sigma_bar >= H);
        ++records;
      }
      violations += r->abort_reason.has_value();
    }
    return Outcome{violations == 0 && records > 0,
                   fmt("%g table/clipping/floor violations over %g runs and %g variance records",
                       static_cast<double>(violations), static_cast<double>(runs.size()),
                       static_cast<double>(records))};
  });

  report(7, 600.0, [&] {
    const auto& suite = comparison_suite();
    const LinearMdpSpec& spec = suite.spec;
    const double per_episode = exact_optimal_values(spec).v[0](spec.initial_state) -
                               exact_uniform_policy_value(spec);
    const double uniform = per_episode * K;
    const double final_mean = suite.aggregates[0].final_mean();
    const double first = mean_window(suite.runs[0], 0, 200);
    const double last = mean_window(suite.runs[0], K - 200, K);
    return Outcome{final_mean < 0.5 * uniform && last < 0.25 * first,
                   fmt("regret %.2f vs uniform %.2f; last-200 mean %.5f vs first-200 %.5f",
                       final_mean, uniform, last, first)};
  });

  report(8, 1800.0, [&] {
    ExperimentConfig config = default_experiment();
    const std::vector<double> eps = {0.2, 1.0, 5.0, 1e6};
    const SuiteResult sweep = sweep_epsilon(config, eps);
    const auto& curves = sweep.aggregates;
    bool monotone = true;
    std::string finals;
    for (std::size_t i = 0; i < eps.size(); ++i) {
      finals += fmt("%g:%.1f ", eps[i], curves[i].final_mean());
      for (std::size_t j = i + 1; j < eps.size(); ++j) {
        monotone = monotone && curves[j].final_mean() <=
                                   curves[i].final_mean() +
                                       2.0 * pooled_standard_error(curves[i], curves[j]);
      }
    }
    const AggregateCurve& top = curves[eps.size() - 1];
    const AggregateCurve& ref = curves.back();
    const double se = pooled_standard_error(top, ref);
    const bool close = std::abs(top.final_mean() - ref.final_mean()) <= 2.0 * se;
    bool complete = true;
    for (const auto& c : curves) complete = complete && !c.partial;
    return Outcome{monotone && close && complete,
                   "final regret by eps " + finals +
                       fmt("| reference %.1f, |diff| %.1f vs 2SE %.1f", ref.final_mean(),
                           std::abs(top.final_mean() - ref.final_mean()), 2.0 * se)};
  });

  report(9, 600.0, [&] {
    const auto& suite = comparison_suite();
    const AggregateCurve& pp = suite.aggregates[0];
    const AggregateCurve& ucb = suite.aggregates[1];
    const double se = pooled_standard_error(pp, ucb);
    return Outcome{pp.final_mean() <= ucb.final_mean() + 3.0 * se,
                   fmt("LSVI-UCB++ %.3f vs LSVI-UCB %.3f + 3SE %.3f (= %.3f)",
                       pp.final_mean(), ucb.final_mean(), 3.0 * se,
                       ucb.final_mean() + 3.0 * se)};
  });

  report(10, 60.0, [&] {
    Rng gen(derive_key(defaults.master_seed, {10}));
    const LinearMdpSpec spec = make_tabular_instance(2, 2, 3, gen);
    // Exhaustive search over all 2^(2*3) deterministic policies.
    double best = -1.0;
    for (int code = 0; code < 64; ++code) {
      PolicySnapshot pi;
      pi.actions.assign(3, std::vector<int>(2));
      for (int i = 0; i < 6; ++i) pi.actions[i / 2][i % 2] = (code >> i) & 1;
      best = std::max(best, exact_policy_value(spec, pi));
    }
    const double gap = std::abs(exact_optimal_values(spec).v[0](spec.initial_state) - best);

    const int n = 100000;
    PolicySnapshot pi;
    pi.actions.assign(3, std::vector<int>(2, 1));
    Rng env(derive_key(defaults.master_seed, {11}));
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(2);
    for (int i = 0; i < n; ++i) counts(sample_episode(spec, pi, env)[0].next_state) += 1;
    const Eigen::VectorXd p = transition_distribution(spec, 0, spec.initial_state, 1);
    double worst_z = 0.0;
    for (int s = 0; s < 2; ++s) {
      const double se = std::sqrt(p(s) * (1.0 - p(s)) / n);
      const double dev = std::abs(counts(s) / n - p(s));
      worst_z = std::max(worst_z, se > 0 ? dev / se : (dev > 0 ? 1e9 : 0.0));
    }
    return Outcome{gap <= 1e-10 && worst_z <= 3.0,
                   fmt("|V* - enumeration max| = %.3g; max frequency deviation %.2f SE", gap,
                       worst_z)};
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
