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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dplsvi/linear_mdp.hpp"
#include "dplsvi/lsvi_agents.hpp"

namespace dplsvi::bench {

/// Which environment a suite runs on. `generator` is "tabular", "lowrank" or
/// "file" (read from `path`).
struct InstanceDescriptor {
  std::string generator = "tabular";
  int num_states = 3;
  int num_actions = 4;
  int horizon = 5;
  int d = 4;  // low-rank generator only
  std::uint64_t seed = 7;
  std::string path;
};

LinearMdpSpec build_instance(const InstanceDescriptor& instance);

struct AlgorithmEntry {
  Algorithm mode = Algorithm::kLsviUcbPlusPlus;
  // Private entries take either epsilon (converted with delta_prime) or rho.
  std::optional<double> epsilon;
  std::optional<double> rho;
  double delta_prime = 1e-3;
  // Unset: calibrated_radius_multiplier() for this entry.
  std::optional<double> radius_multiplier;
  // Private entries only: run the zero-noise twin, which keeps the private
  // lambda_tilde and radii but injects nothing.
  bool zero_noise = false;

  std::string label() const;
};

// Desk-scale defaults. The learners' theoretical constants (radii and the
// d^3 constants of the variance weights) are far too conservative for a few
// thousand episodes, so the suite scales them down; see README.
inline constexpr double kDefaultRidgeLambda = 1e-4;
inline constexpr double kDefaultDCubedScale = 1e-5;

/// Multiplier that makes the bonus of a direction nobody has visited equal H
/// at the initial Gram matrix: beta / sqrt(2 lambda_tilde) for the ++
/// learners, beta / sqrt(lambda) for LSVI-UCB. `unit` is the config built
/// with multiplier 1.
double calibrated_radius_multiplier(const AgentConfig& unit, int horizon);

/// Ridge lambda of LSVI-UCB matching the ++ prior 2 lambda_tilde I at
/// sigma_bar = H, i.e. 2 lambda_tilde H^2.
double matched_ucb_lambda(double lambda_tilde, int horizon);

struct ExperimentConfig {
  InstanceDescriptor instance;
  int episodes = 2000;
  std::vector<AlgorithmEntry> algorithms;
  int num_seeds = 10;
  std::uint64_t master_seed = 20240601;
  std::string output_dir;  // empty: nothing is written
  bool plot = false;
  AgentOptions agent = default_agent_options();
  int threads = 0;  // 0: hardware concurrency

  static AgentOptions default_agent_options();
};

/// Throws std::invalid_argument on num_seeds < 1, episodes < 1, or a private
/// entry without a positive budget.
void validate_experiment(const ExperimentConfig& config);

/// Seed of the i-th run of every algorithm entry; identical across entries so
/// that comparisons are paired.
std::uint64_t derive_run_seed(std::uint64_t master_seed, int seed_index);

AgentConfig make_agent_config(const ExperimentConfig& config,
                              const LinearMdpSpec& spec,
                              const AlgorithmEntry& entry);

struct AggregateCurve {
  std::string algorithm;
  double epsilon = 0.0;
  std::vector<double> mean_cumulative_regret;
  std::vector<double> std_cumulative_regret;
  std::vector<int> count;
  bool partial = false;

  double final_mean() const { return mean_cumulative_regret.back(); }
  double final_std() const { return std_cumulative_regret.back(); }
  int final_count() const { return count.back(); }
};

/// Per-episode mean and sample standard deviation of cumulative regret over
/// the runs; runs that aborted early only contribute to the episodes they
/// completed and mark the curve partial.
AggregateCurve aggregate(const std::vector<RunResult>& runs,
                         const std::string& algorithm, double epsilon,
                         int episodes);

struct SuiteResult {
  LinearMdpSpec spec;
  std::vector<AlgorithmEntry> entries;
  // runs[e][i]: entry e, seed index i.
  std::vector<std::vector<RunResult>> runs;
  std::vector<AggregateCurve> aggregates;
};

SuiteResult run_suite(const ExperimentConfig& config);

/// Private entries for every epsilon (ascending) followed by the zero-noise
/// reference (the twin of the largest-epsilon entry), all on the same
/// instance and seeds.
SuiteResult sweep_epsilon(const ExperimentConfig& config,
                          const std::vector<double>& epsilons);

/// Standard error of the difference of two final means.
double pooled_standard_error(const AggregateCurve& a, const AggregateCurve& b);

// CSV schemas:
//   runs:      run_id,algorithm,epsilon,delta_prime,seed,episode,
//              instant_regret,cumulative_regret,switch_count_so_far
//   aggregate: algorithm,epsilon,episode,mean_cum_regret,std,n
void write_runs_csv(std::ostream& out, const std::vector<RunResult>& runs);
void write_aggregate_csv(std::ostream& out,
                         const std::vector<AggregateCurve>& curves);

/// Writes runs.csv and aggregate.csv under `directory`.
void emit_csv(const SuiteResult& suite, const std::string& directory);

struct RunCsvRow {
  int run_id = 0;
  std::string algorithm;
  double epsilon = 0.0;
  double delta_prime = 0.0;
  std::uint64_t seed = 0;
  int episode = 0;
  double instant_regret = 0.0;
  double cumulative_regret = 0.0;
  int switch_count_so_far = 0;
};

std::vector<RunCsvRow> read_runs_csv(std::istream& in);

/// Self-contained SVG of cumulative regret against episode with +-1 std
/// bands and a legend entry per curve. Output is a pure function of input.
void write_plot_svg(std::ostream& out, const std::vector<AggregateCurve>& curves,
                    const std::string& title);
void emit_plot(const std::vector<AggregateCurve>& curves, const std::string& path,
               const std::string& title = "Cumulative regret");

/// Flat `key = value` description of the suite and, for private entries, the
/// accountant report.
void write_metadata(std::ostream& out, const ExperimentConfig& config,
                    const SuiteResult& suite);

/// Runs the suite and writes every artifact requested by the config.
SuiteResult run_and_emit(const ExperimentConfig& config,
                         const std::vector<double>* sweep_epsilons = nullptr);

}  // namespace dplsvi::bench
