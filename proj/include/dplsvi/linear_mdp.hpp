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

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dplsvi/rng.hpp"

namespace dplsvi {

// Stages are 0-based throughout the library: h = 0 is the first step of an
// episode and h = horizon - 1 the last.

/// Finite episodic linear MDP with stage-independent features.
///
/// P_h(s' | s, a) = <phi(s, a), mu_h(:, s')> and r_h(s, a) = <phi(s, a), theta_h>.
struct LinearMdpSpec {
  int d = 0;
  int horizon = 0;
  int num_states = 0;
  int num_actions = 0;
  int initial_state = 0;
  // Row s * num_actions + a holds phi(s, a).
  Eigen::MatrixXd features;
  // Per stage, d x num_states.
  std::vector<Eigen::MatrixXd> mu;
  // Per stage, length d.
  std::vector<Eigen::VectorXd> theta;

  int num_pairs() const { return num_states * num_actions; }
  int pair_index(int s, int a) const { return s * num_actions + a; }
  Eigen::VectorXd feature(int s, int a) const {
    return features.row(pair_index(s, a)).transpose();
  }

  friend bool operator==(const LinearMdpSpec&, const LinearMdpSpec&);
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ViolationKind {
  kShape,
  kInitialState,
  kFeatureNorm,
  kNegativeProbability,
  kProbabilitySum,
  kRewardRange,
  kMeasureNorm,
  kThetaNorm,
};

const char* to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  int h = -1;
  int s = -1;
  int a = -1;
  std::string message;
};

struct Step {
  int state = 0;
  int action = 0;
  double reward = 0.0;
  int next_state = 0;
};

using Trajectory = std::vector<Step>;

/// Deterministic per-stage policy: actions[h][s].
struct PolicySnapshot {
  std::vector<std::vector<int>> actions;

  int action(int h, int s) const { return actions[h][s]; }
  friend bool operator==(const PolicySnapshot&, const PolicySnapshot&) = default;
};

/// Q*_h as num_states x num_actions tables and V*_h for h = 0..horizon
/// (values[horizon] is identically zero).
struct OptimalValues {
  std::vector<Eigen::MatrixXd> q;
  std::vector<Eigen::VectorXd> v;
};

inline constexpr double kProbabilityTolerance = 1e-9;
inline constexpr double kClampWindow = 1e-12;

Eigen::VectorXd transition_distribution(const LinearMdpSpec& spec, int h,
                                        int s, int a);
double reward(const LinearMdpSpec& spec, int h, int s, int a);

std::vector<Violation> validate_spec(const LinearMdpSpec& spec);

/// Tabular MDP written as a linear MDP with one-hot features over S x A.
/// Transition rows are Dirichlet(1, ..., 1) draws and rewards are uniform on
/// [0, 1]; the initial state is 0.
LinearMdpSpec make_tabular_instance(int num_states, int num_actions,
                                    int horizon, Rng& rng);

/// Low-rank instance: mu_h holds d anchor distributions over states (one per
/// row) and every phi(s, a) is a point in the probability simplex over the
/// anchors, so each transition row is a convex combination of anchor rows.
LinearMdpSpec make_lowrank_instance(int num_states, int num_actions, int d,
                                    int horizon, Rng& rng);

/// Rolls out one episode from the initial state. Each step consumes exactly
/// one uniform draw, mapped to a next state by inverse CDF.
Trajectory sample_episode(const LinearMdpSpec& spec,
                          const PolicySnapshot& policy, Rng& rng);

OptimalValues exact_optimal_values(const LinearMdpSpec& spec);

/// V^pi_1(initial_state) by backward induction.
double exact_policy_value(const LinearMdpSpec& spec,
                          const PolicySnapshot& policy);

/// Value of the policy drawing actions uniformly at random at every step.
double exact_uniform_policy_value(const LinearMdpSpec& spec);

double per_episode_regret(const LinearMdpSpec& spec,
                          const PolicySnapshot& policy);
double per_episode_regret(const LinearMdpSpec& spec,
                          const OptimalValues& optimal,
                          const PolicySnapshot& policy);

/// Greedy policy for per-stage Q tables (ties to the lowest action index).
PolicySnapshot greedy_policy(const std::vector<Eigen::MatrixXd>& q_tables);

// Text format: header `d H |S| |A| s0`, then one line per (s, a) with
// phi(s, a), then for each stage the d rows of mu_h, then one line per stage
// with theta_h. Numbers use 17 significant digits so reloading is bit-exact.
void write_spec(std::ostream& out, const LinearMdpSpec& spec);
LinearMdpSpec read_spec(std::istream& in);
void save_spec(const std::string& path, const LinearMdpSpec& spec);
LinearMdpSpec load_spec(const std::string& path);

}  // namespace dplsvi
