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

// Small helpers shared by the unit tests.

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "dplsvi/linear_mdp.hpp"

namespace testutil {

// Tabular spec from explicit rows: rows[h][s * A + a] is P_h(. | s, a) and
// rewards[h][s * A + a] is r_h(s, a).
inline dplsvi::LinearMdpSpec tabular_spec(
    int num_states, int num_actions,
    const std::vector<std::vector<std::vector<double>>>& rows,
    const std::vector<std::vector<double>>& rewards) {
  dplsvi::LinearMdpSpec spec;
  spec.num_states = num_states;
  spec.num_actions = num_actions;
  spec.horizon = static_cast<int>(rows.size());
  spec.d = num_states * num_actions;
  spec.features = Eigen::MatrixXd::Identity(spec.d, spec.d);
  for (int h = 0; h < spec.horizon; ++h) {
    Eigen::MatrixXd mu(spec.d, num_states);
    Eigen::VectorXd theta(spec.d);
    for (int i = 0; i < spec.d; ++i) {
      for (int s = 0; s < num_states; ++s) mu(i, s) = rows[h][i][s];
      theta(i) = rewards[h][i];
    }
    spec.mu.push_back(mu);
    spec.theta.push_back(theta);
  }
  return spec;
}

inline dplsvi::LinearMdpSpec seeded_tabular(int S, int A, int H,
                                            std::uint64_t seed) {
  dplsvi::Rng rng(seed);
  return dplsvi::make_tabular_instance(S, A, H, rng);
}

// Calls `visit` on every deterministic policy of the instance.
inline void for_each_policy(
    const dplsvi::LinearMdpSpec& spec,
    const std::function<void(const dplsvi::PolicySnapshot&)>& visit) {
  const int slots = spec.horizon * spec.num_states;
  std::vector<int> digits(slots, 0);
  while (true) {
    dplsvi::PolicySnapshot policy;
    policy.actions.assign(spec.horizon, std::vector<int>(spec.num_states));
    for (int i = 0; i < slots; ++i) {
      policy.actions[i / spec.num_states][i % spec.num_states] = digits[i];
    }
    visit(policy);
    int i = 0;
    while (i < slots && ++digits[i] == spec.num_actions) digits[i++] = 0;
    if (i == slots) break;
  }
}

// V^pi_0(s0) by an independent scalar recursion over explicit loops.
inline double scalar_policy_value(const dplsvi::LinearMdpSpec& spec,
                                  const dplsvi::PolicySnapshot& policy) {
  std::vector<double> next(spec.num_states, 0.0);
  for (int h = spec.horizon - 1; h >= 0; --h) {
    std::vector<double> cur(spec.num_states, 0.0);
    for (int s = 0; s < spec.num_states; ++s) {
      const int a = policy.action(h, s);
      double r = 0.0;
      for (int j = 0; j < spec.d; ++j) {
        r += spec.features(s * spec.num_actions + a, j) * spec.theta[h](j);
      }
      double ev = 0.0;
      for (int t = 0; t < spec.num_states; ++t) {
        double p = 0.0;
        for (int j = 0; j < spec.d; ++j) {
          p += spec.features(s * spec.num_actions + a, j) * spec.mu[h](j, t);
        }
        ev += p * next[t];
      }
      cur[s] = r + ev;
    }
    next = cur;
  }
  return next[spec.initial_state];
}

inline dplsvi::PolicySnapshot constant_policy(const dplsvi::LinearMdpSpec& spec,
                                              int action) {
  dplsvi::PolicySnapshot policy;
  policy.actions.assign(spec.horizon, std::vector<int>(spec.num_states, action));
  return policy;
}

}  // namespace testutil
