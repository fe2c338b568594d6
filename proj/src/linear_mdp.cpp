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

#include "dplsvi/linear_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace dplsvi {

namespace {

std::string where(int h, int s, int a) {
  std::ostringstream os;
  os << "(h=" << h << ", s=" << s << ", a=" << a << ")";
  return os.str();
}

void check_indices(const LinearMdpSpec& spec, int h, int s, int a) {
  if (h < 0 || h >= spec.horizon || s < 0 || s >= spec.num_states || a < 0 ||
      a >= spec.num_actions) {
    throw std::out_of_range("index out of range " + where(h, s, a));
  }
}

Eigen::VectorXd dirichlet_uniform(int n, Rng& rng) {
  std::exponential_distribution<double> exp1(1.0);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x(i) = exp1(rng);
  return x / x.sum();
}

Eigen::VectorXd raw_transition(const LinearMdpSpec& spec, int h, int s, int a) {
  return spec.mu[h].transpose() * spec.feature(s, a);
}

}  // namespace

bool operator==(const LinearMdpSpec& x, const LinearMdpSpec& y) {
  if (x.d != y.d || x.horizon != y.horizon || x.num_states != y.num_states ||
      x.num_actions != y.num_actions || x.initial_state != y.initial_state ||
      x.mu.size() != y.mu.size() || x.theta.size() != y.theta.size() ||
      x.features.rows() != y.features.rows() ||
      x.features.cols() != y.features.cols()) {
    return false;
  }
  if (x.features != y.features) return false;
  for (std::size_t h = 0; h < x.mu.size(); ++h) {
    if (x.mu[h].rows() != y.mu[h].rows() || x.mu[h].cols() != y.mu[h].cols() ||
        x.mu[h] != y.mu[h]) {
      return false;
    }
  }
  for (std::size_t h = 0; h < x.theta.size(); ++h) {
    if (x.theta[h].size() != y.theta[h].size() || x.theta[h] != y.theta[h]) {
      return false;
    }
  }
  return true;
}

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kShape: return "shape";
    case ViolationKind::kInitialState: return "initial_state";
    case ViolationKind::kFeatureNorm: return "feature_norm";
    case ViolationKind::kNegativeProbability: return "negative_probability";
    case ViolationKind::kProbabilitySum: return "probability_sum";
    case ViolationKind::kRewardRange: return "reward_range";
    case ViolationKind::kMeasureNorm: return "measure_norm";
    case ViolationKind::kThetaNorm: return "theta_norm";
  }
  return "unknown";
}

Eigen::VectorXd transition_distribution(const LinearMdpSpec& spec, int h,
                                        int s, int a) {
  check_indices(spec, h, s, a);
  Eigen::VectorXd p = raw_transition(spec, h, s, a);
  bool clamped = false;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) < -kClampWindow) {
      throw ValidationError("negative transition probability at " +
                            where(h, s, a));
    }
    if (p(i) < 0.0) {
      p(i) = 0.0;
      clamped = true;
    }
  }
  const double total = p.sum();
  if (std::abs(total - 1.0) > kProbabilityTolerance) {
    throw ValidationError("transition probabilities do not sum to 1 at " +
                          where(h, s, a));
  }
  // Rows that already sum to 1 up to rounding are returned untouched so that
  // stored tabular rows come back bit-for-bit.
  if (clamped || std::abs(total - 1.0) > 1e-14) p /= total;
  return p;
}

double reward(const LinearMdpSpec& spec, int h, int s, int a) {
  check_indices(spec, h, s, a);
  const double r = spec.feature(s, a).dot(spec.theta[h]);
  if (r < -kClampWindow || r > 1.0 + kClampWindow) {
    throw ValidationError("reward outside [0, 1] at " + where(h, s, a));
  }
  return std::clamp(r, 0.0, 1.0);
}

std::vector<Violation> validate_spec(const LinearMdpSpec& spec) {
  std::vector<Violation> out;
  auto shape = [&](std::string msg) {
    out.push_back({ViolationKind::kShape, -1, -1, -1, std::move(msg)});
  };
  if (spec.d < 1 || spec.horizon < 1 || spec.num_states < 1 ||
      spec.num_actions < 1) {
    shape("dimensions must be positive");
    return out;
  }
  if (spec.features.rows() != spec.num_pairs() ||
      spec.features.cols() != spec.d) {
    shape("features must be (|S||A|) x d");
  }
  if (static_cast<int>(spec.mu.size()) != spec.horizon ||
      static_cast<int>(spec.theta.size()) != spec.horizon) {
    shape("mu and theta need one entry per stage");
  } else {
    for (int h = 0; h < spec.horizon; ++h) {
      if (spec.mu[h].rows() != spec.d || spec.mu[h].cols() != spec.num_states) {
        shape("mu_" + std::to_string(h) + " must be d x |S|");
      }
      if (spec.theta[h].size() != spec.d) {
        shape("theta_" + std::to_string(h) + " must have length d");
      }
    }
  }
  if (!out.empty()) return out;

  if (spec.initial_state < 0 || spec.initial_state >= spec.num_states) {
    out.push_back({ViolationKind::kInitialState, -1, spec.initial_state, -1,
                   "initial state out of range"});
  }
  for (int s = 0; s < spec.num_states; ++s) {
    for (int a = 0; a < spec.num_actions; ++a) {
      if (spec.feature(s, a).norm() > 1.0 + kClampWindow) {
        out.push_back({ViolationKind::kFeatureNorm, -1, s, a,
                       "||phi||_2 > 1 at " + where(-1, s, a)});
      }
    }
  }
  const double sqrt_d = std::sqrt(static_cast<double>(spec.d));
  for (int h = 0; h < spec.horizon; ++h) {
    for (int s = 0; s < spec.num_states; ++s) {
      for (int a = 0; a < spec.num_actions; ++a) {
        const Eigen::VectorXd p = raw_transition(spec, h, s, a);
        if (p.minCoeff() < -kClampWindow) {
          out.push_back({ViolationKind::kNegativeProbability, h, s, a,
                         "negative probability at " + where(h, s, a)});
        }
        if (std::abs(p.sum() - 1.0) > kProbabilityTolerance) {
          out.push_back({ViolationKind::kProbabilitySum, h, s, a,
                         "probabilities sum to " + std::to_string(p.sum()) +
                             " at " + where(h, s, a)});
        }
        const double r = spec.feature(s, a).dot(spec.theta[h]);
        if (r < -kClampWindow || r > 1.0 + kClampWindow) {
          out.push_back({ViolationKind::kRewardRange, h, s, a,
                         "reward " + std::to_string(r) + " outside [0, 1] at " +
                             where(h, s, a)});
        }
      }
    }
    if (spec.mu[h].rowwise().sum().norm() > sqrt_d + kProbabilityTolerance) {
      out.push_back({ViolationKind::kMeasureNorm, h, -1, -1,
                     "||mu_h(S)||_2 > sqrt(d) at stage " + std::to_string(h)});
    }
    if (spec.theta[h].norm() > sqrt_d + kProbabilityTolerance) {
      out.push_back({ViolationKind::kThetaNorm, h, -1, -1,
                     "||theta_h||_2 > sqrt(d) at stage " + std::to_string(h)});
    }
  }
  return out;
}

LinearMdpSpec make_tabular_instance(int num_states, int num_actions,
                                    int horizon, Rng& rng) {
  if (num_states < 1 || num_actions < 1 || horizon < 1) {
    throw std::invalid_argument("tabular instance needs |S|, |A|, H >= 1");
  }
  LinearMdpSpec spec;
  spec.num_states = num_states;
  spec.num_actions = num_actions;
  spec.horizon = horizon;
  spec.d = num_states * num_actions;
  spec.features = Eigen::MatrixXd::Identity(spec.d, spec.d);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int h = 0; h < horizon; ++h) {
    Eigen::MatrixXd mu(spec.d, num_states);
    for (int pair = 0; pair < spec.d; ++pair) {
      mu.row(pair) = dirichlet_uniform(num_states, rng).transpose();
    }
    spec.mu.push_back(std::move(mu));
  }
  for (int h = 0; h < horizon; ++h) {
    Eigen::VectorXd theta(spec.d);
    for (int pair = 0; pair < spec.d; ++pair) theta(pair) = unit(rng);
    spec.theta.push_back(std::move(theta));
  }
  return spec;
}

LinearMdpSpec make_lowrank_instance(int num_states, int num_actions, int d,
                                    int horizon, Rng& rng) {
  if (num_states < 1 || num_actions < 1 || d < 1 || horizon < 1) {
    throw std::invalid_argument("low-rank instance needs |S|, |A|, d, H >= 1");
  }
  LinearMdpSpec spec;
  spec.num_states = num_states;
  spec.num_actions = num_actions;
  spec.horizon = horizon;
  spec.d = d;
  spec.features.resize(spec.num_pairs(), d);
  for (int pair = 0; pair < spec.num_pairs(); ++pair) {
    spec.features.row(pair) = dirichlet_uniform(d, rng).transpose();
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int h = 0; h < horizon; ++h) {
    Eigen::MatrixXd mu(d, num_states);
    for (int j = 0; j < d; ++j) {
      mu.row(j) = dirichlet_uniform(num_states, rng).transpose();
    }
    spec.mu.push_back(std::move(mu));
    Eigen::VectorXd theta(d);
    for (int j = 0; j < d; ++j) theta(j) = unit(rng);
    spec.theta.push_back(std::move(theta));
  }
  return spec;
}

Trajectory sample_episode(const LinearMdpSpec& spec,
                          const PolicySnapshot& policy, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Trajectory out;
  out.reserve(spec.horizon);
  int s = spec.initial_state;
  for (int h = 0; h < spec.horizon; ++h) {
    const int a = policy.action(h, s);
    const double r = reward(spec, h, s, a);
    const Eigen::VectorXd p = transition_distribution(spec, h, s, a);
    const double u = unit(rng);
    int next = -1;
    double cumulative = 0.0;
    for (int j = 0; j < spec.num_states; ++j) {
      if (p(j) <= 0.0) continue;
      cumulative += p(j);
      next = j;
      if (u < cumulative) break;
    }
    out.push_back({s, a, r, next});
    s = next;
  }
  return out;
}

OptimalValues exact_optimal_values(const LinearMdpSpec& spec) {
  OptimalValues out;
  out.q.assign(spec.horizon, Eigen::MatrixXd());
  out.v.assign(spec.horizon + 1, Eigen::VectorXd::Zero(spec.num_states));
  for (int h = spec.horizon - 1; h >= 0; --h) {
    Eigen::MatrixXd q(spec.num_states, spec.num_actions);
    for (int s = 0; s < spec.num_states; ++s) {
      for (int a = 0; a < spec.num_actions; ++a) {
        q(s, a) = reward(spec, h, s, a) +
                  transition_distribution(spec, h, s, a).dot(out.v[h + 1]);
      }
    }
    out.v[h] = q.rowwise().maxCoeff();
    out.q[h] = std::move(q);
  }
  return out;
}

double exact_policy_value(const LinearMdpSpec& spec,
                          const PolicySnapshot& policy) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(spec.num_states);
  for (int h = spec.horizon - 1; h >= 0; --h) {
    Eigen::VectorXd next(spec.num_states);
    for (int s = 0; s < spec.num_states; ++s) {
      const int a = policy.action(h, s);
      next(s) = reward(spec, h, s, a) +
                transition_distribution(spec, h, s, a).dot(v);
    }
    v = std::move(next);
  }
  return v(spec.initial_state);
}

double exact_uniform_policy_value(const LinearMdpSpec& spec) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(spec.num_states);
  for (int h = spec.horizon - 1; h >= 0; --h) {
    Eigen::VectorXd next = Eigen::VectorXd::Zero(spec.num_states);
    for (int s = 0; s < spec.num_states; ++s) {
      for (int a = 0; a < spec.num_actions; ++a) {
        next(s) += reward(spec, h, s, a) +
                   transition_distribution(spec, h, s, a).dot(v);
      }
      next(s) /= spec.num_actions;
    }
    v = std::move(next);
  }
  return v(spec.initial_state);
}

double per_episode_regret(const LinearMdpSpec& spec,
                          const OptimalValues& optimal,
                          const PolicySnapshot& policy) {
  return optimal.v[0](spec.initial_state) - exact_policy_value(spec, policy);
}

double per_episode_regret(const LinearMdpSpec& spec,
                          const PolicySnapshot& policy) {
  return per_episode_regret(spec, exact_optimal_values(spec), policy);
}

PolicySnapshot greedy_policy(const std::vector<Eigen::MatrixXd>& q_tables) {
  PolicySnapshot policy;
  policy.actions.reserve(q_tables.size());
  for (const auto& q : q_tables) {
    std::vector<int> row(q.rows(), 0);
    for (Eigen::Index s = 0; s < q.rows(); ++s) {
      int best = 0;
      for (Eigen::Index a = 1; a < q.cols(); ++a) {
        if (q(s, a) > q(s, best)) best = static_cast<int>(a);
      }
      row[s] = best;
    }
    policy.actions.push_back(std::move(row));
  }
  return policy;
}

void write_spec(std::ostream& out, const LinearMdpSpec& spec) {
  const auto old_precision = out.precision(17);
  out << spec.d << ' ' << spec.horizon << ' ' << spec.num_states << ' '
      << spec.num_actions << ' ' << spec.initial_state << '\n';
  auto write_row = [&](const auto& row) {
    for (Eigen::Index j = 0; j < row.size(); ++j) {
      if (j) out << ' ';
      out << row(j);
    }
    out << '\n';
  };
  for (int pair = 0; pair < spec.num_pairs(); ++pair) {
    write_row(spec.features.row(pair));
  }
  for (const auto& mu : spec.mu) {
    for (Eigen::Index j = 0; j < mu.rows(); ++j) write_row(mu.row(j));
  }
  for (const auto& theta : spec.theta) write_row(theta);
  out.precision(old_precision);
}

LinearMdpSpec read_spec(std::istream& in) {
  LinearMdpSpec spec;
  if (!(in >> spec.d >> spec.horizon >> spec.num_states >> spec.num_actions >>
        spec.initial_state)) {
    throw ValidationError("malformed instance header");
  }
  if (spec.d < 1 || spec.horizon < 1 || spec.num_states < 1 ||
      spec.num_actions < 1) {
    throw ValidationError("instance header has nonpositive dimensions");
  }
  auto read = [&](double& x) {
    if (!(in >> x)) throw ValidationError("truncated instance body");
  };
  spec.features.resize(spec.num_pairs(), spec.d);
  for (int i = 0; i < spec.num_pairs(); ++i) {
    for (int j = 0; j < spec.d; ++j) read(spec.features(i, j));
  }
  for (int h = 0; h < spec.horizon; ++h) {
    Eigen::MatrixXd mu(spec.d, spec.num_states);
    for (int i = 0; i < spec.d; ++i) {
      for (int j = 0; j < spec.num_states; ++j) read(mu(i, j));
    }
    spec.mu.push_back(std::move(mu));
  }
  for (int h = 0; h < spec.horizon; ++h) {
    Eigen::VectorXd theta(spec.d);
    for (int j = 0; j < spec.d; ++j) read(theta(j));
    spec.theta.push_back(std::move(theta));
  }
  return spec;
}

void save_spec(const std::string& path, const LinearMdpSpec& spec) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_spec(out, spec);
  if (!out) throw std::runtime_error("failed writing " + path);
}

LinearMdpSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_spec(in);
}

}  // namespace dplsvi
