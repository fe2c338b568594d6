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
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dplsvi/dp_mechanisms.hpp"
#include "dplsvi/linear_mdp.hpp"

namespace dplsvi {

enum class Algorithm {
  kDpLsviUcbPlusPlus,  // privatized statistics, rare switching
  kLsviUcbPlusPlus,    // same learner without noise
  kLsviUcb,            // unweighted ridge, Hoeffding bonus, updates every episode
};

const char* to_string(Algorithm algorithm);
/// Accepts the CLI spellings `dp`, `pp`, `ucb` as well as the full names.
std::optional<Algorithm> parse_algorithm(const std::string& text);

/// How the privatized Gram matrix picks up the GOE perturbation.
///
/// kRelease: every episode releases 2*lambda*I + G + K1 with G the exact
/// weighted Gram sum and K1 the perturbation drawn for that release.
/// kAccumulate: Lambda_{k+1} = Lambda_k + w phi phi^T + K1, so perturbations
/// add up over episodes.
enum class GramNoise { kRelease, kAccumulate };

const char* to_string(GramNoise mode);

class StateCorruptionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The injected noise pushed the Gram matrix out of the positive-definite
/// cone.
class UtilityEventFailure : public StateCorruptionError {
 public:
  using StateCorruptionError::StateCorruptionError;
};

struct ConfidenceRadii {
  double beta_hat = 0.0;
  double beta_check = 0.0;
  double beta_bar = 0.0;
  double beta_bern = 0.0;

  friend bool operator==(const ConfidenceRadii&, const ConfidenceRadii&) = default;
};

/// Radii from the bracketed expressions of the confidence bounds:
///   beta_hat = beta_check = m * (H L sqrt(d lambda) + sqrt(d^3 H^2) |log x|)
///   beta_bar = m * (H^2 L^2 sqrt(d lambda) + sqrt(d^3 H^4) |log x|)
///   beta_bern = m * (H L sqrt(d lambda) + sqrt(d) log(1 + x))
/// with x = H K^4 L^2 d / (delta lambda) and m the multiplier.
ConfidenceRadii compute_confidence_radii(int d, int horizon, int episodes,
                                         double L, double lambda_tilde,
                                         double delta, double multiplier);

struct AgentConfig {
  Algorithm mode = Algorithm::kLsviUcbPlusPlus;
  ConfidenceRadii radii;
  double radius_multiplier = 1.0;
  // Lambda_0 = 2 * lambda_tilde * I for the ++ learners, lambda * I for the
  // Hoeffding baseline.
  double lambda_tilde = 1.0;
  std::optional<NoiseCalibration> noise;
  double delta = 0.05;
  // Multiplies every d^3 constant of the variance weight: both constants of
  // D and the 2 d^3 H^2 ||phi||^{1/2} floor of sigma_bar.
  double d_cubed_scale = 1.0;
  NoiseReuse noise_reuse = NoiseReuse::kFresh;
  GramNoise gram_noise = GramNoise::kRelease;
  // Reporting only.
  double epsilon = std::numeric_limits<double>::infinity();
  double delta_prime = 0.0;
  double rho = std::numeric_limits<double>::infinity();

  bool is_zero_noise() const { return !noise || noise->is_zero_noise(); }
  /// L in the weight-norm bounds; 1 when no noise is injected.
  double weight_bound_L() const {
    return is_zero_noise() ? 1.0 : noise->L;
  }
};

/// Throws std::invalid_argument when the config is inconsistent.
void validate_config(const AgentConfig& config);

struct AgentOptions {
  double delta = 0.05;
  double radius_multiplier = 1.0;
  double d_cubed_scale = 1.0;
  double ridge_lambda = 1.0;  // non-private learners only
  double c1 = 1.0;
  double c2 = 1.0;
  NoiseReuse noise_reuse = NoiseReuse::kFresh;
  GramNoise gram_noise = GramNoise::kRelease;
};

/// DP-LSVI-UCB++ at total zCDP level rho; lambda_tilde, L and the radii come
/// from the utility bounds.
AgentConfig make_private_config(int d, int horizon, int episodes, double rho,
                                double delta_prime, const AgentOptions& options);

/// LSVI-UCB++ with ridge lambda and L = 1 in the radii.
AgentConfig make_nonprivate_config(int d, int horizon, int episodes,
                                   const AgentOptions& options);

/// LSVI-UCB with beta = multiplier * d H sqrt(log(2 d H K / delta)).
AgentConfig make_ucb_config(int d, int horizon, int episodes,
                            const AgentOptions& options);

/// DP mode that shares lambda and radii with `config` but injects no noise.
AgentConfig zero_noise_private_twin(const AgentConfig& config);

struct RegressionTargets {
  Eigen::VectorXd b_hat;    // sum w phi V_hat(s')
  Eigen::VectorXd b_check;  // sum w phi V_check(s')
  Eigen::VectorXd b_bar;    // sum w phi V_hat(s')^2
};

struct NoiseVectors {
  Eigen::VectorXd phi_hat;
  Eigen::VectorXd phi_check;
  Eigen::VectorXd phi_bar;

  static NoiseVectors zeros(int d);
};

struct WeightTriple {
  Eigen::VectorXd w_hat;
  Eigen::VectorXd w_check;
  Eigen::VectorXd w_bar;
};

struct VarianceRecord {
  double v_bar = 0.0;
  double E = 0.0;
  double D = 0.0;
  double sigma = 0.0;
  double sigma_bar = 0.0;

  friend bool operator==(const VarianceRecord&, const VarianceRecord&) = default;
};

/// Solves Lambda x = b + noise for the three targets through one Cholesky
/// factorization. Throws StateCorruptionError if Lambda is not positive
/// definite or a residual exceeds 1e-8 * ||b + noise||.
WeightTriple compute_weights(const Eigen::MatrixXd& lambda,
                             const RegressionTargets& targets,
                             const NoiseVectors& noise);

/// sqrt(phi^T Lambda^{-1} phi).
double elliptical_norm(const Eigen::LLT<Eigen::MatrixXd>& factor,
                       const Eigen::VectorXd& phi);
double elliptical_norm(const Eigen::MatrixXd& lambda, const Eigen::VectorXd& phi);

/// [w_bar^T phi]_[0, H^2] - [w_hat^T phi]_[0, H]^2.
double estimate_variance(const Eigen::VectorXd& w_hat,
                         const Eigen::VectorXd& w_bar,
                         const Eigen::VectorXd& phi, int horizon);

double error_term_E(double beta_bar, double beta_hat, double phi_norm,
                    int horizon);
double compute_E(double beta_bar, double beta_hat, const Eigen::VectorXd& phi,
                 const Eigen::MatrixXd& lambda, int horizon);

/// min(4 c H^2 max(0, gap + 2 beta_hat ||phi||), c H^3) with c = scale * d^3.
double error_term_D(double gap, double beta_hat, double phi_norm, int d,
                    int horizon, double d_cubed_scale = 1.0);
double compute_D(const Eigen::VectorXd& w_hat, const Eigen::VectorXd& w_check,
                 double beta_hat, const Eigen::VectorXd& phi,
                 const Eigen::MatrixXd& lambda, int d, int horizon,
                 double d_cubed_scale = 1.0);

/// sigma = sqrt(max(0, v_bar + E + D + H)),
/// sigma_bar = max(sigma, H, scale * 2 d^3 H^2 sqrt(phi_norm)).
std::pair<double, double> sigma_from_norm(double v_bar, double E, double D,
                                          int horizon, int d, double phi_norm,
                                          double d_cubed_scale = 1.0);
std::pair<double, double> sigma_and_bar(double v_bar, double E, double D,
                                        int horizon, int d,
                                        const Eigen::VectorXd& phi,
                                        const Eigen::MatrixXd& lambda,
                                        double d_cubed_scale = 1.0);

/// log det of a positive-definite matrix via Cholesky; nullopt otherwise.
std::optional<double> log_det(const Eigen::MatrixXd& matrix);

/// True iff some stage has log det(current) >= log 2 + log det(last).
bool switch_condition(const std::vector<Eigen::MatrixXd>& current,
                      const std::vector<Eigen::MatrixXd>& at_last_switch);

struct StageTables {
  Eigen::MatrixXd q_hat;    // |S| x |A|, optimistic
  Eigen::MatrixXd q_check;  // |S| x |A|, pessimistic
};

/// Q_hat <- min{r + w_hat.phi + beta_hat ||phi||, Q_hat_prev, H}
/// Q_check <- max{r + w_check.phi - beta_check ||phi||, Q_check_prev, 0}
void update_q_tables(StageTables& tables, const LinearMdpSpec& spec, int h,
                     const WeightTriple& weights, const ConfidenceRadii& radii,
                     const Eigen::LLT<Eigen::MatrixXd>& factor);

/// Greedy action, ties to the lowest index.
int act(const Eigen::MatrixXd& q_hat, int s);

/// Lambda + phi phi^T / sigma_bar^2 + K1, symmetrized. Throws
/// UtilityEventFailure if the result is not positive definite.
Eigen::MatrixXd gram_update(const Eigen::MatrixXd& lambda, double sigma_bar,
                            const Eigen::VectorXd& phi,
                            const Eigen::MatrixXd& k1_noise);

struct InvariantCounters {
  std::int64_t q_hat_increase = 0;
  std::int64_t q_check_decrease = 0;
  std::int64_t q_hat_out_of_range = 0;
  std::int64_t q_check_out_of_range = 0;
  std::int64_t q_check_above_q_hat = 0;
  std::int64_t sigma_bar_below_horizon = 0;
  std::int64_t sigma_bar_below_sigma = 0;
  std::int64_t error_terms_out_of_range = 0;
  // Zero-noise only.
  std::int64_t logdet_above_ceiling = 0;
  std::int64_t min_eigenvalue_below_floor = 0;
  // Only while every noise release has satisfied its utility bound.
  std::int64_t weight_norm_exceeded = 0;

  /// Table monotonicity, table clipping and the sigma_bar floor.
  std::int64_t table_and_floor_violations() const {
    return q_hat_increase + q_check_decrease + q_hat_out_of_range +
           q_check_out_of_range + sigma_bar_below_horizon;
  }
  friend bool operator==(const InvariantCounters&, const InvariantCounters&) = default;
};

struct RunResult {
  std::string algorithm;
  double epsilon = std::numeric_limits<double>::infinity();
  double delta_prime = 0.0;
  std::uint64_t seed = 0;

  std::vector<double> instant_regret;
  std::vector<double> cumulative_regret;
  std::vector<int> switch_count_so_far;
  std::vector<int> switch_episodes;  // 1-based episode indices
  std::vector<PolicySnapshot> policies;
  // Row-major (episode, stage); empty for the Hoeffding baseline.
  std::vector<VarianceRecord> variance_records;
  InvariantCounters invariants;
  std::int64_t noise_releases = 0;
  std::int64_t utility_event_failures = 0;
  // Entries (k, h, s, a) with Q_hat >= Q* - 1e-9, and the number checked.
  std::int64_t optimistic_entries = 0;
  std::int64_t checked_entries = 0;
  double max_weight_norm_hat = 0.0;
  double max_weight_norm_bar = 0.0;
  std::optional<std::string> abort_reason;

  int episodes() const { return static_cast<int>(instant_regret.size()); }
  int switch_count() const {
    return switch_count_so_far.empty() ? 0 : switch_count_so_far.back();
  }
};

/// Everything except the identifying labels (algorithm, epsilon, delta',
/// seed) compares equal bit for bit.
bool same_outcome(const RunResult& a, const RunResult& b);

/// Runs `episodes` episodes of DP-LSVI-UCB++ / LSVI-UCB++ (per config.mode).
/// The environment and every noise release draw from independent streams
/// keyed by `seed`. A positive-definiteness failure ends the run early and is
/// reported in abort_reason.
RunResult run_training(const LinearMdpSpec& spec, const AgentConfig& config,
                       int episodes, std::uint64_t seed);

RunResult run_lsvi_ucb_baseline(const LinearMdpSpec& spec, int episodes,
                                double lambda, double beta, std::uint64_t seed);

/// Dispatches on config.mode.
RunResult run_agent(const LinearMdpSpec& spec, const AgentConfig& config,
                    int episodes, std::uint64_t seed);

}  // namespace dplsvi
