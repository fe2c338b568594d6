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

#include "dplsvi/lsvi_agents.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dplsvi {

namespace {

constexpr double kOptimismSlack = 1e-9;
// Absolute slack on the log-determinant doubling test so that an exact
// doubling is not lost to rounding in the factorization.
constexpr double kLogDetSlack = 1e-12;
constexpr double kResidualTolerance = 1e-8;

void require(bool condition, const char* message) {
  if (!condition) throw std::invalid_argument(message);
}

std::string stage_context(int k, int h) {
  std::ostringstream os;
  os << "episode " << k << ", stage " << h;
  return os.str();
}

// Eigen decomposition of a freshly released Gram matrix. Throws
// UtilityEventFailure if the smallest eigenvalue is not positive.
Eigen::VectorXd checked_spectrum(const Eigen::MatrixXd& lambda,
                                 const std::string& context) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lambda,
                                                        Eigen::EigenvaluesOnly);
  const Eigen::VectorXd eig = solver.eigenvalues();
  if (solver.info() != Eigen::Success || !(eig.minCoeff() > 0.0)) {
    std::ostringstream os;
    os << "utility event failure: Gram matrix not positive definite at "
       << context << " (smallest eigenvalue " << eig.minCoeff() << ")";
    throw UtilityEventFailure(os.str());
  }
  return eig;
}

Eigen::LLT<Eigen::MatrixXd> factorize(const Eigen::MatrixXd& lambda,
                                      const std::string& context) {
  Eigen::LLT<Eigen::MatrixXd> factor(lambda);
  if (factor.info() != Eigen::Success) {
    throw StateCorruptionError("Cholesky factorization failed at " + context);
  }
  return factor;
}

double factor_log_det(const Eigen::LLT<Eigen::MatrixXd>& factor) {
  return 2.0 * factor.matrixLLT().diagonal().array().log().sum();
}

bool determinant_doubled(double log_det_now, double log_det_last) {
  return log_det_now >= std::log(2.0) + log_det_last - kLogDetSlack;
}

WeightTriple solve_weights(const Eigen::LLT<Eigen::MatrixXd>& factor,
                           const Eigen::MatrixXd& lambda,
                           const RegressionTargets& targets,
                           const NoiseVectors& noise) {
  auto solve = [&](const Eigen::VectorXd& b, const Eigen::VectorXd& z) {
    const Eigen::VectorXd rhs = b + z;
    Eigen::VectorXd x = factor.solve(rhs);
    const double residual = (lambda * x - rhs).norm();
    if (!std::isfinite(residual) || residual > kResidualTolerance * rhs.norm()) {
      throw StateCorruptionError("ridge solve residual too large");
    }
    return x;
  };
  return {solve(targets.b_hat, noise.phi_hat),
          solve(targets.b_check, noise.phi_check),
          solve(targets.b_bar, noise.phi_bar)};
}

Eigen::VectorXd pair_norms(const Eigen::LLT<Eigen::MatrixXd>& factor,
                           const Eigen::MatrixXd& features) {
  const Eigen::MatrixXd whitened =
      factor.matrixL().solve(features.transpose());
  return whitened.colwise().norm().transpose();
}

Eigen::VectorXd stage_rewards(const LinearMdpSpec& spec, int h) {
  Eigen::VectorXd r(spec.num_pairs());
  for (int s = 0; s < spec.num_states; ++s) {
    for (int a = 0; a < spec.num_actions; ++a) {
      r(spec.pair_index(s, a)) = reward(spec, h, s, a);
    }
  }
  return r;
}

void require_valid_spec(const LinearMdpSpec& spec) {
  const auto violations = validate_spec(spec);
  if (!violations.empty()) {
    throw ValidationError("invalid instance: " + violations.front().message);
  }
}

void count_optimism(RunResult& result, const std::vector<StageTables>& tables,
                    const OptimalValues& optimal) {
  for (std::size_t h = 0; h < tables.size(); ++h) {
    const Eigen::MatrixXd& q = tables[h].q_hat;
    result.optimistic_entries +=
        (q.array() >= optimal.q[h].array() - kOptimismSlack).count();
    result.checked_entries += q.size();
  }
}

std::vector<Eigen::MatrixXd> optimistic_tables(
    const std::vector<StageTables>& tables) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(tables.size());
  for (const auto& t : tables) out.push_back(t.q_hat);
  return out;
}

void push_episode(RunResult& result, double regret, int switches,
                  PolicySnapshot policy) {
  const double previous =
      result.cumulative_regret.empty() ? 0.0 : result.cumulative_regret.back();
  result.instant_regret.push_back(regret);
  result.cumulative_regret.push_back(previous + regret);
  result.switch_count_so_far.push_back(switches);
  result.policies.push_back(std::move(policy));
}

// Noise for one (episode, stage) release of the three value-weighted sums.
NoiseVectors draw_vector_noise(const NoiseCalibration& cal, int d,
                               std::uint64_t seed, std::uint64_t k,
                               std::uint64_t h) {
  Rng r1 = noise_stream(seed, NoiseStatistic::kValueSum, k, h);
  Rng r2 = noise_stream(seed, NoiseStatistic::kPessimisticSum, k, h);
  Rng r3 = noise_stream(seed, NoiseStatistic::kSquaredValueSum, k, h);
  return {sample_gaussian_vector(d, cal.sigma2_value_sum, r1),
          sample_gaussian_vector(d, cal.sigma2_value_sum, r2),
          sample_gaussian_vector(d, cal.sigma2_squared_value_sum, r3)};
}

Eigen::MatrixXd draw_gram_noise(const NoiseCalibration& cal, int d,
                                std::uint64_t seed, std::uint64_t k,
                                std::uint64_t h) {
  Rng r = noise_stream(seed, NoiseStatistic::kGram, k, h);
  return sample_goe_entries(d, cal.sigma2_goe_entry, r);
}

}  // namespace

const char* to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kDpLsviUcbPlusPlus: return "dp-lsvi-ucb++";
    case Algorithm::kLsviUcbPlusPlus: return "lsvi-ucb++";
    case Algorithm::kLsviUcb: return "lsvi-ucb";
  }
  return "unknown";
}

std::optional<Algorithm> parse_algorithm(const std::string& text) {
  if (text == "dp" || text == "dp-lsvi-ucb++") return Algorithm::kDpLsviUcbPlusPlus;
  if (text == "pp" || text == "lsvi-ucb++") return Algorithm::kLsviUcbPlusPlus;
  if (text == "ucb" || text == "lsvi-ucb") return Algorithm::kLsviUcb;
  return std::nullopt;
}

const char* to_string(GramNoise mode) {
  return mode == GramNoise::kRelease ? "release" : "accumulate";
}

ConfidenceRadii compute_confidence_radii(int d, int horizon, int episodes,
                                         double L, double lambda_tilde,
                                         double delta, double multiplier) {
  require(d >= 1 && horizon >= 1 && episodes >= 1,
          "d, H and K must be positive");
  require(L > 0.0 && lambda_tilde > 0.0, "L and lambda must be positive");
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  require(multiplier > 0.0, "radius multiplier must be positive");
  const double D = d, H = horizon, K = episodes;
  const double x = H * std::pow(K, 4.0) * L * L * D / (delta * lambda_tilde);
  const double log_x = std::abs(std::log(x));
  const double ridge = std::sqrt(D * lambda_tilde);
  ConfidenceRadii radii;
  radii.beta_hat = multiplier * (H * L * ridge + std::sqrt(D * D * D * H * H) * log_x);
  radii.beta_check = radii.beta_hat;
  radii.beta_bar = multiplier * (H * H * L * L * ridge +
                                 std::sqrt(D * D * D * H * H * H * H) * log_x);
  radii.beta_bern = multiplier * (H * L * ridge + std::sqrt(D) * std::log1p(x));
  return radii;
}

void validate_config(const AgentConfig& config) {
  require(config.lambda_tilde > 0.0, "lambda must be positive");
  require(config.radius_multiplier > 0.0, "radius multiplier must be positive");
  require(config.delta > 0.0 && config.delta < 1.0, "delta must lie in (0, 1)");
  require(config.d_cubed_scale >= 0.0,
          "variance floor scale must be nonnegative");
  if (config.mode == Algorithm::kLsviUcb) {
    require(config.radii.beta_hat > 0.0, "bonus radius must be positive");
  } else {
    require(config.radii.beta_hat > 0.0 && config.radii.beta_check > 0.0 &&
                config.radii.beta_bar > 0.0 && config.radii.beta_bern > 0.0,
            "confidence radii must be positive");
  }
  if (config.mode == Algorithm::kDpLsviUcbPlusPlus) {
    require(config.noise.has_value(), "private mode needs a noise calibration");
  } else {
    require(!config.noise.has_value(),
            "non-private modes take no noise calibration");
  }
}

AgentConfig make_private_config(int d, int horizon, int episodes, double rho,
                                double delta_prime, const AgentOptions& options) {
  const NoiseCalibration cal = calibrate_noise(rho, horizon, episodes, d,
                                               options.delta, options.c1,
                                               options.c2);
  AgentConfig config;
  config.mode = Algorithm::kDpLsviUcbPlusPlus;
  config.radius_multiplier = options.radius_multiplier;
  config.radii = compute_confidence_radii(d, horizon, episodes, cal.L,
                                          cal.lambda_tilde, options.delta,
                                          options.radius_multiplier);
  config.lambda_tilde = cal.lambda_tilde;
  config.noise = cal;
  config.delta = options.delta;
  config.d_cubed_scale = options.d_cubed_scale;
  config.noise_reuse = options.noise_reuse;
  config.gram_noise = options.gram_noise;
  config.rho = rho;
  config.delta_prime = delta_prime;
  config.epsilon = zcdp_to_dp(rho, delta_prime).epsilon;
  return config;
}

AgentConfig make_nonprivate_config(int d, int horizon, int episodes,
                                   const AgentOptions& options) {
  AgentConfig config;
  config.mode = Algorithm::kLsviUcbPlusPlus;
  config.radius_multiplier = options.radius_multiplier;
  config.radii = compute_confidence_radii(d, horizon, episodes, 1.0,
                                          options.ridge_lambda, options.delta,
                                          options.radius_multiplier);
  config.lambda_tilde = options.ridge_lambda;
  config.delta = options.delta;
  config.d_cubed_scale = options.d_cubed_scale;
  config.gram_noise = options.gram_noise;
  return config;
}

AgentConfig make_ucb_config(int d, int horizon, int episodes,
                            const AgentOptions& options) {
  require(options.radius_multiplier > 0.0, "radius multiplier must be positive");
  require(options.delta > 0.0 && options.delta < 1.0, "delta must lie in (0, 1)");
  const double D = d, H = horizon, K = episodes;
  const double beta = options.radius_multiplier * D * H *
                      std::sqrt(std::log(2.0 * D * H * K / options.delta));
  AgentConfig config;
  config.mode = Algorithm::kLsviUcb;
  config.radius_multiplier = options.radius_multiplier;
  config.radii = {beta, beta, beta, beta};
  config.lambda_tilde = options.ridge_lambda;
  config.delta = options.delta;
  return config;
}

AgentConfig zero_noise_private_twin(const AgentConfig& config) {
  AgentConfig twin = config;
  twin.mode = Algorithm::kDpLsviUcbPlusPlus;
  NoiseCalibration cal;
  cal.L = 1.0;
  cal.lambda_tilde = config.lambda_tilde;
  twin.noise = cal;
  twin.epsilon = std::numeric_limits<double>::infinity();
  twin.delta_prime = 0.0;
  twin.rho = 0.0;
  return twin;
}

NoiseVectors NoiseVectors::zeros(int d) {
  return {Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d),
          Eigen::VectorXd::Zero(d)};
}

WeightTriple compute_weights(const Eigen::MatrixXd& lambda,
                             const RegressionTargets& targets,
                             const NoiseVectors& noise) {
  return solve_weights(factorize(lambda, "compute_weights"), lambda, targets,
                       noise);
}

double elliptical_norm(const Eigen::LLT<Eigen::MatrixXd>& factor,
                       const Eigen::VectorXd& phi) {
  return factor.matrixL().solve(phi).norm();
}

double elliptical_norm(const Eigen::MatrixXd& lambda, const Eigen::VectorXd& phi) {
  return elliptical_norm(factorize(lambda, "elliptical_norm"), phi);
}

double estimate_variance(const Eigen::VectorXd& w_hat,
                         const Eigen::VectorXd& w_bar,
                         const Eigen::VectorXd& phi, int horizon) {
  const double H = horizon;
  const double second = std::clamp(w_bar.dot(phi), 0.0, H * H);
  const double first = std::clamp(w_hat.dot(phi), 0.0, H);
  return second - first * first;
}

double error_term_E(double beta_bar, double beta_hat, double phi_norm,
                    int horizon) {
  const double H2 = static_cast<double>(horizon) * horizon;
  return std::min(beta_bar * phi_norm, H2) +
         std::min(2.0 * horizon * beta_hat * phi_norm, H2);
}

double compute_E(double beta_bar, double beta_hat, const Eigen::VectorXd& phi,
                 const Eigen::MatrixXd& lambda, int horizon) {
  return error_term_E(beta_bar, beta_hat, elliptical_norm(lambda, phi), horizon);
}

double error_term_D(double gap, double beta_hat, double phi_norm, int d,
                    int horizon, double d_cubed_scale) {
  const double H = horizon;
  const double d3 = d_cubed_scale * d * d * d;
  const double inner = std::max(0.0, gap + 2.0 * beta_hat * phi_norm);
  return std::min(4.0 * d3 * H * H * inner, d3 * H * H * H);
}

double compute_D(const Eigen::VectorXd& w_hat, const Eigen::VectorXd& w_check,
                 double beta_hat, const Eigen::VectorXd& phi,
                 const Eigen::MatrixXd& lambda, int d, int horizon,
                 double d_cubed_scale) {
  return error_term_D(w_hat.dot(phi) - w_check.dot(phi), beta_hat,
                      elliptical_norm(lambda, phi), d, horizon, d_cubed_scale);
}

std::pair<double, double> sigma_from_norm(double v_bar, double E, double D,
                                          int horizon, int d, double phi_norm,
                                          double d_cubed_scale) {
  const double H = horizon, dd = d;
  const double sigma = std::sqrt(std::max(0.0, v_bar + E + D + H));
  const double floor = d_cubed_scale * 2.0 * dd * dd * dd * H * H * std::sqrt(phi_norm);
  return {sigma, std::max({sigma, H, floor})};
}

std::pair<double, double> sigma_and_bar(double v_bar, double E, double D,
                                        int horizon, int d,
                                        const Eigen::VectorXd& phi,
                                        const Eigen::MatrixXd& lambda,
                                        double d_cubed_scale) {
  return sigma_from_norm(v_bar, E, D, horizon, d, elliptical_norm(lambda, phi),
                         d_cubed_scale);
}

std::optional<double> log_det(const Eigen::MatrixXd& matrix) {
  Eigen::LLT<Eigen::MatrixXd> factor(matrix);
  if (factor.info() != Eigen::Success) return std::nullopt;
  return factor_log_det(factor);
}

bool switch_condition(const std::vector<Eigen::MatrixXd>& current,
                      const std::vector<Eigen::MatrixXd>& at_last_switch) {
  require(current.size() == at_last_switch.size(),
          "one Gram matrix per stage expected");
  for (std::size_t h = 0; h < current.size(); ++h) {
    const auto now = log_det(current[h]);
    const auto last = log_det(at_last_switch[h]);
    if (!now || !last) {
      throw StateCorruptionError("switch test on a non positive-definite Gram matrix");
    }
    if (determinant_doubled(*now, *last)) return true;
  }
  return false;
}

void update_q_tables(StageTables& tables, const LinearMdpSpec& spec, int h,
                     const WeightTriple& weights, const ConfidenceRadii& radii,
                     const Eigen::LLT<Eigen::MatrixXd>& factor) {
  const double H = spec.horizon;
  const Eigen::VectorXd norms = pair_norms(factor, spec.features);
  const Eigen::VectorXd hat_fit = spec.features * weights.w_hat;
  const Eigen::VectorXd check_fit = spec.features * weights.w_check;
  for (int s = 0; s < spec.num_states; ++s) {
    for (int a = 0; a < spec.num_actions; ++a) {
      const int i = spec.pair_index(s, a);
      const double r = reward(spec, h, s, a);
      const double optimistic = r + hat_fit(i) + radii.beta_hat * norms(i);
      const double pessimistic = r + check_fit(i) - radii.beta_check * norms(i);
      tables.q_hat(s, a) = std::min({optimistic, tables.q_hat(s, a), H});
      tables.q_check(s, a) = std::max({pessimistic, tables.q_check(s, a), 0.0});
    }
  }
}

int act(const Eigen::MatrixXd& q_hat, int s) {
  int best = 0;
  for (Eigen::Index a = 1; a < q_hat.cols(); ++a) {
    if (q_hat(s, a) > q_hat(s, best)) best = static_cast<int>(a);
  }
  return best;
}

Eigen::MatrixXd gram_update(const Eigen::MatrixXd& lambda, double sigma_bar,
                            const Eigen::VectorXd& phi,
                            const Eigen::MatrixXd& k1_noise) {
  require(sigma_bar > 0.0, "sigma_bar must be positive");
  Eigen::MatrixXd next = lambda;
  next.noalias() += (phi * phi.transpose()) / (sigma_bar * sigma_bar);
  next += k1_noise;
  // Rank-one products are symmetric up to rounding; copy the lower triangle.
  next.triangularView<Eigen::StrictlyUpper>() = next.transpose();
  checked_spectrum(next, "gram_update");
  return next;
}

bool same_outcome(const RunResult& a, const RunResult& b) {
  return a.instant_regret == b.instant_regret &&
         a.cumulative_regret == b.cumulative_regret &&
         a.switch_count_so_far == b.switch_count_so_far &&
         a.switch_episodes == b.switch_episodes && a.policies == b.policies &&
         a.variance_records == b.variance_records &&
         a.invariants == b.invariants &&
         a.optimistic_entries == b.optimistic_entries &&
         a.checked_entries == b.checked_entries &&
         a.max_weight_norm_hat == b.max_weight_norm_hat &&
         a.max_weight_norm_bar == b.max_weight_norm_bar &&
         a.abort_reason == b.abort_reason;
}

namespace {

struct StageState {
  Eigen::MatrixXd gram;         // exact sum of w phi phi^T
  Eigen::MatrixXd lambda;       // privatized Lambda_{k,h}
  Eigen::MatrixXd tallies;      // (pair, next state) -> summed regression weight
  StageTables tables;
  WeightTriple weights;
  Eigen::LLT<Eigen::MatrixXd> factor;
  double log_det = 0.0;
  double log_det_at_last_switch = 0.0;
};

class PlusPlusLearner {
 public:
  PlusPlusLearner(const LinearMdpSpec& spec, const AgentConfig& config,
                  int episodes, std::uint64_t seed)
      : spec_(spec), config_(config), seed_(seed), episodes_(episodes),
        d_(spec.d), horizon_(spec.horizon),
        private_(config.mode == Algorithm::kDpLsviUcbPlusPlus),
        optimal_(exact_optimal_values(spec)) {
    const double H = horizon_;
    const Eigen::MatrixXd initial =
        2.0 * config_.lambda_tilde * Eigen::MatrixXd::Identity(d_, d_);
    stages_.resize(horizon_);
    for (auto& st : stages_) {
      st.gram = Eigen::MatrixXd::Zero(d_, d_);
      st.lambda = initial;
      st.tallies = Eigen::MatrixXd::Zero(spec.num_pairs(), spec.num_states);
      st.tables.q_hat = Eigen::MatrixXd::Constant(spec.num_states, spec.num_actions, H);
      st.tables.q_check = Eigen::MatrixXd::Zero(spec.num_states, spec.num_actions);
    }
    const double initial_log_det =
        d_ * std::log(2.0 * config_.lambda_tilde);
    for (auto& st : stages_) st.log_det_at_last_switch = initial_log_det;
    if (private_ && config_.noise_reuse == NoiseReuse::kOnce) {
      once_vectors_ = draw_vector_noise(*config_.noise, d_, seed_, 0, 0);
      once_gram_ = draw_gram_noise(*config_.noise, d_, seed_, 0, 0);
    }
    result_.algorithm = to_string(config_.mode);
    result_.epsilon = config_.epsilon;
    result_.delta_prime = config_.delta_prime;
    result_.seed = seed_;
  }

  RunResult run() {
    Rng env = environment_stream(seed_);
    result_.variance_records.reserve(static_cast<std::size_t>(episodes_) * horizon_);
    try {
      for (int k = 1; k <= episodes_; ++k) episode(k, env);
    } catch (const StateCorruptionError& e) {
      result_.abort_reason = e.what();
    }
    return std::move(result_);
  }

 private:
  void episode(int k, Rng& env) {
    bool do_switch = false;
    for (int h = 0; h < horizon_; ++h) {
      StageState& st = stages_[h];
      st.factor = factorize(st.lambda, stage_context(k, h));
      st.log_det = factor_log_det(st.factor);
      do_switch = do_switch || determinant_doubled(st.log_det, st.log_det_at_last_switch);
    }

    backward_pass(k, do_switch);
    if (do_switch) {
      ++switches_;
      result_.switch_episodes.push_back(k);
      for (auto& st : stages_) st.log_det_at_last_switch = st.log_det;
    }

    std::vector<StageTables> tables;
    tables.reserve(horizon_);
    for (const auto& st : stages_) tables.push_back(st.tables);
    PolicySnapshot policy = greedy_policy(optimistic_tables(tables));
    const double regret = per_episode_regret(spec_, optimal_, policy);
    count_optimism(result_, tables, optimal_);

    const Trajectory trajectory = sample_episode(spec_, policy, env);
    forward_pass(k, trajectory);
    push_episode(result_, regret, switches_, std::move(policy));
  }

  void backward_pass(int k, bool do_switch) {
    const int S = spec_.num_states;
    Eigen::VectorXd v_hat_next = Eigen::VectorXd::Zero(S);
    Eigen::VectorXd v_check_next = Eigen::VectorXd::Zero(S);
    const double bound_scale =
        config_.weight_bound_L() * episodes_ *
        std::sqrt(2.0 * d_ / config_.lambda_tilde);
    const double H = horizon_;
    for (int h = horizon_ - 1; h >= 0; --h) {
      StageState& st = stages_[h];
      RegressionTargets targets;
      targets.b_hat = spec_.features.transpose() * (st.tallies * v_hat_next);
      targets.b_check = spec_.features.transpose() * (st.tallies * v_check_next);
      targets.b_bar = spec_.features.transpose() *
                      (st.tallies * v_hat_next.cwiseProduct(v_hat_next));
      st.weights = solve_weights(st.factor, st.lambda, targets,
                                 vector_noise(k, h));

      const double norm_hat = st.weights.w_hat.norm();
      const double norm_bar = st.weights.w_bar.norm();
      result_.max_weight_norm_hat = std::max(result_.max_weight_norm_hat, norm_hat);
      result_.max_weight_norm_bar = std::max(result_.max_weight_norm_bar, norm_bar);
      if (result_.utility_event_failures == 0 &&
          (norm_hat > H * bound_scale || norm_bar > H * H * bound_scale)) {
        ++result_.invariants.weight_norm_exceeded;
      }

      if (do_switch) {
        const StageTables before = st.tables;
        update_q_tables(st.tables, spec_, h, st.weights, config_.radii, st.factor);
        check_tables(before, st.tables);
      }
      v_hat_next = st.tables.q_hat.rowwise().maxCoeff();
      v_check_next = st.tables.q_check.rowwise().maxCoeff();
    }
  }

  void forward_pass(int k, const Trajectory& trajectory) {
    const ConfidenceRadii& radii = config_.radii;
    for (int h = 0; h < horizon_; ++h) {
      StageState& st = stages_[h];
      const Step& step = trajectory[h];
      const Eigen::VectorXd phi = spec_.feature(step.state, step.action);
      const double phi_norm = elliptical_norm(st.factor, phi);

      VarianceRecord rec;
      rec.v_bar = estimate_variance(st.weights.w_hat, st.weights.w_bar, phi, horizon_);
      rec.E = error_term_E(radii.beta_bar, radii.beta_hat, phi_norm, horizon_);
      rec.D = error_term_D(st.weights.w_hat.dot(phi) - st.weights.w_check.dot(phi),
                           radii.beta_hat, phi_norm, d_, horizon_,
                           config_.d_cubed_scale);
      std::tie(rec.sigma, rec.sigma_bar) =
          sigma_from_norm(rec.v_bar, rec.E, rec.D, horizon_, d_, phi_norm,
                          config_.d_cubed_scale);
      check_variance(rec);
      result_.variance_records.push_back(rec);

      const double weight = 1.0 / (rec.sigma_bar * rec.sigma_bar);
      st.tallies(spec_.pair_index(step.state, step.action), step.next_state) += weight;
      st.gram.noalias() += weight * (phi * phi.transpose());
      st.gram.triangularView<Eigen::StrictlyUpper>() = st.gram.transpose();

      const std::string context = stage_context(k, h);
      if (private_) {
        const Eigen::MatrixXd k1 = gram_noise(k, h);
        if (config_.gram_noise == GramNoise::kAccumulate) {
          st.lambda = gram_update(st.lambda, rec.sigma_bar, phi, k1);
        } else {
          st.lambda = 2.0 * config_.lambda_tilde * Eigen::MatrixXd::Identity(d_, d_) +
                      st.gram + k1;
        }
      } else if (config_.gram_noise == GramNoise::kAccumulate) {
        st.lambda = gram_update(st.lambda, rec.sigma_bar, phi,
                                Eigen::MatrixXd::Zero(d_, d_));
      } else {
        st.lambda = 2.0 * config_.lambda_tilde * Eigen::MatrixXd::Identity(d_, d_) +
                    st.gram;
      }
      const Eigen::VectorXd eig = checked_spectrum(st.lambda, context);
      if (config_.is_zero_noise()) {
        const double floor = 2.0 * config_.lambda_tilde;
        if (eig.minCoeff() < floor * (1.0 - 1e-12)) {
          ++result_.invariants.min_eigenvalue_below_floor;
        }
        // Lambda_{k+1,h} against the ceiling d log(3 lambda + k / d).
        const double ceiling =
            d_ * std::log(3.0 * config_.lambda_tilde + static_cast<double>(k) / d_);
        if (eig.array().log().sum() > ceiling + 1e-9) {
          ++result_.invariants.logdet_above_ceiling;
        }
      }
    }
  }

  NoiseVectors vector_noise(int k, int h) {
    if (!private_) return NoiseVectors::zeros(d_);
    const NoiseCalibration& cal = *config_.noise;
    NoiseVectors nv = config_.noise_reuse == NoiseReuse::kOnce
                          ? once_vectors_
                          : draw_vector_noise(cal, d_, seed_, k, h);
    result_.noise_releases += 3;
    const double H = horizon_;
    if (nv.phi_hat.norm() > cal.L) ++result_.utility_event_failures;
    if (nv.phi_check.norm() > cal.L) ++result_.utility_event_failures;
    if (nv.phi_bar.norm() > H * cal.L) ++result_.utility_event_failures;
    return nv;
  }

  Eigen::MatrixXd gram_noise(int k, int h) {
    const NoiseCalibration& cal = *config_.noise;
    Eigen::MatrixXd k1 = config_.noise_reuse == NoiseReuse::kOnce
                             ? once_gram_
                             : draw_gram_noise(cal, d_, seed_, k, h);
    result_.noise_releases += 1;
    if (!cal.is_zero_noise() && spectral_norm(k1) > cal.lambda_tilde) {
      ++result_.utility_event_failures;
    }
    return k1;
  }

  void check_tables(const StageTables& before, const StageTables& after) {
    const double H = horizon_;
    auto& inv = result_.invariants;
    inv.q_hat_increase += (after.q_hat.array() > before.q_hat.array()).count();
    inv.q_check_decrease += (after.q_check.array() < before.q_check.array()).count();
    inv.q_hat_out_of_range +=
        ((after.q_hat.array() < 0.0) || (after.q_hat.array() > H)).count();
    inv.q_check_out_of_range +=
        ((after.q_check.array() < 0.0) || (after.q_check.array() > H)).count();
    inv.q_check_above_q_hat += (after.q_check.array() > after.q_hat.array()).count();
  }

  void check_variance(const VarianceRecord& rec) {
    const double H = horizon_, D = d_;
    auto& inv = result_.invariants;
    if (!(rec.sigma_bar >= H)) ++inv.sigma_bar_below_horizon;
    if (!(rec.sigma_bar >= rec.sigma)) ++inv.sigma_bar_below_sigma;
    if (rec.E < 0.0 || rec.E > 2.0 * H * H || rec.D < 0.0 ||
        rec.D > D * D * D * H * H * H) {
      ++inv.error_terms_out_of_range;
    }
  }

  const LinearMdpSpec& spec_;
  AgentConfig config_;
  std::uint64_t seed_;
  int episodes_;
  int d_;
  int horizon_;
  bool private_;
  OptimalValues optimal_;
  std::vector<StageState> stages_;
  NoiseVectors once_vectors_;
  Eigen::MatrixXd once_gram_;
  int switches_ = 0;
  RunResult result_;
};

}  // namespace

RunResult run_training(const LinearMdpSpec& spec, const AgentConfig& config,
                       int episodes, std::uint64_t seed) {
  validate_config(config);
  require(config.mode != Algorithm::kLsviUcb,
          "run_training drives the ++ learners; use run_lsvi_ucb_baseline");
  require(episodes >= 0, "episode count must be nonnegative");
  require_valid_spec(spec);
  return PlusPlusLearner(spec, config, episodes, seed).run();
}

RunResult run_lsvi_ucb_baseline(const LinearMdpSpec& spec, int episodes,
                                double lambda, double beta, std::uint64_t seed) {
  require(lambda > 0.0 && beta > 0.0, "lambda and beta must be positive");
  require(episodes >= 0, "episode count must be nonnegative");
  require_valid_spec(spec);

  const int d = spec.d, H = spec.horizon, S = spec.num_states;
  const OptimalValues optimal = exact_optimal_values(spec);
  std::vector<Eigen::MatrixXd> gram(H, lambda * Eigen::MatrixXd::Identity(d, d));
  std::vector<Eigen::MatrixXd> tallies(H, Eigen::MatrixXd::Zero(spec.num_pairs(), S));
  std::vector<Eigen::VectorXd> rewards;
  for (int h = 0; h < H; ++h) rewards.push_back(stage_rewards(spec, h));
  std::vector<StageTables> tables(H);

  RunResult result;
  result.algorithm = to_string(Algorithm::kLsviUcb);
  result.seed = seed;
  Rng env = environment_stream(seed);
  try {
    for (int k = 1; k <= episodes; ++k) {
      Eigen::VectorXd v_next = Eigen::VectorXd::Zero(S);
      for (int h = H - 1; h >= 0; --h) {
        const std::string context = stage_context(k, h);
        const auto factor = factorize(gram[h], context);
        const Eigen::VectorXd b =
            spec.features.transpose() * (tallies[h] * v_next);
        const Eigen::VectorXd w = factor.solve(b);
        const Eigen::VectorXd q = (rewards[h] + spec.features * w +
                                   beta * pair_norms(factor, spec.features))
                                      .cwiseMin(static_cast<double>(H));
        tables[h].q_hat = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                         Eigen::Dynamic, Eigen::RowMajor>>(
            q.data(), S, spec.num_actions);
        auto& inv = result.invariants;
        inv.q_hat_out_of_range += ((tables[h].q_hat.array() < 0.0) ||
                                   (tables[h].q_hat.array() > H)).count();
        result.max_weight_norm_hat = std::max(result.max_weight_norm_hat, w.norm());
        v_next = tables[h].q_hat.rowwise().maxCoeff();
      }
      PolicySnapshot policy = greedy_policy(optimistic_tables(tables));
      const double regret = per_episode_regret(spec, optimal, policy);
      count_optimism(result, tables, optimal);
      const Trajectory trajectory = sample_episode(spec, policy, env);
      for (int h = 0; h < H; ++h) {
        const Step& step = trajectory[h];
        const Eigen::VectorXd phi = spec.feature(step.state, step.action);
        gram[h].noalias() += phi * phi.transpose();
        tallies[h](spec.pair_index(step.state, step.action), step.next_state) += 1.0;
      }
      result.switch_episodes.push_back(k);
      push_episode(result, regret, k, std::move(policy));
    }
  } catch (const StateCorruptionError& e) {
    result.abort_reason = e.what();
  }
  return result;
}

RunResult run_agent(const LinearMdpSpec& spec, const AgentConfig& config,
                    int episodes, std::uint64_t seed) {
  if (config.mode == Algorithm::kLsviUcb) {
    validate_config(config);
    RunResult result = run_lsvi_ucb_baseline(spec, episodes, config.lambda_tilde,
                                             config.radii.beta_hat, seed);
    return result;
  }
  return run_training(spec, config, episodes, seed);
}

}  // namespace dplsvi
