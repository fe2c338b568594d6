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

#include "dplsvi/dp_mechanisms.hpp"

#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace dplsvi {

namespace {

void require(bool condition, const char* message) {
  if (!condition) throw std::invalid_argument(message);
}

void require_delta(double delta, const char* message) {
  require(delta > 0.0 && delta < 1.0, message);
}

}  // namespace

const char* to_string(NoiseReuse reuse) {
  return reuse == NoiseReuse::kFresh ? "fresh" : "once";
}

ZcdpBudget per_statistic_budget(double rho, int horizon, int episodes) {
  require(rho > 0.0, "rho must be positive");
  require(horizon >= 1 && episodes >= 1, "H and K must be at least 1");
  ZcdpBudget budget;
  budget.rho_total = rho;
  budget.statistic_count = 4LL * horizon * episodes;
  budget.rho_per_statistic = rho / static_cast<double>(budget.statistic_count);
  return budget;
}

double gaussian_sigma2_for_zcdp(double l2_sensitivity, double rho0) {
  require(l2_sensitivity > 0.0, "sensitivity must be positive");
  require(rho0 > 0.0, "rho0 must be positive");
  return l2_sensitivity * l2_sensitivity / (2.0 * rho0);
}

DpReport zcdp_to_dp(double rho, double delta_prime) {
  require(rho >= 0.0, "rho must be nonnegative");
  require_delta(delta_prime, "delta' must lie in (0, 1)");
  const double log_term = std::log(1.0 / delta_prime);
  return {rho + 2.0 * std::sqrt(rho * log_term), delta_prime, rho};
}

double dp_to_zcdp(double epsilon, double delta_prime) {
  require(epsilon > 0.0, "epsilon must be positive");
  require_delta(delta_prime, "delta' must lie in (0, 1)");
  const double log_term = std::log(1.0 / delta_prime);
  // sqrt(l + eps) - sqrt(l), rationalized against cancellation.
  const double root = epsilon / (std::sqrt(log_term + epsilon) + std::sqrt(log_term));
  return root * root;
}

double compose_zcdp(std::span<const double> rhos) {
  double total = 0.0;
  for (double r : rhos) {
    require(r >= 0.0, "composed rho values must be nonnegative");
    total += r;
  }
  return total;
}

double utility_L(double rho, int horizon, int episodes, int d, double delta) {
  require(rho > 0.0 && horizon >= 1 && episodes >= 1 && d >= 1,
          "L needs positive rho, H, K, d");
  require_delta(delta, "delta must lie in (0, 1)");
  const double H = horizon, K = episodes, D = d;
  return 4.0 * H * std::sqrt(D * H * K / rho * std::log(10.0 * D * K * H / delta));
}

double utility_lambda_tilde(double rho, int horizon, int episodes, int d,
                            double delta, double c1, double c2) {
  require(rho > 0.0 && horizon >= 1 && episodes >= 1 && d >= 1,
          "lambda_tilde needs positive rho, H, K, d");
  require(c1 > 0.0 && c2 > 0.0, "c1 and c2 must be positive");
  require_delta(delta, "delta must lie in (0, 1)");
  const double H = horizon, K = episodes, D = d;
  const double ratio = std::log(5.0 * c1 * H / delta) / (c2 * D);
  // |x|^(2/3) via the real cube root keeps the term defined for x < 0.
  const double tail = std::cbrt(ratio * ratio);
  return std::sqrt(8.0 * D * H * K / rho) * (2.0 + tail);
}

NoiseCalibration calibrate_noise(double rho, int horizon, int episodes, int d,
                                 double delta, double c1, double c2) {
  const ZcdpBudget budget = per_statistic_budget(rho, horizon, episodes);
  const double rho0 = budget.rho_per_statistic;
  const double H = horizon;
  NoiseCalibration cal;
  cal.sigma2_value_sum = gaussian_sigma2_for_zcdp(2.0 * H, rho0);
  cal.sigma2_squared_value_sum = gaussian_sigma2_for_zcdp(2.0 * H * H, rho0);
  cal.sigma2_goe_entry = gaussian_sigma2_for_zcdp(1.0 / std::sqrt(2.0), rho0);
  cal.L = utility_L(rho, horizon, episodes, d, delta);
  cal.lambda_tilde = utility_lambda_tilde(rho, horizon, episodes, d, delta, c1, c2);
  cal.c1 = c1;
  cal.c2 = c2;
  return cal;
}

Eigen::VectorXd sample_gaussian_vector(int d, double sigma2, Rng& rng) {
  require(d >= 1, "dimension must be at least 1");
  require(sigma2 >= 0.0, "variance must be nonnegative");
  if (sigma2 == 0.0) return Eigen::VectorXd::Zero(d);
  std::normal_distribution<double> normal(0.0, std::sqrt(sigma2));
  Eigen::VectorXd out(d);
  for (int i = 0; i < d; ++i) out(i) = normal(rng);
  return out;
}

Eigen::MatrixXd sample_goe_entries(int d, double sigma2_entry, Rng& rng) {
  require(d >= 1, "dimension must be at least 1");
  require(sigma2_entry >= 0.0, "variance must be nonnegative");
  if (sigma2_entry == 0.0) return Eigen::MatrixXd::Zero(d, d);
  std::normal_distribution<double> normal(0.0, std::sqrt(sigma2_entry));
  Eigen::MatrixXd z(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) z(i, j) = normal(rng);
  }
  Eigen::MatrixXd out(d, d);
  const double scale = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) out(i, j) = (z(i, j) + z(j, i)) * scale;
  }
  return out;
}

Eigen::MatrixXd sample_goe(int d, double rho0, Rng& rng) {
  require(rho0 > 0.0, "rho0 must be positive");
  return sample_goe_entries(d, 1.0 / (4.0 * rho0), rng);
}

double spectral_norm(const Eigen::MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric,
                                                        Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

AccountantReport make_accountant_report(double rho, double delta_prime,
                                        int horizon, int episodes, int d,
                                        double delta, double c1, double c2,
                                        NoiseReuse reuse) {
  AccountantReport report;
  report.budget = per_statistic_budget(rho, horizon, episodes);
  // Recompose the per-statistic budget rather than reusing rho so the report
  // reflects what the accountant actually spends.
  const double recomposed =
      report.budget.rho_per_statistic *
      static_cast<double>(report.budget.statistic_count);
  report.dp = zcdp_to_dp(recomposed, delta_prime);
  report.calibration = calibrate_noise(rho, horizon, episodes, d, delta, c1, c2);
  report.reuse = reuse;
  return report;
}

void write_accountant_report(std::ostream& out, const AccountantReport& report) {
  const auto old_precision = out.precision(17);
  out << "rho_total = " << report.budget.rho_total << '\n'
      << "rho_per_statistic = " << report.budget.rho_per_statistic << '\n'
      << "statistic_count = " << report.budget.statistic_count << '\n'
      << "epsilon = " << report.dp.epsilon << '\n'
      << "delta_prime = " << report.dp.delta_prime << '\n'
      << "L = " << report.calibration.L << '\n'
      << "lambda_tilde = " << report.calibration.lambda_tilde << '\n'
      << "c1 = " << report.calibration.c1 << '\n'
      << "c2 = " << report.calibration.c2 << '\n'
      << "noise_reuse = " << to_string(report.reuse) << '\n';
  out.precision(old_precision);
}

}  // namespace dplsvi
