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
#include <span>
#include <string>

#include <Eigen/Dense>

#include "dplsvi/rng.hpp"

namespace dplsvi {

/// Split of a total zCDP budget across the 4HK released statistics.
struct ZcdpBudget {
  double rho_total = 0.0;
  std::int64_t statistic_count = 0;
  double rho_per_statistic = 0.0;
};

/// Noise scales and utility bounds for one private run.
///
/// The Gaussian vectors added to the value-weighted sums have l2 sensitivity
/// 2H (first and pessimistic sums) and 2H^2 (squared sum); the Gram matrix is
/// released through a GOE perturbation with per-instance sensitivity 1/sqrt(2).
struct NoiseCalibration {
  double sigma2_value_sum = 0.0;          // 2 H^2 / rho0
  double sigma2_squared_value_sum = 0.0;  // 2 H^4 / rho0
  double sigma2_goe_entry = 0.0;          // 1 / (4 rho0)
  double L = 0.0;
  double lambda_tilde = 0.0;
  double c1 = 1.0;
  double c2 = 1.0;

  bool is_zero_noise() const {
    return sigma2_value_sum == 0.0 && sigma2_squared_value_sum == 0.0 &&
           sigma2_goe_entry == 0.0;
  }
};

struct DpReport {
  double epsilon = 0.0;
  double delta_prime = 0.0;
  double rho = 0.0;
};

enum class NoiseReuse { kFresh, kOnce };

const char* to_string(NoiseReuse reuse);

ZcdpBudget per_statistic_budget(double rho, int horizon, int episodes);

/// Variance Delta^2 / (2 rho0) making the Gaussian mechanism rho0-zCDP.
double gaussian_sigma2_for_zcdp(double l2_sensitivity, double rho0);

/// rho-zCDP implies (rho + 2 sqrt(rho log(1/delta')), delta')-DP.
DpReport zcdp_to_dp(double rho, double delta_prime);

/// Inverse of zcdp_to_dp in rho.
double dp_to_zcdp(double epsilon, double delta_prime);

double compose_zcdp(std::span<const double> rhos);

/// L = 4H sqrt(dHK/rho * log(10dKH/delta)), the high-probability bound on
/// the norm of the first two noise vectors.
double utility_L(double rho, int horizon, int episodes, int d, double delta);

/// sqrt(8dHK/rho) * (2 + (log(5 c1 H / delta) / (c2 d))^(2/3)).
double utility_lambda_tilde(double rho, int horizon, int episodes, int d,
                            double delta, double c1, double c2);

NoiseCalibration calibrate_noise(double rho, int horizon, int episodes, int d,
                                 double delta, double c1 = 1.0,
                                 double c2 = 1.0);

Eigen::VectorXd sample_gaussian_vector(int d, double sigma2, Rng& rng);

/// (Z + Z^T) / sqrt(2) with Z_ij ~ N(0, sigma2_entry).
Eigen::MatrixXd sample_goe_entries(int d, double sigma2_entry, Rng& rng);

/// GOE perturbation calibrated to rho0: entries of Z have variance 1/(4 rho0).
Eigen::MatrixXd sample_goe(int d, double rho0, Rng& rng);

/// Largest absolute eigenvalue of a symmetric matrix.
double spectral_norm(const Eigen::MatrixXd& symmetric);

struct AccountantReport {
  ZcdpBudget budget;
  DpReport dp;
  NoiseCalibration calibration;
  NoiseReuse reuse = NoiseReuse::kFresh;
};

AccountantReport make_accountant_report(double rho, double delta_prime,
                                        int horizon, int episodes, int d,
                                        double delta, double c1, double c2,
                                        NoiseReuse reuse);

/// `key = value` lines: rho_total, rho_per_statistic, epsilon, delta_prime,
/// L, lambda_tilde, c1, c2, noise_reuse.
void write_accountant_report(std::ostream& out, const AccountantReport& report);

}  // namespace dplsvi
