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

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "dplsvi/dp_mechanisms.hpp"

using namespace dplsvi;

namespace {

// Scalar re-evaluation of lambda_tilde written independently of the library.
double lambda_tilde_oracle(double rho, double H, double K, double d,
                           double delta, double c1, double c2) {
  const double x = std::log(5.0 * c1 * H / delta) / (c2 * d);
  return std::sqrt(8.0 * d * H * K / rho) * (2.0 + std::pow(std::abs(x), 2.0 / 3.0));
}

double L_oracle(double rho, double H, double K, double d, double delta) {
  return 4.0 * H * std::sqrt(d * H * K / rho * std::log(10.0 * d * K * H / delta));
}

}  // namespace

TEST_CASE("per-statistic budget splits rho over 4HK releases") {
  const ZcdpBudget b = per_statistic_budget(1.0, 2, 5);
  CHECK(b.statistic_count == 40);
  CHECK(b.rho_per_statistic == doctest::Approx(0.025).epsilon(1e-15));
  for (double x : {1e-6, 0.3, 7.0}) {
    for (int H : {1, 3, 10}) {
      for (int K : {1, 17, 2000}) {
        const ZcdpBudget c = per_statistic_budget(4.0 * H * K * x, H, K);
        CHECK(std::abs(c.rho_per_statistic - x) <= 1e-12 * x);
        CHECK(std::abs(c.rho_per_statistic * c.statistic_count - c.rho_total) <=
              1e-12 * c.rho_total);
      }
    }
  }
  CHECK_THROWS_AS(per_statistic_budget(0.0, 2, 5), std::invalid_argument);
  CHECK_THROWS_AS(per_statistic_budget(-1.0, 2, 5), std::invalid_argument);
}

TEST_CASE("Gaussian mechanism variance") {
  CHECK(gaussian_sigma2_for_zcdp(2.0, 0.5) == 4.0);  // 2H with H = 1
  CHECK(gaussian_sigma2_for_zcdp(2.0 * 1.0 * 1.0, 0.5) == 4.0);  // 2H^2
  CHECK(gaussian_sigma2_for_zcdp(3.0, 2.0) == doctest::Approx(2.25));
  CHECK_THROWS_AS(gaussian_sigma2_for_zcdp(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_sigma2_for_zcdp(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("zCDP to approximate DP conversion") {
  CHECK(zcdp_to_dp(0.0, 0.1).epsilon == 0.0);
  CHECK(zcdp_to_dp(1.0, std::exp(-1.0)).epsilon == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(dp_to_zcdp(3.0, std::exp(-1.0)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(zcdp_to_dp(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(zcdp_to_dp(1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(dp_to_zcdp(0.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(dp_to_zcdp(-2.0, 0.1), std::invalid_argument);
}

TEST_CASE("conversions are mutual inverses on a grid") {
  for (double dp : {0.5, 0.1, 1e-6}) {
    double prev = 0.0;
    for (double eps = 1e-3; eps < 1e3; eps *= 1.7) {
      const double rho = dp_to_zcdp(eps, dp);
      CHECK(rho > prev);
      prev = rho;
      CHECK(std::abs(zcdp_to_dp(rho, dp).epsilon - eps) <= 1e-10 * std::max(1.0, eps));
      const double back = dp_to_zcdp(zcdp_to_dp(eps, dp).epsilon, dp);
      CHECK(std::abs(back - eps) <= 1e-10 * std::max(1.0, eps));
    }
  }
}

TEST_CASE("utility_L formula") {
  CHECK(utility_L(1.0, 1, 1, 1, 0.1) ==
        doctest::Approx(4.0 * std::sqrt(std::log(100.0))).epsilon(1e-14));
  for (int H : {1, 2, 5}) {
    const double a = utility_L(1.0, H, 50, 3, 0.05);
    const double b = utility_L(1.0, 2 * H, 50, 3, 0.05);
    const double ratio = std::log(10.0 * 3 * 50 * 2 * H / 0.05) /
                         std::log(10.0 * 3 * 50 * H / 0.05);
    CHECK(b / a == doctest::Approx(2.0 * std::sqrt(2.0) * std::sqrt(ratio)).epsilon(1e-12));
  }
  double prev = std::numeric_limits<double>::infinity();
  for (double rho = 0.01; rho < 100.0; rho *= 2.0) {
    const double L = utility_L(rho, 3, 20, 4, 0.05);
    CHECK(L < prev);
    CHECK(std::abs(L - L_oracle(rho, 3, 20, 4, 0.05)) <= 1e-12 * L);
    prev = L;
  }
  CHECK_THROWS_AS(utility_L(0.0, 1, 1, 1, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(utility_L(1.0, 1, 1, 1, 1.5), std::invalid_argument);
}

TEST_CASE("utility_lambda_tilde matches a scalar re-evaluation") {
  for (double rho : {0.01, 0.5, 3.0}) {
    for (int H : {1, 4, 9}) {
      for (int K : {1, 100, 5000}) {
        for (int d : {1, 5, 40}) {
          for (double delta : {0.5, 0.05, 1e-4}) {
            for (double c : {0.3, 1.0, 4.0}) {
              const double got = utility_lambda_tilde(rho, H, K, d, delta, c, 1.0 / c);
              const double want = lambda_tilde_oracle(rho, H, K, d, delta, c, 1.0 / c);
              CHECK(std::abs(got - want) <= 1e-12 * want);
              CHECK(got > 2.0 * std::sqrt(8.0 * d * H * K / rho));
            }
          }
        }
      }
    }
  }
  double prev = std::numeric_limits<double>::infinity();
  for (double rho = 0.01; rho < 100.0; rho *= 2.0) {
    const double v = utility_lambda_tilde(rho, 5, 100, 12, 0.05, 1.0, 1.0);
    CHECK(v < prev);
    prev = v;
  }
  CHECK_THROWS_AS(utility_lambda_tilde(1.0, 1, 1, 1, 0.1, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(utility_lambda_tilde(1.0, 0, 1, 1, 0.1, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("composition sums budgets") {
  CHECK(compose_zcdp(std::vector<double>{}) == 0.0);
  const int H = 5, K = 300;
  const double rho = 0.7;
  const ZcdpBudget b = per_statistic_budget(rho, H, K);
  std::vector<double> copies(static_cast<std::size_t>(b.statistic_count), b.rho_per_statistic);
  CHECK(std::abs(compose_zcdp(copies) - rho) <= 1e-9);
  std::vector<double> mixed = {0.1, 0.25, 1e-3, 2.0, 0.0};
  const double forward = compose_zcdp(mixed);
  std::reverse(mixed.begin(), mixed.end());
  CHECK(compose_zcdp(mixed) == doctest::Approx(forward).epsilon(1e-15));
  std::rotate(mixed.begin(), mixed.begin() + 2, mixed.end());
  CHECK(compose_zcdp(mixed) == doctest::Approx(forward).epsilon(1e-15));
  CHECK_THROWS_AS(compose_zcdp(std::vector<double>{0.1, -0.1}), std::invalid_argument);
}

TEST_CASE("accountant report is consistent with its parts") {
  const AccountantReport r =
      make_accountant_report(0.4, 1e-3, 5, 200, 12, 0.05, 1.0, 1.0, NoiseReuse::kFresh);
  std::vector<double> copies(static_cast<std::size_t>(r.budget.statistic_count),
                             r.budget.rho_per_statistic);
  CHECK(std::abs(compose_zcdp(copies) - 0.4) <= 1e-9);
  CHECK(std::abs(r.dp.epsilon - (0.4 + 2.0 * std::sqrt(0.4 * std::log(1e3)))) <= 1e-12);
  CHECK(r.calibration.L == doctest::Approx(L_oracle(0.4, 5, 200, 12, 0.05)).epsilon(1e-12));
  CHECK(r.calibration.sigma2_value_sum ==
        doctest::Approx(2.0 * 25.0 / r.budget.rho_per_statistic).epsilon(1e-12));
  CHECK(r.calibration.sigma2_squared_value_sum ==
        doctest::Approx(2.0 * 625.0 / r.budget.rho_per_statistic).epsilon(1e-12));
  CHECK(r.calibration.sigma2_goe_entry ==
        doctest::Approx(1.0 / (4.0 * r.budget.rho_per_statistic)).epsilon(1e-12));

  std::ostringstream out;
  write_accountant_report(out, r);
  for (const char* key : {"rho_total", "rho_per_statistic", "epsilon", "delta_prime",
                          "L", "lambda_tilde", "c1", "c2", "noise_reuse = fresh"}) {
    CHECK(out.str().find(key) != std::string::npos);
  }
}

TEST_CASE("Gaussian vectors have the requested moments") {
  Rng rng(31);
  CHECK(sample_gaussian_vector(5, 0.0, rng).isZero());
  const int n = 1000000;
  const double sigma2 = 6.25;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(2), sq = Eigen::VectorXd::Zero(2);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd x = sample_gaussian_vector(2, sigma2, rng);
    sum += x;
    sq += x.cwiseProduct(x);
  }
  for (int j = 0; j < 2; ++j) {
    const double mean = sum(j) / n;
    CHECK(std::abs(mean) <= 4.0 * std::sqrt(sigma2) / 1e3);
    const double var = sq(j) / n - mean * mean;
    CHECK(std::abs(var - sigma2) <= 0.05 * sigma2);
  }
}

TEST_CASE("GOE perturbations are exactly symmetric") {
  for (int d = 1; d <= 8; ++d) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed);
      const Eigen::MatrixXd k = sample_goe(d, 0.01 * (seed + 1), rng);
      CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("GOE entry variances") {
  const double rho0 = 0.2;
  const double target = 1.0 / (4.0 * rho0);
  const int n = 1000000;
  Rng rng(4242);
  double off = 0.0, diag = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::MatrixXd k = sample_goe(2, rho0, rng);
    off += k(0, 1) * k(0, 1);
    diag += k(0, 0) * k(0, 0);
  }
  CHECK(std::abs(off / n - target) <= 0.05 * target);
  CHECK(std::abs(diag / n - 2.0 * target) <= 0.05 * 2.0 * target);
}

TEST_CASE("utility events hold with probability at least 1 - delta") {
  const int H = 2, K = 10, d = 4;
  const double rho = 1.0, delta = 0.05;
  const NoiseCalibration cal = calibrate_noise(rho, H, K, d, delta);
  const double rho0 = per_statistic_budget(rho, H, K).rho_per_statistic;
  const int trials = 10000;
  int goe_ok = 0, vec_ok = 0;
  Rng rng(77);
  for (int t = 0; t < trials; ++t) {
    goe_ok += spectral_norm(sample_goe(d, rho0, rng)) <= cal.lambda_tilde;
    vec_ok += sample_gaussian_vector(d, cal.sigma2_value_sum, rng).norm() <= cal.L;
  }
  CHECK(goe_ok >= (1.0 - delta) * trials);
  CHECK(vec_ok >= (1.0 - delta) * trials);
}

TEST_CASE("spectral norm of a known matrix") {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 0.0, 0.0, -3.0;
  CHECK(spectral_norm(m) == doctest::Approx(3.0));
}
