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

// Command-line front end for the benchmark harness.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dplsvi/bench.hpp"
#include "dplsvi/dp_mechanisms.hpp"
#include "dplsvi/linear_mdp.hpp"
#include "dplsvi/lsvi_agents.hpp"

namespace {

using dplsvi::Algorithm;
using dplsvi::bench::AlgorithmEntry;
using dplsvi::bench::ExperimentConfig;
using dplsvi::bench::InstanceDescriptor;

struct InstanceFlags {
  std::string instance = "tabular";
  int states = 3;
  int actions = 4;
  int horizon = 5;
  int dim = 4;
  std::uint64_t seed = 7;

  void attach(CLI::App* app) {
    app->add_option("--instance", instance,
                    "tabular, lowrank, or the path of a saved instance")
        ->capture_default_str();
    app->add_option("--states", states, "number of states")
        ->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--actions", actions, "number of actions")
        ->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--horizon", horizon, "episode length H")
        ->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--dim", dim, "feature dimension (lowrank only)")
        ->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--instance-seed", seed, "seed of the instance generator")
        ->capture_default_str();
  }

  InstanceDescriptor descriptor() const {
    InstanceDescriptor out;
    if (instance == "tabular" || instance == "lowrank") {
      out.generator = instance;
    } else {
      out.generator = "file";
      out.path = instance;
    }
    out.num_states = states;
    out.num_actions = actions;
    out.horizon = horizon;
    out.d = dim;
    out.seed = seed;
    return out;
  }
};

struct ExperimentFlags {
  InstanceFlags instance;
  int episodes = 2000;
  int seeds = 10;
  std::uint64_t master_seed = 20240601;
  std::vector<std::string> algos;
  std::optional<double> epsilon;
  std::optional<double> rho;
  double delta_prime = 1e-3;
  std::optional<double> radius_mult;
  std::optional<double> ucb_radius_mult;
  double delta = 0.05;
  double lambda = dplsvi::bench::kDefaultRidgeLambda;
  double d_cubed_scale = dplsvi::bench::kDefaultDCubedScale;
  double c1 = 1.0;
  double c2 = 1.0;
  std::string noise_reuse = "fresh";
  std::string gram_noise = "release";
  int threads = 0;
  std::string out;
  bool plot = false;

  void attach(CLI::App* app, bool sweep) {
    instance.attach(app);
    app->add_option("--episodes", episodes, "episodes K per run")
        ->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--seeds", seeds, "runs per algorithm")
        ->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--master-seed", master_seed, "seed all run seeds derive from")
        ->capture_default_str();
    if (!sweep) {
      app->add_option("--algo", algos, "dp, pp or ucb; repeatable")
          ->check(CLI::IsMember({"dp", "pp", "ucb"}));
      auto* eps = app->add_option("--epsilon", epsilon, "privacy budget epsilon");
      app->add_option("--rho", rho, "privacy budget as total zCDP rho")->excludes(eps);
    }
    app->add_option("--delta-prime", delta_prime, "delta' of the (epsilon, delta') guarantee")
        ->capture_default_str();
    app->add_option("--radius-mult", radius_mult,
                    "multiplier on the confidence radii (default: initial bonus equals H)");
    app->add_option("--ucb-radius-mult", ucb_radius_mult,
                    "multiplier on the LSVI-UCB radius, overriding --radius-mult");
    app->add_option("--delta", delta, "failure probability of the utility bounds")
        ->capture_default_str();
    app->add_option("--lambda", lambda,
                    "ridge lambda of LSVI-UCB++ (LSVI-UCB uses 2 lambda H^2)")
        ->capture_default_str();
    app->add_option("--d3-scale", d_cubed_scale,
                    "scale of the d^3 constants in the variance weights (1 is the analysed value)")
        ->capture_default_str();
    app->add_option("--c1", c1, "utility-bound constant c1")->capture_default_str();
    app->add_option("--c2", c2, "utility-bound constant c2")->capture_default_str();
    app->add_option("--noise-reuse", noise_reuse, "fresh or once")
        ->capture_default_str()->check(CLI::IsMember({"fresh", "once"}));
    app->add_option("--gram-noise", gram_noise, "release or accumulate")
        ->capture_default_str()->check(CLI::IsMember({"release", "accumulate"}));
    app->add_option("--threads", threads, "worker threads (0: all cores)")
        ->capture_default_str();
    app->add_option("--out", out, "directory for runs.csv, aggregate.csv, metadata.txt");
    app->add_flag("--plot", plot, "also write regret.svg");
  }

  ExperimentConfig config() const {
    ExperimentConfig cfg;
    cfg.instance = instance.descriptor();
    cfg.episodes = episodes;
    cfg.num_seeds = seeds;
    cfg.master_seed = master_seed;
    cfg.output_dir = out;
    cfg.plot = plot;
    cfg.threads = threads;
    cfg.agent.delta = delta;
    cfg.agent.ridge_lambda = lambda;
    cfg.agent.d_cubed_scale = d_cubed_scale;
    cfg.agent.c1 = c1;
    cfg.agent.c2 = c2;
    cfg.agent.noise_reuse =
        noise_reuse == "once" ? dplsvi::NoiseReuse::kOnce : dplsvi::NoiseReuse::kFresh;
    cfg.agent.gram_noise = gram_noise == "accumulate" ? dplsvi::GramNoise::kAccumulate
                                                      : dplsvi::GramNoise::kRelease;

    std::vector<std::string> names = algos;
    if (names.empty()) names = {"dp", "pp", "ucb"};
    for (const auto& name : names) {
      AlgorithmEntry entry;
      entry.mode = *dplsvi::parse_algorithm(name);
      entry.delta_prime = delta_prime;
      entry.radius_multiplier = radius_mult;
      if (entry.mode == Algorithm::kLsviUcb && ucb_radius_mult) {
        entry.radius_multiplier = ucb_radius_mult;
      }
      if (entry.mode == Algorithm::kDpLsviUcbPlusPlus) {
        entry.rho = rho;
        entry.epsilon = rho ? std::nullopt : std::optional<double>(epsilon.value_or(1.0));
      }
      cfg.algorithms.push_back(entry);
    }
    return cfg;
  }
};

std::vector<double> parse_epsilon_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const double value = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad epsilon '" + item + "'");
    out.push_back(value);
  }
  return out;
}

void print_summary(const dplsvi::bench::SuiteResult& suite) {
  std::cout << std::left << std::setw(44) << "algorithm" << std::right
            << std::setw(16) << "final regret" << std::setw(12) << "std"
            << std::setw(6) << "n" << std::setw(12) << "switches" << '\n';
  for (std::size_t e = 0; e < suite.aggregates.size(); ++e) {
    const auto& curve = suite.aggregates[e];
    double switches = 0.0;
    int aborted = 0;
    for (const auto& run : suite.runs[e]) {
      switches += run.switch_count();
      aborted += run.abort_reason.has_value();
    }
    switches /= static_cast<double>(suite.runs[e].size());
    std::cout << std::left << std::setw(44) << curve.algorithm << std::right
              << std::fixed << std::setprecision(3) << std::setw(16)
              << curve.final_mean() << std::setw(12) << curve.final_std()
              << std::setw(6) << curve.final_count() << std::setw(12)
              << std::setprecision(1) << switches;
    if (aborted > 0) std::cout << "  (" << aborted << " aborted)";
    std::cout << '\n';
    std::cout.unsetf(std::ios::floatfield);
  }
}

// CLI11 only reads config files attached to the top-level app, so the
// subcommand files are applied here. Flags given on the command line win.
void apply_config_file(CLI::App* sub) {
  const CLI::Option* config = sub->get_option("--config");
  if (config->count() == 0) return;
  const std::string path = config->as<std::string>();
  if (path.empty()) return;
  for (const CLI::ConfigItem& item : CLI::ConfigINI().from_file(path)) {
    std::string key = item.name;
    std::replace(key.begin(), key.end(), '_', '-');
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config") {
      throw CLI::ConfigError::Extras(path + ": unknown key '" + item.name + "'");
    }
    if (opt->count() > 0) continue;
    if (opt->get_expected_max() > 1) {
      for (const auto& value : item.inputs) opt->add_result(value);
    } else {
      std::string joined;
      for (const auto& value : item.inputs) {
        joined += (joined.empty() ? "" : ",") + value;
      }
      opt->add_result(joined);
    }
    opt->run_callback();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private LSVI-UCB++ benchmark harness"};
  app.require_subcommand(1);

  ExperimentFlags run_flags;
  auto* run = app.add_subcommand("run", "train learners and aggregate regret curves");
  run->set_config("--config", "", "flat key = value file mirroring the flags");
  run_flags.attach(run, false);

  ExperimentFlags sweep_flags;
  std::string epsilons = "0.2,1,5,1000000";
  auto* sweep = app.add_subcommand(
      "sweep-epsilon", "DP-LSVI-UCB++ at several budgets plus the zero-noise reference");
  sweep->set_config("--config", "", "flat key = value file mirroring the flags");
  sweep_flags.attach(sweep, true);
  sweep->add_option("--epsilons", epsilons, "comma-separated ascending budgets")
      ->capture_default_str();

  InstanceFlags validate_flags;
  std::string save_path;
  auto* validate = app.add_subcommand("validate-instance",
                                      "check an instance against the linear MDP constraints");
  validate->set_config("--config", "", "flat key = value file mirroring the flags");
  validate_flags.attach(validate);
  validate->add_option("--save", save_path, "write the instance to this file");

  std::optional<double> acc_epsilon;
  std::optional<double> acc_rho;
  double acc_delta_prime = 1e-3;
  int acc_horizon = 5;
  int acc_episodes = 2000;
  int acc_dim = 12;
  double acc_delta = 0.05;
  double acc_c1 = 1.0;
  double acc_c2 = 1.0;
  std::string acc_reuse = "fresh";
  auto* accountant = app.add_subcommand("accountant", "print the privacy accounting");
  accountant->set_config("--config", "", "flat key = value file mirroring the flags");
  auto* acc_eps_opt = accountant->add_option("--epsilon", acc_epsilon, "target epsilon");
  accountant->add_option("--rho", acc_rho, "total zCDP rho")->excludes(acc_eps_opt);
  accountant->add_option("--delta-prime", acc_delta_prime, "delta'")->capture_default_str();
  accountant->add_option("--horizon", acc_horizon, "H")->capture_default_str();
  accountant->add_option("--episodes", acc_episodes, "K")->capture_default_str();
  accountant->add_option("--dim", acc_dim, "feature dimension d")->capture_default_str();
  accountant->add_option("--delta", acc_delta, "utility failure probability")
      ->capture_default_str();
  accountant->add_option("--c1", acc_c1, "utility-bound constant c1")->capture_default_str();
  accountant->add_option("--c2", acc_c2, "utility-bound constant c2")->capture_default_str();
  accountant->add_option("--noise-reuse", acc_reuse, "fresh or once")
      ->capture_default_str()->check(CLI::IsMember({"fresh", "once"}));

  CLI11_PARSE(app, argc, argv);
  try {
    for (CLI::App* sub : {run, sweep, validate, accountant}) {
      if (sub->parsed()) apply_config_file(sub);
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  }

  try {
    if (run->parsed()) {
      const auto suite = dplsvi::bench::run_and_emit(run_flags.config());
      print_summary(suite);
    } else if (sweep->parsed()) {
      const auto list = parse_epsilon_list(epsilons);
      ExperimentConfig cfg = sweep_flags.config();
      cfg.algorithms.clear();
      AlgorithmEntry entry;
      entry.mode = Algorithm::kDpLsviUcbPlusPlus;
      entry.delta_prime = sweep_flags.delta_prime;
      entry.epsilon = 1.0;
      entry.radius_multiplier = sweep_flags.radius_mult;
      cfg.algorithms.push_back(entry);
      const auto suite = dplsvi::bench::run_and_emit(cfg, &list);
      print_summary(suite);
    } else if (validate->parsed()) {
      const auto spec = dplsvi::bench::build_instance(validate_flags.descriptor());
      const auto violations = dplsvi::validate_spec(spec);
      std::cout << "d = " << spec.d << ", H = " << spec.horizon
                << ", S = " << spec.num_states << ", A = " << spec.num_actions << '\n';
      for (const auto& v : violations) {
        std::cout << dplsvi::to_string(v.kind) << ": " << v.message << '\n';
      }
      if (!save_path.empty()) dplsvi::save_spec(save_path, spec);
      if (!violations.empty()) return 1;
      std::cout << "ok\n";
    } else if (accountant->parsed()) {
      const double rho = acc_rho ? *acc_rho
                                 : dplsvi::dp_to_zcdp(acc_epsilon.value_or(1.0),
                                                      acc_delta_prime);
      const auto report = dplsvi::make_accountant_report(
          rho, acc_delta_prime, acc_horizon, acc_episodes, acc_dim, acc_delta,
          acc_c1, acc_c2,
          acc_reuse == "once" ? dplsvi::NoiseReuse::kOnce : dplsvi::NoiseReuse::kFresh);
      dplsvi::write_accountant_report(std::cout, report);
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}
