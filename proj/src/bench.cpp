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

#include "dplsvi/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "dplsvi/dp_mechanisms.hpp"

namespace dplsvi::bench {

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

std::string format_number(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

double entry_epsilon(const AlgorithmEntry& entry) {
  if (entry.mode != Algorithm::kDpLsviUcbPlusPlus || entry.zero_noise) {
    return std::numeric_limits<double>::infinity();
  }
  if (entry.epsilon) return *entry.epsilon;
  return zcdp_to_dp(*entry.rho, entry.delta_prime).epsilon;
}

double entry_rho(const AlgorithmEntry& entry) {
  if (entry.rho) return *entry.rho;
  return dp_to_zcdp(*entry.epsilon, entry.delta_prime);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

void finish_output(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace

LinearMdpSpec build_instance(const InstanceDescriptor& instance) {
  if (instance.generator == "file") return load_spec(instance.path);
  Rng rng = make_stream(instance.seed, {0x696e7374ULL});  // "inst"
  if (instance.generator == "tabular") {
    return make_tabular_instance(instance.num_states, instance.num_actions,
                                 instance.horizon, rng);
  }
  if (instance.generator == "lowrank") {
    return make_lowrank_instance(instance.num_states, instance.num_actions,
                                 instance.d, instance.horizon, rng);
  }
  throw std::invalid_argument("unknown instance generator '" +
                              instance.generator + "'");
}

std::string AlgorithmEntry::label() const {
  if (mode != Algorithm::kDpLsviUcbPlusPlus) return to_string(mode);
  std::ostringstream os;
  os << std::setprecision(6);
  if (zero_noise) {
    os << to_string(Algorithm::kLsviUcbPlusPlus) << " (zero-noise twin of eps="
       << (epsilon ? *epsilon : zcdp_to_dp(*rho, delta_prime).epsilon) << ")";
  } else {
    os << to_string(mode) << " (eps=" << entry_epsilon(*this) << ")";
  }
  return os.str();
}

AgentOptions ExperimentConfig::default_agent_options() {
  AgentOptions options;
  options.delta = 0.05;
  options.d_cubed_scale = kDefaultDCubedScale;
  options.ridge_lambda = kDefaultRidgeLambda;
  return options;
}

void validate_experiment(const ExperimentConfig& config) {
  require(config.num_seeds >= 1, "num_seeds must be at least 1");
  require(config.episodes >= 1, "episodes must be at least 1");
  require(!config.algorithms.empty(), "at least one algorithm entry is needed");
  for (const auto& entry : config.algorithms) {
    if (entry.radius_multiplier) {
      require(*entry.radius_multiplier > 0.0, "radius multiplier must be positive");
    }
    if (entry.mode == Algorithm::kDpLsviUcbPlusPlus) {
      require(entry.epsilon || entry.rho,
              "private entries need an epsilon or rho budget");
      if (entry.epsilon) require(*entry.epsilon > 0.0, "epsilon must be positive");
      if (entry.rho) require(*entry.rho > 0.0, "rho must be positive");
      require(entry.delta_prime > 0.0 && entry.delta_prime < 1.0,
              "delta' must lie in (0, 1)");
    }
  }
}

std::uint64_t derive_run_seed(std::uint64_t master_seed, int seed_index) {
  return master_seed * 1000003ULL + static_cast<std::uint64_t>(seed_index);
}

double calibrated_radius_multiplier(const AgentConfig& unit, int horizon) {
  const double prior = unit.mode == Algorithm::kLsviUcb ? unit.lambda_tilde
                                                        : 2.0 * unit.lambda_tilde;
  return horizon * std::sqrt(prior) / unit.radii.beta_hat;
}

double matched_ucb_lambda(double lambda_tilde, int horizon) {
  return 2.0 * lambda_tilde * horizon * horizon;
}

AgentConfig make_agent_config(const ExperimentConfig& config,
                              const LinearMdpSpec& spec,
                              const AlgorithmEntry& entry) {
  AgentOptions options = config.agent;
  if (entry.mode == Algorithm::kLsviUcb) {
    options.ridge_lambda = matched_ucb_lambda(options.ridge_lambda, spec.horizon);
  }
  auto build = [&](const AgentOptions& o) {
    switch (entry.mode) {
      case Algorithm::kDpLsviUcbPlusPlus:
        return make_private_config(spec.d, spec.horizon, config.episodes,
                                   entry_rho(entry), entry.delta_prime, o);
      case Algorithm::kLsviUcbPlusPlus:
        return make_nonprivate_config(spec.d, spec.horizon, config.episodes, o);
      case Algorithm::kLsviUcb:
        return make_ucb_config(spec.d, spec.horizon, config.episodes, o);
    }
    throw std::invalid_argument("unknown algorithm");
  };
  if (entry.radius_multiplier) {
    options.radius_multiplier = *entry.radius_multiplier;
  } else {
    options.radius_multiplier = 1.0;
    options.radius_multiplier =
        calibrated_radius_multiplier(build(options), spec.horizon);
  }
  const AgentConfig agent = build(options);
  if (entry.zero_noise && entry.mode == Algorithm::kDpLsviUcbPlusPlus) {
    return zero_noise_private_twin(agent);
  }
  return agent;
}

AggregateCurve aggregate(const std::vector<RunResult>& runs,
                         const std::string& algorithm, double epsilon,
                         int episodes) {
  AggregateCurve curve;
  curve.algorithm = algorithm;
  curve.epsilon = epsilon;
  curve.mean_cumulative_regret.assign(episodes, 0.0);
  curve.std_cumulative_regret.assign(episodes, 0.0);
  curve.count.assign(episodes, 0);
  for (const auto& run : runs) {
    if (run.episodes() < episodes) curve.partial = true;
  }
  for (int k = 0; k < episodes; ++k) {
    double sum = 0.0;
    int n = 0;
    for (const auto& run : runs) {
      if (k < run.episodes()) {
        sum += run.cumulative_regret[k];
        ++n;
      }
    }
    curve.count[k] = n;
    if (n == 0) continue;
    const double mean = sum / n;
    double squares = 0.0;
    for (const auto& run : runs) {
      if (k < run.episodes()) {
        const double dev = run.cumulative_regret[k] - mean;
        squares += dev * dev;
      }
    }
    curve.mean_cumulative_regret[k] = mean;
    curve.std_cumulative_regret[k] = n > 1 ? std::sqrt(squares / (n - 1)) : 0.0;
  }
  return curve;
}

SuiteResult run_suite(const ExperimentConfig& config) {
  validate_experiment(config);
  SuiteResult suite;
  suite.spec = build_instance(config.instance);
  suite.entries = config.algorithms;
  const auto violations = validate_spec(suite.spec);
  if (!violations.empty()) {
    throw ValidationError("instance fails validation: " + violations.front().message);
  }

  std::vector<AgentConfig> agents;
  for (const auto& entry : suite.entries) {
    agents.push_back(make_agent_config(config, suite.spec, entry));
  }

  const int entries = static_cast<int>(suite.entries.size());
  const int total = entries * config.num_seeds;
  suite.runs.assign(entries, std::vector<RunResult>(config.num_seeds));

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int task = next++; task < total; task = next++) {
      const int e = task / config.num_seeds;
      const int i = task % config.num_seeds;
      const std::uint64_t seed = derive_run_seed(config.master_seed, i);
      RunResult run;
      try {
        run = run_agent(suite.spec, agents[e], config.episodes, seed);
      } catch (const std::exception& ex) {
        run.algorithm = to_string(agents[e].mode);
        run.seed = seed;
        run.abort_reason = ex.what();
      }
      const AlgorithmEntry& entry = suite.entries[e];
      const bool private_entry =
          entry.mode == Algorithm::kDpLsviUcbPlusPlus && !entry.zero_noise;
      if (entry.zero_noise) run.algorithm = to_string(Algorithm::kLsviUcbPlusPlus);
      run.epsilon = entry_epsilon(entry);
      run.delta_prime = private_entry ? entry.delta_prime : 0.0;
      suite.runs[e][i] = std::move(run);
    }
  };
  int threads = config.threads > 0
                    ? config.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, total);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (int e = 0; e < entries; ++e) {
    suite.aggregates.push_back(aggregate(suite.runs[e], suite.entries[e].label(),
                                         entry_epsilon(suite.entries[e]),
                                         config.episodes));
  }
  return suite;
}

SuiteResult sweep_epsilon(const ExperimentConfig& config,
                          const std::vector<double>& epsilons) {
  require(!epsilons.empty(), "epsilon list must not be empty");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    require(epsilons[i] > 0.0, "epsilons must be positive");
    if (i > 0) require(epsilons[i] > epsilons[i - 1], "epsilons must be ascending");
  }
  AlgorithmEntry base;
  base.mode = Algorithm::kDpLsviUcbPlusPlus;
  for (const auto& entry : config.algorithms) {
    if (entry.mode == Algorithm::kDpLsviUcbPlusPlus) {
      base = entry;
      break;
    }
  }
  ExperimentConfig sweep = config;
  sweep.algorithms.clear();
  for (double eps : epsilons) {
    AlgorithmEntry entry = base;
    entry.epsilon = eps;
    entry.rho.reset();
    sweep.algorithms.push_back(entry);
  }
  AlgorithmEntry reference = sweep.algorithms.back();
  reference.zero_noise = true;
  sweep.algorithms.push_back(reference);
  return run_suite(sweep);
}

double pooled_standard_error(const AggregateCurve& a, const AggregateCurve& b) {
  const double va = a.final_std() * a.final_std() / a.final_count();
  const double vb = b.final_std() * b.final_std() / b.final_count();
  return std::sqrt(va + vb);
}

void write_runs_csv(std::ostream& out, const std::vector<RunResult>& runs) {
  out << "run_id,algorithm,epsilon,delta_prime,seed,episode,instant_regret,"
         "cumulative_regret,switch_count_so_far\n";
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const RunResult& run = runs[r];
    const std::string prefix = std::to_string(r) + "," + run.algorithm + "," +
                               format_number(run.epsilon) + "," +
                               format_number(run.delta_prime) + "," +
                               std::to_string(run.seed) + ",";
    for (int k = 0; k < run.episodes(); ++k) {
      out << prefix << (k + 1) << ',' << format_number(run.instant_regret[k])
          << ',' << format_number(run.cumulative_regret[k]) << ','
          << run.switch_count_so_far[k] << '\n';
    }
  }
}

void write_aggregate_csv(std::ostream& out,
                         const std::vector<AggregateCurve>& curves) {
  out << "algorithm,epsilon,episode,mean_cum_regret,std,n\n";
  for (const auto& curve : curves) {
    for (std::size_t k = 0; k < curve.mean_cumulative_regret.size(); ++k) {
      out << curve.algorithm << ',' << format_number(curve.epsilon)
          << ',' << (k + 1) << ',' << format_number(curve.mean_cumulative_regret[k])
          << ',' << format_number(curve.std_cumulative_regret[k]) << ','
          << curve.count[k] << '\n';
    }
  }
}

void emit_csv(const SuiteResult& suite, const std::string& directory) {
  std::filesystem::create_directories(directory);
  std::vector<RunResult> flat;
  for (const auto& per_entry : suite.runs) {
    flat.insert(flat.end(), per_entry.begin(), per_entry.end());
  }
  const std::string runs_path = directory + "/runs.csv";
  std::ofstream runs = open_output(runs_path);
  write_runs_csv(runs, flat);
  finish_output(runs, runs_path);

  const std::string agg_path = directory + "/aggregate.csv";
  std::ofstream agg = open_output(agg_path);
  write_aggregate_csv(agg, suite.aggregates);
  finish_output(agg, agg_path);
}

std::vector<RunCsvRow> read_runs_csv(std::istream& in) {
  std::vector<RunCsvRow> rows;
  std::string line;
  if (!std::getline(in, line)) return rows;  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 9) {
      throw std::runtime_error("malformed runs.csv row: " + line);
    }
    RunCsvRow row;
    row.run_id = std::stoi(fields[0]);
    row.algorithm = fields[1];
    row.epsilon = std::stod(fields[2]);
    row.delta_prime = std::stod(fields[3]);
    row.seed = std::stoull(fields[4]);
    row.episode = std::stoi(fields[5]);
    row.instant_regret = std::stod(fields[6]);
    row.cumulative_regret = std::stod(fields[7]);
    row.switch_count_so_far = std::stoi(fields[8]);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_metadata(std::ostream& out, const ExperimentConfig& config,
                    const SuiteResult& suite) {
  const auto precision = out.precision(17);
  const auto& inst = config.instance;
  out << "instance = " << inst.generator << '\n'
      << "instance_seed = " << inst.seed << '\n'
      << "states = " << suite.spec.num_states << '\n'
      << "actions = " << suite.spec.num_actions << '\n'
      << "horizon = " << suite.spec.horizon << '\n'
      << "d = " << suite.spec.d << '\n'
      << "episodes = " << config.episodes << '\n'
      << "seeds = " << config.num_seeds << '\n'
      << "master_seed = " << config.master_seed << '\n'
      << "delta = " << config.agent.delta << '\n'
      << "ridge_lambda = " << config.agent.ridge_lambda << '\n'
      << "d_cubed_scale = " << config.agent.d_cubed_scale << '\n'
      << "c1 = " << config.agent.c1 << '\n'
      << "c2 = " << config.agent.c2 << '\n'
      << "noise_reuse = " << to_string(config.agent.noise_reuse) << '\n'
      << "gram_noise = " << to_string(config.agent.gram_noise) << '\n';
  for (std::size_t e = 0; e < suite.entries.size(); ++e) {
    const AlgorithmEntry& entry = suite.entries[e];
    const AgentConfig agent = make_agent_config(config, suite.spec, entry);
    out << "\n[algorithm." << e << "]\n"
        << "label = " << entry.label() << '\n'
        << "mode = " << to_string(entry.mode) << '\n'
        << "radius_multiplier = " << agent.radius_multiplier << '\n'
        << "lambda_tilde = " << agent.lambda_tilde << '\n'
        << "beta_hat = " << agent.radii.beta_hat << '\n'
        << "beta_check = " << agent.radii.beta_check << '\n'
        << "beta_bar = " << agent.radii.beta_bar << '\n'
        << "beta_bern = " << agent.radii.beta_bern << '\n';
    std::int64_t aborted = 0;
    for (const auto& run : suite.runs[e]) aborted += run.abort_reason.has_value();
    out << "aborted_runs = " << aborted << '\n'
        << "partial = " << (suite.aggregates[e].partial ? "true" : "false") << '\n';
    if (entry.mode == Algorithm::kDpLsviUcbPlusPlus && !entry.zero_noise) {
      write_accountant_report(
          out, make_accountant_report(entry_rho(entry), entry.delta_prime,
                                      suite.spec.horizon, config.episodes,
                                      suite.spec.d, config.agent.delta,
                                      config.agent.c1, config.agent.c2,
                                      config.agent.noise_reuse));
    }
  }
  out.precision(precision);
}

SuiteResult run_and_emit(const ExperimentConfig& config,
                         const std::vector<double>* sweep_epsilons) {
  SuiteResult suite = sweep_epsilons ? sweep_epsilon(config, *sweep_epsilons)
                                     : run_suite(config);
  if (config.output_dir.empty()) return suite;
  emit_csv(suite, config.output_dir);
  const std::string meta_path = config.output_dir + "/metadata.txt";
  std::ofstream meta = open_output(meta_path);
  ExperimentConfig effective = config;
  effective.algorithms = suite.entries;
  write_metadata(meta, effective, suite);
  finish_output(meta, meta_path);
  if (config.plot) {
    emit_plot(suite.aggregates, config.output_dir + "/regret.svg",
              sweep_epsilons ? "Cumulative regret across privacy budgets"
                             : "Cumulative regret");
  }
  return suite;
}

}  // namespace dplsvi::bench
