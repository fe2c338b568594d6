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
#include <initializer_list>
#include <random>

namespace dplsvi {

using Rng = std::mt19937_64;

// Identifies which privatized statistic a noise stream feeds.
enum class NoiseStatistic : std::uint64_t {
  kValueSum = 1,         // phi_1, optimistic regression target
  kPessimisticSum = 2,   // phi_2
  kSquaredValueSum = 3,  // phi_3
  kGram = 4,             // K_1, GOE perturbation of the Gram matrix
};

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Folds a list of counters into a single 64-bit key. The result depends on
// the order of `parts`.
std::uint64_t derive_key(std::uint64_t seed,
                         std::initializer_list<std::uint64_t> parts);

// Independent generator keyed by (seed, parts...). Two calls with the same
// key return generators producing identical sequences, regardless of what
// other streams have been consumed in between.
Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> parts);

// Stream for one (statistic, episode, stage) noise release.
Rng noise_stream(std::uint64_t seed, NoiseStatistic statistic,
                 std::uint64_t episode, std::uint64_t stage);

// Stream driving environment transitions for one run.
Rng environment_stream(std::uint64_t seed);

}  // namespace dplsvi
