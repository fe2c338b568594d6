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

#include "dplsvi/rng.hpp"

namespace dplsvi {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kEnvironmentTag = 0x656e76ULL;  // "env"
constexpr std::uint64_t kNoiseTag = 0x6e6f6973ULL;      // "nois"
}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_key(std::uint64_t seed,
                         std::initializer_list<std::uint64_t> parts) {
  std::uint64_t key = mix64(seed);
  for (std::uint64_t p : parts) key = mix64(key ^ mix64(p + kGolden));
  return key;
}

Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> parts) {
  const std::uint64_t key = derive_key(seed, parts);
  std::seed_seq seq{static_cast<std::uint32_t>(key),
                    static_cast<std::uint32_t>(key >> 32)};
  return Rng(seq);
}

Rng noise_stream(std::uint64_t seed, NoiseStatistic statistic,
                 std::uint64_t episode, std::uint64_t stage) {
  return make_stream(seed, {kNoiseTag, static_cast<std::uint64_t>(statistic),
                            episode, stage});
}

Rng environment_stream(std::uint64_t seed) {
  return make_stream(seed, {kEnvironmentTag});
}

}  // namespace dplsvi
