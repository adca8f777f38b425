// Copyright 2024-2026 The tggsync Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TGGSYNC_SCENARIO_HPP
#define TGGSYNC_SCENARIO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tggsync/sync.hpp"

namespace tggsync {

// The built-in running-example grammar: rows of typed houses over a
// construction plan. Used by the generators and as the CLI default grammar.
Metamodel house_metamodel();
std::vector<Rule> house_rules();

// Benchmark scenarios over the house-row model family:
//   1  fixed grid of rows; prepend a Nook to the first `size` rows and
//      retype each old head to Cube
//   2  fixed grid of rows; relocate a subrow between `size` row pairs
//   3  two rows of length `size`; same edit as scenario 1 on both
//   4  two rows of length `size`; move the tail half of one onto the other
//   5  one long row (Nook then Villas); retype the first `size` Villas to
//      Cube, forming one connected inconsistency
struct ScenarioInstance {
  int scenario = 1;
  int size = 0;
  Session session;  // consistent pre-state with enriched attributes
  Delta delta;
};

// Deterministic for fixed (scenario, size, seed). The generated pre-state
// passes consistency_check; houses carry architect strings and constructions
// carry company strings so preservation is observable.
ScenarioInstance generate_scenario(int scenario, int size,
                                   std::uint64_t seed);

// Default size grids per scenario, small enough for desk runs.
std::vector<int> default_sizes(int scenario);

// One benchmark cell: run `synchronize` on a fresh instance.
struct BenchRow {
  int scenario = 0;
  int size = 0;
  Strategy strategy = Strategy::Legacy;
  int repeat = 0;
  SyncReport report;
};

std::string bench_csv_header();
std::string bench_csv_row(const BenchRow& r);

std::vector<BenchRow> run_bench(const std::vector<int>& scenarios,
                                const std::vector<int>& sizes,
                                const std::vector<Strategy>& strategies,
                                int repeats, std::uint64_t seed, int jobs);

}  // namespace tggsync

#endif  // TGGSYNC_SCENARIO_HPP
