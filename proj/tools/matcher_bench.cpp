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
//
// Compares the parallel matching kernel against the serial reference on
// house-row models of growing size. Exits non-zero if the two kernels ever
// disagree.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <vector>

#include "tggsync/matcher.hpp"
#include "tggsync/scenario.hpp"

using namespace tggsync;

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
double time_ms(F&& f, int iters) {
  const auto t0 = Clock::now();
  for (int i = 0; i < iters; ++i) f();
  const auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / iters;
}

}  // namespace

int main() {
  const Metamodel mm = house_metamodel();
  const std::vector<Rule> rules = house_rules();

  std::printf("%-10s %8s %10s %12s %12s %8s\n", "rule", "size", "matches",
              "serial(ms)", "parallel(ms)", "speedup");
  bool ok = true;
  for (int size : {8, 16, 24, 32, 40}) {
    // One long mixed row; every appending rule matches at every position.
    ScenarioInstance inst = generate_scenario(3, size, 7);
    const TripleGraph& g = inst.session.graph;
    for (const Rule& r : rules) {
      OperationalRule op = derive_forward(r);
      MatchOptions mo;
      mo.enforceDirectives = false;
      const std::vector<Match> serial = find_matches_serial(mm, op, g, mo);
      const std::vector<Match> parallel = find_matches(mm, op, g, mo);
      if (serial != parallel) {
        std::cerr << "MISMATCH on " << r.name << " at size " << size << "\n";
        ok = false;
        continue;
      }
      const int iters = 3;
      const double ts =
          time_ms([&] { (void)find_matches_serial(mm, op, g, mo); }, iters);
      const double tp =
          time_ms([&] { (void)find_matches(mm, op, g, mo); }, iters);
      std::printf("%-10s %8d %10zu %12.3f %12.3f %8.2f\n", r.name.c_str(),
                  size, serial.size(), ts, tp, ts / (tp > 0 ? tp : 1e-9));
    }
  }
  return ok ? 0 : 1;
}
