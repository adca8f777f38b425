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

#ifndef TGGSYNC_PB_HPP
#define TGGSYNC_PB_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace tggsync {

// 0-1 integer linear program: maximize w^T v subject to linear constraints
// over binary variables.
enum class Rel { Le, Ge, Eq };

struct PBTerm {
  long long coef = 1;
  int var = -1;
};

struct PBConstraint {
  std::string name;
  std::vector<PBTerm> terms;
  Rel rel = Rel::Ge;
  long long rhs = 0;
};

class PBProblem {
 public:
  // Adds a variable (default weight 1) and returns its index. Names must be
  // unique; re-adding a name returns the existing index.
  int add_var(const std::string& name, double weight = 1.0);
  int var(const std::string& name) const;  // throws if absent
  bool has_var(const std::string& name) const;
  void set_weight(int var, double w);
  void add_constraint(PBConstraint c);

  std::size_t var_count() const { return names_.size(); }
  const std::string& name(int v) const { return names_[v]; }
  double weight(int v) const { return weights_[v]; }
  const std::vector<PBConstraint>& constraints() const { return cons_; }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::vector<double> weights_;
  std::map<std::string, int> index_;
  std::vector<PBConstraint> cons_;
};

struct Assignment {
  bool feasible = false;
  double objective = 0.0;
  std::vector<std::uint8_t> values;  // indexed by variable

  bool value(int var) const { return values[var] != 0; }
};

// Exact branch-and-bound solver. Deterministic: among all optima it returns
// the one whose value vector is lexicographically greatest in ascending
// order of variable names. Infeasible problems yield feasible == false.
Assignment solve(const PBProblem& p);

// Exhaustive oracle: depth-first enumeration with feasibility propagation
// only (no objective bounding). Same contract and tie-break as solve().
// Problems with more than `varLimit` variables are attempted under
// `nodeBudget` search nodes; exceeding the budget throws TooLargeError.
Assignment brute_force(const PBProblem& p, std::size_t varLimit = 25,
                       std::uint64_t nodeBudget = 400000000ULL);

// LP-format text (maximize section, constraints, binary section). Variable
// names are sanitized to LP identifiers; a comment block maps them back.
std::string to_lp(const PBProblem& p);

// Additive weight adjustments keyed by exact variable name or by a pattern
// with a single trailing '*'. Every variable starts at weight 1.
struct Weights {
  std::map<std::string, double> adjust;

  double of(const std::string& varName) const;
  void apply(PBProblem& p) const;
};

}  // namespace tggsync

#endif  // TGGSYNC_PB_HPP
