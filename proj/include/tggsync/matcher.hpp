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

#ifndef TGGSYNC_MATCHER_HPP
#define TGGSYNC_MATCHER_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tggsync/rule.hpp"

namespace tggsync {

enum class MatchSide { Full, SourceOnly };

// An occurrence of a rule in a triple graph. `binding` maps rule element ids
// to model element ids; it is injective per domain. SourceOnly matches bind
// only the rule's source elements.
struct Match {
  std::string ruleName;
  MatchSide side = MatchSide::Full;
  std::map<ElemId, ElemId> binding;

  bool operator<(const Match& o) const;
  bool operator==(const Match& o) const;
};

// A recorded rule application: the rule name plus the full binding of every
// rule element to its model image at application time.
struct RuleApplication {
  std::string id;        // unique per session ("a1", "a2", ...)
  std::string label;     // display/ILP name ("N2", "C3", "DC2,3")
  std::string ruleName;
  std::map<ElemId, ElemId> binding;

  // Model images of the rule's elements with the given domain/action,
  // restricted to ids that are still bound. Requires the rule definition.
  std::vector<ElemId> images(const Rule& r, Domain d, Action a) const;
  std::vector<ElemId> context_images(const Rule& r) const;
};

struct MatchOptions {
  MatchSide side = MatchSide::Full;
  // When set, at least one bound model element must be in scope.
  std::optional<std::set<ElemId>> scope;
  // Enforce Mark => unmarked and RequireMarked => marked. Candidate
  // enumeration turns this off; the precedence layer reasons about markings.
  bool enforceDirectives = true;
  // Upper bound on matches; 0 means unlimited.
  std::size_t limit = 0;
};

// All occurrences of `op` in `g`, deterministically sorted. Attribute
// conditions restricted to bound elements are checked; NAC edges must be
// absent; relaxed nodes may stay unbound (absent). The OpenMP build
// parallelizes over anchor seeds; results are identical to the serial
// reference in content and order.
std::vector<Match> find_matches(const Metamodel& mm, const OperationalRule& op,
                                const TripleGraph& g, const MatchOptions& opt);

// Serial reference implementation: plain exhaustive backtracking, no seed
// partitioning. Kept as the oracle for the parallel kernel.
std::vector<Match> find_matches_serial(const Metamodel& mm,
                                       const OperationalRule& op,
                                       const TripleGraph& g,
                                       const MatchOptions& opt);

// Largest number of pattern hops from the anchor over any rule in `rules`;
// callers grow deltas by this radius to build re-search scopes.
int rule_diameter(const Rule& r);

// Per-side health of a recorded application.
enum class StatusFlag {
  AllDeleted,         // '-' every created element of the side is gone
  PartiallyDeleted,   // '/' some created elements of the side are gone
  AttrBroken,         // '#' a created element violates an assignment value
  ContextBroken       // '!' a context-bound element of the side is gone
};

std::string flags_to_string(const std::set<StatusFlag>& flags);

struct AppStatus {
  std::set<StatusFlag> source;
  std::set<StatusFlag> target;  // corr elements count toward the target side
  bool intact() const { return source.empty() && target.empty(); }
};

// Re-checks each application's recorded bindings against the current graph.
// Pure; does not modify the session.
std::map<std::string, AppStatus> revalidate(
    const Metamodel& mm, const std::map<std::string, Rule>& rules,
    const TripleGraph& g, const std::vector<RuleApplication>& apps);

}  // namespace tggsync

#endif  // TGGSYNC_MATCHER_HPP
