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

#ifndef TGGSYNC_PRECEDENCE_HPP
#define TGGSYNC_PRECEDENCE_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "tggsync/matcher.hpp"

namespace tggsync {

enum class NodeKind { Existing, Candidate };

// One node of the precedence graph: either a recorded rule application or a
// candidate source match that could translate elements.
struct PrecedenceNode {
  std::string id;  // application label or candidate label
  NodeKind kind = NodeKind::Existing;
  std::string ruleName;
  std::string appId;            // Existing only
  AppStatus status;             // Existing only
  Match match;                  // Candidate only (source-only)
  std::vector<ElemId> marks;    // Candidate only: source images it would mark
  bool blocked = false;         // Candidate only: '*' (re-marks a marked one)

  bool intact() const { return kind == NodeKind::Existing && status.intact(); }
  // Status annotation, e.g. "+,u", "*,u", "#", "-", "/,#".
  std::string annotation() const;
};

// Dependency edges point from the dependent node to the node that provides
// (or would provide) its context; overlap edges connect a candidate to an
// existing application whose translated elements it would re-mark.
struct PrecedenceGraph {
  std::vector<PrecedenceNode> nodes;  // sorted by id
  std::vector<std::pair<std::string, std::string>> deps;
  std::vector<std::pair<std::string, std::string>> overlaps;

  const PrecedenceNode* find(const std::string& id) const;
  std::vector<const PrecedenceNode*> candidates() const;
  std::vector<const PrecedenceNode*> existing() const;

  // Maximal connected sets of non-intact existing applications, linked over
  // dependency edges whose endpoints are both non-intact. Sorted.
  std::vector<std::vector<std::string>> clusters() const;

  // Candidate labels for replacing the given cluster: blocked candidates
  // whose re-marked elements belong to cluster applications, closed under
  // connectivity (dependency edges or shared bound elements) with further
  // '+' and eligible '*' candidates. Sorted.
  std::vector<std::string> replacing_candidates(
      const std::vector<std::string>& cluster) const;

  std::string to_dot() const;
};

// Display label for a rule occurrence: the rule tag (or name) followed by
// the sorted trailing numbers of the source nodes the rule creates, taken
// from their bound model ids ("N1", "DC2,3"). Candidate nodes and recorded
// applications share this scheme so precedence and program names line up.
std::string occurrence_label(const Rule& r,
                             const std::map<ElemId, ElemId>& binding);

// Enumerates candidate source matches of the forward rules within `scope`
// grown by the rule diameter, labels them, and assembles the precedence
// graph. Candidates whose marked elements are all owned by intact
// applications are dropped (they duplicate recorded translations), as are
// exact re-matches of existing applications.
PrecedenceGraph build_precedence(
    const Metamodel& mm, const std::map<std::string, Rule>& rules,
    const TripleGraph& g, const std::vector<RuleApplication>& apps,
    const std::map<std::string, AppStatus>& statuses,
    const std::set<ElemId>& scope);

}  // namespace tggsync

#endif  // TGGSYNC_PRECEDENCE_HPP
