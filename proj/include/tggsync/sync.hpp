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

#ifndef TGGSYNC_SYNC_HPP
#define TGGSYNC_SYNC_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tggsync/shortcut.hpp"

namespace tggsync {

enum class Strategy { Legacy, SC, Hosc };

const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

// Engine-side change counters. User edits from the delta are not counted.
struct ChangeCounts {
  long long nodes = 0;
  long long edges = 0;
  long long corrs = 0;
  long long total() const { return nodes + edges + corrs; }
};

struct SyncReport {
  Strategy strategy = Strategy::Legacy;
  ChangeCounts deleted;
  ChangeCounts created;
  long long preserved = 0;  // corr/target elements surviving by id
  long long scApplications = 0;
  long long legacyFallbacks = 0;
  long long revokedApplications = 0;
  long long ilpProblems = 0;
  long long ilpVars = 0;         // summed over problems
  long long ilpConstraints = 0;  // summed over problems
  double solveMs = 0.0;          // ILP solve time
  double wallMs = 0.0;           // whole synchronization
  bool consistent = false;
};

// A translated triple with its application history.
struct Session {
  Metamodel mm;
  std::map<std::string, Rule> rules;  // by rule name
  TripleGraph graph;
  std::vector<RuleApplication> apps;
  long long idCounter = 0;   // fresh model element ids
  long long appCounter = 0;  // fresh application ids
  // Every element id this session has ever observed. Freshly minted ids must
  // avoid them all: application bindings outlive deletions, and a recycled id
  // would let a stale binding silently capture an unrelated new element.
  std::set<ElemId> seenIds;

  const Rule& rule(const std::string& name) const;
  const RuleApplication* find_app(const std::string& id) const;
};

struct SyncOptions {
  Weights weights;
  // When set, synthesized problems and rules are written here (LP text,
  // canonical rule text, precedence DOT) for inspection.
  std::string debugDir;
  // Iteration guard for the repair loop; 0 derives a bound from model size.
  int maxRounds = 0;
};

// Translates a source-only graph by exhaustively applying the forward rules
// (deterministic order). Throws UntranslatableRemainderError when source
// elements remain unmarked.
Session translate_batch(const Metamodel& mm, const std::vector<Rule>& rules,
                        const TripleGraph& source);

// Starts a session from an already-consistent triple: runs consistency_check
// and adopts the found decomposition as the application history.
Session adopt_triple(const Metamodel& mm, const std::vector<Rule>& rules,
                     const TripleGraph& triple);

// Applies the delta and restores consistency with the chosen strategy.
// Mutates the session in place and reports what it did. The precondition is
// a consistent session (as produced by translate_batch / adopt_triple).
SyncReport synchronize(Session& s, const Delta& delta, Strategy strategy,
                       const SyncOptions& opt = {});

// Searches for a forward decomposition: a sequence of forward-rule
// applications that marks every source element exactly once and creates
// exactly the corr/target graph. Returns the decomposition or nullopt.
std::optional<std::vector<RuleApplication>> consistency_check(
    const Metamodel& mm, const std::vector<Rule>& rules,
    const TripleGraph& triple);

}  // namespace tggsync

#endif  // TGGSYNC_SYNC_HPP
