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

#ifndef TGGSYNC_RULE_HPP
#define TGGSYNC_RULE_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "tggsync/graph.hpp"

namespace tggsync {

// Element role within a rule. TGG rules use Context/Create only; short-cut
// rules add Delete.
enum class Action { Context, Create, Delete };

const char* to_string(Action a);

// Provenance of a short-cut rule element.
enum class Origin { Plain, Replaced, Replacing, Both };

struct RuleNode {
  ElemId id;
  std::string type;
  Domain domain = Domain::Source;
  Action action = Action::Context;
  // Relaxed context: the bound model element may be absent. Only produced by
  // operationalization of short-cut rules.
  bool relaxed = false;
  // Attribute assignments applied when the element is created (or, for
  // short-cut rules, re-established on a preserved element).
  std::map<std::string, AttrValue> assignments;
};

struct RuleEdge {
  ElemId id;
  std::string type;
  ElemId src;
  ElemId tgt;
  Action action = Action::Context;
  // Negative application condition: the edge must be absent between the
  // bound endpoints. Only produced by operationalization.
  bool nac = false;
};

struct RuleCorr {
  ElemId id;
  std::string type;
  ElemId src;
  ElemId tgt;
  Action action = Action::Context;
};

// Attribute equality required for the rule to be applicable.
struct AttrCondition {
  ElemId elem;
  std::string attr;
  AttrValue value;
};

// A triple rule. Serves as the TGG rule (monotonic: Context/Create), as the
// result of rule composition, and as the short-cut rule body (with Delete
// actions and element origins).
struct Rule {
  std::string name;
  // Short label used in application and ILP variable names ("N", "C", ...).
  std::string tag;
  std::map<ElemId, RuleNode> nodes;
  std::map<ElemId, RuleEdge> edges;
  std::map<ElemId, RuleCorr> corrs;
  std::vector<AttrCondition> conditions;
  // Set on short-cut rules: which side of the construction an element came
  // from. Empty for plain and composed rules.
  std::map<ElemId, Origin> origin;
  // Set on composed rules: element id -> label of the constituent that
  // contributed it. Used to re-materialize per-constituent applications.
  std::map<ElemId, std::string> component;

  bool has(const ElemId& id) const;
  Domain domain_of(const ElemId& id) const;
  Action action_of(const ElemId& id) const;
  Origin origin_of(const ElemId& id) const;

  // Ids of all elements (nodes, edges, corrs), sorted.
  std::vector<ElemId> element_ids() const;
  // Ids filtered by domain and optionally action, sorted.
  std::vector<ElemId> elements(Domain d) const;
  std::vector<ElemId> elements(Domain d, Action a) const;

  // Endpoint pair for a relation (edge or corr) id.
  std::pair<ElemId, ElemId> endpoints(const ElemId& rel) const;

  // Structural well-formedness under `mm`: types exist, endpoints are
  // in-rule and type-conformant, created relations never point at deleted
  // elements and vice versa, assignments sit on Create (or, for short-cut
  // rules, Context) elements, conditions reference declared attributes.
  void check(const Metamodel& mm) const;
};

using TGGRule = Rule;
using GeneralRule = Rule;

// Marking directive of a source element in an operational (forward) rule.
enum class Directive { None, RequireMarked, Mark };

// A forward- or backward-operationalized rule: the precondition side must
// already exist; Mark elements get translated, RequireMarked elements must
// already be translated. NAC edges and relaxed nodes encode source deletions
// of short-cut rules.
struct OperationalRule {
  Rule rule;
  // Which side is precondition (Source for forward rules).
  Domain inputDomain = Domain::Source;
  std::map<ElemId, Directive> directives;
};

// Swaps Create and Delete on every element; context, assignments, and
// conditions are kept in place, so invert(invert(r)) == r.
Rule invert(const Rule& r);

// Sequential composition: `second`'s context elements listed in `glue` are
// identified with elements of `first`; everything else of `second` is added
// verbatim. Glue keys must be context elements of `second`; values must be
// elements of `first` with a conformant type; relation glue must be
// endpoint-consistent. Both inputs must be monotonic.
Rule compose(const Metamodel& mm, const Rule& first, const Rule& second,
             const std::map<ElemId, ElemId>& glue, const std::string& name);

// Forward operationalization: source Create becomes precondition with a Mark
// directive and its assignments turn into attribute conditions; source
// Context requires a marked image; corr/target actions stay as they are.
OperationalRule derive_forward(const Rule& r);

// Backward operationalization, the mirror image of derive_forward.
OperationalRule derive_backward(const Rule& r);

// Deterministic canonical text of a rule, invariant under element renaming.
// Two rules are isomorphic (same structure, actions, origins, types,
// attributes, NAC/relaxed flags) iff their canonical texts are equal.
std::string canonical_text(const Rule& r);
std::string canonical_text(const OperationalRule& r);

// Graphviz rendering with one subgraph per domain; create/delete/nac
// elements are tagged in labels and colors.
std::string rule_to_dot(const Rule& r);

}  // namespace tggsync

#endif  // TGGSYNC_RULE_HPP
