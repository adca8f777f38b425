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

#ifndef TGGSYNC_SHORTCUT_HPP
#define TGGSYNC_SHORTCUT_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tggsync/pb.hpp"
#include "tggsync/precedence.hpp"

namespace tggsync {

// Composition of the rules of a cluster of broken applications, glued along
// their recorded bindings. Element ids are prefixed with the application
// label ("N2.h"). `binding` maps composed elements to their model images,
// restricted to images that still exist.
struct ReplacedRule {
  Rule rule;     // monotonic composed rule
  Rule inverse;  // invert(rule)
  std::map<ElemId, ElemId> binding;
  std::vector<std::string> appLabels;  // composition order
};

ReplacedRule build_replaced(const Metamodel& mm,
                            const std::map<std::string, Rule>& rules,
                            const TripleGraph& g,
                            const std::vector<RuleApplication>& apps,
                            const std::vector<std::string>& cluster);

// A candidate's context element may be glued onto an element another
// candidate would create.
struct ContextCreateMapping {
  std::string consumer;   // candidate label
  ElemId ctxElem;         // context element of consumer's rule
  std::string producer;   // candidate label
  ElemId createdElem;     // created element of producer's rule
  int var = -1;
};

// A candidate's created corr/target element may be identified with a model
// element previously created by a cluster application (type-exact).
struct RuleModelMapping {
  std::string candidate;
  ElemId elem;       // created element of the candidate's rule
  ElemId modelElem;  // model element owned by a cluster application
  int var = -1;
};

struct ReplacingProblem {
  PBProblem problem;
  std::vector<std::string> candidateOrder;  // label per candidate var
  std::map<std::string, int> candidateVar;
  std::vector<ContextCreateMapping> ctxCreate;
  std::vector<RuleModelMapping> ruleModel;
};

// Builds the candidate-selection program for one cluster: one variable per
// candidate with dependency implications and mutual exclusions, context-
// create mapping variables with implications, per-context-element
// at-most-one rows and endpoint gates, and rule-model mapping variables with
// at-most-one rows in both directions and summed edge/corr gates. Mapping
// variables are generated only for elements whose type can occur as rule
// context somewhere in the TGG. All weights default to 1 before `weights`.
ReplacingProblem encode_replacing(const Metamodel& mm,
                                  const std::map<std::string, Rule>& rules,
                                  const TripleGraph& g,
                                  const std::vector<RuleApplication>& apps,
                                  const PrecedenceGraph& pg,
                                  const std::vector<std::string>& cluster,
                                  const std::vector<std::string>& candidates,
                                  const Weights& weights);

// The decoded replacing rule: selected candidates composed in dependency
// order along the chosen context-create glue. Context-create choices are
// honored only when structurally complete (a context node glued onto a
// created element needs all its incident context relations glued alongside);
// the rest of each candidate's context is bound against the model, and
// context elements of different candidates denoting one model element are
// identified. `partialMatch` binds source elements (from the candidate
// matches) and context elements whose images are known; `reuse` maps created
// corr/target elements to the model elements the assignment chose to reuse.
struct ReplacingRule {
  Rule rule;
  std::vector<std::string> chosen;  // candidate labels, composition order
  std::map<ElemId, ElemId> partialMatch;
  std::map<ElemId, ElemId> reuse;
  // For each chosen candidate, the composed rule element standing for each of
  // its rule elements (context glued onto another candidate's created element
  // resolves to that element's id). Lets the engine decompose an applied
  // replacing rule back into one application per candidate.
  std::map<std::string, std::map<ElemId, ElemId>> elementOf;
};

std::optional<ReplacingRule> decode_replacing(
    const Metamodel& mm, const std::map<std::string, Rule>& rules,
    const TripleGraph& g, const PrecedenceGraph& pg, const ReplacingProblem& rp,
    const Assignment& a);

// A short-cut rule with its implicit match. Element actions: Context for
// overlap and context, Delete for replaced-only created elements, Create for
// replacing-only created elements. `binding` maps rule elements to model
// images where known (replaced side, source side, unified context, reused
// elements); `componentOf` tags each element Replaced/Replacing/Both.
struct ShortCut {
  Rule rule;
  std::map<ElemId, ElemId> binding;
};

// Overlap construction. Source overlap is fixed beforehand: `sourcePairs`
// maps replaced source elements to replacing source elements that denote the
// same model element. Context elements of both rules bound to one model
// element are unified, and replacing context whose image a chosen pair
// preserves is folded onto the pair (an occurrence binds every rule element
// to a distinct model element, so two stand-ins for one image cannot stay).
// The corr/target overlap is an ILP over type-exact
// created-element pairs: relation pairs are gated by endpoint pairs, node
// pairs are anchored (require at least one incident relation pair when one
// exists), a pair of corr-carrying targets requires its sources identified
// (generation-time filter), and `reuseSeeds` pairs that pass the filters are
// forced in. The objective maximizes preserved elements under `weights`.
// Only the replacing rule's conditions and assignments are kept.
ShortCut build_shortcut(const Metamodel& mm, const ReplacedRule& replaced,
                        const ReplacingRule& replacing,
                        const std::map<ElemId, ElemId>& sourcePairs,
                        const std::map<ElemId, ElemId>& reuseSeeds,
                        const Weights& weights);

// Forward operationalization of a short-cut rule: source creates become Mark
// preconditions (assignments to conditions), source deletions become NACs
// (absent node / absent edge), replaced-only context that merely anchors a
// NAC is relaxed, and unused replaced-only context is dropped.
struct OperationalShortCut {
  OperationalRule op;
  std::map<ElemId, ElemId> binding;  // carried over from the short-cut rule
  // Source nodes whose model image must be absent.
  std::set<ElemId> absentNodes;
};

OperationalShortCut operationalize_shortcut(const ShortCut& sc);

}  // namespace tggsync

#endif  // TGGSYNC_SHORTCUT_HPP
