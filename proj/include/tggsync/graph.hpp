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

#ifndef TGGSYNC_GRAPH_HPP
#define TGGSYNC_GRAPH_HPP

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tggsync/metamodel.hpp"

namespace tggsync {

using ElemId = std::string;

// Attribute values. Enum literals are stored as strings.
using AttrValue = std::variant<std::string, long long, bool>;

std::string attr_to_string(const AttrValue& v);
bool attr_equal(const AttrValue& a, const AttrValue& b);

struct Node {
  ElemId id;
  std::string type;
  std::map<std::string, AttrValue> attrs;
};

struct Edge {
  ElemId id;
  std::string type;
  ElemId src;
  ElemId tgt;
};

struct CorrLink {
  ElemId id;
  std::string type;
  ElemId src;  // source-domain node
  ElemId tgt;  // target-domain node
};

// A source/correspondence/target triple with translation markings.
// `markings` maps an element id to the id of the rule application that
// translated (source side) or created (corr/target side) it; an element has
// at most one owner by construction of the map.
struct TripleGraph {
  std::map<ElemId, Node> nodes;
  std::map<ElemId, Edge> edges;
  std::map<ElemId, CorrLink> corrs;
  std::map<ElemId, std::string> markings;

  bool has(const ElemId& id) const;
  const Node* find_node(const ElemId& id) const;
  const Edge* find_edge(const ElemId& id) const;
  const CorrLink* find_corr(const ElemId& id) const;

  // Owner application id, or empty when unmarked/absent.
  std::string marking_of(const ElemId& id) const;

  // Ids of edges incident to `node` and corrs attached to it, sorted.
  std::vector<ElemId> incident_edges(const ElemId& node) const;
  std::vector<ElemId> incident_corrs(const ElemId& node) const;

  std::optional<AttrValue> attribute(const ElemId& node,
                                     const std::string& attr) const;
};

// One primitive model edit. SetAttribute optionally carries the prior value;
// when present it is checked during apply.
struct Edit {
  enum class Kind {
    CreateNode,
    CreateEdge,
    CreateCorr,
    DeleteNode,
    DeleteEdge,
    DeleteCorr,
    SetAttribute
  };
  Kind kind = Kind::CreateNode;
  ElemId id;
  std::string type;                        // create ops
  ElemId src, tgt;                         // create edge/corr
  std::map<std::string, AttrValue> attrs;  // create node
  std::string attr;                        // set attribute
  AttrValue value;                         // set attribute: new value
  std::optional<AttrValue> oldValue;       // set attribute: expected old
};

// An ordered list of edits. Applied front to back.
struct Delta {
  std::vector<Edit> edits;

  // Ids of elements this delta touches (created, deleted, retyped source or
  // target of an attribute change, and endpoints of created/deleted edges).
  std::vector<ElemId> touched() const;
};

// Applies `delta` to a copy of `g`. Every edit is validated against the
// metamodel and the evolving graph: unknown types, duplicate ids, dangling
// endpoints, deletes of missing elements, and deletes of nodes that still
// have incident edges are rejected. Correspondence links attached to a
// deleted node cascade. Deleting a marked element drops its marking.
TripleGraph apply_delta(const Metamodel& mm, const TripleGraph& g,
                        const Delta& delta);

// Structural well-formedness of `g` under `mm`: types exist and are concrete,
// endpoints exist and their types conform (subtyping allowed), corr links
// cross Source->Target, attribute values fit their declarations, markings
// reference existing elements. Returns the list of violations, empty if ok.
std::vector<std::string> validate(const Metamodel& mm, const TripleGraph& g);

}  // namespace tggsync

#endif  // TGGSYNC_GRAPH_HPP
