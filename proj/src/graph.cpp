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

#include "tggsync/graph.hpp"

#include <algorithm>

namespace tggsync {

std::string attr_to_string(const AttrValue& v) {
  if (std::holds_alternative<std::string>(v)) return std::get<std::string>(v);
  if (std::holds_alternative<long long>(v))
    return std::to_string(std::get<long long>(v));
  return std::get<bool>(v) ? "true" : "false";
}

bool attr_equal(const AttrValue& a, const AttrValue& b) { return a == b; }

bool TripleGraph::has(const ElemId& id) const {
  return nodes.count(id) || edges.count(id) || corrs.count(id);
}

const Node* TripleGraph::find_node(const ElemId& id) const {
  auto it = nodes.find(id);
  return it == nodes.end() ? nullptr : &it->second;
}

const Edge* TripleGraph::find_edge(const ElemId& id) const {
  auto it = edges.find(id);
  return it == edges.end() ? nullptr : &it->second;
}

const CorrLink* TripleGraph::find_corr(const ElemId& id) const {
  auto it = corrs.find(id);
  return it == corrs.end() ? nullptr : &it->second;
}

std::string TripleGraph::marking_of(const ElemId& id) const {
  auto it = markings.find(id);
  return it == markings.end() ? std::string() : it->second;
}

std::vector<ElemId> TripleGraph::incident_edges(const ElemId& node) const {
  std::vector<ElemId> out;
  for (const auto& [id, e] : edges)
    if (e.src == node || e.tgt == node) out.push_back(id);
  return out;
}

std::vector<ElemId> TripleGraph::incident_corrs(const ElemId& node) const {
  std::vector<ElemId> out;
  for (const auto& [id, c] : corrs)
    if (c.src == node || c.tgt == node) out.push_back(id);
  return out;
}

std::optional<AttrValue> TripleGraph::attribute(const ElemId& node,
                                                const std::string& attr) const {
  const Node* n = find_node(node);
  if (!n) return std::nullopt;
  auto it = n->attrs.find(attr);
  if (it == n->attrs.end()) return std::nullopt;
  return it->second;
}

std::vector<ElemId> Delta::touched() const {
  std::vector<ElemId> out;
  for (const Edit& e : edits) {
    out.push_back(e.id);
    if (!e.src.empty()) out.push_back(e.src);
    if (!e.tgt.empty()) out.push_back(e.tgt);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

void check_attr_value(const Metamodel& mm, const std::string& nodeType,
                      const std::string& attr, const AttrValue& v,
                      std::vector<std::string>* issues) {
  const AttrDecl* decl = mm.find_attribute(nodeType, attr);
  auto fail = [&](const std::string& msg) {
    if (issues)
      issues->push_back(msg);
    else
      throw ModelError(msg);
  };
  if (!decl) {
    fail("attribute '" + attr + "' not declared on '" + nodeType + "'");
    return;
  }
  switch (decl->kind) {
    case AttrKind::String:
      if (!std::holds_alternative<std::string>(v))
        fail("attribute '" + nodeType + "." + attr + "' expects a string");
      break;
    case AttrKind::Int:
      if (!std::holds_alternative<long long>(v))
        fail("attribute '" + nodeType + "." + attr + "' expects an int");
      break;
    case AttrKind::Bool:
      if (!std::holds_alternative<bool>(v))
        fail("attribute '" + nodeType + "." + attr + "' expects a bool");
      break;
    case AttrKind::Enum: {
      if (!std::holds_alternative<std::string>(v)) {
        fail("attribute '" + nodeType + "." + attr + "' expects an enum literal");
        break;
      }
      const auto& lits = mm.enums.at(decl->enumName);
      if (std::find(lits.begin(), lits.end(), std::get<std::string>(v)) ==
          lits.end())
        fail("'" + attr_to_string(v) + "' is not a literal of enum '" +
             decl->enumName + "'");
      break;
    }
  }
}

}  // namespace

TripleGraph apply_delta(const Metamodel& mm, const TripleGraph& g,
                        const Delta& delta) {
  TripleGraph out = g;
  for (std::size_t i = 0; i < delta.edits.size(); ++i) {
    const Edit& e = delta.edits[i];
    const std::string at = " (edit #" + std::to_string(i) + ")";
    switch (e.kind) {
      case Edit::Kind::CreateNode: {
        if (out.has(e.id)) throw DuplicateIdError("'" + e.id + "'" + at);
        const NodeType& nt = mm.node_type(e.type);
        if (nt.isAbstract)
          throw ModelError("abstract type '" + e.type + "'" + at);
        for (const auto& [a, v] : e.attrs)
          check_attr_value(mm, e.type, a, v, nullptr);
        out.nodes[e.id] = Node{e.id, e.type, e.attrs};
        break;
      }
      case Edit::Kind::CreateEdge: {
        if (out.has(e.id)) throw DuplicateIdError("'" + e.id + "'" + at);
        const EdgeType& et = mm.edge_type(e.type);
        const Node* s = out.find_node(e.src);
        const Node* t = out.find_node(e.tgt);
        if (!s || !t)
          throw DanglingEdgeError("edge '" + e.id + "' endpoints" + at);
        if (!mm.is_subtype(s->type, et.source) ||
            !mm.is_subtype(t->type, et.target))
          throw ModelError("edge '" + e.id + "' endpoint types" + at);
        out.edges[e.id] = Edge{e.id, e.type, e.src, e.tgt};
        break;
      }
      case Edit::Kind::CreateCorr: {
        if (out.has(e.id)) throw DuplicateIdError("'" + e.id + "'" + at);
        const CorrType& ct = mm.corr_type(e.type);
        const Node* s = out.find_node(e.src);
        const Node* t = out.find_node(e.tgt);
        if (!s || !t)
          throw DanglingEdgeError("corr '" + e.id + "' endpoints" + at);
        if (!mm.is_subtype(s->type, ct.source) ||
            !mm.is_subtype(t->type, ct.target))
          throw ModelError("corr '" + e.id + "' endpoint types" + at);
        out.corrs[e.id] = CorrLink{e.id, e.type, e.src, e.tgt};
        break;
      }
      case Edit::Kind::DeleteNode: {
        if (!out.nodes.count(e.id))
          throw ModelError("delete of missing node '" + e.id + "'" + at);
        if (!out.incident_edges(e.id).empty())
          throw DanglingEdgeError("node '" + e.id +
                                  "' still has incident edges" + at);
        // Correspondence links are derived bookkeeping, not user-editable
        // content: they are cascaded rather than rejected.
        for (const ElemId& cid : out.incident_corrs(e.id)) {
          out.corrs.erase(cid);
          out.markings.erase(cid);
        }
        out.nodes.erase(e.id);
        out.markings.erase(e.id);
        break;
      }
      case Edit::Kind::DeleteEdge: {
        if (!out.edges.count(e.id))
          throw ModelError("delete of missing edge '" + e.id + "'" + at);
        out.edges.erase(e.id);
        out.markings.erase(e.id);
        break;
      }
      case Edit::Kind::DeleteCorr: {
        if (!out.corrs.count(e.id))
          throw ModelError("delete of missing corr '" + e.id + "'" + at);
        out.corrs.erase(e.id);
        out.markings.erase(e.id);
        break;
      }
      case Edit::Kind::SetAttribute: {
        auto it = out.nodes.find(e.id);
        if (it == out.nodes.end())
          throw ModelError("attribute set on missing node '" + e.id + "'" + at);
        check_attr_value(mm, it->second.type, e.attr, e.value, nullptr);
        if (e.oldValue) {
          auto cur = it->second.attrs.find(e.attr);
          const bool match = cur != it->second.attrs.end() &&
                             attr_equal(cur->second, *e.oldValue);
          if (!match)
            throw ModelError("stale old value for '" + e.id + "." + e.attr +
                             "'" + at);
        }
        it->second.attrs[e.attr] = e.value;
        break;
      }
    }
  }
  return out;
}

std::vector<std::string> validate(const Metamodel& mm, const TripleGraph& g) {
  std::vector<std::string> issues;
  for (const auto& [id, n] : g.nodes) {
    auto it = mm.nodeTypes.find(n.type);
    if (it == mm.nodeTypes.end()) {
      issues.push_back("node '" + id + "' has unknown type '" + n.type + "'");
      continue;
    }
    if (it->second.isAbstract)
      issues.push_back("node '" + id + "' instantiates abstract '" + n.type +
                       "'");
    for (const auto& [a, v] : n.attrs) check_attr_value(mm, n.type, a, v, &issues);
  }
  for (const auto& [id, e] : g.edges) {
    auto it = mm.edgeTypes.find(e.type);
    if (it == mm.edgeTypes.end()) {
      issues.push_back("edge '" + id + "' has unknown type '" + e.type + "'");
      continue;
    }
    const Node* s = g.find_node(e.src);
    const Node* t = g.find_node(e.tgt);
    if (!s || !t) {
      issues.push_back("edge '" + id + "' dangles");
      continue;
    }
    if (!mm.is_subtype(s->type, it->second.source) ||
        !mm.is_subtype(t->type, it->second.target))
      issues.push_back("edge '" + id + "' endpoint types do not conform");
  }
  for (const auto& [id, c] : g.corrs) {
    auto it = mm.corrTypes.find(c.type);
    if (it == mm.corrTypes.end()) {
      issues.push_back("corr '" + id + "' has unknown type '" + c.type + "'");
      continue;
    }
    const Node* s = g.find_node(c.src);
    const Node* t = g.find_node(c.tgt);
    if (!s || !t) {
      issues.push_back("corr '" + id + "' dangles");
      continue;
    }
    if (!mm.is_subtype(s->type, it->second.source) ||
        !mm.is_subtype(t->type, it->second.target))
      issues.push_back("corr '" + id + "' endpoint types do not conform");
  }
  for (const auto& [id, owner] : g.markings) {
    if (!g.has(id))
      issues.push_back("marking of missing element '" + id + "' (owner " +
                       owner + ")");
  }
  return issues;
}

}  // namespace tggsync
