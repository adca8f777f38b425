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

#include "tggsync/metamodel.hpp"

#include <set>

namespace tggsync {

const char* to_string(Domain d) {
  switch (d) {
    case Domain::Source: return "source";
    case Domain::Corr: return "corr";
    case Domain::Target: return "target";
  }
  return "?";
}

Domain domain_from_string(const std::string& s) {
  if (s == "source") return Domain::Source;
  if (s == "corr") return Domain::Corr;
  if (s == "target") return Domain::Target;
  throw InputError("unknown domain '" + s + "'");
}

const NodeType& Metamodel::node_type(const std::string& n) const {
  auto it = nodeTypes.find(n);
  if (it == nodeTypes.end()) throw UnknownTypeError("node type '" + n + "'");
  return it->second;
}

const EdgeType& Metamodel::edge_type(const std::string& n) const {
  auto it = edgeTypes.find(n);
  if (it == edgeTypes.end()) throw UnknownTypeError("edge type '" + n + "'");
  return it->second;
}

const CorrType& Metamodel::corr_type(const std::string& n) const {
  auto it = corrTypes.find(n);
  if (it == corrTypes.end()) throw UnknownTypeError("corr type '" + n + "'");
  return it->second;
}

bool Metamodel::is_subtype(const std::string& sub,
                           const std::string& super) const {
  const NodeType* cur = &node_type(sub);
  node_type(super);
  while (true) {
    if (cur->name == super) return true;
    if (cur->supertype.empty()) return false;
    cur = &node_type(cur->supertype);
  }
}

const AttrDecl* Metamodel::find_attribute(const std::string& nodeType,
                                          const std::string& attr) const {
  const NodeType* cur = &node_type(nodeType);
  while (true) {
    for (const auto& a : cur->attributes)
      if (a.name == attr) return &a;
    if (cur->supertype.empty()) return nullptr;
    cur = &node_type(cur->supertype);
  }
}

Domain Metamodel::domain_of_node_type(const std::string& n) const {
  return node_type(n).domain;
}

Domain Metamodel::domain_of_edge_type(const std::string& n) const {
  return node_type(edge_type(n).source).domain;
}

void Metamodel::check() const {
  for (const auto& [name, nt] : nodeTypes) {
    if (name != nt.name)
      throw ModelError("node type key '" + name + "' != name '" + nt.name + "'");
    // Supertype chain: must exist, stay acyclic, and keep the domain.
    std::set<std::string> seen{name};
    const NodeType* cur = &nt;
    while (!cur->supertype.empty()) {
      const NodeType& sup = node_type(cur->supertype);
      if (!seen.insert(sup.name).second)
        throw ModelError("supertype cycle through '" + sup.name + "'");
      if (sup.domain != nt.domain)
        throw ModelError("'" + name + "' crosses domains via supertype '" +
                         sup.name + "'");
      cur = &sup;
    }
    for (const auto& a : nt.attributes) {
      if (a.kind == AttrKind::Enum && !enums.count(a.enumName))
        throw UnknownTypeError("enum '" + a.enumName + "' of attribute '" +
                               name + "." + a.name + "'");
    }
  }
  for (const auto& [name, et] : edgeTypes) {
    const NodeType& s = node_type(et.source);
    const NodeType& t = node_type(et.target);
    if (s.domain != t.domain)
      throw ModelError("edge type '" + name + "' crosses domains");
  }
  for (const auto& [name, ct] : corrTypes) {
    if (node_type(ct.source).domain != Domain::Source)
      throw ModelError("corr type '" + name + "' source is not a source type");
    if (node_type(ct.target).domain != Domain::Target)
      throw ModelError("corr type '" + name + "' target is not a target type");
  }
}

}  // namespace tggsync
