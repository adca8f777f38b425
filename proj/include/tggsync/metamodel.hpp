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

#ifndef TGGSYNC_METAMODEL_HPP
#define TGGSYNC_METAMODEL_HPP

#include <map>
#include <string>
#include <vector>

#include "tggsync/error.hpp"

namespace tggsync {

// The three graphs of a triple. Edges live in the domain of their endpoints;
// correspondence links always live in Corr and connect Source to Target.
enum class Domain { Source, Corr, Target };

const char* to_string(Domain d);
Domain domain_from_string(const std::string& s);

// Attribute value types supported by the engine. Enum attributes are stored
// as strings and validated against the metamodel's enum literals.
enum class AttrKind { String, Int, Bool, Enum };

struct AttrDecl {
  std::string name;
  AttrKind kind = AttrKind::String;
  std::string enumName;  // set iff kind == Enum
};

struct NodeType {
  std::string name;
  Domain domain = Domain::Source;
  std::string supertype;  // empty for roots
  bool isAbstract = false;
  std::vector<AttrDecl> attributes;  // declared here, not inherited ones
};

struct EdgeType {
  std::string name;
  std::string source;  // node type names
  std::string target;
};

struct CorrType {
  std::string name;
  std::string source;  // source-domain node type
  std::string target;  // target-domain node type
};

// Typed metamodel for triples. Node types form a forest under `supertype`;
// edge endpoints accept subtypes. Lookup members throw UnknownTypeError.
class Metamodel {
 public:
  std::string name;
  std::map<std::string, std::vector<std::string>> enums;
  std::map<std::string, NodeType> nodeTypes;
  std::map<std::string, EdgeType> edgeTypes;
  std::map<std::string, CorrType> corrTypes;

  const NodeType& node_type(const std::string& n) const;
  const EdgeType& edge_type(const std::string& n) const;
  const CorrType& corr_type(const std::string& n) const;

  // True iff `sub` equals `super` or reaches it over the supertype chain.
  bool is_subtype(const std::string& sub, const std::string& super) const;

  // Attribute declaration visible on `nodeType`, following supertypes.
  // Returns nullptr when the attribute is not declared anywhere on the chain.
  const AttrDecl* find_attribute(const std::string& nodeType,
                                 const std::string& attr) const;

  // Domain of the given node/edge/corr type name. Edge domain is the domain
  // of its endpoints; mixed-domain edge types are rejected by check().
  Domain domain_of_node_type(const std::string& n) const;
  Domain domain_of_edge_type(const std::string& n) const;

  // Validates internal consistency: supertype chains are acyclic and stay in
  // one domain, endpoint types exist, corr types cross Source->Target, enum
  // references resolve. Throws on the first violation.
  void check() const;
};

}  // namespace tggsync

#endif  // TGGSYNC_METAMODEL_HPP
