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

#include "tggsync/json_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "nlohmann/json.hpp"
#include "tggsync/error.hpp"

namespace tggsync {

namespace {

using nlohmann::json;

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("invalid JSON: ") + e.what());
  }
}

// Accessors that turn JSON shape mismatches into InputError with a path
// hint, so a typo in a hand-written file points at the offending field.
const json& field(const json& j, const std::string& key,
                  const std::string& where) {
  if (!j.is_object())
    throw InputError(where + ": expected an object with key '" + key + "'");
  auto it = j.find(key);
  if (it == j.end()) throw InputError(where + ": missing key '" + key + "'");
  return *it;
}

std::string str_field(const json& j, const std::string& key,
                      const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_string())
    throw InputError(where + ": key '" + key + "' must be a string");
  return v.get<std::string>();
}

std::string opt_str(const json& j, const std::string& key,
                    const std::string& fallback) {
  if (!j.is_object()) return fallback;
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_string())
    throw InputError("key '" + key + "' must be a string");
  return it->get<std::string>();
}

bool opt_bool(const json& j, const std::string& key, bool fallback,
              const std::string& where) {
  if (!j.is_object()) return fallback;
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_boolean())
    throw InputError(where + ": key '" + key + "' must be a boolean");
  return it->get<bool>();
}

const json& array_field(const json& j, const std::string& key,
                        const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_array())
    throw InputError(where + ": key '" + key + "' must be an array");
  return v;
}

// Attribute values map onto the three JSON scalar kinds the engine supports.
AttrValue attr_from_json(const json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer()) return v.get<long long>();
  throw InputError(where +
                   ": attribute values must be strings, integers, or "
                   "booleans");
}

json attr_to_json(const AttrValue& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

std::map<std::string, AttrValue> attr_map(const json& j,
                                          const std::string& key,
                                          const std::string& where) {
  std::map<std::string, AttrValue> out;
  if (!j.is_object()) return out;
  auto it = j.find(key);
  if (it == j.end()) return out;
  if (!it->is_object())
    throw InputError(where + ": key '" + key + "' must be an object");
  for (auto kv = it->begin(); kv != it->end(); ++kv)
    out[kv.key()] = attr_from_json(kv.value(), where + "." + kv.key());
  return out;
}

AttrKind attr_kind_from_string(const std::string& s, const std::string& where) {
  if (s == "string") return AttrKind::String;
  if (s == "int") return AttrKind::Int;
  if (s == "bool") return AttrKind::Bool;
  if (s == "enum") return AttrKind::Enum;
  throw InputError(where + ": unknown attribute kind '" + s + "'");
}

Domain domain_field(const json& j, const std::string& key,
                    const std::string& where) {
  return domain_from_string(str_field(j, key, where));
}

Action action_from_string(const std::string& s, const std::string& where) {
  if (s == "context") return Action::Context;
  if (s == "create") return Action::Create;
  if (s == "delete") return Action::Delete;
  throw InputError(where + ": unknown action '" + s + "'");
}

Action opt_action(const json& j, const std::string& where) {
  return action_from_string(opt_str(j, "action", "context"), where);
}

Metamodel parse_metamodel(const json& j) {
  Metamodel mm;
  mm.name = opt_str(j, "name", "");
  if (j.contains("enums")) {
    const json& e = field(j, "enums", "metamodel");
    if (!e.is_object())
      throw InputError("metamodel: key 'enums' must be an object");
    for (auto it = e.begin(); it != e.end(); ++it) {
      if (!it->is_array())
        throw InputError("metamodel.enums." + it.key() +
                         ": literals must form an array of strings");
      std::vector<std::string>& lits = mm.enums[it.key()];
      for (const json& lit : *it) {
        if (!lit.is_string())
          throw InputError("metamodel.enums." + it.key() +
                           ": literals must be strings");
        lits.push_back(lit.get<std::string>());
      }
    }
  }
  for (const json& n : array_field(j, "nodeTypes", "metamodel")) {
    NodeType nt;
    nt.name = str_field(n, "name", "nodeType");
    const std::string where = "nodeType '" + nt.name + "'";
    nt.domain = domain_field(n, "domain", where);
    nt.supertype = opt_str(n, "supertype", "");
    nt.isAbstract = opt_bool(n, "abstract", false, where);
    if (n.contains("attributes")) {
      for (const json& a : array_field(n, "attributes", where)) {
        AttrDecl d;
        d.name = str_field(a, "name", where + " attribute");
        const std::string aw = where + " attribute '" + d.name + "'";
        d.kind = attr_kind_from_string(opt_str(a, "kind", "string"), aw);
        if (d.kind == AttrKind::Enum) d.enumName = str_field(a, "enum", aw);
        nt.attributes.push_back(std::move(d));
      }
    }
    if (!mm.nodeTypes.emplace(nt.name, nt).second)
      throw InputError("duplicate node type '" + nt.name + "'");
  }
  if (j.contains("edgeTypes")) {
    for (const json& e : array_field(j, "edgeTypes", "metamodel")) {
      EdgeType et;
      et.name = str_field(e, "name", "edgeType");
      const std::string where = "edgeType '" + et.name + "'";
      et.source = str_field(e, "source", where);
      et.target = str_field(e, "target", where);
      if (!mm.edgeTypes.emplace(et.name, et).second)
        throw InputError("duplicate edge type '" + et.name + "'");
    }
  }
  if (j.contains("corrTypes")) {
    for (const json& c : array_field(j, "corrTypes", "metamodel")) {
      CorrType ct;
      ct.name = str_field(c, "name", "corrType");
      const std::string where = "corrType '" + ct.name + "'";
      ct.source = str_field(c, "source", where);
      ct.target = str_field(c, "target", where);
      if (!mm.corrTypes.emplace(ct.name, ct).second)
        throw InputError("duplicate corr type '" + ct.name + "'");
    }
  }
  return mm;
}

Rule parse_rule(const json& j) {
  Rule r;
  r.name = str_field(j, "name", "rule");
  const std::string where = "rule '" + r.name + "'";
  r.tag = opt_str(j, "tag", "");
  if (j.contains("nodes")) {
    for (const json& n : array_field(j, "nodes", where)) {
      RuleNode rn;
      rn.id = str_field(n, "id", where + " node");
      const std::string nw = where + " node '" + rn.id + "'";
      rn.type = str_field(n, "type", nw);
      rn.domain = domain_field(n, "domain", nw);
      rn.action = opt_action(n, nw);
      rn.relaxed = opt_bool(n, "relaxed", false, nw);
      rn.assignments = attr_map(n, "assignments", nw);
      if (!r.nodes.emplace(rn.id, rn).second)
        throw InputError(nw + ": duplicate element id");
    }
  }
  if (j.contains("edges")) {
    for (const json& e : array_field(j, "edges", where)) {
      RuleEdge re;
      re.id = str_field(e, "id", where + " edge");
      const std::string ew = where + " edge '" + re.id + "'";
      re.type = str_field(e, "type", ew);
      re.src = str_field(e, "src", ew);
      re.tgt = str_field(e, "tgt", ew);
      re.action = opt_action(e, ew);
      re.nac = opt_bool(e, "nac", false, ew);
      if (r.has(re.id)) throw InputError(ew + ": duplicate element id");
      r.edges.emplace(re.id, re);
    }
  }
  if (j.contains("corrs")) {
    for (const json& c : array_field(j, "corrs", where)) {
      RuleCorr rc;
      rc.id = str_field(c, "id", where + " corr");
      const std::string cw = where + " corr '" + rc.id + "'";
      rc.type = str_field(c, "type", cw);
      rc.src = str_field(c, "src", cw);
      rc.tgt = str_field(c, "tgt", cw);
      rc.action = opt_action(c, cw);
      if (r.has(rc.id)) throw InputError(cw + ": duplicate element id");
      r.corrs.emplace(rc.id, rc);
    }
  }
  if (j.contains("conditions")) {
    for (const json& c : array_field(j, "conditions", where)) {
      AttrCondition ac;
      ac.elem = str_field(c, "elem", where + " condition");
      ac.attr = str_field(c, "attr", where + " condition");
      ac.value = attr_from_json(field(c, "value", where + " condition"),
                                where + " condition on '" + ac.elem + "'");
      r.conditions.push_back(std::move(ac));
    }
  }
  return r;
}

}  // namespace

TGGFile parse_tgg(const std::string& jsonText) {
  json j = parse_json(jsonText);
  TGGFile f;
  f.mm = parse_metamodel(field(j, "metamodel", "tgg file"));
  f.mm.check();
  std::set<std::string> names;
  for (const json& rj : array_field(j, "rules", "tgg file")) {
    Rule r = parse_rule(rj);
    if (!names.insert(r.name).second)
      throw InputError("duplicate rule name '" + r.name + "'");
    r.check(f.mm);
    f.rules.push_back(std::move(r));
  }
  return f;
}

TGGFile load_tgg_file(const std::string& path) {
  return parse_tgg(read_file(path));
}

TripleGraph parse_model(const Metamodel& mm, const std::string& jsonText) {
  json j = parse_json(jsonText);
  TripleGraph g;
  auto fresh = [&g](const ElemId& id, const std::string& where) {
    if (g.has(id)) throw InputError(where + ": duplicate element id");
  };
  if (j.contains("nodes")) {
    for (const json& n : array_field(j, "nodes", "model")) {
      Node node;
      node.id = str_field(n, "id", "model node");
      const std::string where = "model node '" + node.id + "'";
      node.type = str_field(n, "type", where);
      node.attrs = attr_map(n, "attrs", where);
      fresh(node.id, where);
      g.nodes.emplace(node.id, std::move(node));
    }
  }
  if (j.contains("edges")) {
    for (const json& e : array_field(j, "edges", "model")) {
      Edge edge;
      edge.id = str_field(e, "id", "model edge");
      const std::string where = "model edge '" + edge.id + "'";
      edge.type = str_field(e, "type", where);
      edge.src = str_field(e, "src", where);
      edge.tgt = str_field(e, "tgt", where);
      fresh(edge.id, where);
      g.edges.emplace(edge.id, std::move(edge));
    }
  }
  if (j.contains("corrs")) {
    for (const json& c : array_field(j, "corrs", "model")) {
      CorrLink corr;
      corr.id = str_field(c, "id", "model corr");
      const std::string where = "model corr '" + corr.id + "'";
      corr.type = str_field(c, "type", where);
      corr.src = str_field(c, "src", where);
      corr.tgt = str_field(c, "tgt", where);
      fresh(corr.id, where);
      g.corrs.emplace(corr.id, std::move(corr));
    }
  }
  if (j.contains("markings")) {
    const json& m = field(j, "markings", "model");
    if (!m.is_object())
      throw InputError("model: key 'markings' must be an object");
    for (auto it = m.begin(); it != m.end(); ++it) {
      if (!it->is_string())
        throw InputError("model marking of '" + it.key() +
                         "' must be an application id string");
      g.markings[it.key()] = it->get<std::string>();
    }
  }
  std::vector<std::string> problems = validate(mm, g);
  if (!problems.empty())
    throw InputError("model is not well-formed: " + problems.front() +
                     (problems.size() > 1
                          ? " (and " + std::to_string(problems.size() - 1) +
                                " more)"
                          : ""));
  return g;
}

TripleGraph load_model_file(const Metamodel& mm, const std::string& path) {
  return parse_model(mm, read_file(path));
}

std::string model_to_json(const TripleGraph& g) {
  json j;
  j["nodes"] = json::array();
  for (const auto& [id, n] : g.nodes) {
    json nj{{"id", n.id}, {"type", n.type}};
    if (!n.attrs.empty()) {
      json attrs = json::object();
      for (const auto& [a, v] : n.attrs) attrs[a] = attr_to_json(v);
      nj["attrs"] = std::move(attrs);
    }
    j["nodes"].push_back(std::move(nj));
  }
  j["edges"] = json::array();
  for (const auto& [id, e] : g.edges)
    j["edges"].push_back(
        {{"id", e.id}, {"type", e.type}, {"src", e.src}, {"tgt", e.tgt}});
  j["corrs"] = json::array();
  for (const auto& [id, c] : g.corrs)
    j["corrs"].push_back(
        {{"id", c.id}, {"type", c.type}, {"src", c.src}, {"tgt", c.tgt}});
  if (!g.markings.empty()) {
    json m = json::object();
    for (const auto& [elem, app] : g.markings) m[elem] = app;
    j["markings"] = std::move(m);
  }
  return j.dump(2) + "\n";
}

Delta parse_delta(const Metamodel& mm, const std::string& jsonText) {
  json j = parse_json(jsonText);
  Delta d;
  for (const json& ej : array_field(j, "edits", "delta")) {
    Edit e;
    const std::string op = str_field(ej, "op", "delta edit");
    const std::string where = "delta edit '" + op + "'";
    e.id = str_field(ej, "id", where);
    if (op == "create-node") {
      e.kind = Edit::Kind::CreateNode;
      e.type = str_field(ej, "type", where);
      if (!mm.nodeTypes.count(e.type))
        throw InputError(where + ": unknown node type '" + e.type + "'");
      e.attrs = attr_map(ej, "attrs", where);
    } else if (op == "create-edge") {
      e.kind = Edit::Kind::CreateEdge;
      e.type = str_field(ej, "type", where);
      if (!mm.edgeTypes.count(e.type))
        throw InputError(where + ": unknown edge type '" + e.type + "'");
      e.src = str_field(ej, "src", where);
      e.tgt = str_field(ej, "tgt", where);
    } else if (op == "create-corr") {
      e.kind = Edit::Kind::CreateCorr;
      e.type = str_field(ej, "type", where);
      if (!mm.corrTypes.count(e.type))
        throw InputError(where + ": unknown corr type '" + e.type + "'");
      e.src = str_field(ej, "src", where);
      e.tgt = str_field(ej, "tgt", where);
    } else if (op == "delete-node") {
      e.kind = Edit::Kind::DeleteNode;
    } else if (op == "delete-edge") {
      e.kind = Edit::Kind::DeleteEdge;
    } else if (op == "delete-corr") {
      e.kind = Edit::Kind::DeleteCorr;
    } else if (op == "set-attribute") {
      e.kind = Edit::Kind::SetAttribute;
      e.attr = str_field(ej, "attr", where);
      e.value = attr_from_json(field(ej, "value", where), where);
      if (ej.contains("old"))
        e.oldValue = attr_from_json(*ej.find("old"), where);
    } else {
      throw InputError("delta edit: unknown op '" + op + "'");
    }
    d.edits.push_back(std::move(e));
  }
  return d;
}

Delta load_delta_file(const Metamodel& mm, const std::string& path) {
  return parse_delta(mm, read_file(path));
}

std::string report_to_json(const SyncReport& r) {
  auto counts = [](const ChangeCounts& c) {
    return json{{"nodes", c.nodes},
                {"edges", c.edges},
                {"corrs", c.corrs},
                {"total", c.total()}};
  };
  json j{{"strategy", to_string(r.strategy)},
         {"deleted", counts(r.deleted)},
         {"created", counts(r.created)},
         {"preserved", r.preserved},
         {"scApplications", r.scApplications},
         {"legacyFallbacks", r.legacyFallbacks},
         {"revokedApplications", r.revokedApplications},
         {"ilpProblems", r.ilpProblems},
         {"ilpVars", r.ilpVars},
         {"ilpConstraints", r.ilpConstraints},
         {"solveMs", r.solveMs},
         {"wallMs", r.wallMs},
         {"consistent", r.consistent}};
  return j.dump(2) + "\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw InputError("failed to read '" + path + "'");
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw InputError("failed to write '" + path + "'");
}

}  // namespace tggsync
