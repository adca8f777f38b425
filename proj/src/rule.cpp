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

#include "tggsync/rule.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <sstream>

#include "tggsync/error.hpp"

namespace tggsync {

const char* to_string(Action a) {
  switch (a) {
    case Action::Context: return "context";
    case Action::Create: return "create";
    case Action::Delete: return "delete";
  }
  return "?";
}

namespace {

const char* origin_name(Origin o) {
  switch (o) {
    case Origin::Plain: return "plain";
    case Origin::Replaced: return "replaced";
    case Origin::Replacing: return "replacing";
    case Origin::Both: return "both";
  }
  return "?";
}

const char* directive_name(Directive d) {
  switch (d) {
    case Directive::None: return "none";
    case Directive::RequireMarked: return "require-marked";
    case Directive::Mark: return "mark";
  }
  return "?";
}

void check_rule_attr(const Metamodel& mm, const std::string& nodeType,
                     const std::string& attr, const AttrValue& v,
                     const std::string& where) {
  const AttrDecl* decl = mm.find_attribute(nodeType, attr);
  if (!decl)
    throw ModelError(where + ": attribute '" + attr + "' not declared on '" +
                     nodeType + "'");
  bool ok = true;
  switch (decl->kind) {
    case AttrKind::String: ok = std::holds_alternative<std::string>(v); break;
    case AttrKind::Int: ok = std::holds_alternative<long long>(v); break;
    case AttrKind::Bool: ok = std::holds_alternative<bool>(v); break;
    case AttrKind::Enum: {
      ok = std::holds_alternative<std::string>(v);
      if (ok) {
        const auto& lits = mm.enums.at(decl->enumName);
        ok = std::find(lits.begin(), lits.end(), std::get<std::string>(v)) !=
             lits.end();
      }
      break;
    }
  }
  if (!ok)
    throw ModelError(where + ": value '" + attr_to_string(v) +
                     "' does not fit attribute '" + nodeType + "." + attr +
                     "'");
}

}  // namespace

bool Rule::has(const ElemId& id) const {
  return nodes.count(id) || edges.count(id) || corrs.count(id);
}

Domain Rule::domain_of(const ElemId& id) const {
  if (auto it = nodes.find(id); it != nodes.end()) return it->second.domain;
  if (auto it = edges.find(id); it != edges.end()) {
    auto s = nodes.find(it->second.src);
    if (s == nodes.end())
      throw ModelError("edge '" + id + "' of rule '" + name + "' dangles");
    return s->second.domain;
  }
  if (corrs.count(id)) return Domain::Corr;
  throw ModelError("rule '" + name + "' has no element '" + id + "'");
}

Action Rule::action_of(const ElemId& id) const {
  if (auto it = nodes.find(id); it != nodes.end()) return it->second.action;
  if (auto it = edges.find(id); it != edges.end()) return it->second.action;
  if (auto it = corrs.find(id); it != corrs.end()) return it->second.action;
  throw ModelError("rule '" + name + "' has no element '" + id + "'");
}

Origin Rule::origin_of(const ElemId& id) const {
  auto it = origin.find(id);
  return it == origin.end() ? Origin::Plain : it->second;
}

std::vector<ElemId> Rule::element_ids() const {
  std::vector<ElemId> out;
  for (const auto& [id, n] : nodes) out.push_back(id);
  for (const auto& [id, e] : edges) out.push_back(id);
  for (const auto& [id, c] : corrs) out.push_back(id);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ElemId> Rule::elements(Domain d) const {
  std::vector<ElemId> out;
  if (d == Domain::Corr) {
    for (const auto& [id, c] : corrs) out.push_back(id);
    return out;
  }
  for (const auto& [id, n] : nodes)
    if (n.domain == d) out.push_back(id);
  for (const auto& [id, e] : edges) {
    auto s = nodes.find(e.src);
    if (s != nodes.end() && s->second.domain == d) out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ElemId> Rule::elements(Domain d, Action a) const {
  std::vector<ElemId> out;
  for (const ElemId& id : elements(d))
    if (action_of(id) == a) out.push_back(id);
  return out;
}

std::pair<ElemId, ElemId> Rule::endpoints(const ElemId& rel) const {
  if (auto it = edges.find(rel); it != edges.end())
    return {it->second.src, it->second.tgt};
  if (auto it = corrs.find(rel); it != corrs.end())
    return {it->second.src, it->second.tgt};
  throw ModelError("rule '" + name + "' has no relation '" + rel + "'");
}

void Rule::check(const Metamodel& mm) const {
  const std::string ctx = "rule '" + name + "'";
  for (const auto& [id, n] : nodes) {
    if (id != n.id) throw ModelError(ctx + ": node key/id mismatch at '" + id + "'");
    const NodeType& nt = mm.node_type(n.type);
    if (nt.domain != n.domain)
      throw ModelError(ctx + ": node '" + id + "' declares domain " +
                       to_string(n.domain) + " but type '" + n.type + "' is " +
                       to_string(nt.domain));
    if (n.action == Action::Delete && !n.assignments.empty())
      throw ModelError(ctx + ": deleted node '" + id + "' has assignments");
    for (const auto& [a, v] : n.assignments)
      check_rule_attr(mm, n.type, a, v, ctx + ", node '" + id + "'");
  }
  for (const auto& [id, e] : edges) {
    if (id != e.id) throw ModelError(ctx + ": edge key/id mismatch at '" + id + "'");
    const EdgeType& et = mm.edge_type(e.type);
    auto s = nodes.find(e.src);
    auto t = nodes.find(e.tgt);
    if (s == nodes.end() || t == nodes.end())
      throw ModelError(ctx + ": edge '" + id + "' endpoints are not rule nodes");
    if (!mm.is_subtype(s->second.type, et.source) ||
        !mm.is_subtype(t->second.type, et.target))
      throw ModelError(ctx + ": edge '" + id + "' endpoint types do not conform");
    if (s->second.domain != t->second.domain)
      throw ModelError(ctx + ": edge '" + id + "' spans domains");
    auto bad = [&](const RuleNode& ep) {
      switch (e.action) {
        case Action::Context: return ep.action != Action::Context;
        case Action::Create: return ep.action == Action::Delete;
        case Action::Delete: return ep.action == Action::Create;
      }
      return false;
    };
    if (!e.nac && (bad(s->second) || bad(t->second)))
      throw ModelError(ctx + ": edge '" + id +
                       "' action is inconsistent with its endpoints");
  }
  for (const auto& [id, c] : corrs) {
    if (id != c.id) throw ModelError(ctx + ": corr key/id mismatch at '" + id + "'");
    const CorrType& ct = mm.corr_type(c.type);
    auto s = nodes.find(c.src);
    auto t = nodes.find(c.tgt);
    if (s == nodes.end() || t == nodes.end())
      throw ModelError(ctx + ": corr '" + id + "' endpoints are not rule nodes");
    if (s->second.domain != Domain::Source || t->second.domain != Domain::Target)
      throw ModelError(ctx + ": corr '" + id + "' must link source to target");
    if (!mm.is_subtype(s->second.type, ct.source) ||
        !mm.is_subtype(t->second.type, ct.target))
      throw ModelError(ctx + ": corr '" + id + "' endpoint types do not conform");
    auto bad = [&](const RuleNode& ep) {
      switch (c.action) {
        case Action::Context: return ep.action != Action::Context;
        case Action::Create: return ep.action == Action::Delete;
        case Action::Delete: return ep.action == Action::Create;
      }
      return false;
    };
    if (bad(s->second) || bad(t->second))
      throw ModelError(ctx + ": corr '" + id +
                       "' action is inconsistent with its endpoints");
  }
  for (const AttrCondition& c : conditions) {
    auto it = nodes.find(c.elem);
    if (it == nodes.end())
      throw ModelError(ctx + ": condition references missing node '" + c.elem + "'");
    check_rule_attr(mm, it->second.type, c.attr, c.value, ctx + ", condition");
  }
  for (const auto& [id, o] : origin)
    if (!has(id))
      throw ModelError(ctx + ": origin entry for missing element '" + id + "'");
  for (const auto& [id, who] : component)
    if (!has(id))
      throw ModelError(ctx + ": component entry for missing element '" + id + "'");
}

Rule invert(const Rule& r) {
  Rule out = r;
  auto flip = [](Action a) {
    if (a == Action::Create) return Action::Delete;
    if (a == Action::Delete) return Action::Create;
    return Action::Context;
  };
  for (auto& [id, n] : out.nodes) n.action = flip(n.action);
  for (auto& [id, e] : out.edges) e.action = flip(e.action);
  for (auto& [id, c] : out.corrs) c.action = flip(c.action);
  return out;
}

namespace {

bool monotonic(const Rule& r) {
  for (const auto& [id, n] : r.nodes)
    if (n.action == Action::Delete) return false;
  for (const auto& [id, e] : r.edges)
    if (e.action == Action::Delete) return false;
  for (const auto& [id, c] : r.corrs)
    if (c.action == Action::Delete) return false;
  return true;
}

ElemId fresh_id(const Rule& r, const ElemId& want) {
  if (!r.has(want)) return want;
  for (int i = 2;; ++i) {
    ElemId cand = want + "~" + std::to_string(i);
    if (!r.has(cand)) return cand;
  }
}

std::string contributor(const Rule& r, const ElemId& id) {
  auto it = r.component.find(id);
  return it == r.component.end() ? r.name : it->second;
}

}  // namespace

Rule compose(const Metamodel& mm, const Rule& first, const Rule& second,
             const std::map<ElemId, ElemId>& glue, const std::string& name) {
  if (!monotonic(first) || !monotonic(second))
    throw PreconditionError("compose requires monotonic rules");

  for (const auto& [from, to] : glue) {
    if (!second.has(from))
      throw GlueShapeError("'" + from + "' is not an element of '" +
                           second.name + "'");
    if (second.action_of(from) != Action::Context)
      throw GlueShapeError("'" + from + "' of '" + second.name +
                           "' is not a context element");
    if (!first.has(to))
      throw GlueShapeError("'" + to + "' is not an element of '" + first.name +
                           "'");
    // Kind and type conformance.
    if (second.nodes.count(from)) {
      auto f = first.nodes.find(to);
      if (f == first.nodes.end())
        throw GlueShapeError("node '" + from + "' glued to non-node '" + to + "'");
      const RuleNode& sn = second.nodes.at(from);
      if (f->second.domain != sn.domain)
        throw GlueTypeError("glue '" + from + "' -> '" + to + "' crosses domains");
      if (!mm.is_subtype(f->second.type, sn.type))
        throw GlueTypeError("glue '" + from + "' -> '" + to + "': type '" +
                            f->second.type + "' does not conform to '" +
                            sn.type + "'");
    } else if (second.edges.count(from)) {
      auto f = first.edges.find(to);
      if (f == first.edges.end())
        throw GlueShapeError("edge '" + from + "' glued to non-edge '" + to + "'");
      const RuleEdge& se = second.edges.at(from);
      if (f->second.type != se.type)
        throw GlueTypeError("glue '" + from + "' -> '" + to +
                            "': edge types differ");
      auto ms = glue.find(se.src);
      auto mt = glue.find(se.tgt);
      if (ms == glue.end() || mt == glue.end() || ms->second != f->second.src ||
          mt->second != f->second.tgt)
        throw GlueShapeError("glue of edge '" + from +
                             "' is not endpoint-consistent");
    } else {
      auto f = first.corrs.find(to);
      if (f == first.corrs.end())
        throw GlueShapeError("corr '" + from + "' glued to non-corr '" + to + "'");
      const RuleCorr& sc = second.corrs.at(from);
      if (f->second.type != sc.type)
        throw GlueTypeError("glue '" + from + "' -> '" + to +
                            "': corr types differ");
      auto ms = glue.find(sc.src);
      auto mt = glue.find(sc.tgt);
      if (ms == glue.end() || mt == glue.end() || ms->second != f->second.src ||
          mt->second != f->second.tgt)
        throw GlueShapeError("glue of corr '" + from +
                             "' is not endpoint-consistent");
    }
  }

  Rule out = first;
  out.name = name;
  out.tag.clear();
  out.origin.clear();
  out.component.clear();
  for (const ElemId& id : first.element_ids())
    out.component[id] = contributor(first, id);

  // second id -> id in the composed rule
  std::map<ElemId, ElemId> m;
  for (const auto& [from, to] : glue) m[from] = to;

  for (const auto& [id, n] : second.nodes) {
    if (m.count(id)) continue;
    ElemId nid = fresh_id(out, id);
    m[id] = nid;
    RuleNode copy = n;
    copy.id = nid;
    out.nodes[nid] = copy;
    out.component[nid] = contributor(second, id);
  }
  for (const auto& [id, e] : second.edges) {
    if (m.count(id)) continue;
    ElemId nid = fresh_id(out, id);
    m[id] = nid;
    RuleEdge copy = e;
    copy.id = nid;
    copy.src = m.at(e.src);
    copy.tgt = m.at(e.tgt);
    out.edges[nid] = copy;
    out.component[nid] = contributor(second, id);
  }
  for (const auto& [id, c] : second.corrs) {
    if (m.count(id)) continue;
    ElemId nid = fresh_id(out, id);
    m[id] = nid;
    RuleCorr copy = c;
    copy.id = nid;
    copy.src = m.at(c.src);
    copy.tgt = m.at(c.tgt);
    out.corrs[nid] = copy;
    out.component[nid] = contributor(second, id);
  }
  for (const AttrCondition& c : second.conditions) {
    AttrCondition copy = c;
    copy.elem = m.at(c.elem);
    bool dup = false;
    for (const AttrCondition& have : out.conditions)
      if (have.elem == copy.elem && have.attr == copy.attr &&
          attr_equal(have.value, copy.value))
        dup = true;
    if (!dup) out.conditions.push_back(copy);
  }
  out.check(mm);
  return out;
}

namespace {

OperationalRule operationalize(const Rule& r, Domain input) {
  if (!monotonic(r))
    throw PreconditionError("operationalization requires a monotonic rule");
  OperationalRule op;
  op.inputDomain = input;
  op.rule = r;
  for (auto& [id, n] : op.rule.nodes) {
    if (n.domain != input) continue;
    if (n.action == Action::Create) {
      op.directives[id] = Directive::Mark;
      n.action = Action::Context;
      for (const auto& [a, v] : n.assignments)
        op.rule.conditions.push_back(AttrCondition{id, a, v});
      n.assignments.clear();
    } else {
      op.directives[id] = Directive::RequireMarked;
    }
  }
  for (auto& [id, e] : op.rule.edges) {
    auto s = op.rule.nodes.find(e.src);
    if (s == op.rule.nodes.end() || s->second.domain != input) continue;
    if (e.action == Action::Create) {
      op.directives[id] = Directive::Mark;
      e.action = Action::Context;
    } else {
      op.directives[id] = Directive::RequireMarked;
    }
  }
  return op;
}

}  // namespace

OperationalRule derive_forward(const Rule& r) {
  return operationalize(r, Domain::Source);
}

OperationalRule derive_backward(const Rule& r) {
  return operationalize(r, Domain::Target);
}

// --- canonical text ---------------------------------------------------------

namespace {

std::string pad4(std::size_t v) {
  char b[16];
  std::snprintf(b, sizeof b, "%04zu", v);
  return b;
}

struct CanonArc {
  std::string label;
  ElemId src;
  ElemId tgt;
};

// Canonical labeling by individualization-refinement: stable color refinement,
// branch on the first non-singleton color class, minimize the rendered text
// over all leaves. The result is invariant under renaming of element ids.
std::string canonize(const std::map<ElemId, std::string>& base,
                     const std::vector<CanonArc>& arcs) {
  std::vector<ElemId> ids;
  for (const auto& [id, b] : base) ids.push_back(id);

  auto refine = [&](std::map<ElemId, std::string> col) {
    for (;;) {
      std::set<std::string> before;
      for (const auto& [id, c] : col) before.insert(c);
      std::map<ElemId, std::string> sig;
      for (const ElemId& id : ids) {
        std::vector<std::string> inc;
        for (const CanonArc& a : arcs) {
          if (a.src == id) inc.push_back("o;" + a.label + ";" + col.at(a.tgt));
          if (a.tgt == id) inc.push_back("i;" + a.label + ";" + col.at(a.src));
        }
        std::sort(inc.begin(), inc.end());
        std::string s = col.at(id) + "#";
        for (const std::string& x : inc) s += x + "|";
        sig[id] = s;
      }
      std::set<std::string> after;
      for (const auto& [id, s] : sig) after.insert(s);
      if (after.size() == before.size()) return col;
      std::map<std::string, std::string> rank;
      std::size_t i = 0;
      for (const std::string& s : after) rank[s] = "r;" + pad4(i++);
      for (const ElemId& id : ids) col[id] = rank.at(sig.at(id));
    }
  };

  std::string best;
  std::size_t leaves = 0;
  std::function<void(std::map<ElemId, std::string>, std::size_t)> go =
      [&](std::map<ElemId, std::string> col, std::size_t step) {
        col = refine(col);
        std::map<std::string, std::vector<ElemId>> classes;
        for (const ElemId& id : ids) classes[col.at(id)].push_back(id);
        const std::vector<ElemId>* branch = nullptr;
        for (const auto& [c, v] : classes)
          if (v.size() > 1) {
            branch = &v;
            break;
          }
        if (!branch) {
          if (++leaves > 40000)
            throw TooLargeError("rule canonicalization search");
          std::vector<ElemId> order = ids;
          std::sort(order.begin(), order.end(),
                    [&](const ElemId& a, const ElemId& b) {
                      return col.at(a) < col.at(b);
                    });
          std::map<ElemId, std::size_t> index;
          for (std::size_t i = 0; i < order.size(); ++i) index[order[i]] = i;
          std::ostringstream os;
          for (std::size_t i = 0; i < order.size(); ++i)
            os << "n" << i << " " << base.at(order[i]) << "\n";
          std::vector<std::string> lines;
          for (const CanonArc& a : arcs) {
            std::ostringstream ls;
            ls << a.label << " n" << index.at(a.src) << " n" << index.at(a.tgt);
            lines.push_back(ls.str());
          }
          std::sort(lines.begin(), lines.end());
          for (const std::string& l : lines) os << l << "\n";
          std::string text = os.str();
          if (best.empty() || text < best) best = text;
          return;
        }
        for (const ElemId& id : *branch) {
          auto c2 = col;
          c2[id] = "a;" + pad4(step);
          go(std::move(c2), step + 1);
        }
      };
  go(refine([&] {
       std::map<ElemId, std::string> col;
       for (const auto& [id, b] : base) col[id] = "b;" + b;
       return col;
     }()),
     0);
  return best;
}

std::map<ElemId, std::string> node_labels(
    const Rule& r, const std::map<ElemId, Directive>* dirs) {
  std::map<ElemId, std::vector<std::string>> conds;
  for (const AttrCondition& c : r.conditions)
    conds[c.elem].push_back(c.attr + "==" + attr_to_string(c.value));
  for (auto& [id, v] : conds) std::sort(v.begin(), v.end());

  std::map<ElemId, std::string> base;
  for (const auto& [id, n] : r.nodes) {
    std::ostringstream os;
    os << to_string(n.domain) << " " << n.type << " " << to_string(n.action);
    if (n.relaxed) os << " relaxed";
    if (r.origin_of(id) != Origin::Plain)
      os << " org=" << origin_name(r.origin_of(id));
    if (dirs) {
      auto it = dirs->find(id);
      if (it != dirs->end() && it->second != Directive::None)
        os << " dir=" << directive_name(it->second);
    }
    for (const auto& [a, v] : n.assignments)
      os << " " << a << ":=" << attr_to_string(v);
    auto ci = conds.find(id);
    if (ci != conds.end())
      for (const std::string& c : ci->second) os << " [" << c << "]";
    base[id] = os.str();
  }
  return base;
}

std::vector<CanonArc> arc_labels(const Rule& r,
                                 const std::map<ElemId, Directive>* dirs) {
  std::vector<CanonArc> arcs;
  auto dir_of = [&](const ElemId& id) -> std::string {
    if (!dirs) return "";
    auto it = dirs->find(id);
    if (it == dirs->end() || it->second == Directive::None) return "";
    return std::string(";dir=") + directive_name(it->second);
  };
  for (const auto& [id, e] : r.edges) {
    std::string label = "E;" + e.type + ";" + to_string(e.action);
    if (e.nac) label += ";nac";
    if (r.origin_of(id) != Origin::Plain)
      label += ";org=" + std::string(origin_name(r.origin_of(id)));
    label += dir_of(id);
    arcs.push_back({label, e.src, e.tgt});
  }
  for (const auto& [id, c] : r.corrs) {
    std::string label = "C;" + c.type + ";" + to_string(c.action);
    if (r.origin_of(id) != Origin::Plain)
      label += ";org=" + std::string(origin_name(r.origin_of(id)));
    arcs.push_back({label, c.src, c.tgt});
  }
  return arcs;
}

}  // namespace

std::string canonical_text(const Rule& r) {
  return canonize(node_labels(r, nullptr), arc_labels(r, nullptr));
}

std::string canonical_text(const OperationalRule& r) {
  return "input=" + std::string(to_string(r.inputDomain)) + "\n" +
         canonize(node_labels(r.rule, &r.directives),
                  arc_labels(r.rule, &r.directives));
}

std::string rule_to_dot(const Rule& r) {
  std::ostringstream os;
  os << "digraph \"" << r.name << "\" {\n  rankdir=LR;\n";
  auto color = [](Action a, bool nac) {
    if (nac) return "red";
    switch (a) {
      case Action::Create: return "darkgreen";
      case Action::Delete: return "red";
      default: return "black";
    }
  };
  auto marker = [](Action a, bool nac) {
    if (nac) return " (nac)";
    switch (a) {
      case Action::Create: return " (++)";
      case Action::Delete: return " (--)";
      default: return "";
    }
  };
  for (Domain d : {Domain::Source, Domain::Target}) {
    os << "  subgraph cluster_" << to_string(d) << " {\n    label=\""
       << to_string(d) << "\";\n";
    for (const auto& [id, n] : r.nodes) {
      if (n.domain != d) continue;
      os << "    \"" << id << "\" [label=\"" << id << ":" << n.type
         << marker(n.action, false) << "\", color=" << color(n.action, false);
      if (n.relaxed) os << ", style=dotted";
      os << "];\n";
    }
    os << "  }\n";
  }
  for (const auto& [id, e] : r.edges) {
    os << "  \"" << e.src << "\" -> \"" << e.tgt << "\" [label=\"" << e.type
       << marker(e.action, e.nac) << "\", color=" << color(e.action, e.nac);
    if (e.nac) os << ", style=dashed";
    os << "];\n";
  }
  for (const auto& [id, c] : r.corrs) {
    os << "  \"" << c.src << "\" -> \"" << c.tgt << "\" [label=\"" << id << ":"
       << c.type << marker(c.action, false) << "\", style=dashed, color="
       << color(c.action, false) << ", constraint=false];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace tggsync
