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

#include "tggsync/shortcut.hpp"

#include <algorithm>
#include <queue>
#include <sstream>

#include "tggsync/matcher.hpp"

#include "tggsync/error.hpp"

namespace tggsync {

namespace {

ElemId prefixed(const std::string& label, const ElemId& id) {
  return label + "." + id;
}

// Copies a rule with every element id prefixed by a label; the copy's name
// and component attributions are the label.
Rule rename_rule(const Rule& r, const std::string& label) {
  Rule out;
  out.name = label;
  out.tag = r.tag;
  for (const auto& [id, n] : r.nodes) {
    RuleNode copy = n;
    copy.id = prefixed(label, id);
    out.nodes[copy.id] = copy;
    out.component[copy.id] = label;
  }
  for (const auto& [id, e] : r.edges) {
    RuleEdge copy = e;
    copy.id = prefixed(label, id);
    copy.src = prefixed(label, e.src);
    copy.tgt = prefixed(label, e.tgt);
    out.edges[copy.id] = copy;
    out.component[copy.id] = label;
  }
  for (const auto& [id, c] : r.corrs) {
    RuleCorr copy = c;
    copy.id = prefixed(label, id);
    copy.src = prefixed(label, c.src);
    copy.tgt = prefixed(label, c.tgt);
    out.corrs[copy.id] = copy;
    out.component[copy.id] = label;
  }
  for (const AttrCondition& c : r.conditions)
    out.conditions.push_back({prefixed(label, c.elem), c.attr, c.value});
  return out;
}

// Topological order, providers before dependents; ties resolved by label.
std::vector<std::string> topo_order(
    const std::vector<std::string>& labels,
    const std::map<std::string, std::set<std::string>>& dependsOn) {
  std::map<std::string, int> pending;  // unplaced providers per label
  std::map<std::string, std::vector<std::string>> dependents;
  for (const std::string& l : labels) pending[l] = 0;
  for (const std::string& l : labels) {
    auto it = dependsOn.find(l);
    if (it == dependsOn.end()) continue;
    for (const std::string& p : it->second) {
      if (!pending.count(p) || p == l) continue;
      pending[l]++;
      dependents[p].push_back(l);
    }
  }
  std::set<std::string> ready;
  for (const auto& [l, n] : pending)
    if (n == 0) ready.insert(l);
  std::vector<std::string> order;
  while (!ready.empty()) {
    std::string l = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(l);
    for (const std::string& d : dependents[l])
      if (--pending[d] == 0) ready.insert(d);
  }
  if (order.size() != labels.size())
    throw ModelError("cyclic dependency among applications/candidates");
  return order;
}

}  // namespace

ReplacedRule build_replaced(const Metamodel& mm,
                            const std::map<std::string, Rule>& rules,
                            const TripleGraph& g,
                            const std::vector<RuleApplication>& apps,
                            const std::vector<std::string>& cluster) {
  std::map<std::string, const RuleApplication*> byLabel;
  for (const RuleApplication& a : apps) byLabel[a.label] = &a;
  std::map<ElemId, std::string> createdBy;  // model id -> label
  for (const std::string& label : cluster) {
    auto it = byLabel.find(label);
    if (it == byLabel.end())
      throw ModelError("no application labelled '" + label + "'");
    const RuleApplication& app = *it->second;
    const Rule& r = rules.at(app.ruleName);
    for (const ElemId& e : r.element_ids())
      if (r.action_of(e) == Action::Create) {
        auto bit = app.binding.find(e);
        if (bit != app.binding.end()) createdBy[bit->second] = label;
      }
  }
  std::map<std::string, std::set<std::string>> dependsOn;
  for (const std::string& label : cluster) {
    const RuleApplication& app = *byLabel.at(label);
    const Rule& r = rules.at(app.ruleName);
    for (const ElemId& e : r.element_ids())
      if (r.action_of(e) == Action::Context) {
        auto bit = app.binding.find(e);
        if (bit == app.binding.end()) continue;
        auto cit = createdBy.find(bit->second);
        if (cit != createdBy.end() && cit->second != label)
          dependsOn[label].insert(cit->second);
      }
  }
  ReplacedRule out;
  out.appLabels = topo_order(cluster, dependsOn);

  std::map<ElemId, ElemId> modelToComposed;
  bool first = true;
  for (const std::string& label : out.appLabels) {
    const RuleApplication& app = *byLabel.at(label);
    Rule renamed = rename_rule(rules.at(app.ruleName), label);
    if (first) {
      out.rule = renamed;
      first = false;
    } else {
      std::map<ElemId, ElemId> glue;
      const Rule& base = rules.at(app.ruleName);
      for (const ElemId& e : base.element_ids()) {
        if (base.action_of(e) != Action::Context) continue;
        auto bit = app.binding.find(e);
        if (bit == app.binding.end()) continue;
        auto mit = modelToComposed.find(bit->second);
        if (mit != modelToComposed.end())
          glue[prefixed(label, e)] = mit->second;
      }
      out.rule = compose(mm, out.rule, renamed, glue,
                         out.rule.name + "+" + label);
    }
    const Rule& base = rules.at(app.ruleName);
    for (const ElemId& e : base.element_ids()) {
      auto bit = app.binding.find(e);
      if (bit == app.binding.end()) continue;
      if (!modelToComposed.count(bit->second))
        modelToComposed[bit->second] = prefixed(label, e);
    }
  }
  for (const auto& [model, composed] : modelToComposed)
    if (g.has(model)) out.binding[composed] = model;
  out.inverse = invert(out.rule);
  return out;
}

// ---------------------------------------------------------------------------
// Candidate-selection program
// ---------------------------------------------------------------------------

namespace {

struct CandData {
  std::string label;
  const PrecedenceNode* node = nullptr;
  const Rule* rule = nullptr;
  std::set<ElemId> marks;
};

std::string cc_name(const std::string& k, const ElemId& e, const std::string& p,
                    const ElemId& z) {
  return "v[" + k + "." + e + "->" + p + "." + z + "]";
}

std::string rm_name(const std::string& k, const ElemId& z, const ElemId& m) {
  return "v[" + k + "." + z + "->" + m + "]";
}

}  // namespace

ReplacingProblem encode_replacing(const Metamodel& mm,
                                  const std::map<std::string, Rule>& rules,
                                  const TripleGraph& g,
                                  const std::vector<RuleApplication>& apps,
                                  const PrecedenceGraph& pg,
                                  const std::vector<std::string>& cluster,
                                  const std::vector<std::string>& candidates,
                                  const Weights& weights) {
  (void)apps;
  ReplacingProblem rp;
  PBProblem& p = rp.problem;

  std::set<std::string> clusterAppIds;
  for (const std::string& label : cluster) {
    const PrecedenceNode* n = pg.find(label);
    if (!n || n->kind != NodeKind::Existing)
      throw ModelError("'" + label + "' is not a recorded application");
    clusterAppIds.insert(n->appId);
  }

  std::vector<CandData> cds;
  for (const std::string& label : candidates) {
    const PrecedenceNode* n = pg.find(label);
    if (!n || n->kind != NodeKind::Candidate)
      throw ModelError("'" + label + "' is not a candidate");
    CandData cd;
    cd.label = label;
    cd.node = n;
    cd.rule = &rules.at(n->ruleName);
    cd.marks.insert(n->marks.begin(), n->marks.end());
    cds.push_back(cd);
  }
  std::sort(cds.begin(), cds.end(),
            [](const CandData& a, const CandData& b) { return a.label < b.label; });

  for (const CandData& cd : cds) {
    int v = p.add_var("v[" + cd.label + "]");
    rp.candidateOrder.push_back(cd.label);
    rp.candidateVar[cd.label] = v;
  }

  auto cand = [&](const std::string& label) -> const CandData& {
    for (const CandData& cd : cds)
      if (cd.label == label) return cd;
    throw ModelError("unknown candidate '" + label + "'");
  };

  // (a) Source-context providers: for every source context element whose
  // current marker is absent or about to be revoked, the candidate needs one
  // of the candidates that would mark the element.
  std::map<std::string, std::set<std::string>> directDeps;
  for (const CandData& cd : cds) {
    for (const ElemId& e : cd.rule->elements(Domain::Source, Action::Context)) {
      auto bit = cd.node->match.binding.find(e);
      if (bit == cd.node->match.binding.end()) continue;
      const ElemId img = bit->second;
      const std::string owner = g.marking_of(img);
      if (!owner.empty() && !clusterAppIds.count(owner)) continue;
      PBConstraint c;
      c.name = "dep[" + cd.label + "." + e + "]";
      c.rel = Rel::Le;
      c.rhs = 0;
      c.terms.push_back({1, rp.candidateVar.at(cd.label)});
      for (const CandData& other : cds) {
        if (other.label == cd.label) continue;
        if (other.marks.count(img)) {
          c.terms.push_back({-1, rp.candidateVar.at(other.label)});
          directDeps[cd.label].insert(other.label);
        }
      }
      p.add_constraint(std::move(c));
    }
  }

  // Pairwise exclusion of candidates that would mark a common element.
  std::set<std::pair<std::string, std::string>> excluded;
  for (std::size_t i = 0; i < cds.size(); ++i)
    for (std::size_t j = i + 1; j < cds.size(); ++j) {
      bool clash = false;
      for (const ElemId& m : cds[i].marks)
        if (cds[j].marks.count(m)) clash = true;
      if (!clash) continue;
      excluded.insert({cds[i].label, cds[j].label});
      PBConstraint c;
      c.name = "excl[" + cds[i].label + "|" + cds[j].label + "]";
      c.rel = Rel::Le;
      c.rhs = 1;
      c.terms.push_back({1, rp.candidateVar.at(cds[i].label)});
      c.terms.push_back({1, rp.candidateVar.at(cds[j].label)});
      p.add_constraint(std::move(c));
    }
  auto excl = [&](const std::string& a, const std::string& b) {
    return excluded.count({std::min(a, b), std::max(a, b)}) > 0;
  };

  std::map<std::string, std::set<std::string>> transDeps;
  for (const CandData& cd : cds) {
    std::set<std::string>& seen = transDeps[cd.label];
    std::queue<std::string> q;
    q.push(cd.label);
    while (!q.empty()) {
      std::string u = q.front();
      q.pop();
      for (const std::string& v : directDeps[u])
        if (seen.insert(v).second) q.push(v);
    }
    seen.erase(cd.label);
  }

  // (b) Context-create mappings: a candidate's corr/target context element
  // may be glued onto an element created by a candidate it (transitively)
  // depends on. Nodes first so relation gates can look endpoint vars up.
  std::map<std::string, std::map<ElemId, std::vector<std::size_t>>> ccByCtx;
  auto cc_var = [&](const std::string& k, const ElemId& e, const std::string& pr,
                    const ElemId& z) -> int {
    const std::string n = cc_name(k, e, pr, z);
    return p.has_var(n) ? p.var(n) : -1;
  };

  auto add_cc = [&](const CandData& cd, const ElemId& e, const CandData& prod,
                    const ElemId& z) {
    ContextCreateMapping m;
    m.consumer = cd.label;
    m.ctxElem = e;
    m.producer = prod.label;
    m.createdElem = z;
    m.var = p.add_var(cc_name(cd.label, e, prod.label, z));
    PBConstraint c1;
    c1.name = "cc-cons[" + cd.label + "." + e + "->" + prod.label + "." + z + "]";
    c1.rel = Rel::Le;
    c1.rhs = 0;
    c1.terms = {{1, m.var}, {-1, rp.candidateVar.at(cd.label)}};
    p.add_constraint(std::move(c1));
    PBConstraint c2;
    c2.name = "cc-prod[" + cd.label + "." + e + "->" + prod.label + "." + z + "]";
    c2.rel = Rel::Le;
    c2.rhs = 0;
    c2.terms = {{1, m.var}, {-1, rp.candidateVar.at(prod.label)}};
    p.add_constraint(std::move(c2));
    ccByCtx[cd.label][e].push_back(rp.ctxCreate.size());
    rp.ctxCreate.push_back(std::move(m));
  };

  auto producers_of = [&](const CandData& cd) {
    std::vector<const CandData*> out;
    for (const std::string& pl : transDeps[cd.label]) {
      if (excl(cd.label, pl)) continue;
      out.push_back(&cand(pl));
    }
    std::sort(out.begin(), out.end(), [](const CandData* a, const CandData* b) {
      return a->label < b->label;
    });
    return out;
  };

  // Required attribute values of a rule node: its conditions plus, for
  // created nodes, its assignments. Used to drop mappings whose attribute
  // expectations contradict each other.
  auto attr_requirements = [](const Rule& r, const ElemId& id) {
    std::map<std::string, AttrValue> req;
    for (const AttrCondition& c : r.conditions)
      if (c.elem == id) req[c.attr] = c.value;
    auto it = r.nodes.find(id);
    if (it != r.nodes.end())
      for (const auto& [a, v] : it->second.assignments) req[a] = v;
    return req;
  };
  auto attrs_conflict = [&](const Rule& ra, const ElemId& ea, const Rule& rb,
                            const ElemId& eb) {
    const auto qa = attr_requirements(ra, ea);
    const auto qb = attr_requirements(rb, eb);
    for (const auto& [a, v] : qa) {
      auto it = qb.find(a);
      if (it != qb.end() && !attr_equal(v, it->second)) return true;
    }
    return false;
  };

  // Node context mappings.
  for (const CandData& cd : cds) {
    for (const auto& [e, rn] : cd.rule->nodes) {
      if (rn.action != Action::Context || rn.domain == Domain::Source) continue;
      for (const CandData* prod : producers_of(cd))
        for (const auto& [z, zn] : prod->rule->nodes) {
          if (zn.action != Action::Create || zn.domain != rn.domain) continue;
          if (!mm.is_subtype(zn.type, rn.type)) continue;
          if (attrs_conflict(*cd.rule, e, *prod->rule, z)) continue;
          add_cc(cd, e, *prod, z);
        }
    }
  }

  // Corr context mappings: the source endpoints must already denote the same
  // model element; the target endpoint is gated on its node mapping.
  for (const CandData& cd : cds) {
    for (const auto& [e, rc] : cd.rule->corrs) {
      if (rc.action != Action::Context) continue;
      auto sBit = cd.node->match.binding.find(rc.src);
      if (sBit == cd.node->match.binding.end()) continue;
      for (const CandData* prod : producers_of(cd))
        for (const auto& [z, zc] : prod->rule->corrs) {
          if (zc.action != Action::Create || zc.type != rc.type) continue;
          auto pBit = prod->node->match.binding.find(zc.src);
          if (pBit == prod->node->match.binding.end() ||
              pBit->second != sBit->second)
            continue;
          const int tgtVar = cc_var(cd.label, rc.tgt, prod->label, zc.tgt);
          if (tgtVar < 0) continue;
          add_cc(cd, e, *prod, z);
          PBConstraint gc;
          gc.name = "gate[" + cd.label + "." + e + "->" + prod->label + "." + z +
                    "@tgt]";
          gc.rel = Rel::Le;
          gc.rhs = 0;
          gc.terms = {{1, rp.ctxCreate.back().var}, {-1, tgtVar}};
          p.add_constraint(std::move(gc));
        }
    }
  }

  // Edge context mappings: each endpoint must be resolvable — statically for
  // bound source endpoints, through a node mapping for producer-created
  // endpoints, and through mappings of both sides onto a common producer
  // element when both endpoints are context.
  for (const CandData& cd : cds) {
    for (const auto& [e, re] : cd.rule->edges) {
      if (re.action != Action::Context) continue;
      if (cd.rule->nodes.at(re.src).domain == Domain::Source) continue;
      for (const CandData* prod : producers_of(cd))
        for (const auto& [z, ze] : prod->rule->edges) {
          if (ze.action != Action::Create || ze.type != re.type) continue;
          struct Gate {
            std::string tag;
            std::vector<int> left;   // consumer-side vars
            std::vector<int> right;  // producer-side vars (common case)
          };
          std::vector<Gate> gates;
          bool ok = true;
          const std::pair<ElemId, ElemId> ce{re.src, re.tgt};
          const std::pair<ElemId, ElemId> pe{ze.src, ze.tgt};
          for (int side = 0; side < 2 && ok; ++side) {
            const ElemId u = side ? ce.second : ce.first;
            const ElemId up = side ? pe.second : pe.first;
            const Action ua = prod->rule->action_of(up);
            if (ua == Action::Create) {
              const int nv = cc_var(cd.label, u, prod->label, up);
              if (nv < 0) {
                ok = false;
                break;
              }
              gates.push_back({side ? "@tgt" : "@src", {nv}, {}});
            } else {
              // Producer endpoint is itself context: both context elements
              // must map onto one common created element.
              Gate gt{side ? "@tgt" : "@src", {}, {}};
              for (const ContextCreateMapping& m : rp.ctxCreate) {
                if (m.consumer == cd.label && m.ctxElem == u) {
                  const int other =
                      cc_var(prod->label, up, m.producer, m.createdElem);
                  if (other >= 0) {
                    gt.left.push_back(m.var);
                    gt.right.push_back(other);
                  }
                }
              }
              if (gt.left.empty()) {
                ok = false;
                break;
              }
              gates.push_back(std::move(gt));
            }
          }
          if (!ok) continue;
          add_cc(cd, e, *prod, z);
          const int mv = rp.ctxCreate.back().var;
          for (const Gate& gt : gates) {
            PBConstraint gc;
            gc.name = "gate[" + cd.label + "." + e + "->" + prod->label + "." +
                      z + gt.tag + "]";
            gc.rel = Rel::Le;
            gc.rhs = 0;
            gc.terms.push_back({1, mv});
            for (int v : gt.left) gc.terms.push_back({-1, v});
            p.add_constraint(std::move(gc));
            if (!gt.right.empty()) {
              PBConstraint gc2;
              gc2.name = "gate[" + cd.label + "." + e + "->" + prod->label +
                         "." + z + gt.tag + "~]";
              gc2.rel = Rel::Le;
              gc2.rhs = 0;
              gc2.terms.push_back({1, mv});
              for (int v : gt.right) gc2.terms.push_back({-1, v});
              p.add_constraint(std::move(gc2));
            }
          }
        }
    }
  }

  // At most one image per context element.
  for (const auto& [label, byElem] : ccByCtx)
    for (const auto& [e, idxs] : byElem) {
      if (idxs.size() < 2) continue;
      PBConstraint c;
      c.name = "amo-ctx[" + label + "." + e + "]";
      c.rel = Rel::Le;
      c.rhs = 1;
      for (std::size_t i : idxs) c.terms.push_back({1, rp.ctxCreate[i].var});
      p.add_constraint(std::move(c));
    }

  // (c) Rule-model mappings: created corr/target elements of a candidate may
  // reuse model elements owned by the cluster's applications, restricted to
  // types that occur as rule context somewhere in the rule set.
  std::set<std::string> ctxNodeTypes, ctxEdgeTypes, ctxCorrTypes;
  for (const auto& [rn, r] : rules) {
    for (const auto& [id, n] : r.nodes)
      if (n.action == Action::Context && n.domain != Domain::Source)
        ctxNodeTypes.insert(n.type);
    for (const auto& [id, e] : r.edges)
      if (e.action == Action::Context &&
          r.nodes.at(e.src).domain != Domain::Source)
        ctxEdgeTypes.insert(e.type);
    for (const auto& [id, c] : r.corrs)
      if (c.action == Action::Context) ctxCorrTypes.insert(c.type);
  }

  std::vector<ElemId> poolNodes, poolEdges, poolCorrs;
  for (const auto& [id, owner] : g.markings) {
    if (!clusterAppIds.count(owner)) continue;
    if (const Node* n = g.find_node(id)) {
      if (mm.node_type(n->type).domain == Domain::Target &&
          ctxNodeTypes.count(n->type))
        poolNodes.push_back(id);
    } else if (const Edge* e = g.find_edge(id)) {
      if (mm.domain_of_edge_type(e->type) == Domain::Target &&
          ctxEdgeTypes.count(e->type))
        poolEdges.push_back(id);
    } else if (const CorrLink* c = g.find_corr(id)) {
      if (ctxCorrTypes.count(c->type)) poolCorrs.push_back(id);
    }
  }
  std::sort(poolNodes.begin(), poolNodes.end());
  std::sort(poolEdges.begin(), poolEdges.end());
  std::sort(poolCorrs.begin(), poolCorrs.end());

  std::map<std::string, std::map<ElemId, std::vector<std::size_t>>> rmByElem;
  std::map<ElemId, std::vector<std::size_t>> rmByModel;
  auto rm_var = [&](const std::string& k, const ElemId& z,
                    const ElemId& m) -> int {
    const std::string n = rm_name(k, z, m);
    return p.has_var(n) ? p.var(n) : -1;
  };
  auto add_rm = [&](const CandData& cd, const ElemId& z, const ElemId& model) {
    RuleModelMapping m;
    m.candidate = cd.label;
    m.elem = z;
    m.modelElem = model;
    m.var = p.add_var(rm_name(cd.label, z, model));
    PBConstraint c;
    c.name = "rm-cand[" + cd.label + "." + z + "->" + model + "]";
    c.rel = Rel::Le;
    c.rhs = 0;
    c.terms = {{1, m.var}, {-1, rp.candidateVar.at(cd.label)}};
    p.add_constraint(std::move(c));
    rmByElem[cd.label][z].push_back(rp.ruleModel.size());
    rmByModel[model].push_back(rp.ruleModel.size());
    rp.ruleModel.push_back(std::move(m));
  };

  // Node reuse first.
  for (const CandData& cd : cds)
    for (const auto& [z, zn] : cd.rule->nodes) {
      if (zn.action != Action::Create || zn.domain != Domain::Target) continue;
      if (!ctxNodeTypes.count(zn.type)) continue;
      for (const ElemId& model : poolNodes)
        if (g.find_node(model)->type == zn.type) add_rm(cd, z, model);
    }

  // A gate condition for aligning a rule endpoint with a fixed model element:
  // either the candidate's own node-reuse variable, or a context-create
  // mapping chained with the producer's node-reuse variable.
  struct EndpointGate {
    int k = 0;
    std::vector<int> terms;
    bool ok = false;
  };
  auto endpoint_gate = [&](const CandData& cd, const ElemId& u,
                           const ElemId& model) {
    EndpointGate g2;
    const Action a = cd.rule->action_of(u);
    if (a == Action::Create) {
      const int v = rm_var(cd.label, u, model);
      if (v < 0) return g2;
      g2.k = 1;
      g2.terms = {v};
      g2.ok = true;
      return g2;
    }
    for (const ContextCreateMapping& m : rp.ctxCreate) {
      if (m.consumer != cd.label || m.ctxElem != u) continue;
      const int v2 = rm_var(m.producer, m.createdElem, model);
      if (v2 >= 0) {
        g2.terms.push_back(m.var);
        g2.terms.push_back(v2);
      }
    }
    if (g2.terms.empty()) return g2;
    g2.k = 2;
    g2.ok = true;
    return g2;
  };

  // Corr reuse: source endpoints must coincide; the target endpoint gates.
  for (const CandData& cd : cds)
    for (const auto& [z, zc] : cd.rule->corrs) {
      if (zc.action != Action::Create) continue;
      if (!ctxCorrTypes.count(zc.type)) continue;
      auto sBit = cd.node->match.binding.find(zc.src);
      if (sBit == cd.node->match.binding.end()) continue;
      for (const ElemId& model : poolCorrs) {
        const CorrLink* mc = g.find_corr(model);
        if (mc->type != zc.type || mc->src != sBit->second) continue;
        EndpointGate eg = endpoint_gate(cd, zc.tgt, mc->tgt);
        if (!eg.ok) continue;
        add_rm(cd, z, model);
        PBConstraint c;
        c.name = "gate[" + cd.label + "." + z + "->" + model + "]";
        c.rel = Rel::Le;
        c.rhs = 0;
        c.terms.push_back({eg.k, rp.ruleModel.back().var});
        for (int v : eg.terms) c.terms.push_back({-1, v});
        p.add_constraint(std::move(c));
      }
    }

  // Edge reuse: both endpoints gate, summed into a single row.
  for (const CandData& cd : cds)
    for (const auto& [z, ze] : cd.rule->edges) {
      if (ze.action != Action::Create) continue;
      if (cd.rule->nodes.at(ze.src).domain != Domain::Target) continue;
      if (!ctxEdgeTypes.count(ze.type)) continue;
      for (const ElemId& model : poolEdges) {
        const Edge* me = g.find_edge(model);
        if (me->type != ze.type) continue;
        EndpointGate g1 = endpoint_gate(cd, ze.src, me->src);
        if (!g1.ok) continue;
        EndpointGate g2 = endpoint_gate(cd, ze.tgt, me->tgt);
        if (!g2.ok) continue;
        add_rm(cd, z, model);
        PBConstraint c;
        c.name = "gate[" + cd.label + "." + z + "->" + model + "]";
        c.rel = Rel::Le;
        c.rhs = 0;
        c.terms.push_back({g1.k + g2.k, rp.ruleModel.back().var});
        for (int v : g1.terms) c.terms.push_back({-1, v});
        for (int v : g2.terms) c.terms.push_back({-1, v});
        p.add_constraint(std::move(c));
      }
    }

  for (const auto& [label, byElem] : rmByElem)
    for (const auto& [z, idxs] : byElem) {
      if (idxs.size() < 2) continue;
      PBConstraint c;
      c.name = "amo-elem[" + label + "." + z + "]";
      c.rel = Rel::Le;
      c.rhs = 1;
      for (std::size_t i : idxs) c.terms.push_back({1, rp.ruleModel[i].var});
      p.add_constraint(std::move(c));
    }
  for (const auto& [model, idxs] : rmByModel) {
    if (idxs.size() < 2) continue;
    PBConstraint c;
    c.name = "amo-model[" + model + "]";
    c.rel = Rel::Le;
    c.rhs = 1;
    for (std::size_t i : idxs) c.terms.push_back({1, rp.ruleModel[i].var});
    p.add_constraint(std::move(c));
  }

  weights.apply(p);
  return rp;
}

namespace {

// Binds a candidate's remaining context against the model: everything the
// source-side match left open, and that is not glued onto another
// candidate's creation, is matched as plain context around the already
// bound occurrence. Returns the source bindings unchanged when no agreeing
// occurrence exists (the context then binds at application time).
std::map<ElemId, ElemId> extend_candidate(const Metamodel& mm,
                                          const TripleGraph& g,
                                          const Rule& base,
                                          const std::map<ElemId, ElemId>& bound,
                                          const std::set<ElemId>& glued) {
  Rule pat;
  pat.name = base.name;
  for (const auto& [id, n] : base.nodes) {
    if (n.domain != Domain::Source &&
        (n.action != Action::Context || glued.count(id)))
      continue;
    RuleNode copy = n;
    copy.action = Action::Context;
    copy.assignments.clear();
    pat.nodes[id] = copy;
  }
  for (const auto& [id, e] : base.edges) {
    if (!pat.nodes.count(e.src) || !pat.nodes.count(e.tgt)) continue;
    if (base.nodes.at(e.src).domain != Domain::Source &&
        (e.action != Action::Context || glued.count(id)))
      continue;
    RuleEdge copy = e;
    copy.action = Action::Context;
    pat.edges[id] = copy;
  }
  for (const auto& [id, c] : base.corrs) {
    if (c.action != Action::Context || glued.count(id)) continue;
    if (!pat.nodes.count(c.src) || !pat.nodes.count(c.tgt)) continue;
    RuleCorr copy = c;
    copy.action = Action::Context;
    pat.corrs[id] = copy;
  }
  OperationalRule opr;
  opr.rule = std::move(pat);
  opr.inputDomain = Domain::Source;
  MatchOptions mo;
  mo.side = MatchSide::Full;
  mo.enforceDirectives = false;
  std::set<ElemId> scope;
  for (const auto& [e, img] : bound) scope.insert(img);
  if (!scope.empty()) mo.scope = scope;
  for (const Match& m : find_matches(mm, opr, g, mo)) {
    bool ok = true;
    for (const auto& [e, img] : bound) {
      auto it = m.binding.find(e);
      if (it != m.binding.end() && it->second != img) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    std::map<ElemId, ElemId> ext = bound;
    for (const auto& [e, img] : m.binding) ext.emplace(e, img);
    return ext;
  }
  return bound;
}

}  // namespace

std::optional<ReplacingRule> decode_replacing(
    const Metamodel& mm, const std::map<std::string, Rule>& rules,
    const TripleGraph& g, const PrecedenceGraph& pg, const ReplacingProblem& rp,
    const Assignment& a) {
  if (!a.feasible) return std::nullopt;
  std::vector<std::string> chosen;
  for (const auto& [label, var] : rp.candidateVar)
    if (a.value(var)) chosen.push_back(label);
  if (chosen.empty()) return std::nullopt;

  // Chosen context-create mappings, filtered for structural completeness:
  // gluing a context node onto a created element while an incident context
  // relation stays unglued would leave that relation stretched between
  // precondition and creation. Such mappings fall back to context from
  // outside the composition, which binds against the model instead.
  std::vector<ContextCreateMapping> cc;
  for (const ContextCreateMapping& m : rp.ctxCreate)
    if (a.value(m.var)) cc.push_back(m);
  auto honored_at = [&cc](const std::string& consumer, const ElemId& ctx) {
    for (const ContextCreateMapping& m : cc)
      if (m.consumer == consumer && m.ctxElem == ctx) return true;
    return false;
  };
  auto honored_pair = [&cc](const std::string& consumer, const ElemId& ctx,
                            const std::string& producer,
                            const ElemId& created) {
    for (const ContextCreateMapping& m : cc)
      if (m.consumer == consumer && m.ctxElem == ctx &&
          m.producer == producer && m.createdElem == created)
        return true;
    return false;
  };
  // Both-context edge endpoints: consumer and producer context must map onto
  // one common created element.
  auto common_image = [&](const std::string& ca, const ElemId& ea,
                          const std::string& cb, const ElemId& eb) {
    for (const ContextCreateMapping& m : cc) {
      if (m.consumer != ca || m.ctxElem != ea) continue;
      if (honored_pair(cb, eb, m.producer, m.createdElem)) return true;
    }
    return false;
  };
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < cc.size();) {
      const ContextCreateMapping m = cc[i];
      const Rule& cr = rules.at(pg.find(m.consumer)->ruleName);
      const Rule& pr = rules.at(pg.find(m.producer)->ruleName);
      bool ok = true;
      if (cr.nodes.count(m.ctxElem)) {
        for (const auto& [eid, e] : cr.edges)
          if (e.action == Action::Context &&
              (e.src == m.ctxElem || e.tgt == m.ctxElem) &&
              !honored_at(m.consumer, eid))
            ok = false;
        for (const auto& [cid, c] : cr.corrs)
          if (c.action == Action::Context && c.tgt == m.ctxElem &&
              !honored_at(m.consumer, cid))
            ok = false;
      } else if (cr.edges.count(m.ctxElem)) {
        const RuleEdge& e = cr.edges.at(m.ctxElem);
        const RuleEdge& z = pr.edges.at(m.createdElem);
        const std::pair<ElemId, ElemId> sides[2] = {{e.src, z.src},
                                                    {e.tgt, z.tgt}};
        for (const auto& [u, up] : sides) {
          if (cr.domain_of(u) == Domain::Source) continue;
          if (pr.action_of(up) == Action::Create) {
            if (!honored_pair(m.consumer, u, m.producer, up)) ok = false;
          } else if (!common_image(m.consumer, u, m.producer, up)) {
            ok = false;
          }
        }
      } else if (cr.corrs.count(m.ctxElem)) {
        const RuleCorr& c = cr.corrs.at(m.ctxElem);
        const RuleCorr& z = pr.corrs.at(m.createdElem);
        if (!honored_pair(m.consumer, c.tgt, m.producer, z.tgt)) ok = false;
      }
      if (ok) {
        ++i;
      } else {
        cc.erase(cc.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
      }
    }
  }

  // Composition order: producers before consumers.
  std::map<std::string, std::set<std::string>> dependsOn;
  for (const ContextCreateMapping& m : cc)
    dependsOn[m.consumer].insert(m.producer);
  std::map<ElemId, std::string> markedBy;
  for (const std::string& label : chosen) {
    const PrecedenceNode* n = pg.find(label);
    for (const ElemId& m : n->marks) markedBy[m] = label;
  }
  for (const std::string& label : chosen) {
    const PrecedenceNode* n = pg.find(label);
    const Rule& r = rules.at(n->ruleName);
    for (const ElemId& e : r.elements(Domain::Source, Action::Context)) {
      auto bit = n->match.binding.find(e);
      if (bit == n->match.binding.end()) continue;
      auto mit = markedBy.find(bit->second);
      if (mit != markedBy.end() && mit->second != label)
        dependsOn[label].insert(mit->second);
    }
  }

  ReplacingRule out;
  out.chosen = topo_order(chosen, dependsOn);

  std::map<ElemId, ElemId> srcModelToComposed;
  std::map<ElemId, ElemId> ctxImgToComposed;  // corr/target context images
  std::map<std::string, std::map<ElemId, ElemId>> extOf;
  bool first = true;
  for (const std::string& label : out.chosen) {
    const PrecedenceNode* n = pg.find(label);
    const Rule& base = rules.at(n->ruleName);
    Rule renamed = rename_rule(base, label);

    std::set<ElemId> glued;
    for (const ContextCreateMapping& m : cc)
      if (m.consumer == label) glued.insert(m.ctxElem);
    const std::map<ElemId, ElemId> ext =
        extend_candidate(mm, g, base, n->match.binding, glued);
    extOf[label] = ext;

    std::map<ElemId, ElemId> glue;
    if (first) {
      out.rule = renamed;
      first = false;
    } else {
      for (const ContextCreateMapping& m : cc) {
        if (m.consumer != label) continue;
        glue[prefixed(label, m.ctxElem)] =
            prefixed(m.producer, m.createdElem);
      }
      for (const ElemId& e : base.element_ids()) {
        if (base.action_of(e) != Action::Context) continue;
        if (base.domain_of(e) != Domain::Source) continue;
        auto bit = n->match.binding.find(e);
        if (bit == n->match.binding.end()) continue;
        auto mit = srcModelToComposed.find(bit->second);
        if (mit != srcModelToComposed.end())
          glue[prefixed(label, e)] = mit->second;
      }
      // Context elements of different candidates denoting one model element
      // must become one rule element: an occurrence binds rule elements to
      // distinct model elements. Nodes first, then relations whose endpoints
      // line up with the glued node images.
      for (const auto& [e, rn] : base.nodes) {
        if (rn.action != Action::Context || rn.domain == Domain::Source)
          continue;
        if (glue.count(prefixed(label, e))) continue;
        auto xit = ext.find(e);
        if (xit == ext.end()) continue;
        auto cit = ctxImgToComposed.find(xit->second);
        if (cit == ctxImgToComposed.end()) continue;
        auto tit = out.rule.nodes.find(cit->second);
        if (tit == out.rule.nodes.end() ||
            !mm.is_subtype(tit->second.type, rn.type))
          continue;
        glue[prefixed(label, e)] = cit->second;
      }
      auto glued_id = [&](const ElemId& e) {
        const ElemId pref = prefixed(label, e);
        auto git = glue.find(pref);
        return git == glue.end() ? pref : git->second;
      };
      for (const auto& [e, re] : base.edges) {
        if (re.action != Action::Context) continue;
        if (base.nodes.at(re.src).domain == Domain::Source) continue;
        if (glue.count(prefixed(label, e))) continue;
        auto xit = ext.find(e);
        if (xit == ext.end()) continue;
        auto cit = ctxImgToComposed.find(xit->second);
        if (cit == ctxImgToComposed.end()) continue;
        auto tit = out.rule.edges.find(cit->second);
        if (tit == out.rule.edges.end() || tit->second.type != re.type)
          continue;
        if (glued_id(re.src) != tit->second.src ||
            glued_id(re.tgt) != tit->second.tgt)
          continue;
        glue[prefixed(label, e)] = cit->second;
      }
      for (const auto& [e, rc] : base.corrs) {
        if (rc.action != Action::Context) continue;
        if (glue.count(prefixed(label, e))) continue;
        auto xit = ext.find(e);
        if (xit == ext.end()) continue;
        auto cit = ctxImgToComposed.find(xit->second);
        if (cit == ctxImgToComposed.end()) continue;
        auto tit = out.rule.corrs.find(cit->second);
        if (tit == out.rule.corrs.end() || tit->second.type != rc.type)
          continue;
        if (glued_id(rc.src) != tit->second.src ||
            glued_id(rc.tgt) != tit->second.tgt)
          continue;
        glue[prefixed(label, e)] = cit->second;
      }
      out.rule = compose(mm, out.rule, renamed, glue,
                         out.rule.name + ";" + label);
    }
    for (const ElemId& e : base.element_ids()) {
      const ElemId pref = prefixed(label, e);
      auto git = glue.find(pref);
      out.elementOf[label][e] = git == glue.end() ? pref : git->second;
    }
    for (const auto& [e, img] : n->match.binding) {
      const ElemId composed = out.elementOf[label][e];
      if (!srcModelToComposed.count(img)) srcModelToComposed[img] = composed;
    }
    for (const auto& [e, img] : ext) {
      if (!base.has(e) || base.domain_of(e) == Domain::Source) continue;
      if (base.action_of(e) != Action::Context) continue;
      const ElemId composed = out.elementOf[label][e];
      if (out.rule.has(composed) && !ctxImgToComposed.count(img))
        ctxImgToComposed[img] = composed;
    }
  }
  out.rule.name = "replacing:" + out.rule.name;

  // Partial match: source and extended context images through the final
  // element set.
  for (const std::string& label : out.chosen) {
    for (const auto& [e, img] : extOf[label]) {
      auto eit = out.elementOf[label].find(e);
      if (eit == out.elementOf[label].end()) continue;
      if (out.rule.has(eit->second))
        out.partialMatch.emplace(eit->second, img);
    }
  }

  for (const RuleModelMapping& m : rp.ruleModel)
    if (a.value(m.var)) out.reuse[prefixed(m.candidate, m.elem)] = m.modelElem;
  return out;
}

// ---------------------------------------------------------------------------
// Overlap construction
// ---------------------------------------------------------------------------

ShortCut build_shortcut(const Metamodel& /*mm*/, const ReplacedRule& replaced,
                        const ReplacingRule& replacing,
                        const std::map<ElemId, ElemId>& sourcePairs,
                        const std::map<ElemId, ElemId>& reuseSeeds,
                        const Weights& weights) {
  const Rule& rd = replaced.rule;
  const Rule& rg = replacing.rule;

  // Static unification: fixed source pairs plus context elements of both
  // rules that denote the same model element.
  std::map<ElemId, ElemId> unify = sourcePairs;
  {
    std::map<ElemId, ElemId> replacingByImage;
    for (const ElemId& y : rg.element_ids()) {
      if (rg.action_of(y) != Action::Context) continue;
      auto it = replacing.partialMatch.find(y);
      if (it != replacing.partialMatch.end()) replacingByImage[it->second] = y;
    }
    for (const ElemId& x : rd.element_ids()) {
      if (rd.action_of(x) != Action::Context || unify.count(x)) continue;
      auto bit = replaced.binding.find(x);
      if (bit == replaced.binding.end()) continue;
      auto yit = replacingByImage.find(bit->second);
      if (yit != replacingByImage.end()) unify[x] = yit->second;
    }
  }

  PBProblem p;
  struct Pair {
    ElemId x, y;
    int var;
  };
  std::vector<Pair> pairs;
  std::map<std::pair<ElemId, ElemId>, int> pairVar;
  std::map<ElemId, std::vector<std::size_t>> byX, byY;
  std::map<ElemId, std::vector<std::size_t>> nodeIncident;  // node id -> rel pairs

  auto add_pair = [&](const ElemId& x, const ElemId& y) {
    const int v = p.add_var("p[" + x + "|" + y + "]");
    pairVar[{x, y}] = v;
    byX[x].push_back(pairs.size());
    byY[y].push_back(pairs.size());
    pairs.push_back({x, y, v});
    return v;
  };

  // Endpoint condition: +1 static, variable index, or unsatisfiable.
  auto endpoint = [&](const ElemId& xu, const ElemId& yu) -> std::pair<bool, int> {
    auto uit = unify.find(xu);
    if (uit != unify.end() && uit->second == yu) return {true, -1};
    auto pit = pairVar.find({xu, yu});
    if (pit != pairVar.end()) return {true, pit->second};
    return {false, -1};
  };

  // Created corr/target node pairs, type-exact.
  for (const auto& [x, xn] : rd.nodes) {
    if (xn.action != Action::Create || xn.domain != Domain::Target) continue;
    if (!replaced.binding.count(x)) continue;
    for (const auto& [y, yn] : rg.nodes) {
      if (yn.action != Action::Create || yn.domain != Domain::Target) continue;
      if (yn.type != xn.type) continue;
      add_pair(x, y);
    }
  }

  // Corr pairs: generation requires identified sources; target endpoint gates.
  std::vector<PBConstraint> pending;
  for (const auto& [x, xc] : rd.corrs) {
    if (xc.action != Action::Create || !replaced.binding.count(x)) continue;
    for (const auto& [y, yc] : rg.corrs) {
      if (yc.action != Action::Create || yc.type != xc.type) continue;
      auto su = unify.find(xc.src);
      if (su == unify.end() || su->second != yc.src) continue;
      auto [ok, gateVar] = endpoint(xc.tgt, yc.tgt);
      if (!ok) continue;
      const int v = add_pair(x, y);
      nodeIncident[xc.tgt].push_back(pairs.size() - 1);
      nodeIncident[yc.tgt].push_back(pairs.size() - 1);
      if (gateVar >= 0) {
        PBConstraint c;
        c.name = "gate[" + x + "|" + y + "@tgt]";
        c.rel = Rel::Le;
        c.rhs = 0;
        c.terms = {{1, v}, {-1, gateVar}};
        pending.push_back(std::move(c));
      }
    }
  }

  // Edge pairs: both endpoints must be identified or pairable.
  for (const auto& [x, xe] : rd.edges) {
    if (xe.action != Action::Create || !replaced.binding.count(x)) continue;
    if (rd.nodes.at(xe.src).domain != Domain::Target) continue;
    for (const auto& [y, ye] : rg.edges) {
      if (ye.action != Action::Create || ye.type != xe.type) continue;
      if (rg.nodes.at(ye.src).domain != Domain::Target) continue;
      auto [okS, gateS] = endpoint(xe.src, ye.src);
      auto [okT, gateT] = endpoint(xe.tgt, ye.tgt);
      if (!okS || !okT) continue;
      const int v = add_pair(x, y);
      for (const ElemId& n : {xe.src, xe.tgt, ye.src, ye.tgt})
        if (rd.nodes.count(n) || rg.nodes.count(n))
          nodeIncident[n].push_back(pairs.size() - 1);
      for (int side = 0; side < 2; ++side) {
        const int gv = side ? gateT : gateS;
        if (gv < 0) continue;
        PBConstraint c;
        c.name = "gate[" + x + "|" + y + (side ? "@tgt]" : "@src]");
        c.rel = Rel::Le;
        c.rhs = 0;
        c.terms = {{1, v}, {-1, gv}};
        pending.push_back(std::move(c));
      }
    }
  }
  for (PBConstraint& c : pending) p.add_constraint(std::move(c));

  // Node anchoring: a node pair with at least one incident relation pair in
  // the program must select one of them (no free-floating moves).
  for (const Pair& pr : pairs) {
    if (!rd.nodes.count(pr.x)) continue;
    std::vector<int> support;
    for (std::size_t i : nodeIncident[pr.x]) {
      const Pair& rel = pairs[i];
      bool touchesY = false;
      if (rd.edges.count(rel.x)) {
        const RuleEdge& xe = rd.edges.at(rel.x);
        const RuleEdge& ye = rg.edges.at(rel.y);
        if ((xe.src == pr.x && ye.src == pr.y) ||
            (xe.tgt == pr.x && ye.tgt == pr.y))
          touchesY = true;
      } else if (rd.corrs.count(rel.x)) {
        const RuleCorr& xc = rd.corrs.at(rel.x);
        const RuleCorr& yc = rg.corrs.at(rel.y);
        if (xc.tgt == pr.x && yc.tgt == pr.y) touchesY = true;
      }
      if (touchesY) support.push_back(rel.var);
    }
    if (support.empty()) continue;
    PBConstraint c;
    c.name = "anchor[" + pr.x + "|" + pr.y + "]";
    c.rel = Rel::Le;
    c.rhs = 0;
    c.terms.push_back({1, pr.var});
    for (int v : support) c.terms.push_back({-1, v});
    p.add_constraint(std::move(c));
  }

  // Injectivity in both directions.
  for (const auto& [x, idxs] : byX) {
    if (idxs.size() < 2) continue;
    PBConstraint c;
    c.name = "amo-old[" + x + "]";
    c.rel = Rel::Le;
    c.rhs = 1;
    for (std::size_t i : idxs) c.terms.push_back({1, pairs[i].var});
    p.add_constraint(std::move(c));
  }
  for (const auto& [y, idxs] : byY) {
    if (idxs.size() < 2) continue;
    PBConstraint c;
    c.name = "amo-new[" + y + "]";
    c.rel = Rel::Le;
    c.rhs = 1;
    for (std::size_t i : idxs) c.terms.push_back({1, pairs[i].var});
    p.add_constraint(std::move(c));
  }

  // Force the reuse decisions that were already taken upstream.
  for (const auto& [x, y] : reuseSeeds) {
    auto it = pairVar.find({x, y});
    if (it == pairVar.end()) continue;
    PBConstraint c;
    c.name = "seed[" + x + "|" + y + "]";
    c.rel = Rel::Eq;
    c.rhs = 1;
    c.terms = {{1, it->second}};
    p.add_constraint(std::move(c));
  }

  weights.apply(p);
  Assignment a = solve(p);
  if (!a.feasible)
    throw ModelError("the overlap program has no feasible assignment");

  std::map<ElemId, ElemId> chosen = unify;  // replaced id -> replacing id
  for (const Pair& pr : pairs)
    if (a.value(pr.var)) chosen[pr.x] = pr.y;

  // Replacing context bound to a model element that a chosen overlap already
  // preserves would duplicate that element inside the rule; an occurrence
  // binds rule elements to distinct model elements, so the context stand-in
  // folds onto the overlap id.
  std::map<ElemId, ElemId> foldY;
  {
    std::map<ElemId, ElemId> imageToOverlap;
    for (const auto& [x, y] : chosen) {
      auto bit = replaced.binding.find(x);
      if (bit != replaced.binding.end()) imageToOverlap[bit->second] = y;
    }
    for (const ElemId& y : rg.element_ids()) {
      if (rg.action_of(y) != Action::Context) continue;
      auto pit = replacing.partialMatch.find(y);
      if (pit == replacing.partialMatch.end()) continue;
      auto iit = imageToOverlap.find(pit->second);
      if (iit != imageToOverlap.end() && iit->second != y) foldY[y] = iit->second;
    }
  }
  auto folded = [&](const ElemId& y) {
    auto it = foldY.find(y);
    return it == foldY.end() ? y : it->second;
  };

  // --- assemble the short-cut rule -----------------------------------------
  ShortCut sc;
  sc.rule.name = "shortcut:" + rd.name + "=>" + rg.name;
  Rule& r = sc.rule;

  std::set<ElemId> overlappedY;
  for (const auto& [x, y] : chosen) overlappedY.insert(y);

  for (const auto& [y, yn] : rg.nodes) {
    if (foldY.count(y)) continue;
    RuleNode copy = yn;
    if (overlappedY.count(y)) {
      copy.action = Action::Context;
      r.origin[y] = Origin::Both;
    } else {
      r.origin[y] = Origin::Replacing;
    }
    r.nodes[y] = copy;
  }
  for (const auto& [y, ye] : rg.edges) {
    if (foldY.count(y)) continue;
    RuleEdge copy = ye;
    copy.src = folded(ye.src);
    copy.tgt = folded(ye.tgt);
    if (overlappedY.count(y)) {
      copy.action = Action::Context;
      r.origin[y] = Origin::Both;
    } else {
      r.origin[y] = Origin::Replacing;
    }
    r.edges[y] = copy;
  }
  for (const auto& [y, yc] : rg.corrs) {
    if (foldY.count(y)) continue;
    RuleCorr copy = yc;
    copy.src = folded(yc.src);
    copy.tgt = folded(yc.tgt);
    if (overlappedY.count(y)) {
      copy.action = Action::Context;
      r.origin[y] = Origin::Both;
    } else {
      r.origin[y] = Origin::Replacing;
    }
    r.corrs[y] = copy;
  }

  auto to_sc = [&](const ElemId& x) -> ElemId {
    auto it = chosen.find(x);
    return it == chosen.end() ? x : it->second;
  };

  for (const auto& [x, xn] : rd.nodes) {
    if (chosen.count(x)) continue;
    RuleNode copy = xn;
    copy.assignments.clear();
    copy.action = xn.action == Action::Create ? Action::Delete : Action::Context;
    r.nodes[x] = copy;
    r.origin[x] = Origin::Replaced;
  }
  for (const auto& [x, xe] : rd.edges) {
    if (chosen.count(x)) continue;
    RuleEdge copy = xe;
    copy.src = to_sc(xe.src);
    copy.tgt = to_sc(xe.tgt);
    copy.action = xe.action == Action::Create ? Action::Delete : Action::Context;
    r.edges[x] = copy;
    r.origin[x] = Origin::Replaced;
  }
  for (const auto& [x, xc] : rd.corrs) {
    if (chosen.count(x)) continue;
    RuleCorr copy = xc;
    copy.src = to_sc(xc.src);
    copy.tgt = to_sc(xc.tgt);
    copy.action = xc.action == Action::Create ? Action::Delete : Action::Context;
    r.corrs[x] = copy;
    r.origin[x] = Origin::Replaced;
  }

  for (AttrCondition c : rg.conditions) {
    c.elem = folded(c.elem);
    r.conditions.push_back(std::move(c));
  }
  for (const auto& [id, who] : rg.component)
    if (r.has(id)) r.component[id] = who;
  for (const auto& [id, who] : rd.component)
    if (r.has(id)) r.component[id] = who;

  // Bindings: every replaced element with a surviving image, carried onto the
  // unified/overlapping id; replacing source images from the partial match.
  for (const auto& [x, img] : replaced.binding) {
    const ElemId id = to_sc(x);
    if (r.has(id)) sc.binding[id] = img;
  }
  for (const auto& [y, img] : replacing.partialMatch)
    if (r.has(y)) sc.binding[y] = img;

  return sc;
}

OperationalShortCut operationalize_shortcut(const ShortCut& sc) {
  OperationalShortCut out;
  out.binding = sc.binding;
  Rule r = sc.rule;
  OperationalRule& op = out.op;
  op.inputDomain = Domain::Source;

  std::set<ElemId> absent;
  for (auto& [id, n] : r.nodes) {
    if (n.domain != Domain::Source) continue;
    switch (n.action) {
      case Action::Create:
        op.directives[id] = Directive::Mark;
        n.action = Action::Context;
        break;
      case Action::Context:
        op.directives[id] = Directive::RequireMarked;
        break;
      case Action::Delete:
        absent.insert(id);
        continue;
    }
    // The whole source side is precondition: expected attribute values turn
    // into match conditions.
    for (const auto& [a, v] : n.assignments)
      r.conditions.push_back({id, a, v});
    n.assignments.clear();
  }
  for (auto& [id, e] : r.edges) {
    if (r.nodes.at(e.src).domain != Domain::Source) continue;
    switch (e.action) {
      case Action::Create:
        op.directives[id] = Directive::Mark;
        e.action = Action::Context;
        break;
      case Action::Context:
        op.directives[id] = Directive::RequireMarked;
        break;
      case Action::Delete:
        e.action = Action::Context;
        e.nac = true;
        break;
    }
  }

  // Remove nodes whose image must be absent, together with their relations
  // (all of which describe old, equally absent structure).
  for (const ElemId& id : absent) {
    for (auto it = r.edges.begin(); it != r.edges.end();) {
      if (it->second.src == id || it->second.tgt == id) {
        if (!it->second.nac && it->second.action == Action::Create)
          throw PreconditionError("created relation touches an absent node");
        out.binding.erase(it->first);
        r.origin.erase(it->first);
        r.component.erase(it->first);
        it = r.edges.erase(it);
      } else {
        ++it;
      }
    }
    for (auto it = r.corrs.begin(); it != r.corrs.end();) {
      if (it->second.src == id || it->second.tgt == id) {
        if (it->second.action == Action::Create)
          throw PreconditionError("created corr touches an absent node");
        out.binding.erase(it->first);
        r.origin.erase(it->first);
        r.component.erase(it->first);
        it = r.corrs.erase(it);
      } else {
        ++it;
      }
    }
    out.absentNodes.insert(id);
    r.nodes.erase(id);
    r.origin.erase(id);
    r.component.erase(id);
    op.directives.erase(id);
  }

  // Replaced-only relations are dropped unless the rule still acts on them:
  // context relations restate preconditions of the revoked application and
  // carry no obligation for the repair, and deletions without a surviving
  // model image have nothing left to delete. NAC edges stay (their absence
  // is the point). A replaced-only deleted node without an image is likewise
  // dropped; a context node left without incidents is relaxed or dropped
  // below.
  auto unbound = [&](const ElemId& id) { return !out.binding.count(id); };
  auto erase_element = [&](const ElemId& id) {
    r.origin.erase(id);
    r.component.erase(id);
    op.directives.erase(id);
    out.binding.erase(id);
  };
  for (auto it = r.edges.begin(); it != r.edges.end();) {
    const ElemId id = it->first;
    if (r.origin_of(id) == Origin::Replaced && !it->second.nac &&
        (it->second.action == Action::Context || unbound(id))) {
      erase_element(id);
      it = r.edges.erase(it);
    } else {
      ++it;
    }
  }
  for (auto it = r.corrs.begin(); it != r.corrs.end();) {
    const ElemId id = it->first;
    if (r.origin_of(id) == Origin::Replaced &&
        (it->second.action == Action::Context || unbound(id))) {
      erase_element(id);
      it = r.corrs.erase(it);
    } else {
      ++it;
    }
  }
  for (auto it = r.nodes.begin(); it != r.nodes.end();) {
    const ElemId id = it->first;
    if (r.origin_of(id) == Origin::Replaced &&
        it->second.action == Action::Delete && unbound(id)) {
      for (const auto& [eid, e] : r.edges)
        if (e.src == id || e.tgt == id)
          throw PreconditionError("relation touches an unbound deleted node");
      for (const auto& [cid, c] : r.corrs)
        if (c.src == id || c.tgt == id)
          throw PreconditionError("corr touches an unbound deleted node");
      erase_element(id);
      it = r.nodes.erase(it);
    } else {
      ++it;
    }
  }

  // Relax replaced-only source context that only anchors NAC edges.
  auto incident = [&](const ElemId& id) {
    std::vector<const RuleEdge*> es;
    for (const auto& [eid, e] : r.edges)
      if (e.src == id || e.tgt == id) es.push_back(&e);
    return es;
  };
  for (auto& [id, n] : r.nodes) {
    if (n.domain != Domain::Source || n.action != Action::Context) continue;
    if (r.origin_of(id) != Origin::Replaced) continue;
    bool hasCorr = false;
    for (const auto& [cid, c] : r.corrs)
      if (c.src == id || c.tgt == id) hasCorr = true;
    if (hasCorr) continue;
    const auto es = incident(id);
    if (es.empty()) continue;
    bool onlyNacs = true;
    for (const RuleEdge* e : es)
      if (!e->nac) onlyNacs = false;
    if (onlyNacs) n.relaxed = true;
  }

  // Drop replaced-only context that nothing references.
  for (auto it = r.nodes.begin(); it != r.nodes.end();) {
    const ElemId id = it->first;
    const bool droppable = it->second.action == Action::Context &&
                           r.origin_of(id) == Origin::Replaced;
    bool used = false;
    if (droppable) {
      for (const auto& [eid, e] : r.edges)
        if (e.src == id || e.tgt == id) used = true;
      for (const auto& [cid, c] : r.corrs)
        if (c.src == id || c.tgt == id) used = true;
    }
    if (droppable && !used) {
      out.binding.erase(id);
      r.origin.erase(id);
      r.component.erase(id);
      op.directives.erase(id);
      it = r.nodes.erase(it);
    } else {
      ++it;
    }
  }

  op.rule = std::move(r);
  return out;
}

}  // namespace tggsync
