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

#include "tggsync/sync.hpp"

#include "tggsync/json_io.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tggsync/error.hpp"

namespace tggsync {

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::Legacy:
      return "legacy";
    case Strategy::SC:
      return "sc";
    case Strategy::Hosc:
      return "hosc";
  }
  return "legacy";
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "legacy") return Strategy::Legacy;
  if (s == "sc") return Strategy::SC;
  if (s == "hosc") return Strategy::Hosc;
  throw InputError("unknown strategy '" + s + "' (expected legacy, sc, hosc)");
}

const Rule& Session::rule(const std::string& name) const {
  auto it = rules.find(name);
  if (it == rules.end()) throw ModelError("unknown rule '" + name + "'");
  return it->second;
}

const RuleApplication* Session::find_app(const std::string& id) const {
  for (const RuleApplication& a : apps)
    if (a.id == id) return &a;
  return nullptr;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(const Clock::time_point& t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void dump_text(const std::string& dir, const std::string& file,
               const std::string& text) {
  if (dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream out(dir + "/" + file);
  out << text;
}

// ---------------------------------------------------------------------------
// Element bookkeeping
// ---------------------------------------------------------------------------

void note_ids(Session& s) {
  for (const auto& [id, n] : s.graph.nodes) s.seenIds.insert(id);
  for (const auto& [id, e] : s.graph.edges) s.seenIds.insert(id);
  for (const auto& [id, c] : s.graph.corrs) s.seenIds.insert(id);
}

ElemId fresh_id(Session& s, const std::string& prefix) {
  ElemId id;
  do {
    id = prefix + std::to_string(++s.idCounter);
  } while (s.graph.has(id) || s.seenIds.count(id));
  s.seenIds.insert(id);
  return id;
}

std::string node_prefix(const std::string& type) {
  const char c =
      static_cast<char>(std::tolower(static_cast<unsigned char>(type[0])));
  return std::string(1, c);
}

void delete_edge(Session& s, const ElemId& id, ChangeCounts& del) {
  if (!s.graph.edges.count(id)) return;
  s.graph.edges.erase(id);
  s.graph.markings.erase(id);
  del.edges++;
}

void delete_corr(Session& s, const ElemId& id, ChangeCounts& del) {
  if (!s.graph.corrs.count(id)) return;
  s.graph.corrs.erase(id);
  s.graph.markings.erase(id);
  del.corrs++;
}

// Removes a node together with whatever relations still hang off it, so the
// graph never holds dangling endpoints.
void delete_node(Session& s, const ElemId& id, ChangeCounts& del) {
  if (!s.graph.nodes.count(id)) return;
  for (const ElemId& eid : s.graph.incident_edges(id)) delete_edge(s, eid, del);
  for (const ElemId& cid : s.graph.incident_corrs(id)) delete_corr(s, cid, del);
  s.graph.nodes.erase(id);
  s.graph.markings.erase(id);
  del.nodes++;
}

std::string dedup_label(std::string label, std::set<std::string>& taken) {
  while (taken.count(label)) label += "'";
  taken.insert(label);
  return label;
}

// ---------------------------------------------------------------------------
// Forward application
// ---------------------------------------------------------------------------

// Matching pattern for applying an operational rule: created corr/target
// elements do not exist yet, so they are stripped from the precondition.
// Deleted and context elements stay and must be bound.
OperationalRule precondition_rule(const OperationalRule& op) {
  OperationalRule pre = op;
  Rule& r = pre.rule;
  std::set<ElemId> drop;
  for (const auto& [id, n] : r.nodes)
    if (n.domain != Domain::Source && n.action == Action::Create)
      drop.insert(id);
  for (auto it = r.edges.begin(); it != r.edges.end();) {
    const RuleEdge& e = it->second;
    const bool created = e.action == Action::Create &&
                         r.nodes.at(e.src).domain != Domain::Source;
    if (created || drop.count(e.src) || drop.count(e.tgt))
      it = r.edges.erase(it);
    else
      ++it;
  }
  for (auto it = r.corrs.begin(); it != r.corrs.end();) {
    const RuleCorr& c = it->second;
    if (c.action == Action::Create || drop.count(c.src) || drop.count(c.tgt))
      it = r.corrs.erase(it);
    else
      ++it;
  }
  for (const ElemId& id : drop) r.nodes.erase(id);
  return pre;
}

// Creates the corr/target images of the rule's Create elements, marks
// everything the application translates, and records the application.
void apply_forward(Session& s, const Rule& rule, const OperationalRule& op,
                   const Match& m, std::set<std::string>& takenLabels,
                   ChangeCounts* created) {
  RuleApplication app;
  app.id = "a" + std::to_string(++s.appCounter);
  app.ruleName = rule.name;
  app.binding = m.binding;

  for (const auto& [id, n] : rule.nodes) {
    if (n.domain == Domain::Source || n.action != Action::Create) continue;
    Node node;
    node.id = fresh_id(s, node_prefix(n.type));
    node.type = n.type;
    node.attrs = n.assignments;
    app.binding[id] = node.id;
    s.graph.markings[node.id] = app.id;
    s.graph.nodes.emplace(node.id, std::move(node));
    if (created) created->nodes++;
  }
  for (const auto& [id, c] : rule.corrs) {
    if (c.action != Action::Create) continue;
    CorrLink link;
    link.id = fresh_id(s, "co");
    link.type = c.type;
    link.src = app.binding.at(c.src);
    link.tgt = app.binding.at(c.tgt);
    app.binding[id] = link.id;
    s.graph.markings[link.id] = app.id;
    s.graph.corrs.emplace(link.id, std::move(link));
    if (created) created->corrs++;
  }
  for (const auto& [id, e] : rule.edges) {
    if (rule.nodes.at(e.src).domain == Domain::Source ||
        e.action != Action::Create)
      continue;
    Edge edge;
    edge.id = fresh_id(s, "e");
    edge.type = e.type;
    edge.src = app.binding.at(e.src);
    edge.tgt = app.binding.at(e.tgt);
    app.binding[id] = edge.id;
    s.graph.markings[edge.id] = app.id;
    s.graph.edges.emplace(edge.id, std::move(edge));
    if (created) created->edges++;
  }

  for (const auto& [id, d] : op.directives)
    if (d == Directive::Mark) s.graph.markings[app.binding.at(id)] = app.id;

  app.label = dedup_label(occurrence_label(rule, app.binding), takenLabels);
  s.apps.push_back(std::move(app));
}

struct ForwardRule {
  const Rule* rule;
  OperationalRule op;
  OperationalRule pre;
  bool marksAnything = false;
};

std::vector<ForwardRule> forward_rules(const Session& s) {
  std::vector<ForwardRule> out;
  for (const auto& [name, r] : s.rules) {
    ForwardRule fr;
    fr.rule = &r;
    fr.op = derive_forward(r);
    fr.pre = precondition_rule(fr.op);
    for (const auto& [id, d] : fr.op.directives)
      if (d == Directive::Mark) fr.marksAnything = true;
    out.push_back(std::move(fr));
  }
  return out;
}

// Applies forward rules until none matches; rules are tried in name order and
// the first (smallest) match wins, so the result is deterministic. Returns
// the number of applications.
int translate_all(Session& s, ChangeCounts* created,
                  std::set<std::string>& takenLabels) {
  const std::vector<ForwardRule> fwd = forward_rules(s);
  MatchOptions mo;
  mo.side = MatchSide::Full;
  mo.enforceDirectives = true;
  mo.limit = 1;  // matches come back sorted, so this is the smallest one
  int applied = 0;
  bool progress = true;
  while (progress) {
    progress = false;
    for (const ForwardRule& fr : fwd) {
      if (!fr.marksAnything) continue;  // such a rule would never terminate
      std::vector<Match> ms = find_matches(s.mm, fr.pre, s.graph, mo);
      if (ms.empty()) continue;
      apply_forward(s, *fr.rule, fr.op, ms.front(), takenLabels, created);
      applied++;
      progress = true;
      break;  // restart from the first rule
    }
  }
  return applied;
}

std::vector<ElemId> unmarked_source(const Session& s) {
  std::vector<ElemId> out;
  for (const auto& [id, n] : s.graph.nodes)
    if (s.mm.domain_of_node_type(n.type) == Domain::Source &&
        !s.graph.markings.count(id))
      out.push_back(id);
  for (const auto& [id, e] : s.graph.edges)
    if (s.mm.domain_of_edge_type(e.type) == Domain::Source &&
        !s.graph.markings.count(id))
      out.push_back(id);
  return out;
}

// ---------------------------------------------------------------------------
// Revocation
// ---------------------------------------------------------------------------

std::vector<ElemId> created_images(const Session& s,
                                   const RuleApplication& app) {
  const Rule& r = s.rule(app.ruleName);
  std::vector<ElemId> out;
  for (Domain d : {Domain::Source, Domain::Corr, Domain::Target})
    for (const ElemId& img : app.images(r, d, Action::Create))
      out.push_back(img);
  return out;
}

// Deletes everything the doomed applications created on the corr/target
// side, frees their source marks, and removes their records. With
// `transitive`, applications whose context the doomed ones provide are pulled
// in first; without it, dependents are left to fail revalidation later.
void revoke_apps(Session& s, const std::vector<std::string>& seedIds,
                 bool transitive, SyncReport& rep,
                 std::set<std::string>& takenLabels) {
  std::set<std::string> doomed(seedIds.begin(), seedIds.end());
  if (transitive) {
    bool grew = true;
    while (grew) {
      grew = false;
      std::set<ElemId> gone;
      for (const RuleApplication& a : s.apps)
        if (doomed.count(a.id))
          for (const ElemId& img : created_images(s, a)) gone.insert(img);
      for (const RuleApplication& a : s.apps) {
        if (doomed.count(a.id)) continue;
        for (const ElemId& img : a.context_images(s.rule(a.ruleName)))
          if (gone.count(img)) {
            doomed.insert(a.id);
            grew = true;
            break;
          }
      }
    }
  }

  // Dependents go before their providers so nothing references revoked
  // structure mid-way.
  std::map<ElemId, std::string> ownerOf;  // created image -> doomed app id
  for (const RuleApplication& a : s.apps)
    if (doomed.count(a.id))
      for (const ElemId& img : created_images(s, a)) ownerOf[img] = a.id;
  std::map<std::string, std::set<std::string>> providersOf;
  std::map<std::string, int> blockers;  // provider -> dependents left
  for (const std::string& id : doomed) blockers[id] = 0;
  for (const RuleApplication& a : s.apps) {
    if (!doomed.count(a.id)) continue;
    for (const ElemId& img : a.context_images(s.rule(a.ruleName))) {
      auto it = ownerOf.find(img);
      if (it == ownerOf.end() || it->second == a.id) continue;
      if (providersOf[a.id].insert(it->second).second) blockers[it->second]++;
    }
  }
  std::set<std::string> ready;
  for (const auto& [id, n] : blockers)
    if (n == 0) ready.insert(id);
  std::vector<std::string> order;
  while (!ready.empty()) {
    const std::string id = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(id);
    for (const std::string& p : providersOf[id])
      if (--blockers[p] == 0) ready.insert(p);
  }
  for (const std::string& id : doomed)  // cycle guard; should not trigger
    if (std::find(order.begin(), order.end(), id) == order.end())
      order.push_back(id);

  for (const std::string& id : order) {
    const RuleApplication* a = s.find_app(id);
    if (!a) continue;
    const Rule& r = s.rule(a->ruleName);
    std::vector<ElemId> imgs;
    for (Domain d : {Domain::Corr, Domain::Target})
      for (const ElemId& img : a->images(r, d, Action::Create))
        imgs.push_back(img);
    for (const ElemId& img : imgs) delete_edge(s, img, rep.deleted);
    for (const ElemId& img : imgs) delete_corr(s, img, rep.deleted);
    for (const ElemId& img : imgs) delete_node(s, img, rep.deleted);
    for (const ElemId& img : a->images(r, Domain::Source, Action::Create)) {
      auto it = s.graph.markings.find(img);
      if (it != s.graph.markings.end() && it->second == id)
        s.graph.markings.erase(it);
    }
    takenLabels.erase(a->label);
    rep.revokedApplications++;
  }
  s.apps.erase(std::remove_if(s.apps.begin(), s.apps.end(),
                              [&](const RuleApplication& a) {
                                return doomed.count(a.id) > 0;
                              }),
               s.apps.end());
}

// ---------------------------------------------------------------------------
// Short-cut repair
// ---------------------------------------------------------------------------

// Images a repair round should search around: untranslated source elements
// plus the source images of every broken application.
std::set<ElemId> repair_scope(const Session& s,
                              const std::map<std::string, AppStatus>& statuses) {
  std::set<ElemId> scope;
  for (const ElemId& id : unmarked_source(s)) scope.insert(id);
  for (const RuleApplication& a : s.apps) {
    auto it = statuses.find(a.id);
    if (it == statuses.end() || it->second.intact()) continue;
    const Rule& r = s.rule(a.ruleName);
    for (const ElemId& e : r.elements(Domain::Source)) {
      auto b = a.binding.find(e);
      if (b != a.binding.end() && s.graph.has(b->second))
        scope.insert(b->second);
    }
  }
  return scope;
}

// The candidate matches bind only source elements. Corr/target context of the
// replacing rule (corr links, constructions, plans of neighbouring intact
// applications) is inferred by matching the rule's precondition around the
// known source images; the first consistent extension wins.
void extend_partial_match(const Session& s, ReplacingRule& rr) {
  OperationalRule pre = precondition_rule(derive_forward(rr.rule));
  MatchOptions mo;
  mo.side = MatchSide::Full;
  mo.enforceDirectives = false;
  std::set<ElemId> scope;
  for (const auto& [k, v] : rr.partialMatch) scope.insert(v);
  if (!scope.empty()) mo.scope = scope;
  for (const Match& m : find_matches(s.mm, pre, s.graph, mo)) {
    bool ok = true;
    for (const auto& [k, v] : rr.partialMatch) {
      auto it = m.binding.find(k);
      if (it == m.binding.end() || it->second != v) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    for (const auto& [k, v] : m.binding) rr.partialMatch.emplace(k, v);
    return;
  }
}

// Replaced source elements paired with replacing source elements over the
// same model element.
std::map<ElemId, ElemId> source_pairs(const ReplacedRule& rd,
                                      const ReplacingRule& rg) {
  std::map<ElemId, ElemId> byImage;
  for (const auto& [y, img] : rg.partialMatch)
    if (rg.rule.has(y) && rg.rule.domain_of(y) == Domain::Source)
      byImage[img] = y;
  std::map<ElemId, ElemId> out;
  for (const auto& [x, img] : rd.binding) {
    if (!rd.rule.has(x) || rd.rule.domain_of(x) != Domain::Source) continue;
    auto it = byImage.find(img);
    if (it != byImage.end()) out[x] = it->second;
  }
  return out;
}

// Reuse choices of the candidate-selection program, translated into overlap
// seed pairs (replaced element -> replacing element).
std::map<ElemId, ElemId> reuse_seeds(const ReplacedRule& rd,
                                     const ReplacingRule& rg) {
  std::map<ElemId, ElemId> modelToX;
  for (const auto& [x, img] : rd.binding) modelToX[img] = x;
  std::map<ElemId, ElemId> out;
  for (const auto& [y, model] : rg.reuse) {
    auto it = modelToX.find(model);
    if (it != modelToX.end()) out[it->second] = y;
  }
  return out;
}

// Matches the operational short-cut rule at its implied binding and applies
// it: deletes the replaced-only images, creates the replacing-only ones,
// re-establishes context assignments, and re-materializes one application per
// chosen candidate that owns its share of the preserved structure. Returns
// false when the rule has no occurrence at the implied binding.
bool apply_shortcut(Session& s, SyncReport& rep, const PrecedenceGraph& pg,
                    const std::vector<std::string>& clusterAppIds,
                    const ReplacingRule& replacing,
                    const OperationalShortCut& osc,
                    std::set<std::string>& takenLabels,
                    const std::string& debugDir,
                    const std::string& dumpPrefix) {
  const Rule& r = osc.op.rule;
  for (const ElemId& id : osc.absentNodes) {
    auto it = osc.binding.find(id);
    if (it != osc.binding.end() && s.graph.has(it->second)) {
      dump_text(debugDir, dumpPrefix + "_apply_fail.txt",
                "absent node '" + id + "' still present as '" + it->second +
                    "'\n");
      return false;
    }
  }

  OperationalRule pre = precondition_rule(osc.op);
  MatchOptions mo;
  mo.side = MatchSide::Full;
  mo.enforceDirectives = true;
  std::set<ElemId> scope;
  for (const auto& [k, v] : osc.binding)
    if (pre.rule.has(k)) scope.insert(v);
  if (!scope.empty()) mo.scope = scope;
  std::optional<Match> found;
  for (const Match& m : find_matches(s.mm, pre, s.graph, mo)) {
    bool ok = true;
    for (const auto& [k, v] : osc.binding) {
      if (!pre.rule.has(k)) continue;
      auto it = m.binding.find(k);
      if (it == m.binding.end() || it->second != v) {
        ok = false;
        break;
      }
    }
    if (ok) {
      found = m;
      break;
    }
  }
  if (!found) {
    if (!debugDir.empty()) {
      std::ostringstream os;
      os << "no occurrence at the implied binding\nbinding:\n";
      for (const auto& [k, v] : osc.binding)
        os << "  " << k << " -> " << v << (pre.rule.has(k) ? "" : " (not in pre)")
           << (s.graph.has(v) ? "" : " MISSING") << "\n";
      MatchOptions any = mo;
      any.scope.reset();
      const auto all = find_matches(s.mm, pre, s.graph, any);
      os << "matches ignoring binding: " << all.size() << "\n";
      for (const Match& m : all) {
        os << "  candidate occurrence:\n";
        for (const auto& [k, v] : m.binding) {
          auto it = osc.binding.find(k);
          os << "    " << k << " -> " << v;
          if (it != osc.binding.end() && pre.rule.has(k) && it->second != v)
            os << "   (bound to " << it->second << ")";
          os << "\n";
        }
      }
      any.enforceDirectives = false;
      os << "matches ignoring directives: "
         << find_matches(s.mm, pre, s.graph, any).size() << "\n";
      dump_text(debugDir, dumpPrefix + "_apply_fail.txt", os.str());
    }
    return false;
  }
  std::map<ElemId, ElemId> B = found->binding;

  // Replaced-only structure goes first: relations, then nodes.
  for (const auto& [id, e] : r.edges) {
    if (e.action != Action::Delete) continue;
    auto it = B.find(id);
    if (it != B.end()) delete_edge(s, it->second, rep.deleted);
  }
  for (const auto& [id, c] : r.corrs) {
    if (c.action != Action::Delete) continue;
    auto it = B.find(id);
    if (it != B.end()) delete_corr(s, it->second, rep.deleted);
  }
  for (const auto& [id, n] : r.nodes) {
    if (n.action != Action::Delete) continue;
    auto it = B.find(id);
    if (it != B.end()) delete_node(s, it->second, rep.deleted);
  }

  // Replacing-only structure: nodes, then relations over the grown binding.
  for (const auto& [id, n] : r.nodes) {
    if (n.action != Action::Create) continue;
    Node node;
    node.id = fresh_id(s, node_prefix(n.type));
    node.type = n.type;
    node.attrs = n.assignments;
    B[id] = node.id;
    s.graph.nodes.emplace(node.id, std::move(node));
    rep.created.nodes++;
  }
  for (const auto& [id, c] : r.corrs) {
    if (c.action != Action::Create) continue;
    CorrLink link;
    link.id = fresh_id(s, "co");
    link.type = c.type;
    link.src = B.at(c.src);
    link.tgt = B.at(c.tgt);
    B[id] = link.id;
    s.graph.corrs.emplace(link.id, std::move(link));
    rep.created.corrs++;
  }
  for (const auto& [id, e] : r.edges) {
    if (e.action != Action::Create) continue;
    Edge edge;
    edge.id = fresh_id(s, "e");
    edge.type = e.type;
    edge.src = B.at(e.src);
    edge.tgt = B.at(e.tgt);
    B[id] = edge.id;
    s.graph.edges.emplace(edge.id, std::move(edge));
    rep.created.edges++;
  }

  // Preserved corr/target context keeps its identity but gets the replacing
  // rule's attribute values back.
  for (const auto& [id, n] : r.nodes) {
    if (n.domain == Domain::Source || n.action != Action::Context) continue;
    auto it = B.find(id);
    if (it == B.end()) continue;
    auto nit = s.graph.nodes.find(it->second);
    if (nit == s.graph.nodes.end()) continue;
    for (const auto& [attr, v] : n.assignments) nit->second.attrs[attr] = v;
  }

  // One fresh application per chosen candidate, bound through the composed
  // element map; every replacing element's mark moves to its component's
  // application unless an application outside the cluster owns it.
  const std::set<std::string> oldIds(clusterAppIds.begin(),
                                     clusterAppIds.end());
  for (const RuleApplication& a : s.apps)
    if (oldIds.count(a.id)) takenLabels.erase(a.label);
  std::map<std::string, std::string> appIdOf;  // candidate label -> app id
  std::vector<RuleApplication> fresh;
  for (const std::string& label : replacing.chosen) {
    const PrecedenceNode* n = pg.find(label);
    if (!n) throw ModelError("unknown candidate '" + label + "'");
    RuleApplication app;
    app.id = "a" + std::to_string(++s.appCounter);
    app.ruleName = n->ruleName;
    const auto& eo = replacing.elementOf.at(label);
    const Rule& base = s.rule(n->ruleName);
    for (const ElemId& e : base.element_ids()) {
      auto cit = eo.find(e);
      if (cit == eo.end()) continue;
      auto bit = B.find(cit->second);
      if (bit != B.end()) {
        app.binding[e] = bit->second;
      } else {
        // Context folded onto an overlap id is absent from the rule; its
        // model element survives the application and is known up front.
        auto pit = replacing.partialMatch.find(cit->second);
        if (pit != replacing.partialMatch.end() && s.graph.has(pit->second))
          app.binding[e] = pit->second;
      }
    }
    app.label = dedup_label(occurrence_label(base, app.binding), takenLabels);
    appIdOf[label] = app.id;
    fresh.push_back(std::move(app));
  }
  for (const ElemId& id : r.element_ids()) {
    if (r.origin_of(id) == Origin::Replaced) continue;
    auto bit = B.find(id);
    if (bit == B.end()) continue;
    auto comp = r.component.find(id);
    if (comp == r.component.end()) continue;
    auto ait = appIdOf.find(comp->second);
    if (ait == appIdOf.end()) continue;
    auto mit = s.graph.markings.find(bit->second);
    if (mit == s.graph.markings.end())
      s.graph.markings[bit->second] = ait->second;
    else if (oldIds.count(mit->second))
      mit->second = ait->second;
  }

  // Retire the cluster. Marks still pointing at it belong to elements the
  // replacing rule did not pick up; they fall back to untranslated.
  s.apps.erase(std::remove_if(s.apps.begin(), s.apps.end(),
                              [&](const RuleApplication& a) {
                                return oldIds.count(a.id) > 0;
                              }),
               s.apps.end());
  for (auto it = s.graph.markings.begin(); it != s.graph.markings.end();) {
    if (oldIds.count(it->second))
      it = s.graph.markings.erase(it);
    else
      ++it;
  }
  for (RuleApplication& app : fresh) s.apps.push_back(std::move(app));
  rep.scApplications++;
  return true;
}

struct RepairContext {
  Session& s;
  SyncReport& rep;
  const SyncOptions& opt;
  std::set<std::string>& takenLabels;
  std::string dumpPrefix;
};

// Synthesizes and applies the replacing rule for one cluster against one
// candidate set. Throws NoReplacingRuleError when selection finds nothing;
// returns false when the synthesized rule has no occurrence.
bool repair_with(RepairContext& ctx, const PrecedenceGraph& pg,
                 const std::vector<std::string>& cluster,
                 const std::vector<std::string>& candidates) {
  Session& s = ctx.s;
  ReplacingProblem rp = encode_replacing(s.mm, s.rules, s.graph, s.apps, pg,
                                         cluster, candidates, ctx.opt.weights);
  ctx.rep.ilpProblems++;
  ctx.rep.ilpVars += rp.problem.var_count();
  ctx.rep.ilpConstraints += static_cast<long long>(rp.problem.constraints().size());
  dump_text(ctx.opt.debugDir, ctx.dumpPrefix + "_replacing.lp",
            to_lp(rp.problem));
  const auto t0 = Clock::now();
  const Assignment a = solve(rp.problem);
  ctx.rep.solveMs += ms_since(t0);
  auto dec = decode_replacing(s.mm, s.rules, s.graph, pg, rp, a);
  if (!dec)
    throw NoReplacingRuleError("no candidate selection covers the cluster");
  extend_partial_match(s, *dec);
  ReplacedRule red = build_replaced(s.mm, s.rules, s.graph, s.apps, cluster);
  ShortCut sc = build_shortcut(s.mm, red, *dec, source_pairs(red, *dec),
                               reuse_seeds(red, *dec), ctx.opt.weights);
  OperationalShortCut osc = operationalize_shortcut(sc);
  dump_text(ctx.opt.debugDir, ctx.dumpPrefix + "_replacing_rule.txt",
            canonical_text(dec->rule));
  dump_text(ctx.opt.debugDir, ctx.dumpPrefix + "_shortcut_rule.txt",
            canonical_text(sc.rule));
  dump_text(ctx.opt.debugDir, ctx.dumpPrefix + "_forward_rule.txt",
            canonical_text(osc.op));

  std::vector<std::string> appIds;
  for (const std::string& label : cluster) {
    const PrecedenceNode* n = pg.find(label);
    if (!n || n->kind != NodeKind::Existing)
      throw ModelError("cluster member '" + label + "' is not an application");
    appIds.push_back(n->appId);
  }
  return apply_shortcut(s, ctx.rep, pg, appIds, *dec, osc, ctx.takenLabels,
                        ctx.opt.debugDir, ctx.dumpPrefix);
}

// Higher-order repair of one cluster: synthesize over all replacing
// candidates at once.
bool repair_cluster(RepairContext& ctx, const PrecedenceGraph& pg,
                    const std::vector<std::string>& cluster) {
  const std::vector<std::string> cands = pg.replacing_candidates(cluster);
  if (cands.empty())
    throw NoReplacingRuleError("no replacing candidates for the cluster");
  return repair_with(ctx, pg, cluster, cands);
}

// Pairwise repair of one application: each candidate that would re-mark
// exactly this application is tried on its own, in label order.
bool repair_single(RepairContext& ctx, const PrecedenceGraph& pg,
                   const std::string& appLabel) {
  std::map<std::string, std::set<std::string>> overlapOf;
  for (const auto& [cand, app] : pg.overlaps) overlapOf[cand].insert(app);
  std::vector<std::string> eligible;
  for (const PrecedenceNode* c : pg.candidates()) {
    if (!c->blocked) continue;
    auto it = overlapOf.find(c->id);
    if (it != overlapOf.end() && it->second == std::set<std::string>{appLabel})
      eligible.push_back(c->id);
  }
  std::sort(eligible.begin(), eligible.end());
  const std::vector<std::string> cluster{appLabel};
  const std::string basePrefix = ctx.dumpPrefix;
  for (const std::string& cand : eligible) {
    ctx.dumpPrefix = basePrefix + "_" + cand;
    try {
      if (repair_with(ctx, pg, cluster, {cand})) {
        ctx.dumpPrefix = basePrefix;
        return true;
      }
    } catch (const Error& e) {
      // this candidate cannot replace the application; try the next
      dump_text(ctx.opt.debugDir, ctx.dumpPrefix + "_error.txt",
                std::string(e.name()) + ": " + e.what());
    }
  }
  ctx.dumpPrefix = basePrefix;
  return false;
}

bool all_marks_consistent(const Session& s) {
  std::set<std::string> live;
  for (const RuleApplication& a : s.apps) live.insert(a.id);
  for (const auto& [el, owner] : s.graph.markings)
    if (!live.count(owner)) return false;
  for (const RuleApplication& a : s.apps) {
    const Rule& r = s.rule(a.ruleName);
    for (Domain d : {Domain::Source, Domain::Corr, Domain::Target})
      for (const ElemId& img : a.images(r, d, Action::Create)) {
        auto it = s.graph.markings.find(img);
        if (it == s.graph.markings.end() || it->second != a.id) return false;
      }
  }
  return true;
}

bool final_consistent(const Session& s) {
  if (!validate(s.mm, s.graph).empty()) return false;
  for (const auto& [id, n] : s.graph.nodes)
    if (!s.graph.markings.count(id)) return false;
  for (const auto& [id, e] : s.graph.edges)
    if (!s.graph.markings.count(id)) return false;
  for (const auto& [id, c] : s.graph.corrs)
    if (!s.graph.markings.count(id)) return false;
  if (!all_marks_consistent(s)) return false;
  const auto statuses = revalidate(s.mm, s.rules, s.graph, s.apps);
  for (const auto& [id, st] : statuses)
    if (!st.intact()) return false;
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Entry points
// ---------------------------------------------------------------------------

Session translate_batch(const Metamodel& mm, const std::vector<Rule>& rules,
                        const TripleGraph& source) {
  mm.check();
  Session s;
  s.mm = mm;
  for (const Rule& r : rules) {
    r.check(mm);
    if (!s.rules.emplace(r.name, r).second)
      throw DuplicateIdError("duplicate rule name '" + r.name + "'");
  }
  for (const auto& [id, n] : source.nodes)
    if (mm.domain_of_node_type(n.type) != Domain::Source)
      throw ModelError("batch translation expects a source-only graph; node '" +
                       id + "' is not in the source domain");
  for (const auto& [id, e] : source.edges)
    if (mm.domain_of_edge_type(e.type) != Domain::Source)
      throw ModelError("batch translation expects a source-only graph; edge '" +
                       id + "' is not in the source domain");
  if (!source.corrs.empty())
    throw ModelError("batch translation expects a source-only graph without "
                     "correspondence links");
  if (!source.markings.empty())
    throw ModelError("batch translation expects an unmarked graph");
  const auto problems = validate(mm, source);
  if (!problems.empty()) throw ModelError(problems.front());

  s.graph = source;
  note_ids(s);
  std::set<std::string> taken;
  translate_all(s, nullptr, taken);

  std::vector<ElemId> left = unmarked_source(s);
  if (!left.empty()) {
    std::sort(left.begin(), left.end());
    std::ostringstream os;
    os << left.size() << " source element(s) left untranslated:";
    for (std::size_t i = 0; i < left.size() && i < 5; ++i)
      os << " '" << left[i] << "'";
    if (left.size() > 5) os << " ...";
    throw UntranslatableRemainderError(os.str());
  }
  return s;
}

Session adopt_triple(const Metamodel& mm, const std::vector<Rule>& rules,
                     const TripleGraph& triple) {
  mm.check();
  for (const Rule& r : rules) r.check(mm);
  const auto problems = validate(mm, triple);
  if (!problems.empty()) throw ModelError(problems.front());

  TripleGraph g = triple;
  g.markings.clear();
  auto dec = consistency_check(mm, rules, g);
  if (!dec)
    throw ModelError("the triple admits no forward decomposition");

  Session s;
  s.mm = mm;
  for (const Rule& r : rules)
    if (!s.rules.emplace(r.name, r).second)
      throw DuplicateIdError("duplicate rule name '" + r.name + "'");
  s.graph = std::move(g);
  note_ids(s);
  s.apps = std::move(*dec);
  s.appCounter = static_cast<long long>(s.apps.size());
  for (const RuleApplication& a : s.apps) {
    const Rule& r = s.rule(a.ruleName);
    for (const ElemId& e : r.element_ids()) {
      if (r.action_of(e) != Action::Create) continue;
      auto bit = a.binding.find(e);
      if (bit != a.binding.end()) s.graph.markings[bit->second] = a.id;
    }
  }
  return s;
}

std::optional<std::vector<RuleApplication>> consistency_check(
    const Metamodel& mm, const std::vector<Rule>& rules,
    const TripleGraph& g) {
  if (!validate(mm, g).empty()) return std::nullopt;

  struct Step {
    const Rule* rule;
    Match m;
    std::vector<ElemId> marks;    // source images the step translates
    std::vector<ElemId> needs;    // source images that must be translated
    std::vector<ElemId> creates;  // corr/target images the step accounts for
    std::vector<ElemId> ctxTgt;   // corr/target images accounted for earlier
  };

  std::vector<Rule> sorted = rules;
  std::sort(sorted.begin(), sorted.end(),
            [](const Rule& a, const Rule& b) { return a.name < b.name; });
  std::vector<Step> steps;
  for (const Rule& r : sorted) {
    const OperationalRule op = derive_forward(r);
    MatchOptions mo;
    mo.side = MatchSide::Full;
    mo.enforceDirectives = false;
    for (const Match& m : find_matches(mm, op, g, mo)) {
      Step st;
      st.rule = &r;
      st.m = m;
      bool ok = true;
      for (const ElemId& e : r.element_ids()) {
        auto bit = m.binding.find(e);
        if (bit == m.binding.end()) {
          ok = false;
          break;
        }
        const bool src = r.domain_of(e) == Domain::Source;
        const bool create = r.action_of(e) == Action::Create;
        (src ? (create ? st.marks : st.needs)
             : (create ? st.creates : st.ctxTgt))
            .push_back(bit->second);
      }
      // Created corr/target nodes must carry the assigned attribute values.
      for (const auto& [id, n] : r.nodes) {
        if (!ok) break;
        if (n.domain == Domain::Source || n.action != Action::Create) continue;
        for (const auto& [attr, want] : n.assignments) {
          const auto have = g.attribute(m.binding.at(id), attr);
          if (!have || !attr_equal(*have, want)) {
            ok = false;
            break;
          }
        }
      }
      if (ok) steps.push_back(std::move(st));
    }
  }

  std::set<ElemId> srcAll, tgtAll;
  for (const auto& [id, n] : g.nodes)
    (mm.domain_of_node_type(n.type) == Domain::Source ? srcAll : tgtAll)
        .insert(id);
  for (const auto& [id, e] : g.edges)
    (mm.domain_of_edge_type(e.type) == Domain::Source ? srcAll : tgtAll)
        .insert(id);
  for (const auto& [id, c] : g.corrs) tgtAll.insert(id);

  std::set<ElemId> src, tgt;
  std::vector<int> chosenSteps;
  std::vector<bool> used(steps.size(), false);
  long long budget = 5000000;
  std::function<bool()> dfs = [&]() -> bool {
    if (src.size() == srcAll.size() && tgt.size() == tgtAll.size())
      return true;
    if (--budget <= 0)
      throw TooLargeError("the decomposition search exceeded its budget");
    for (std::size_t i = 0; i < steps.size(); ++i) {
      if (used[i]) continue;
      const Step& st = steps[i];
      bool ok = true;
      for (const ElemId& x : st.marks)
        if (src.count(x)) { ok = false; break; }
      if (ok)
        for (const ElemId& x : st.needs)
          if (!src.count(x)) { ok = false; break; }
      if (ok)
        for (const ElemId& x : st.creates)
          if (tgt.count(x)) { ok = false; break; }
      if (ok)
        for (const ElemId& x : st.ctxTgt)
          if (!tgt.count(x)) { ok = false; break; }
      if (!ok) continue;
      used[i] = true;
      for (const ElemId& x : st.marks) src.insert(x);
      for (const ElemId& x : st.creates) tgt.insert(x);
      chosenSteps.push_back(static_cast<int>(i));
      if (dfs()) return true;
      chosenSteps.pop_back();
      for (const ElemId& x : st.marks) src.erase(x);
      for (const ElemId& x : st.creates) tgt.erase(x);
      used[i] = false;
    }
    return false;
  };
  if (!dfs()) return std::nullopt;

  std::vector<RuleApplication> apps;
  std::set<std::string> taken;
  long long counter = 0;
  for (int i : chosenSteps) {
    const Step& st = steps[static_cast<std::size_t>(i)];
    RuleApplication app;
    app.id = "a" + std::to_string(++counter);
    app.ruleName = st.rule->name;
    app.binding = st.m.binding;
    app.label = dedup_label(occurrence_label(*st.rule, app.binding), taken);
    apps.push_back(std::move(app));
  }
  return apps;
}

SyncReport synchronize(Session& s, const Delta& delta, Strategy strategy,
                       const SyncOptions& opt) {
  const auto wall0 = Clock::now();
  SyncReport rep;
  rep.strategy = strategy;

  s.graph = apply_delta(s.mm, s.graph, delta);
  note_ids(s);

  // Everything on the corr/target side that survives the user's edit; the
  // `preserved` metric counts how much of it the engine keeps.
  std::set<ElemId> baseline;
  for (const auto& [id, n] : s.graph.nodes)
    if (s.mm.domain_of_node_type(n.type) != Domain::Source) baseline.insert(id);
  for (const auto& [id, e] : s.graph.edges)
    if (s.mm.domain_of_edge_type(e.type) != Domain::Source) baseline.insert(id);
  for (const auto& [id, c] : s.graph.corrs) baseline.insert(id);

  std::set<std::string> takenLabels;
  for (const RuleApplication& a : s.apps) takenLabels.insert(a.label);

  const long long modelSize =
      static_cast<long long>(s.graph.nodes.size() + s.graph.edges.size() +
                             s.graph.corrs.size());
  const int limit = opt.maxRounds > 0
                        ? opt.maxRounds
                        : static_cast<int>(
                              2 * static_cast<long long>(s.apps.size()) +
                              modelSize + 16);

  for (int round = 0;; ++round) {
    if (round > limit)
      throw ModelError("synchronization exceeded its round budget");
    // The pairwise strategy translates new elements up front: its repair
    // rules need freshly translated neighbours as marked context. The
    // higher-order strategy instead folds those translations into the
    // synthesized rule, where their creations can reuse displaced structure,
    // so it must not translate eagerly.
    if (strategy == Strategy::SC &&
        translate_all(s, &rep.created, takenLabels) > 0)
      continue;
    const auto statuses = revalidate(s.mm, s.rules, s.graph, s.apps);
    std::vector<const RuleApplication*> broken;
    for (const RuleApplication& a : s.apps) {
      auto it = statuses.find(a.id);
      if (it != statuses.end() && !it->second.intact()) broken.push_back(&a);
    }
    if (broken.empty()) {
      if (translate_all(s, &rep.created, takenLabels) == 0) break;
      continue;
    }
    std::sort(broken.begin(), broken.end(),
              [](const RuleApplication* a, const RuleApplication* b) {
                return a->label < b->label;
              });

    if (strategy == Strategy::Legacy) {
      std::vector<std::string> ids;
      for (const RuleApplication* a : broken) ids.push_back(a->id);
      revoke_apps(s, ids, /*transitive=*/true, rep, takenLabels);
      continue;
    }

    const PrecedenceGraph pg = build_precedence(
        s.mm, s.rules, s.graph, s.apps, statuses, repair_scope(s, statuses));
    std::ostringstream prefix;
    prefix << to_string(strategy) << "_round" << round;
    dump_text(opt.debugDir, prefix.str() + "_precedence.dot", pg.to_dot());
    dump_text(opt.debugDir, prefix.str() + "_state.json", model_to_json(s.graph));
    if (!opt.debugDir.empty()) {
      std::ostringstream os;
      for (const RuleApplication& a : s.apps) {
        auto it = statuses.find(a.id);
        os << a.id << " " << a.label << " rule=" << a.ruleName;
        if (it != statuses.end()) {
          os << " intact=" << it->second.intact()
             << " src=" << flags_to_string(it->second.source)
             << " tgt=" << flags_to_string(it->second.target);
        }
        os << "\n  binding:";
        for (const auto& [k, v] : a.binding) os << " " << k << "=" << v;
        os << "\n";
      }
      dump_text(opt.debugDir, prefix.str() + "_apps.txt", os.str());
    }
    RepairContext ctx{s, rep, opt, takenLabels, prefix.str()};

    if (strategy == Strategy::SC) {
      const RuleApplication* first = broken.front();
      if (!repair_single(ctx, pg, first->label)) {
        revoke_apps(s, {first->id}, /*transitive=*/false, rep, takenLabels);
        rep.legacyFallbacks++;
      }
      continue;
    }

    // Higher-order: one cluster per round, smallest first.
    const auto clusters = pg.clusters();
    if (clusters.empty())
      throw ModelError("broken applications but no repair cluster");
    const std::vector<std::string>& cluster = clusters.front();
    bool repaired = false;
    try {
      repaired = repair_cluster(ctx, pg, cluster);
    } catch (const Error& e) {
      dump_text(opt.debugDir, prefix.str() + "_error.txt",
                std::string(e.name()) + ": " + e.what());
      repaired = false;
    }
    if (!repaired) {
      std::vector<std::string> ids;
      for (const std::string& label : cluster) {
        const PrecedenceNode* n = pg.find(label);
        if (n && n->kind == NodeKind::Existing) ids.push_back(n->appId);
      }
      revoke_apps(s, ids, /*transitive=*/false, rep, takenLabels);
      rep.legacyFallbacks++;
    }
  }

  for (const ElemId& id : baseline)
    if (s.graph.has(id)) rep.preserved++;
  rep.consistent = final_consistent(s);
  rep.wallMs = ms_since(wall0);
  return rep;
}

}  // namespace tggsync
