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

#include "tggsync/precedence.hpp"

#include <algorithm>
#include <cctype>
#include <queue>
#include <sstream>

#include "tggsync/error.hpp"

namespace tggsync {

std::string PrecedenceNode::annotation() const {
  if (kind == NodeKind::Candidate) return blocked ? "*,u" : "+,u";
  std::string out;
  auto add = [&](StatusFlag f, char c) {
    if (status.source.count(f) || status.target.count(f)) {
      if (!out.empty()) out += ',';
      out += c;
    }
  };
  add(StatusFlag::AllDeleted, '-');
  add(StatusFlag::PartiallyDeleted, '/');
  add(StatusFlag::AttrBroken, '#');
  add(StatusFlag::ContextBroken, '!');
  return out;
}

const PrecedenceNode* PrecedenceGraph::find(const std::string& id) const {
  for (const PrecedenceNode& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

std::vector<const PrecedenceNode*> PrecedenceGraph::candidates() const {
  std::vector<const PrecedenceNode*> out;
  for (const PrecedenceNode& n : nodes)
    if (n.kind == NodeKind::Candidate) out.push_back(&n);
  return out;
}

std::vector<const PrecedenceNode*> PrecedenceGraph::existing() const {
  std::vector<const PrecedenceNode*> out;
  for (const PrecedenceNode& n : nodes)
    if (n.kind == NodeKind::Existing) out.push_back(&n);
  return out;
}

std::vector<std::vector<std::string>> PrecedenceGraph::clusters() const {
  std::set<std::string> broken;
  for (const PrecedenceNode& n : nodes)
    if (n.kind == NodeKind::Existing && !n.status.intact()) broken.insert(n.id);
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& [a, b] : deps)
    if (broken.count(a) && broken.count(b)) {
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
  std::vector<std::vector<std::string>> out;
  std::set<std::string> seen;
  for (const std::string& start : broken) {
    if (seen.count(start)) continue;
    std::vector<std::string> cluster;
    std::queue<std::string> q;
    q.push(start);
    seen.insert(start);
    while (!q.empty()) {
      std::string u = q.front();
      q.pop();
      cluster.push_back(u);
      for (const std::string& v : adj[u])
        if (!seen.count(v)) {
          seen.insert(v);
          q.push(v);
        }
    }
    std::sort(cluster.begin(), cluster.end());
    out.push_back(std::move(cluster));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> PrecedenceGraph::replacing_candidates(
    const std::vector<std::string>& cluster) const {
  const std::set<std::string> inCluster(cluster.begin(), cluster.end());

  std::map<std::string, std::vector<std::string>> overlapsOf;
  for (const auto& [c, e] : overlaps) overlapsOf[c].push_back(e);

  auto eligible = [&](const PrecedenceNode& n) {
    if (n.kind != NodeKind::Candidate) return false;
    for (const std::string& tgt : overlapsOf[n.id])
      if (!inCluster.count(tgt)) return false;
    return true;
  };

  // Candidate adjacency: dependency edges between candidates plus shared
  // bound model elements.
  std::map<std::string, std::set<std::string>> adj;
  std::map<ElemId, std::vector<std::string>> byElem;
  for (const PrecedenceNode& n : nodes) {
    if (n.kind != NodeKind::Candidate) continue;
    for (const auto& [ruleElem, img] : n.match.binding)
      byElem[img].push_back(n.id);
  }
  for (const auto& [img, cs] : byElem)
    for (std::size_t i = 0; i < cs.size(); ++i)
      for (std::size_t j = i + 1; j < cs.size(); ++j) {
        adj[cs[i]].insert(cs[j]);
        adj[cs[j]].insert(cs[i]);
      }
  for (const auto& [a, b] : deps) {
    const PrecedenceNode* pa = find(a);
    const PrecedenceNode* pb = find(b);
    if (pa && pb && pa->kind == NodeKind::Candidate &&
        pb->kind == NodeKind::Candidate) {
      adj[a].insert(b);
      adj[b].insert(a);
    }
  }

  std::set<std::string> chosen;
  std::queue<std::string> q;
  for (const PrecedenceNode& n : nodes) {
    if (n.kind != NodeKind::Candidate || !n.blocked || !eligible(n)) continue;
    bool touches = false;
    for (const std::string& tgt : overlapsOf[n.id])
      if (inCluster.count(tgt)) touches = true;
    if (touches) {
      chosen.insert(n.id);
      q.push(n.id);
    }
  }
  while (!q.empty()) {
    std::string u = q.front();
    q.pop();
    for (const std::string& v : adj[u]) {
      if (chosen.count(v)) continue;
      const PrecedenceNode* pn = find(v);
      if (!pn || !eligible(*pn)) continue;
      chosen.insert(v);
      q.push(v);
    }
  }
  return std::vector<std::string>(chosen.begin(), chosen.end());
}

std::string PrecedenceGraph::to_dot() const {
  std::ostringstream os;
  os << "digraph precedence {\n  rankdir=BT;\n";
  for (const PrecedenceNode& n : nodes) {
    os << "  \"" << n.id << "\" [label=\"" << n.id;
    const std::string ann = n.annotation();
    if (!ann.empty()) os << "\\n(" << ann << ")";
    os << "\"";
    if (n.kind == NodeKind::Existing) {
      os << ", shape=box";
      if (!n.status.intact()) os << ", color=red";
    } else {
      os << ", shape=ellipse, style=dashed";
    }
    os << "];\n";
  }
  for (const auto& [a, b] : deps)
    os << "  \"" << a << "\" -> \"" << b << "\";\n";
  for (const auto& [a, b] : overlaps)
    os << "  \"" << a << "\" -> \"" << b
       << "\" [style=dotted, arrowhead=odot];\n";
  os << "}\n";
  return os.str();
}

namespace {

std::string house_number(const ElemId& id) {
  std::size_t i = id.size();
  while (i > 0 && std::isdigit(static_cast<unsigned char>(id[i - 1]))) --i;
  if (i == id.size()) return id;
  return id.substr(i);
}

std::string candidate_label(const Rule& r, const Match& m) {
  return occurrence_label(r, m.binding);
}

std::set<ElemId> grow_scope(const TripleGraph& g, const std::set<ElemId>& scope,
                            int radius) {
  std::set<ElemId> cur = scope;
  for (int step = 0; step < radius; ++step) {
    std::set<ElemId> next = cur;
    for (const ElemId& id : cur) {
      if (const Edge* e = g.find_edge(id)) {
        next.insert(e->src);
        next.insert(e->tgt);
      } else if (const CorrLink* c = g.find_corr(id)) {
        next.insert(c->src);
        next.insert(c->tgt);
      } else if (g.find_node(id)) {
        for (const ElemId& eid : g.incident_edges(id)) {
          next.insert(eid);
          const Edge* e = g.find_edge(eid);
          next.insert(e->src);
          next.insert(e->tgt);
        }
        for (const ElemId& cid : g.incident_corrs(id)) {
          next.insert(cid);
          const CorrLink* c = g.find_corr(cid);
          next.insert(c->src);
          next.insert(c->tgt);
        }
      }
    }
    if (next.size() == cur.size()) break;
    cur = std::move(next);
  }
  return cur;
}

}  // namespace

std::string occurrence_label(const Rule& r,
                             const std::map<ElemId, ElemId>& binding) {
  std::vector<std::string> nums;
  for (const ElemId& ruleElem : r.elements(Domain::Source, Action::Create)) {
    if (!r.nodes.count(ruleElem)) continue;
    auto it = binding.find(ruleElem);
    if (it != binding.end()) nums.push_back(house_number(it->second));
  }
  const bool numeric = std::all_of(nums.begin(), nums.end(), [](const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
      return std::isdigit(static_cast<unsigned char>(c));
    });
  });
  std::sort(nums.begin(), nums.end(), [&](const std::string& a, const std::string& b) {
    if (numeric) return std::stoll(a) < std::stoll(b);
    return a < b;
  });
  std::string label = r.tag.empty() ? r.name : r.tag;
  for (std::size_t i = 0; i < nums.size(); ++i)
    label += (i ? "," : "") + nums[i];
  return label;
}

PrecedenceGraph build_precedence(
    const Metamodel& mm, const std::map<std::string, Rule>& rules,
    const TripleGraph& g, const std::vector<RuleApplication>& apps,
    const std::map<std::string, AppStatus>& statuses,
    const std::set<ElemId>& scope) {
  PrecedenceGraph pg;

  std::map<std::string, std::string> labelOfApp;  // appId -> node id
  std::set<std::string> takenLabels;
  for (const RuleApplication& app : apps) {
    PrecedenceNode n;
    n.id = app.label.empty() ? app.id : app.label;
    while (takenLabels.count(n.id)) n.id += "'";
    takenLabels.insert(n.id);
    n.kind = NodeKind::Existing;
    n.ruleName = app.ruleName;
    n.appId = app.id;
    auto sit = statuses.find(app.id);
    if (sit != statuses.end()) n.status = sit->second;
    labelOfApp[app.id] = n.id;
    pg.nodes.push_back(std::move(n));
  }

  // Source bindings of intact applications, used to drop exact re-matches. A
  // broken application does not suppress its own re-match: rebinding the same
  // source elements with fresh context is a legitimate repair.
  std::set<std::string> existingSourceKeys;
  for (const RuleApplication& app : apps) {
    auto sit = statuses.find(app.id);
    if (sit != statuses.end() && !sit->second.intact()) continue;
    auto rit = rules.find(app.ruleName);
    if (rit == rules.end()) continue;
    std::ostringstream key;
    key << app.ruleName << "|";
    for (const ElemId& e : rit->second.elements(Domain::Source)) {
      auto bit = app.binding.find(e);
      key << e << "=" << (bit == app.binding.end() ? "?" : bit->second) << ";";
    }
    existingSourceKeys.insert(key.str());
  }

  int maxDiameter = 0;
  for (const auto& [name, r] : rules)
    maxDiameter = std::max(maxDiameter, rule_diameter(r));
  std::set<ElemId> grown = grow_scope(g, scope, maxDiameter);

  struct Cand {
    std::string ruleName;
    Match match;
    std::vector<ElemId> marks;
  };
  std::vector<Cand> cands;
  for (const auto& [name, r] : rules) {
    OperationalRule fwd = derive_forward(r);
    MatchOptions opt;
    opt.side = MatchSide::SourceOnly;
    opt.enforceDirectives = false;
    if (!scope.empty()) opt.scope = grown;
    for (Match& m : find_matches(mm, fwd, g, opt)) {
      std::ostringstream key;
      key << name << "|";
      for (const ElemId& e : r.elements(Domain::Source)) {
        auto bit = m.binding.find(e);
        key << e << "=" << (bit == m.binding.end() ? "?" : bit->second) << ";";
      }
      if (existingSourceKeys.count(key.str())) continue;
      Cand c;
      c.ruleName = name;
      std::swap(c.match, m);
      for (const ElemId& ruleElem : r.elements(Domain::Source, Action::Create)) {
        auto bit = c.match.binding.find(ruleElem);
        if (bit != c.match.binding.end()) c.marks.push_back(bit->second);
      }
      bool allIntact = !c.marks.empty();
      for (const ElemId& mark : c.marks) {
        const std::string owner = g.marking_of(mark);
        if (owner.empty()) {
          allIntact = false;
          break;
        }
        auto sit = statuses.find(owner);
        if (sit == statuses.end() || !sit->second.intact()) {
          allIntact = false;
          break;
        }
      }
      if (allIntact) continue;
      cands.push_back(std::move(c));
    }
  }

  std::map<ElemId, std::vector<std::string>> marker;  // model elem -> cand ids
  for (const Cand& c : cands) {
    PrecedenceNode n;
    n.kind = NodeKind::Candidate;
    n.ruleName = c.ruleName;
    n.match = c.match;
    n.marks = c.marks;
    n.id = candidate_label(rules.at(c.ruleName), c.match);
    while (takenLabels.count(n.id)) n.id += "'";
    takenLabels.insert(n.id);
    for (const ElemId& mark : c.marks) {
      if (!g.marking_of(mark).empty()) n.blocked = true;
      marker[mark].push_back(n.id);
    }
    pg.nodes.push_back(std::move(n));
  }

  std::set<std::pair<std::string, std::string>> deps, overlaps;
  for (const PrecedenceNode& n : pg.nodes) {
    if (n.kind == NodeKind::Existing) {
      auto rit = rules.find(n.ruleName);
      if (rit == rules.end()) continue;
      const RuleApplication* app = nullptr;
      for (const RuleApplication& a : apps)
        if (a.id == n.appId) app = &a;
      if (!app) continue;
      for (const ElemId& ruleElem : rit->second.element_ids()) {
        if (rit->second.action_of(ruleElem) != Action::Context) continue;
        auto bit = app->binding.find(ruleElem);
        if (bit == app->binding.end()) continue;
        const std::string owner = g.marking_of(bit->second);
        if (owner.empty() || owner == n.appId) continue;
        auto lit = labelOfApp.find(owner);
        if (lit != labelOfApp.end() && lit->second != n.id)
          deps.insert({n.id, lit->second});
      }
    } else {
      const Rule& r = rules.at(n.ruleName);
      for (const ElemId& ruleElem : r.elements(Domain::Source, Action::Context)) {
        auto bit = n.match.binding.find(ruleElem);
        if (bit == n.match.binding.end()) continue;
        const std::string owner = g.marking_of(bit->second);
        if (!owner.empty()) {
          auto lit = labelOfApp.find(owner);
          if (lit != labelOfApp.end()) deps.insert({n.id, lit->second});
        } else {
          for (const std::string& provider : marker[bit->second])
            if (provider != n.id) deps.insert({n.id, provider});
        }
      }
      for (const ElemId& mark : n.marks) {
        const std::string owner = g.marking_of(mark);
        if (owner.empty()) continue;
        auto lit = labelOfApp.find(owner);
        if (lit != labelOfApp.end()) overlaps.insert({n.id, lit->second});
      }
    }
  }
  pg.deps.assign(deps.begin(), deps.end());
  pg.overlaps.assign(overlaps.begin(), overlaps.end());
  std::sort(pg.nodes.begin(), pg.nodes.end(),
            [](const PrecedenceNode& a, const PrecedenceNode& b) {
              return a.id < b.id;
            });
  return pg;
}

}  // namespace tggsync
