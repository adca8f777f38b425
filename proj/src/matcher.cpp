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

#include "tggsync/matcher.hpp"

#include <algorithm>
#include <queue>

#include "tggsync/error.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tggsync {

bool Match::operator<(const Match& o) const {
  if (ruleName != o.ruleName) return ruleName < o.ruleName;
  if (side != o.side) return side < o.side;
  return binding < o.binding;
}

bool Match::operator==(const Match& o) const {
  return ruleName == o.ruleName && side == o.side && binding == o.binding;
}

std::vector<ElemId> RuleApplication::images(const Rule& r, Domain d,
                                            Action a) const {
  std::vector<ElemId> out;
  for (const ElemId& id : r.elements(d, a)) {
    auto it = binding.find(id);
    if (it != binding.end()) out.push_back(it->second);
  }
  return out;
}

std::vector<ElemId> RuleApplication::context_images(const Rule& r) const {
  std::vector<ElemId> out;
  for (Domain d : {Domain::Source, Domain::Corr, Domain::Target})
    for (const ElemId& id : r.elements(d, Action::Context)) {
      auto it = binding.find(id);
      if (it != binding.end()) out.push_back(it->second);
    }
  return out;
}

namespace {

struct PatternRel {
  enum Kind { EdgeRel, CorrRel };
  Kind kind = EdgeRel;
  ElemId id;
  std::string type;
  ElemId src;
  ElemId tgt;
  bool nac = false;
  Action action = Action::Context;
};

struct Pattern {
  std::vector<const RuleNode*> order;
  std::map<ElemId, std::size_t> pos;
  // readyAt[i]: relations whose endpoints are all placed once order[i] binds.
  std::vector<std::vector<PatternRel>> readyAt;
  std::map<ElemId, std::vector<std::pair<std::string, AttrValue>>> conds;
};

Pattern build_pattern(const OperationalRule& op, MatchSide side) {
  const Rule& r = op.rule;
  std::set<ElemId> selected;
  for (const auto& [id, n] : r.nodes)
    if (side == MatchSide::Full || n.domain == op.inputDomain)
      selected.insert(id);

  std::vector<PatternRel> rels;
  for (const auto& [id, e] : r.edges) {
    if (!selected.count(e.src) || !selected.count(e.tgt)) continue;
    rels.push_back({PatternRel::EdgeRel, id, e.type, e.src, e.tgt, e.nac,
                    e.action});
  }
  if (side == MatchSide::Full)
    for (const auto& [id, c] : r.corrs)
      rels.push_back(
          {PatternRel::CorrRel, id, c.type, c.src, c.tgt, false, c.action});

  // Order nodes: highest-degree anchor, then breadth-first over relations.
  std::map<ElemId, int> degree;
  std::map<ElemId, std::vector<ElemId>> adj;
  for (const ElemId& id : selected) degree[id] = 0;
  for (const PatternRel& rel : rels) {
    degree[rel.src]++;
    degree[rel.tgt]++;
    adj[rel.src].push_back(rel.tgt);
    adj[rel.tgt].push_back(rel.src);
  }
  Pattern p;
  std::set<ElemId> placed;
  while (placed.size() < selected.size()) {
    ElemId anchor;
    int bestDeg = -1;
    for (const ElemId& id : selected) {
      if (placed.count(id)) continue;
      if (degree[id] > bestDeg || (degree[id] == bestDeg && id < anchor)) {
        anchor = id;
        bestDeg = degree[id];
      }
    }
    std::queue<ElemId> q;
    q.push(anchor);
    placed.insert(anchor);
    while (!q.empty()) {
      ElemId u = q.front();
      q.pop();
      p.pos[u] = p.order.size();
      p.order.push_back(&r.nodes.at(u));
      std::vector<ElemId> next = adj[u];
      std::sort(next.begin(), next.end());
      for (const ElemId& v : next)
        if (!placed.count(v)) {
          placed.insert(v);
          q.push(v);
        }
    }
  }
  p.readyAt.resize(p.order.size());
  for (const PatternRel& rel : rels) {
    std::size_t at = std::max(p.pos.at(rel.src), p.pos.at(rel.tgt));
    p.readyAt[at].push_back(rel);
  }
  for (auto& v : p.readyAt)
    std::sort(v.begin(), v.end(),
              [](const PatternRel& a, const PatternRel& b) { return a.id < b.id; });
  for (const AttrCondition& c : r.conditions)
    if (selected.count(c.elem)) p.conds[c.elem].push_back({c.attr, c.value});
  return p;
}

class Engine {
 public:
  Engine(const Metamodel& mm, const OperationalRule& op, const TripleGraph& g,
         const MatchOptions& opt, const Pattern& p)
      : mm_(mm), op_(op), g_(g), opt_(opt), p_(p) {
    for (const auto& [id, e] : g.edges) {
      out_[e.src].push_back(&e);
      in_[e.tgt].push_back(&e);
    }
    for (const auto& [id, c] : g.corrs) {
      corrOut_[c.src].push_back(&c);
      corrIn_[c.tgt].push_back(&c);
    }
    for (const auto& [id, n] : g.nodes) byType_[n.type].push_back(&n);
  }

  std::vector<const Node*> anchor_candidates() {
    if (p_.order.empty()) return {};
    return type_candidates(p_.order[0]->type);
  }

  // Explores the full tree under a fixed anchor image (or all images when
  // `fixed` is null).
  void run(const Node* fixed) {
    if (p_.order.empty()) return;
    if (fixed)
      try_node(0, *fixed);
    else
      dfs(0);
  }

  std::vector<Match> matches;

 private:
  std::vector<const Node*> type_candidates(const std::string& type) {
    std::vector<const Node*> out;
    for (const auto& [t, nodes] : byType_)
      if (mm_.is_subtype(t, type))
        out.insert(out.end(), nodes.begin(), nodes.end());
    std::sort(out.begin(), out.end(),
              [](const Node* a, const Node* b) { return a->id < b->id; });
    return out;
  }

  bool directive_ok(const ElemId& patId, const ElemId& modelId) const {
    if (!opt_.enforceDirectives) return true;
    auto it = op_.directives.find(patId);
    if (it == op_.directives.end()) return true;
    const bool marked = !g_.marking_of(modelId).empty();
    if (it->second == Directive::Mark) return !marked;
    if (it->second == Directive::RequireMarked) return marked;
    return true;
  }

  bool conditions_ok(const ElemId& patId, const Node& m) const {
    auto it = p_.conds.find(patId);
    if (it == p_.conds.end()) return true;
    for (const auto& [attr, want] : it->second) {
      auto have = m.attrs.find(attr);
      if (have == m.attrs.end() || !attr_equal(have->second, want)) return false;
    }
    return true;
  }

  void try_node(std::size_t idx, const Node& m) {
    const RuleNode& u = *p_.order[idx];
    if (used_.count(m.id)) return;
    if (!mm_.is_subtype(m.type, u.type)) return;
    if (!directive_ok(u.id, m.id)) return;
    if (!conditions_ok(u.id, m)) return;
    binding_[u.id] = m.id;
    used_.insert(m.id);
    relations(idx, 0);
    used_.erase(m.id);
    binding_.erase(u.id);
  }

  void dfs(std::size_t idx) {
    if (idx == p_.order.size()) {
      emit();
      return;
    }
    const RuleNode& u = *p_.order[idx];
    // Prefer candidates adjacent to an already-bound neighbour.
    const PatternRel* driver = nullptr;
    bool fromSrc = false;
    for (const PatternRel& rel : p_.readyAt[idx]) {
      if (rel.nac) continue;
      const ElemId& other = (rel.src == u.id) ? rel.tgt : rel.src;
      if (other == u.id) continue;
      if (binding_.count(other)) {
        driver = &rel;
        fromSrc = (rel.tgt == u.id);
        break;
      }
    }
    if (driver) {
      const ElemId img = binding_.at(fromSrc ? driver->src : driver->tgt);
      if (driver->kind == PatternRel::EdgeRel) {
        const auto& inc = fromSrc ? out_ : in_;
        auto it = inc.find(img);
        if (it == inc.end()) return;
        auto edges = it->second;
        std::sort(edges.begin(), edges.end(),
                  [](const Edge* a, const Edge* b) { return a->id < b->id; });
        std::set<ElemId> seen;
        for (const Edge* e : edges) {
          if (e->type != driver->type) continue;
          const ElemId& cand = fromSrc ? e->tgt : e->src;
          if (!seen.insert(cand).second) continue;
          try_node(idx, g_.nodes.at(cand));
        }
      } else {
        const auto& inc = fromSrc ? corrOut_ : corrIn_;
        auto it = inc.find(img);
        if (it == inc.end()) return;
        auto corrs = it->second;
        std::sort(corrs.begin(), corrs.end(), [](const CorrLink* a,
                                                 const CorrLink* b) {
          return a->id < b->id;
        });
        std::set<ElemId> seen;
        for (const CorrLink* c : corrs) {
          if (c->type != driver->type) continue;
          const ElemId& cand = fromSrc ? c->tgt : c->src;
          if (!seen.insert(cand).second) continue;
          try_node(idx, g_.nodes.at(cand));
        }
      }
    } else {
      for (const Node* m : type_candidates(u.type)) try_node(idx, *m);
    }
    if (u.relaxed) {
      absent_.insert(u.id);
      relations(idx, 0);
      absent_.erase(u.id);
    }
  }

  // Validates/binds the relations that became ready at order index `idx`.
  void relations(std::size_t idx, std::size_t k) {
    if (k == p_.readyAt[idx].size()) {
      dfs(idx + 1);
      return;
    }
    const PatternRel& rel = p_.readyAt[idx][k];
    const bool srcAbsent = absent_.count(rel.src) > 0;
    const bool tgtAbsent = absent_.count(rel.tgt) > 0;
    if (rel.nac) {
      if (!srcAbsent && !tgtAbsent) {
        const ElemId& s = binding_.at(rel.src);
        const ElemId& t = binding_.at(rel.tgt);
        auto it = out_.find(s);
        if (it != out_.end())
          for (const Edge* e : it->second)
            if (e->type == rel.type && e->tgt == t) return;
      }
      relations(idx, k + 1);
      return;
    }
    if (srcAbsent || tgtAbsent) {
      if (rel.action == Action::Create) return;
      relations(idx, k + 1);
      return;
    }
    const ElemId& s = binding_.at(rel.src);
    const ElemId& t = binding_.at(rel.tgt);
    if (rel.kind == PatternRel::EdgeRel) {
      auto it = out_.find(s);
      if (it == out_.end()) return;
      auto edges = it->second;
      std::sort(edges.begin(), edges.end(),
                [](const Edge* a, const Edge* b) { return a->id < b->id; });
      for (const Edge* e : edges) {
        if (e->type != rel.type || e->tgt != t) continue;
        if (used_.count(e->id)) continue;
        if (!directive_ok(rel.id, e->id)) continue;
        binding_[rel.id] = e->id;
        used_.insert(e->id);
        relations(idx, k + 1);
        used_.erase(e->id);
        binding_.erase(rel.id);
      }
    } else {
      auto it = corrOut_.find(s);
      if (it == corrOut_.end()) return;
      auto corrs = it->second;
      std::sort(corrs.begin(), corrs.end(),
                [](const CorrLink* a, const CorrLink* b) { return a->id < b->id; });
      for (const CorrLink* c : corrs) {
        if (c->type != rel.type || c->tgt != t) continue;
        if (used_.count(c->id)) continue;
        binding_[rel.id] = c->id;
        used_.insert(c->id);
        relations(idx, k + 1);
        used_.erase(c->id);
        binding_.erase(rel.id);
      }
    }
  }

  void emit() {
    if (opt_.scope) {
      bool hit = false;
      for (const auto& [pat, img] : binding_)
        if (opt_.scope->count(img)) {
          hit = true;
          break;
        }
      if (!hit) return;
    }
    Match m;
    m.ruleName = op_.rule.name;
    m.side = (p_.order.size() == op_.rule.nodes.size()) ? MatchSide::Full
                                                        : MatchSide::SourceOnly;
    m.binding = binding_;
    matches.push_back(std::move(m));
  }

  const Metamodel& mm_;
  const OperationalRule& op_;
  const TripleGraph& g_;
  const MatchOptions& opt_;
  const Pattern& p_;
  std::map<ElemId, std::vector<const Edge*>> out_, in_;
  std::map<ElemId, std::vector<const CorrLink*>> corrOut_, corrIn_;
  std::map<std::string, std::vector<const Node*>> byType_;
  std::map<ElemId, ElemId> binding_;
  std::set<ElemId> used_;
  std::set<ElemId> absent_;
};

std::vector<Match> finish(std::vector<Match> ms, const MatchOptions& opt,
                          MatchSide side) {
  for (Match& m : ms) m.side = side;
  std::sort(ms.begin(), ms.end());
  ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
  if (opt.limit && ms.size() > opt.limit) ms.resize(opt.limit);
  return ms;
}

}  // namespace

std::vector<Match> find_matches_serial(const Metamodel& mm,
                                       const OperationalRule& op,
                                       const TripleGraph& g,
                                       const MatchOptions& opt) {
  Pattern p = build_pattern(op, opt.side);
  Engine e(mm, op, g, opt, p);
  e.run(nullptr);
  return finish(std::move(e.matches), opt, opt.side);
}

std::vector<Match> find_matches(const Metamodel& mm, const OperationalRule& op,
                                const TripleGraph& g, const MatchOptions& opt) {
#ifndef _OPENMP
  return find_matches_serial(mm, op, g, opt);
#else
  Pattern p = build_pattern(op, opt.side);
  if (!p.order.empty() && p.order[0]->relaxed)
    return find_matches_serial(mm, op, g, opt);
  Engine seedEngine(mm, op, g, opt, p);
  std::vector<const Node*> anchors = seedEngine.anchor_candidates();
  if (anchors.size() < 8) return find_matches_serial(mm, op, g, opt);
  std::vector<Match> all;
#pragma omp parallel
  {
    Engine local(mm, op, g, opt, p);
#pragma omp for schedule(dynamic, 4) nowait
    for (long i = 0; i < static_cast<long>(anchors.size()); ++i)
      local.run(anchors[static_cast<std::size_t>(i)]);
#pragma omp critical
    all.insert(all.end(), local.matches.begin(), local.matches.end());
  }
  return finish(std::move(all), opt, opt.side);
#endif
}

int rule_diameter(const Rule& r) {
  std::map<ElemId, std::vector<ElemId>> adj;
  for (const auto& [id, e] : r.edges) {
    adj[e.src].push_back(e.tgt);
    adj[e.tgt].push_back(e.src);
  }
  for (const auto& [id, c] : r.corrs) {
    adj[c.src].push_back(c.tgt);
    adj[c.tgt].push_back(c.src);
  }
  int best = 0;
  for (const auto& [start, n] : r.nodes) {
    std::map<ElemId, int> dist{{start, 0}};
    std::queue<ElemId> q;
    q.push(start);
    while (!q.empty()) {
      ElemId u = q.front();
      q.pop();
      for (const ElemId& v : adj[u])
        if (!dist.count(v)) {
          dist[v] = dist[u] + 1;
          best = std::max(best, dist[v]);
          q.push(v);
        }
    }
  }
  return best;
}

std::string flags_to_string(const std::set<StatusFlag>& flags) {
  std::string out;
  if (flags.count(StatusFlag::AllDeleted)) out += '-';
  if (flags.count(StatusFlag::PartiallyDeleted)) out += '/';
  if (flags.count(StatusFlag::AttrBroken)) out += '#';
  if (flags.count(StatusFlag::ContextBroken)) out += '!';
  return out;
}

std::map<std::string, AppStatus> revalidate(
    const Metamodel& /*mm*/, const std::map<std::string, Rule>& rules,
    const TripleGraph& g, const std::vector<RuleApplication>& apps) {
  std::map<std::string, AppStatus> out;
  for (const RuleApplication& app : apps) {
    auto rit = rules.find(app.ruleName);
    if (rit == rules.end())
      throw ModelError("application '" + app.id + "' references unknown rule '" +
                       app.ruleName + "'");
    const Rule& r = rit->second;
    AppStatus st;
    auto side = [&](const ElemId& ruleElem) -> std::set<StatusFlag>& {
      return r.domain_of(ruleElem) == Domain::Source ? st.source : st.target;
    };
    std::map<Domain, std::pair<int, int>> created;  // side -> (gone, total)
    for (const ElemId& ruleElem : r.element_ids()) {
      auto bit = app.binding.find(ruleElem);
      const bool bound = bit != app.binding.end();
      const bool present = bound && g.has(bit->second);
      const Action action = r.action_of(ruleElem);
      const Domain d = r.domain_of(ruleElem) == Domain::Source ? Domain::Source
                                                               : Domain::Target;
      if (action == Action::Create) {
        auto& [gone, total] = created[d];
        total++;
        if (!present) gone++;
      } else if (action == Action::Context) {
        if (!present) side(ruleElem).insert(StatusFlag::ContextBroken);
      }
      if (present) {
        auto nit = r.nodes.find(ruleElem);
        if (nit != r.nodes.end())
          for (const auto& [attr, want] : nit->second.assignments) {
            auto have = g.attribute(bit->second, attr);
            if (!have || !attr_equal(*have, want))
              side(ruleElem).insert(StatusFlag::AttrBroken);
          }
      }
    }
    for (const AttrCondition& c : r.conditions) {
      auto bit = app.binding.find(c.elem);
      if (bit == app.binding.end() || !g.has(bit->second)) continue;
      auto have = g.attribute(bit->second, c.attr);
      if (!have || !attr_equal(*have, c.value))
        side(c.elem).insert(StatusFlag::AttrBroken);
    }
    for (auto& [d, counts] : created) {
      auto& flags = d == Domain::Source ? st.source : st.target;
      auto [gone, total] = counts;
      if (total > 0 && gone == total)
        flags.insert(StatusFlag::AllDeleted);
      else if (gone > 0)
        flags.insert(StatusFlag::PartiallyDeleted);
    }
    out[app.id] = st;
  }
  return out;
}

}  // namespace tggsync
