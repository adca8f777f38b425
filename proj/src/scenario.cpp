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

#include "tggsync/scenario.hpp"

#include <chrono>
#include <random>
#include <sstream>

#include "tggsync/error.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tggsync {

namespace {

constexpr int kGridRows = 12;
constexpr int kGridRowLen = 8;
constexpr int kMaxRows = 50;
constexpr int kMaxRowLen = 60;
constexpr int kMovedTail = 3;  // scenario 2: houses relocated per row pair

}  // namespace

// The house-row metamodel: a source chain of typed houses, a target
// construction plan, and one correspondence per house/construction pair.
Metamodel house_metamodel() {
  Metamodel mm;
  mm.name = "houses";
  mm.enums["HouseType"] = {"Nook", "Cube", "Villa"};

  auto node = [&](const std::string& name, Domain d,
                  const std::string& super = "", bool abst = false) {
    NodeType t;
    t.name = name;
    t.domain = d;
    t.supertype = super;
    t.isAbstract = abst;
    mm.nodeTypes[name] = t;
  };
  node("House", Domain::Source);
  mm.nodeTypes["House"].attributes.push_back({"type", AttrKind::Enum, "HouseType"});
  mm.nodeTypes["House"].attributes.push_back({"architect", AttrKind::String, ""});
  node("Plan", Domain::Target);
  node("Construction", Domain::Target);
  mm.nodeTypes["Construction"].attributes.push_back(
      {"company", AttrKind::String, ""});
  node("ConstructionStep", Domain::Target, "", true);
  node("Cellar", Domain::Target, "ConstructionStep");
  node("Floor", Domain::Target, "ConstructionStep");
  node("SaddleRoof", Domain::Target, "ConstructionStep");

  mm.edgeTypes["next"] = {"next", "House", "House"};
  mm.edgeTypes["construction"] = {"construction", "Plan", "Construction"};
  mm.edgeTypes["cellar"] = {"cellar", "Construction", "Cellar"};
  mm.edgeTypes["floor"] = {"floor", "Construction", "Floor"};
  mm.edgeTypes["roof"] = {"roof", "Construction", "SaddleRoof"};

  mm.corrTypes["houseToConstruction"] = {"houseToConstruction", "House",
                                         "Construction"};
  mm.check();
  return mm;
}

namespace {

void add_node(Rule& r, const ElemId& id, const std::string& type, Domain d,
              Action a) {
  RuleNode n;
  n.id = id;
  n.type = type;
  n.domain = d;
  n.action = a;
  r.nodes[id] = n;
}

void add_edge(Rule& r, const ElemId& id, const std::string& type,
              const ElemId& src, const ElemId& tgt, Action a) {
  RuleEdge e;
  e.id = id;
  e.type = type;
  e.src = src;
  e.tgt = tgt;
  e.action = a;
  r.edges[id] = e;
}

void add_corr(Rule& r, const ElemId& id, const ElemId& src, const ElemId& tgt,
              Action a) {
  RuleCorr c;
  c.id = id;
  c.type = "houseToConstruction";
  c.src = src;
  c.tgt = tgt;
  c.action = a;
  r.corrs[id] = c;
}

// Shared context of the appending rules: the predecessor house with its
// construction hanging off the plan. The predecessor carries no type
// condition, so rows may mix house types.
void add_predecessor_context(Rule& r) {
  add_node(r, "hp", "House", Domain::Source, Action::Context);
  add_node(r, "p", "Plan", Domain::Target, Action::Context);
  add_node(r, "cp", "Construction", Domain::Target, Action::Context);
  add_corr(r, "cop", "hp", "cp", Action::Context);
  add_edge(r, "p_cp", "construction", "p", "cp", Action::Context);
}

Rule nook_rule() {
  Rule r;
  r.name = "NookRule";
  r.tag = "N";
  add_node(r, "h", "House", Domain::Source, Action::Create);
  r.nodes["h"].assignments["type"] = std::string("Nook");
  add_node(r, "p", "Plan", Domain::Target, Action::Create);
  add_node(r, "c", "Construction", Domain::Target, Action::Create);
  add_node(r, "f", "Floor", Domain::Target, Action::Create);
  add_corr(r, "co", "h", "c", Action::Create);
  add_edge(r, "p_c", "construction", "p", "c", Action::Create);
  add_edge(r, "c_f", "floor", "c", "f", Action::Create);
  return r;
}

Rule cube_rule() {
  Rule r;
  r.name = "CubeRule";
  r.tag = "C";
  add_predecessor_context(r);
  add_node(r, "h", "House", Domain::Source, Action::Create);
  r.nodes["h"].assignments["type"] = std::string("Cube");
  add_edge(r, "hp_h", "next", "hp", "h", Action::Create);
  add_node(r, "c", "Construction", Domain::Target, Action::Create);
  add_node(r, "ce", "Cellar", Domain::Target, Action::Create);
  add_node(r, "f", "Floor", Domain::Target, Action::Create);
  add_corr(r, "co", "h", "c", Action::Create);
  add_edge(r, "p_c", "construction", "p", "c", Action::Create);
  add_edge(r, "c_ce", "cellar", "c", "ce", Action::Create);
  add_edge(r, "c_f", "floor", "c", "f", Action::Create);
  return r;
}

Rule villa_rule() {
  Rule r;
  r.name = "VillaRule";
  r.tag = "V";
  add_predecessor_context(r);
  add_node(r, "h", "House", Domain::Source, Action::Create);
  r.nodes["h"].assignments["type"] = std::string("Villa");
  add_edge(r, "hp_h", "next", "hp", "h", Action::Create);
  add_node(r, "c", "Construction", Domain::Target, Action::Create);
  add_node(r, "f", "Floor", Domain::Target, Action::Create);
  add_node(r, "r", "SaddleRoof", Domain::Target, Action::Create);
  add_corr(r, "co", "h", "c", Action::Create);
  add_edge(r, "p_c", "construction", "p", "c", Action::Create);
  add_edge(r, "c_f", "floor", "c", "f", Action::Create);
  add_edge(r, "c_r", "roof", "c", "r", Action::Create);
  return r;
}

}  // namespace

std::vector<Rule> house_rules() {
  return {nook_rule(), cube_rule(), villa_rule()};
}

namespace {

// splitmix64; decorrelates the per-cell seeds derived from one user seed.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string token(std::mt19937_64& rng) {
  static const char* alphabet = "abcdefghijklmnopqrstuvwxyz";
  std::string s;
  std::uint64_t v = rng();
  for (int i = 0; i < 6; ++i) {
    s += alphabet[v % 26];
    v /= 26;
  }
  return s;
}

struct RowPlan {
  std::vector<ElemId> ids;    // house ids, head first
  std::vector<std::string> types;  // per house
};

// Row `r` with `len` houses: a Nook head and alternating Cube/Villa bodies.
RowPlan make_row(int r, int len) {
  RowPlan row;
  for (int i = 1; i <= len; ++i) {
    row.ids.push_back("h" + std::to_string(r) + "_" + std::to_string(i));
    if (i == 1)
      row.types.push_back("Nook");
    else
      row.types.push_back((r + i) % 2 == 0 ? "Cube" : "Villa");
  }
  return row;
}

// Scenario 5 uses a single long row without a row prefix so that candidate
// labels stay short (V2, C2, ...).
RowPlan make_plain_row(int len) {
  RowPlan row;
  for (int i = 1; i <= len; ++i) {
    row.ids.push_back("h" + std::to_string(i));
    row.types.push_back(i == 1 ? "Nook" : "Villa");
  }
  return row;
}

TripleGraph source_of(const std::vector<RowPlan>& rows, std::mt19937_64& rng) {
  TripleGraph g;
  for (const RowPlan& row : rows) {
    for (std::size_t i = 0; i < row.ids.size(); ++i) {
      Node n;
      n.id = row.ids[i];
      n.type = "House";
      n.attrs["type"] = row.types[i];
      n.attrs["architect"] = "arch-" + token(rng);
      g.nodes.emplace(n.id, std::move(n));
      if (i > 0) {
        Edge e;
        e.id = "nx_" + row.ids[i - 1] + "_" + row.ids[i];
        e.type = "next";
        e.src = row.ids[i - 1];
        e.tgt = row.ids[i];
        g.edges.emplace(e.id, std::move(e));
      }
    }
  }
  return g;
}

void enrich_companies(Session& s, std::mt19937_64& rng) {
  for (auto& [id, corr] : s.graph.corrs) {
    (void)id;
    auto it = s.graph.nodes.find(corr.tgt);
    if (it != s.graph.nodes.end())
      it->second.attrs["company"] = "build-" + token(rng);
  }
}

// Prepend a fresh Nook to the row and retype the old head to Cube.
void prepend_edit(Delta& d, const std::string& rowPrefix, const ElemId& oldHead,
                  std::mt19937_64& rng) {
  Edit create;
  create.kind = Edit::Kind::CreateNode;
  create.id = rowPrefix + "_0";
  create.type = "House";
  create.attrs["type"] = std::string("Nook");
  create.attrs["architect"] = "arch-" + token(rng);
  d.edits.push_back(create);

  Edit link;
  link.kind = Edit::Kind::CreateEdge;
  link.id = "nx_" + create.id + "_" + oldHead;
  link.type = "next";
  link.src = create.id;
  link.tgt = oldHead;
  d.edits.push_back(link);

  Edit retype;
  retype.kind = Edit::Kind::SetAttribute;
  retype.id = oldHead;
  retype.attr = "type";
  retype.value = std::string("Cube");
  retype.oldValue = std::string("Nook");
  d.edits.push_back(retype);
}

// Detach the last `tail` houses of `from` and append them to `to`.
void move_tail_edit(Delta& d, const RowPlan& from, const RowPlan& to,
                    int tail) {
  const std::size_t cut = from.ids.size() - static_cast<std::size_t>(tail);
  Edit del;
  del.kind = Edit::Kind::DeleteEdge;
  del.id = "nx_" + from.ids[cut - 1] + "_" + from.ids[cut];
  d.edits.push_back(del);

  Edit add;
  add.kind = Edit::Kind::CreateEdge;
  add.id = "nx_" + to.ids.back() + "_" + from.ids[cut];
  add.type = "next";
  add.src = to.ids.back();
  add.tgt = from.ids[cut];
  d.edits.push_back(add);
}

}  // namespace

ScenarioInstance generate_scenario(int scenario, int size,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(mix(seed ^ (0x5cull * scenario) ^ size));
  ScenarioInstance inst;
  inst.scenario = scenario;
  inst.size = size;

  const Metamodel mm = house_metamodel();
  const std::vector<Rule> rules = house_rules();
  std::vector<RowPlan> rows;
  Delta delta;

  switch (scenario) {
    case 1: {
      if (size < 1 || size > kGridRows)
        throw InputError("scenario 1 size must be in 1.." +
                         std::to_string(kGridRows));
      for (int r = 0; r < kGridRows; ++r) rows.push_back(make_row(r, kGridRowLen));
      break;
    }
    case 2: {
      if (size < 1 || size > kGridRows / 2)
        throw InputError("scenario 2 size must be in 1.." +
                         std::to_string(kGridRows / 2));
      for (int r = 0; r < kGridRows; ++r) rows.push_back(make_row(r, kGridRowLen));
      break;
    }
    case 3: {
      if (size < 2) throw InputError("scenario 3 size must be at least 2");
      if (size > kMaxRowLen)
        throw TooLargeError("scenario 3 size exceeds the desk-scale row cap " +
                            std::to_string(kMaxRowLen));
      rows.push_back(make_row(0, size));
      rows.push_back(make_row(1, size));
      break;
    }
    case 4: {
      if (size < 2) throw InputError("scenario 4 size must be at least 2");
      if (size > kMaxRowLen)
        throw TooLargeError("scenario 4 size exceeds the desk-scale row cap " +
                            std::to_string(kMaxRowLen));
      rows.push_back(make_row(0, size));
      rows.push_back(make_row(1, size));
      break;
    }
    case 5: {
      if (size < 1) throw InputError("scenario 5 size must be at least 1");
      if (size + 2 > kMaxRowLen)
        throw TooLargeError("scenario 5 size exceeds the desk-scale row cap " +
                            std::to_string(kMaxRowLen - 2));
      rows.push_back(make_plain_row(size + 2));
      break;
    }
    default:
      throw InputError("unknown scenario " + std::to_string(scenario));
  }
  (void)kMaxRows;

  TripleGraph source = source_of(rows, rng);
  inst.session = translate_batch(mm, rules, source);

  switch (scenario) {
    case 1:
    case 3:
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (scenario == 1 && static_cast<int>(r) >= size) break;
        prepend_edit(delta, "h" + std::to_string(r), rows[r].ids.front(), rng);
      }
      break;
    case 2:
      for (int k = 0; k < size; ++k)
        move_tail_edit(delta, rows[2 * k], rows[2 * k + 1], kMovedTail);
      break;
    case 4:
      move_tail_edit(delta, rows[0], rows[1], size / 2);
      break;
    case 5:
      for (int i = 2; i <= size + 1; ++i) {
        Edit retype;
        retype.kind = Edit::Kind::SetAttribute;
        retype.id = rows[0].ids[static_cast<std::size_t>(i - 1)];
        retype.attr = "type";
        retype.value = std::string("Cube");
        retype.oldValue = std::string("Villa");
        delta.edits.push_back(retype);
      }
      break;
    default:
      break;
  }

  enrich_companies(inst.session, rng);
  inst.delta = delta;
  return inst;
}

std::vector<int> default_sizes(int scenario) {
  switch (scenario) {
    case 1:
      return {2, 4, 6, 8, 10};
    case 2:
      return {1, 2, 3, 4, 5};
    case 3:
      return {4, 8, 12, 16, 20};
    case 4:
      return {4, 8, 12, 16};
    case 5:
      return {1, 2, 3, 4};
    default:
      throw InputError("unknown scenario " + std::to_string(scenario));
  }
}

std::string bench_csv_header() {
  return "scenario,size,strategy,deleted,created,ms,fallbacks";
}

std::string bench_csv_row(const BenchRow& r) {
  std::ostringstream os;
  os << r.scenario << ',' << r.size << ',' << to_string(r.strategy) << ','
     << r.report.deleted.total() << ',' << r.report.created.total() << ','
     << r.report.wallMs << ',' << r.report.legacyFallbacks;
  return os.str();
}

std::vector<BenchRow> run_bench(const std::vector<int>& scenarios,
                                const std::vector<int>& sizes,
                                const std::vector<Strategy>& strategies,
                                int repeats, std::uint64_t seed, int jobs) {
  struct Cell {
    int scenario;
    int size;
    Strategy strategy;
    int repeat;
  };
  std::vector<Cell> cells;
  for (int sc : scenarios) {
    const std::vector<int> szs = sizes.empty() ? default_sizes(sc) : sizes;
    for (int size : szs)
      for (Strategy st : strategies)
        for (int rep = 0; rep < repeats; ++rep)
          cells.push_back({sc, size, st, rep});
  }

  std::vector<BenchRow> out(cells.size());
  const auto run_cell = [&](std::size_t i) {
    const Cell& c = cells[i];
    const std::uint64_t cellSeed =
        mix(seed ^ mix(0x100ull * c.scenario + c.size) ^
            mix(static_cast<std::uint64_t>(c.repeat) + 0xabcdull));
    ScenarioInstance inst = generate_scenario(c.scenario, c.size, cellSeed);
    BenchRow row;
    row.scenario = c.scenario;
    row.size = c.size;
    row.strategy = c.strategy;
    row.repeat = c.repeat;
    row.report = synchronize(inst.session, inst.delta, c.strategy);
    out[i] = std::move(row);
  };

#ifdef _OPENMP
  if (jobs != 1) {
    const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (long long i = 0; i < static_cast<long long>(cells.size()); ++i)
      run_cell(static_cast<std::size_t>(i));
    return out;
  }
#else
  (void)jobs;
#endif
  for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  return out;
}

}  // namespace tggsync
