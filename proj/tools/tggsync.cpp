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
//
// Command-line front end. Exit codes: 0 success, 2 consistency failure,
// 3 input error.

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tggsync/error.hpp"
#include "tggsync/json_io.hpp"
#include "tggsync/scenario.hpp"
#include "tggsync/shortcut.hpp"

namespace {

using namespace tggsync;

constexpr int kExitOk = 0;
constexpr int kExitInconsistent = 2;
constexpr int kExitInput = 3;

std::uint64_t env_seed() {
  const char* v = std::getenv("TGGSYNC_SEED");
  if (!v || !*v) return 0;
  char* end = nullptr;
  const unsigned long long parsed = std::strtoull(v, &end, 10);
  if (end == v || *end != '\0')
    throw InputError("TGGSYNC_SEED must be an unsigned integer");
  return parsed;
}

struct Grammar {
  Metamodel mm;
  std::vector<Rule> rules;
};

Grammar load_grammar(const std::string& tggPath) {
  if (tggPath.empty()) return {house_metamodel(), house_rules()};
  TGGFile f = load_tgg_file(tggPath);
  return {std::move(f.mm), std::move(f.rules)};
}

void emit(const std::string& outPath, const std::string& text) {
  if (outPath.empty())
    std::cout << text;
  else
    write_file(outPath, text);
}

int run_translate(const std::string& tggPath, const std::string& modelPath,
                  const std::string& outPath) {
  Grammar g = load_grammar(tggPath);
  TripleGraph source = load_model_file(g.mm, modelPath);
  Session s = translate_batch(g.mm, g.rules, source);
  emit(outPath, model_to_json(s.graph));
  return kExitOk;
}

int run_sync(const std::string& tggPath, const std::string& modelPath,
             const std::string& deltaPath, const std::string& strategyName,
             const std::string& outPath, const std::string& modelOutPath,
             const std::string& debugDir, int maxRounds) {
  Grammar g = load_grammar(tggPath);
  TripleGraph triple = load_model_file(g.mm, modelPath);
  Delta delta = load_delta_file(g.mm, deltaPath);
  Session s = adopt_triple(g.mm, g.rules, triple);
  SyncOptions opt;
  opt.debugDir = debugDir;
  opt.maxRounds = maxRounds;
  SyncReport rep =
      synchronize(s, delta, strategy_from_string(strategyName), opt);
  emit(outPath, report_to_json(rep));
  if (!modelOutPath.empty()) write_file(modelOutPath, model_to_json(s.graph));
  return rep.consistent ? kExitOk : kExitInconsistent;
}

std::vector<int> parse_scenarios(const std::string& arg) {
  if (arg == "all") return {1, 2, 3, 4, 5};
  std::string t = arg;
  if (t.rfind("scenario", 0) == 0) t = t.substr(8);
  try {
    const int n = std::stoi(t);
    if (n >= 1 && n <= 5) return {n};
  } catch (const std::exception&) {
  }
  throw InputError("unknown scenario '" + arg +
                   "' (expected scenario1..scenario5, 1..5, or all)");
}

int run_bench(const std::string& scenarioArg, const std::string& sizesCsv,
              const std::string& strategiesCsv, int repeat,
              const std::string& outPath, int jobs) {
  const std::vector<int> scenarios = parse_scenarios(scenarioArg);
  std::vector<int> sizes;
  if (!sizesCsv.empty()) {
    std::stringstream ss(sizesCsv);
    std::string part;
    while (std::getline(ss, part, ',')) {
      try {
        sizes.push_back(std::stoi(part));
      } catch (const std::exception&) {
        throw InputError("bad size '" + part + "' in --sizes");
      }
    }
  }
  std::vector<Strategy> strategies;
  {
    std::stringstream ss(strategiesCsv);
    std::string part;
    while (std::getline(ss, part, ','))
      strategies.push_back(strategy_from_string(part));
  }
  if (strategies.empty()) throw InputError("--strategies must not be empty");
  if (repeat < 1) throw InputError("--repeat must be positive");

  const std::vector<BenchRow> rows =
      run_bench(scenarios, sizes, strategies, repeat, env_seed(), jobs);
  std::ostringstream os;
  os << bench_csv_header() << "\n";
  for (const BenchRow& r : rows) os << bench_csv_row(r) << "\n";
  emit(outPath, os.str());
  for (const BenchRow& r : rows)
    if (!r.report.consistent) return kExitInconsistent;
  return kExitOk;
}

// The scope the repair loop would use on its first round: unmarked source
// elements plus the source images of broken applications.
std::set<ElemId> first_round_scope(
    const Session& s, const std::map<std::string, AppStatus>& statuses) {
  std::set<ElemId> scope;
  for (const auto& [id, n] : s.graph.nodes)
    if (s.mm.domain_of_node_type(n.type) == Domain::Source &&
        s.graph.marking_of(id).empty())
      scope.insert(id);
  for (const auto& [id, e] : s.graph.edges)
    if (s.mm.domain_of_edge_type(e.type) == Domain::Source &&
        s.graph.marking_of(id).empty())
      scope.insert(id);
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

struct BrokenState {
  Session session;
  PrecedenceGraph pg;
};

BrokenState broken_state(const std::string& tggPath,
                         const std::string& modelPath,
                         const std::string& deltaPath) {
  Grammar g = load_grammar(tggPath);
  TripleGraph triple = load_model_file(g.mm, modelPath);
  Delta delta = load_delta_file(g.mm, deltaPath);
  BrokenState st;
  st.session = adopt_triple(g.mm, g.rules, triple);
  st.session.graph = apply_delta(g.mm, st.session.graph, delta);
  const auto statuses = revalidate(st.session.mm, st.session.rules,
                                   st.session.graph, st.session.apps);
  st.pg = build_precedence(st.session.mm, st.session.rules, st.session.graph,
                           st.session.apps, statuses,
                           first_round_scope(st.session, statuses));
  return st;
}

int run_show_precedence(const std::string& tggPath,
                        const std::string& modelPath,
                        const std::string& deltaPath,
                        const std::string& outPath) {
  BrokenState st = broken_state(tggPath, modelPath, deltaPath);
  emit(outPath, st.pg.to_dot());
  return kExitOk;
}

int run_dump_ilp(const std::string& tggPath, const std::string& modelPath,
                 const std::string& deltaPath, const std::string& outPath) {
  BrokenState st = broken_state(tggPath, modelPath, deltaPath);
  std::ostringstream os;
  const auto clusters = st.pg.clusters();
  if (clusters.empty()) os << "* no broken applications\n";
  for (const auto& cluster : clusters) {
    os << "* cluster:";
    for (const std::string& label : cluster) os << " " << label;
    os << "\n";
    const std::vector<std::string> cands =
        st.pg.replacing_candidates(cluster);
    if (cands.empty()) {
      os << "* no replacing candidates\n";
      continue;
    }
    const ReplacingProblem rp =
        encode_replacing(st.session.mm, st.session.rules, st.session.graph,
                         st.session.apps, st.pg, cluster, cands, Weights{});
    os << to_lp(rp.problem);
  }
  emit(outPath, os.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Model synchronization over triple graph grammars: translate, "
      "repair with synthesized short-cut rules, benchmark."};
  app.require_subcommand(1);

  std::string tggPath, modelPath, deltaPath, outPath, modelOutPath, debugDir;
  std::string strategyName = "hosc";
  std::string sizesCsv, scenarioArg;
  std::string strategiesCsv = "legacy,sc,hosc";
  int repeat = 1;
  int jobs = 0;
  int maxRounds = 0;
  bool dotFlag = false;

  CLI::App* translate =
      app.add_subcommand("translate", "Translate a source model to a triple");
  translate->add_option("model", modelPath, "source model JSON")->required();
  translate->add_option("--tgg", tggPath, "grammar file (default: built-in)");
  translate->add_option("--out", outPath, "output file (default: stdout)");

  CLI::App* sync = app.add_subcommand(
      "sync", "Apply a delta to a consistent triple and restore consistency");
  sync->add_option("model", modelPath, "triple model JSON")->required();
  sync->add_option("delta", deltaPath, "delta JSON")->required();
  sync->add_option("--strategy", strategyName, "legacy|sc|hosc")
      ->required();
  sync->add_option("--tgg", tggPath, "grammar file (default: built-in)");
  sync->add_option("--out", outPath, "report file (default: stdout)");
  sync->add_option("--model-out", modelOutPath, "write the repaired triple");
  sync->add_option("--debug-dir", debugDir,
                   "dump programs, rules, and precedence graphs here");
  sync->add_option("--max-rounds", maxRounds, "repair round cap (0 = auto)");

  CLI::App* bench = app.add_subcommand(
      "bench", "Run the scenario benchmark grid and emit CSV");
  bench->add_option("scenario", scenarioArg, "scenario1..scenario5 or all")
      ->required();
  bench->add_option("--sizes", sizesCsv,
                    "comma-separated sizes (default: per-scenario grid)");
  bench->add_option("--strategies", strategiesCsv,
                    "comma-separated strategies (default: legacy,sc,hosc)");
  bench->add_option("--repeat", repeat, "repeats per cell (default: 1)");
  bench->add_option("--out", outPath, "CSV file (default: stdout)");
  bench->add_option("--jobs", jobs, "parallel cells (0 = all cores)");

  CLI::App* showPrec = app.add_subcommand(
      "show-precedence",
      "Print the precedence graph of a broken state as DOT");
  showPrec->add_option("model", modelPath, "triple model JSON")->required();
  showPrec->add_option("delta", deltaPath, "delta JSON")->required();
  showPrec->add_option("--tgg", tggPath, "grammar file (default: built-in)");
  showPrec->add_option("--out", outPath, "output file (default: stdout)");
  showPrec->add_flag("--dot", dotFlag, "emit Graphviz DOT (the default)");

  CLI::App* dumpIlp = app.add_subcommand(
      "dump-ilp",
      "Print the candidate-selection programs of a broken state as LP text");
  dumpIlp->add_option("model", modelPath, "triple model JSON")->required();
  dumpIlp->add_option("delta", deltaPath, "delta JSON")->required();
  dumpIlp->add_option("--tgg", tggPath, "grammar file (default: built-in)");
  dumpIlp->add_option("--out", outPath, "output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (translate->parsed())
      return run_translate(tggPath, modelPath, outPath);
    if (sync->parsed())
      return run_sync(tggPath, modelPath, deltaPath, strategyName, outPath,
                      modelOutPath, debugDir, maxRounds);
    if (bench->parsed())
      return run_bench(scenarioArg, sizesCsv, strategiesCsv, repeat, outPath,
                       jobs);
    if (showPrec->parsed())
      return run_show_precedence(tggPath, modelPath, deltaPath, outPath);
    if (dumpIlp->parsed())
      return run_dump_ilp(tggPath, modelPath, deltaPath, outPath);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const TooLargeError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const Error& e) {
    std::cerr << e.name() << ": " << e.what() << "\n";
    return kExitInconsistent;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInconsistent;
  }
  return kExitOk;
}
