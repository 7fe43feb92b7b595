#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "listterm/analysis.hpp"
#include "listterm/concrete.hpp"

using namespace listterm;

namespace {

constexpr int kExitParse = 1;
constexpr int kExitViolations = 4;

struct Options {
  std::string file;
  std::string smt;
  std::size_t max_nodes = 10000;
  int max_merges = 8;
  std::string emit_graph, emit_its;
  bool json = false;
  bool trace = false;
  std::uint64_t seed = 1;
  std::size_t fuel = 10000;
  std::size_t runs = 100;
  unsigned jobs = 1;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

AnalysisOptions analysis_options(const Options& o) {
  AnalysisOptions a;
  a.seg.max_nodes = o.max_nodes;
  a.seg.max_merges = o.max_merges;
  a.prover.smt_cmd = o.smt;
  return a;
}

int cmd_analyze(const Program& p, const Options& o) {
  AnalysisReport r = analyze_program(p, analysis_options(o));
  r.file = o.file;
  if (!o.emit_graph.empty()) write_file(o.emit_graph, r.dot);
  if (!o.emit_its.empty()) write_file(o.emit_its, r.its_text);
  std::cout << (o.json ? report_json(r) : report_text(r));
  return exit_code(r.verdict);
}

int cmd_graph(const Program& p, const Options& o) {
  AnalysisOptions a = analysis_options(o);
  VarPool pool;
  Ctx ctx{p, pool, a.prover};
  Seg g = build_seg(p, ctx, a.seg);
  std::cout << (o.json ? to_json(g, ctx) : to_dot(g, ctx));
  if (g.outcome == SegOutcome::ContainsErr) return 2;
  return g.outcome == SegOutcome::Complete ? 0 : 3;
}

int cmd_its(const Program& p, const Options& o) {
  AnalysisOptions a = analysis_options(o);
  VarPool pool;
  Ctx ctx{p, pool, a.prover};
  Seg g = build_seg(p, ctx, a.seg);
  if (g.outcome != SegOutcome::Complete) {
    std::cerr << "graph " << outcome_str(g.outcome) << ": " << g.reason << "\n";
    return g.outcome == SegOutcome::ContainsErr ? 2 : 3;
  }
  std::cout << export_its(extract_its(g, ctx));
  return 0;
}

int cmd_run(const Program& p, const Options& o) {
  NondetStream nd(o.seed);
  Trace t = run_concrete(p, nd, o.fuel);
  if (o.trace) {
    std::cout << trace_str(p, t);
  } else {
    std::cout << "outcome: " << run_outcome_str(t.outcome) << "\n";
    std::cout << "steps: " << t.states.size() - 1 << "\n";
    if (t.outcome == RunOutcome::Error) std::cout << "error: " << t.states.back().error_msg << "\n";
  }
  switch (t.outcome) {
    case RunOutcome::Returned: return 0;
    case RunOutcome::Error: return 2;
    case RunOutcome::FuelExhausted: return 3;
  }
  return 3;
}

void merge_into(DiffReport& dst, const DiffReport& src) {
  dst.runs += src.runs;
  dst.checked_states += src.checked_states;
  dst.violations += src.violations;
  dst.fuel_exhausted += src.fuel_exhausted;
  for (const auto& [k, v] : src.rule_checks) dst.rule_checks[k] += v;
  for (const auto& m : src.messages)
    if (dst.messages.size() < 10) dst.messages.push_back(m);
}

int cmd_check(const Program& p, const Options& o) {
  AnalysisOptions a = analysis_options(o);
  VarPool pool;
  Ctx ctx{p, pool, a.prover};
  Seg g = build_seg(p, ctx, a.seg);
  const unsigned jobs = std::max(1u, std::min<unsigned>(o.jobs, static_cast<unsigned>(o.runs)));
  std::vector<DiffReport> parts(jobs);
  std::vector<std::thread> pool_threads;
  for (unsigned w = 0; w < jobs; ++w) {
    pool_threads.emplace_back([&, w] {
      Differential d(p, g, ctx);
      for (std::size_t i = w; i < o.runs; i += jobs) {
        NondetStream nd(o.seed + i);
        d.run(nd, o.fuel, parts[w]);
      }
    });
  }
  for (auto& t : pool_threads) t.join();
  DiffReport rep;
  for (const auto& part : parts) merge_into(rep, part);

  std::cout << "graph: " << outcome_str(g.outcome) << ", " << g.nodes.size() << " nodes\n";
  std::cout << "runs: " << rep.runs << "\nchecked states: " << rep.checked_states
            << "\nfuel exhausted: " << rep.fuel_exhausted << "\nviolations: " << rep.violations << "\n";
  for (const auto& [rule, n] : rep.rule_checks) std::cout << "  " << rule << ": " << n << "\n";
  for (const auto& m : rep.messages) std::cout << "violation: " << m << "\n";
  return rep.violations == 0 ? 0 : kExitViolations;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"listterm: termination and memory-safety prover for list programs"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value configuration file");
  app.allow_config_extras(false);

  Options o;
  app.add_option("--smt", o.smt, "external SMT solver command (reads SMT-LIB on stdin)")
      ->envname("LISTTERM_SMT_CMD");
  app.add_option("--max-nodes", o.max_nodes, "node budget for the symbolic execution graph");
  app.add_option("--max-merges", o.max_merges, "merge budget per program position");
  app.add_option("--emit-graph", o.emit_graph, "write the graph in DOT format (- for stdout)");
  app.add_option("--emit-its", o.emit_its, "write the integer transition system (- for stdout)");
  app.add_flag("--json", o.json, "JSON output");
  app.add_flag("--trace", o.trace, "print the full trace of a concrete run");
  app.add_option("--seed", o.seed, "seed for nondeterministic values");
  app.add_option("--fuel", o.fuel, "step limit for concrete runs");
  app.add_option("--runs", o.runs, "number of concrete runs for check");
  app.add_option("--jobs", o.jobs, "worker threads for check")->check(CLI::PositiveNumber);

  struct Sub {
    const char* name;
    const char* help;
    int (*fn)(const Program&, const Options&);
  };
  const Sub subs[] = {
      {"analyze", "prove memory safety and termination", cmd_analyze},
      {"graph", "print the symbolic execution graph", cmd_graph},
      {"its", "print the integer transition system", cmd_its},
      {"run", "execute the program concretely", cmd_run},
      {"check", "compare concrete runs against the graph", cmd_check},
  };
  std::vector<std::pair<CLI::App*, const Sub*>> registered;
  for (const auto& s : subs) {
    CLI::App* sc = app.add_subcommand(s.name, s.help);
    sc->fallthrough();
    sc->add_option("file", o.file, "program file")->required();
    registered.emplace_back(sc, &s);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    Program prog = parse_program(slurp(o.file));
    for (const auto& [sc, s] : registered)
      if (sc->parsed()) return s->fn(prog, o);
  } catch (const ParseError& e) {
    std::cerr << o.file << ": " << e.what() << "\n";
    return kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  }
  return kExitParse;
}
