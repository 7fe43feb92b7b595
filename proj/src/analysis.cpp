#include "listterm/analysis.hpp"

#include <chrono>
#include <nlohmann/json.hpp>
#include <sstream>

namespace listterm {

const char* verdict_str(ProgramVerdict v) {
  switch (v) {
    case ProgramVerdict::MemorySafeAndTerminating: return "MemorySafeAndTerminating";
    case ProgramVerdict::ErrReached: return "ERR-reached";
    case ProgramVerdict::Unknown: return "Unknown";
  }
  return "?";
}

int exit_code(ProgramVerdict v) {
  switch (v) {
    case ProgramVerdict::MemorySafeAndTerminating: return 0;
    case ProgramVerdict::ErrReached: return 2;
    case ProgramVerdict::Unknown: return 3;
  }
  return 3;
}

AnalysisReport analyze_program(const Program& prog, const AnalysisOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t q0 = prover_stats().queries.load();
  VarPool pool;
  Ctx ctx{prog, pool, opts.prover};
  AnalysisReport r;

  Seg g = build_seg(prog, ctx, opts.seg);
  r.graph_outcome = g.outcome;
  r.nodes = g.nodes.size();
  r.edges = g.edges.size();
  r.merges = g.stats.merges;
  r.generalizations = g.stats.generalizations;
  r.rejected_merges = g.stats.rejected_merges;
  r.dot = to_dot(g, ctx);
  r.json_graph = to_json(g, ctx);

  if (g.outcome == SegOutcome::ContainsErr) {
    r.verdict = ProgramVerdict::ErrReached;
    r.reason = g.reason;
  } else if (g.outcome == SegOutcome::Incomplete) {
    r.verdict = ProgramVerdict::Unknown;
    r.reason = g.reason;
  } else {
    Its its = extract_its(g, ctx);
    r.its_locations = its.locs.size();
    r.its_transitions = its.trans.size();
    r.its_text = export_its(its);
    TerminationResult t = prove_termination(its, ctx);
    if (t.terminating) {
      bool verified = true;
      for (const auto& c : t.sccs) {
        verified = verified && verify_certificate(c, its, ctx);
        RankSummary s;
        s.location = its.locs[c.head].node;
        for (const auto& st : c.steps) {
          s.ranks.push_back(rank_str(st, its));
          s.bounds.push_back(st.bound);
        }
        r.certificate.push_back(std::move(s));
      }
      r.verdict = verified ? ProgramVerdict::MemorySafeAndTerminating : ProgramVerdict::Unknown;
      if (!verified) r.reason = "certificate check failed";
    } else {
      r.verdict = ProgramVerdict::Unknown;
      r.reason = t.reason;
    }
  }
  r.queries = prover_stats().queries.load() - q0;
  r.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::string report_text(const AnalysisReport& r) {
  std::ostringstream os;
  if (!r.file.empty()) os << "file: " << r.file << "\n";
  os << "verdict: " << verdict_str(r.verdict) << "\n";
  if (!r.reason.empty()) os << "reason: " << r.reason << "\n";
  os << "graph: " << outcome_str(r.graph_outcome) << ", " << r.nodes << " nodes, " << r.edges << " edges, "
     << r.merges << " merges, " << r.generalizations << " generalizations\n";
  if (r.graph_outcome == SegOutcome::Complete)
    os << "its: " << r.its_locations << " locations, " << r.its_transitions << " transitions\n";
  for (const auto& c : r.certificate) {
    os << "ranking at node " << c.location << ":";
    for (std::size_t i = 0; i < c.ranks.size(); ++i)
      os << (i ? "," : "") << " " << c.ranks[i] << " >= " << c.bounds[i];
    os << "\n";
  }
  os << "entailment queries: " << r.queries << "\n";
  os << "time: " << static_cast<long long>(r.millis) << " ms\n";
  return os.str();
}

std::string report_json(const AnalysisReport& r) {
  nlohmann::ordered_json j;
  j["file"] = r.file;
  j["verdict"] = verdict_str(r.verdict);
  j["exit_code"] = exit_code(r.verdict);
  j["reason"] = r.reason;
  j["graph"] = {{"outcome", outcome_str(r.graph_outcome)},
                {"nodes", r.nodes},
                {"edges", r.edges},
                {"merges", r.merges},
                {"generalizations", r.generalizations},
                {"rejected_merges", r.rejected_merges}};
  j["its"] = {{"locations", r.its_locations}, {"transitions", r.its_transitions}};
  auto cert = nlohmann::ordered_json::array();
  for (const auto& c : r.certificate) {
    auto steps = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < c.ranks.size(); ++i) steps.push_back({{"rank", c.ranks[i]}, {"bound", c.bounds[i]}});
    cert.push_back({{"location", c.location}, {"steps", steps}});
  }
  j["certificate"] = cert;
  j["entailment_queries"] = r.queries;
  return j.dump(2) + "\n";
}

}  // namespace listterm
