#pragma once

#include <cstdint>
#include <string>

#include "listterm/its.hpp"

namespace listterm {

enum class ProgramVerdict { MemorySafeAndTerminating, ErrReached, Unknown };
const char* verdict_str(ProgramVerdict v);
int exit_code(ProgramVerdict v);  // 0, 2, 3

struct AnalysisOptions {
  SegConfig seg;
  ProverConfig prover;
};

struct RankSummary {
  int location = 0;  // SEG node of the loop head
  std::vector<std::string> ranks;
  std::vector<std::int64_t> bounds;
};

struct AnalysisReport {
  std::string file;
  ProgramVerdict verdict = ProgramVerdict::Unknown;
  std::string reason;
  SegOutcome graph_outcome = SegOutcome::Incomplete;
  std::size_t nodes = 0, edges = 0, merges = 0, generalizations = 0, rejected_merges = 0;
  std::size_t its_locations = 0, its_transitions = 0;
  std::vector<RankSummary> certificate;
  std::uint64_t queries = 0;
  double millis = 0;
  std::string dot, json_graph, its_text;  // artifacts
};

// parse errors propagate as ParseError
AnalysisReport analyze_program(const Program& prog, const AnalysisOptions& opts);

std::string report_text(const AnalysisReport& r);
// Stable schema; timing is left out so that reports are reproducible.
std::string report_json(const AnalysisReport& r);

}  // namespace listterm
