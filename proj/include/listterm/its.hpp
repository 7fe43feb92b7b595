#pragma once

#include <map>
#include <string>
#include <vector>

#include "listterm/seg.hpp"

namespace listterm {

struct ItsLocation {
  int node = -1;              // SEG node
  std::vector<VarId> vars;    // LV values, list lengths and list field values
};

struct ItsTransition {
  int src = 0, dst = 0;           // location indices
  std::vector<int> path;          // SEG nodes from src to the node leaving the path
  Formula guard;                  // over path variables (src variables included)
  std::map<VarId, Term> update;   // dst variable -> term over path variables
};

struct Its {
  std::vector<ItsLocation> locs;
  std::vector<ItsTransition> trans;
  std::map<VarId, std::string> names;  // printing names

  int loc_of(int node) const;
};

// Transitions between generalization targets; only those on cycles are kept.
Its extract_its(const Seg& g, const Ctx& ctx);

struct RankingStep {
  std::vector<int> transitions;  // indices into the SCC's transitions that strictly decrease
  Term rank;                     // over the head location's variables
  std::int64_t bound = 0;        // guard implies rank >= bound
};

struct SccCertificate {
  std::vector<int> locs;
  int head = -1;
  std::vector<ItsTransition> loops;  // self-loops at head after location elimination
  std::vector<RankingStep> steps;    // lexicographic order
};

struct TerminationResult {
  bool terminating = false;
  std::vector<SccCertificate> sccs;
  std::string reason;  // why the proof failed
};

TerminationResult prove_termination(const Its& its, Ctx& ctx);

// Independent re-check of every step with fresh provers.
bool verify_certificate(const SccCertificate& c, const Its& its, const Ctx& ctx);

std::string export_its(const Its& its);
// Reads the export format back (for round-trip checks). Throws std::runtime_error.
Its parse_its(const std::string& text, VarPool& pool);

std::string rank_str(const RankingStep& r, const Its& its);

}  // namespace listterm
