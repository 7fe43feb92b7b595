#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "listterm/symexec.hpp"

namespace listterm {

// Maps variables of the general state to terms over the specific state.
using Instantiation = std::map<VarId, Term>;

Term apply_mu(const Instantiation& mu, const Term& t);
Atom apply_mu(const Instantiation& mu, const Atom& a);
Formula apply_mu(const Instantiation& mu, const Formula& f);

// A concrete list built from AL and PT entries, conditions (a)-(d).
struct ListMatch {
  TypeId ty = 0;
  std::vector<std::size_t> allocs;               // indices into AL, in list order
  std::vector<std::vector<std::size_t>> cells;   // [k][i] index into PT for field i of element k
  std::vector<std::vector<SymVar>> values;       // [k][i]
  std::size_t length() const { return allocs.size(); }
  SymVar start(const AbstractState& s) const { return s.al[allocs.front()].lo; }
};

// Longest chain starting at `start` (at most max_len elements, skipping excluded allocations).
std::optional<ListMatch> find_list(const AbstractState& s, const Prover& pr, const Term& start, TypeId ty,
                                   const Ctx& ctx, std::size_t max_len = SIZE_MAX,
                                   const std::set<std::size_t>& excluded = {});
ListMatch prefix(const ListMatch& m, std::size_t len);

struct MergeResult {
  AbstractState state;
  Instantiation mu1, mu2;
};

// widen: number of earlier merges at this position (selects the widening stage).
// s1_general: s1 is itself a merge result; only its own KB facts are carried over.
MergeResult merge_states(const AbstractState& s1, const AbstractState& s2, Ctx& ctx, int widen = 0,
                         bool s1_general = false);
bool can_merge(const AbstractState& s1, const AbstractState& s2, const Ctx& ctx);

// Checks that mu embeds sbar into s; has_eval_in: s is reached by an evaluation edge.
bool check_generalization(const AbstractState& s, const AbstractState& sbar, const Instantiation& mu,
                          bool has_eval_in, const Ctx& ctx, std::string* why = nullptr);
std::optional<Instantiation> find_instantiation(const AbstractState& s, const AbstractState& sbar,
                                                const Ctx& ctx, std::string* why = nullptr);

enum class SegOutcome { Complete, ContainsErr, Incomplete };
const char* outcome_str(SegOutcome o);

struct SegNode {
  AbstractState state;
  int parent = -1;
  bool eval_in = false;  // reached by an evaluation edge
  bool merged = false;   // created by merging
};

struct SegEdge {
  int src = 0, dst = 0;
  EdgeKind kind = EdgeKind::Evaluation;
  std::string rule;
  Instantiation mu;  // generalization edges only
};

struct SegConfig {
  std::size_t max_nodes = 10000;
  int max_merges = 8;
};

struct SegStats {
  std::size_t merges = 0;
  std::size_t generalizations = 0;
  std::size_t rejected_merges = 0;  // merged state failed check_generalization
};

struct Seg {
  std::vector<SegNode> nodes;
  std::vector<SegEdge> edges;
  int root = 0;
  SegOutcome outcome = SegOutcome::Incomplete;
  std::string reason;
  int err_node = -1;
  SegStats stats;

  std::vector<int> out_edges(int n) const;
};

Seg build_seg(const Program& prog, Ctx& ctx, const SegConfig& cfg = {});

std::string edge_kind_str(EdgeKind k);
std::string to_dot(const Seg& g, const Ctx& ctx);
std::string to_json(const Seg& g, const Ctx& ctx);

}  // namespace listterm
