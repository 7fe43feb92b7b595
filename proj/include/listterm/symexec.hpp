#pragma once

#include <optional>
#include <string>
#include <vector>

#include "listterm/absdom.hpp"

namespace listterm {

enum class EdgeKind { Evaluation, Refinement, Generalization };

struct StepResult {
  EdgeKind kind = EdgeKind::Evaluation;
  std::vector<AbstractState> successors;
  std::string rule;  // name of the rule that fired
};

// A state together with its formula and a prover primed with it.
struct StateView {
  StateView(const AbstractState& st, const Ctx& ctx) : s(st), phi(state_formula(st, ctx)), prover(phi, ctx.cfg) {}
  const AbstractState& s;
  Formula phi;
  Prover prover;
};

bool is_return_state(const AbstractState& s, const Program& p);

StepResult step(const AbstractState& s, Ctx& ctx);
StepResult step(const StateView& v, Ctx& ctx);

// Individual rules; nullopt means the side conditions could not be discharged.
std::optional<AbstractState> rule_load_allocated(const StateView& v, const Instr& in, Ctx& ctx);
std::optional<AbstractState> rule_load_list_invariant(const StateView& v, const Instr& in, Ctx& ctx);
std::optional<AbstractState> rule_store_plain(const StateView& v, const Instr& in, Ctx& ctx);
std::optional<AbstractState> rule_list_extension(const StateView& v, const Instr& in, Ctx& ctx);
AbstractState rule_getelementptr_plain(const StateView& v, const Instr& in, Ctx& ctx);

enum class Traversal { Main, Last, Split, SplitLast };
// Traversal of invariant `target` (index into LI); `absorb` is the l1 index for split variants.
// Works for both the byte form and the field form of getelementptr.
std::optional<AbstractState> rule_list_traversal(const StateView& v, const Instr& in, Ctx& ctx, Traversal kind,
                                                 std::size_t target, std::size_t absorb = 0);
// Dispatcher over all traversal variants; may return a Refinement on len >= 2 vs len = 1.
std::optional<StepResult> try_traversal(const StateView& v, const Instr& in, Ctx& ctx);

StepResult rule_icmp_refine(const StateView& v, const Instr& in, Ctx& ctx);

}  // namespace listterm
