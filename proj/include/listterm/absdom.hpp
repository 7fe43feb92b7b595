#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "listterm/ir.hpp"
#include "listterm/logic.hpp"

namespace listterm {

// Shared analysis context: program, variable pool, prover settings.
struct Ctx {
  const Program& prog;
  VarPool& pool;
  ProverConfig cfg;
};

struct Allocation {
  SymVar lo, hi;
  bool operator==(const Allocation&) const = default;
};

struct PointsTo {
  SymVar addr;
  TypeId ty = 0;
  SymVar value;
  bool operator==(const PointsTo&) const = default;
};

struct ListField {
  std::uint64_t off = 0;
  TypeId ty = 0;
  SymVar first, last;
  bool operator==(const ListField&) const = default;
};

// v_ad ->^ty_{v_len} [(off_i: ty_i: first_i..last_i)], rec = 0-based index of the ty* field.
struct ListInvariant {
  SymVar ad, len;
  TypeId ty = 0;
  std::vector<ListField> fields;
  std::size_t rec = 0;
  bool operator==(const ListInvariant&) const = default;
};

struct AbstractState {
  Position pos;
  bool err = false;
  std::map<std::string, SymVar> lv;
  std::vector<Allocation> al;
  std::vector<PointsTo> pt;
  std::vector<ListInvariant> li;
  Formula kb;

  static AbstractState error(Position p = {}) {
    AbstractState s;
    s.pos = p;
    s.err = true;
    return s;
  }
  bool operator==(const AbstractState&) const = default;
};

ListInvariant make_invariant(const Program& p, TypeId ty, SymVar ad, SymVar len, const std::vector<SymVar>& first,
                             const std::vector<SymVar>& last);

// All symbolic variables occurring in s, sorted.
std::vector<VarId> state_vars(const AbstractState& s);

// The weakened first-order formula <s>: closure of the structural facts of s.
Formula state_formula(const AbstractState& s, const Ctx& ctx);

bool is_concrete(const AbstractState& s, const Ctx& ctx);

// Homomorphic renaming; throws std::invalid_argument if r is not injective on vars(s).
AbstractState alpha_rename(const AbstractState& s, const std::map<VarId, VarId>& r);

// Stable textual form.
std::string state_str(const AbstractState& s, const Ctx& ctx);

}  // namespace listterm
