#include "listterm/symexec.hpp"

#include <stdexcept>

namespace listterm {

namespace {

struct UndefinedVariable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Term opnd(const AbstractState& s, const Operand& o) {
  if (std::holds_alternative<std::int64_t>(o)) return Term(std::get<std::int64_t>(o));
  const auto& name = std::get<std::string>(o);
  auto it = s.lv.find(name);
  if (it == s.lv.end()) throw UndefinedVariable(name);
  return Term(it->second);
}

std::optional<std::int64_t> literal(const Operand& o) {
  if (std::holds_alternative<std::int64_t>(o)) return std::get<std::int64_t>(o);
  return std::nullopt;
}

Position next(Position p) { return {p.block, p.index + 1}; }

Position target(const Program& prog, const std::string& label) { return {prog.block_index.at(label), 0}; }

// A SymVar standing for t: t itself if it is a variable, else a fresh one fixed by KB.
SymVar as_var(AbstractState& s, const Term& t, Ctx& ctx, std::string_view hint) {
  if (auto v = t.as_var()) return *v;
  SymVar w = ctx.pool.fresh(hint);
  s.kb.add(Atom::eq(w, t));
  return w;
}

SymVar bind_fresh(AbstractState& s, const std::string& dst, const Term& value, Ctx& ctx) {
  SymVar w = ctx.pool.fresh(dst);
  s.kb.add(Atom::eq(w, value));
  s.lv[dst] = w;
  return w;
}

StepResult eval(AbstractState s, std::string rule) {
  StepResult r;
  r.kind = EdgeKind::Evaluation;
  r.rule = std::move(rule);
  r.successors.push_back(std::move(s));
  return r;
}

StepResult refine(const AbstractState& s, const Atom& a, std::string rule) {
  StepResult r;
  r.kind = EdgeKind::Refinement;
  r.rule = std::move(rule);
  AbstractState p = s, n = s;
  p.kb.add(a);
  n.kb.add(a.negate());
  r.successors.push_back(std::move(p));
  r.successors.push_back(std::move(n));
  return r;
}

bool inside_allocation(const StateView& v, const Term& ad, std::uint64_t size) {
  for (const auto& a : v.s.al) {
    if (v.prover.proves(Atom::le(a.lo, ad)) &&
        v.prover.proves(Atom::le(ad + static_cast<std::int64_t>(size) - 1, a.hi)))
      return true;
  }
  return false;
}

bool disjoint_ranges(const Prover& pr, const Term& a, std::uint64_t asz, const Term& b, std::uint64_t bsz) {
  return pr.proves(make_clause({Atom::lt(a + static_cast<std::int64_t>(asz) - 1, b),
                                Atom::lt(b + static_cast<std::int64_t>(bsz) - 1, a)}));
}

Atom icmp_atom(Pred p, const Term& a, const Term& b) {
  switch (p) {
    case Pred::Eq: return Atom::eq(a, b);
    case Pred::Ne: return Atom::ne(a, b);
    case Pred::Ult:
    case Pred::Slt: return Atom::lt(a, b);
    case Pred::Ule:
    case Pred::Sle: return Atom::le(a, b);
    case Pred::Ugt:
    case Pred::Sgt: return Atom::gt(a, b);
    case Pred::Uge:
    case Pred::Sge: return Atom::ge(a, b);
  }
  return Atom::truth();
}

// Side conditions shared by all traversal variants except the length test.
// Returns the byte offset of the addressed field of the next element.
std::optional<std::int64_t> traversal_offset(const StateView& v, const Instr& in, const ListInvariant& l) {
  if (!v.prover.proves_eq(opnd(v.s, in.a), l.fields[l.rec].first)) return std::nullopt;
  if (in.op == Op::GepByte) {
    const Term b = opnd(v.s, in.b);
    for (const auto& f : l.fields)
      if (v.prover.proves_eq(b, static_cast<std::int64_t>(f.off))) return static_cast<std::int64_t>(f.off);
    return std::nullopt;
  }
  if (in.op == Op::GepField) {
    auto i0 = literal(in.b), fi = literal(in.c);
    if (in.ty == l.ty && i0 && *i0 == 0 && fi && *fi >= 0 && static_cast<std::size_t>(*fi) < l.fields.size())
      return static_cast<std::int64_t>(l.fields[*fi].off);
  }
  return std::nullopt;
}

bool traversal_applies(const StateView& v, const Instr& in, const ListInvariant& l) {
  return traversal_offset(v, in, l).has_value();
}

}  // namespace

bool is_return_state(const AbstractState& s, const Program& p) { return !s.err && p.at(s.pos).op == Op::Ret; }

std::optional<AbstractState> rule_load_allocated(const StateView& v, const Instr& in, Ctx& ctx) {
  Term ad = opnd(v.s, in.a);
  std::uint64_t sz = type_size(ctx.prog, in.ty);
  if (!inside_allocation(v, ad, sz)) return std::nullopt;
  for (const auto& e : v.s.pt) {
    if (e.ty != in.ty || !v.prover.proves_eq(ad, e.addr)) continue;
    AbstractState t = v.s;
    t.pos = next(t.pos);
    bind_fresh(t, in.dst, e.value, ctx);
    return t;
  }
  return std::nullopt;
}

std::optional<AbstractState> rule_load_list_invariant(const StateView& v, const Instr& in, Ctx& ctx) {
  Term ad = opnd(v.s, in.a);
  for (const auto& l : v.s.li) {
    for (const auto& f : l.fields) {
      if (f.ty != in.ty) continue;
      if (!v.prover.proves_eq(ad, Term(l.ad) + static_cast<std::int64_t>(f.off))) continue;
      AbstractState t = v.s;
      t.pos = next(t.pos);
      bind_fresh(t, in.dst, f.first, ctx);
      return t;
    }
  }
  return std::nullopt;
}

std::optional<AbstractState> rule_store_plain(const StateView& v, const Instr& in, Ctx& ctx) {
  Term val = opnd(v.s, in.a);
  Term ad = opnd(v.s, in.b);
  std::uint64_t sz = type_size(ctx.prog, in.ty);
  // AL and LI are separated in <s>_SL, so containment in an allocation also rules out invariant memory.
  if (!inside_allocation(v, ad, sz)) return std::nullopt;
  AbstractState t = v.s;
  t.pos = next(t.pos);
  t.pt.clear();
  for (const auto& e : v.s.pt) {
    if (e.ty == in.ty && v.prover.proves_eq(e.addr, ad)) continue;
    if (disjoint_ranges(v.prover, e.addr, type_size(ctx.prog, e.ty), ad, sz)) t.pt.push_back(e);
  }
  SymVar a = as_var(t, ad, ctx, "addr");
  SymVar w = ctx.pool.fresh("val");
  t.kb.add(Atom::eq(w, val));
  t.pt.push_back(PointsTo{a, in.ty, w});
  return t;
}

std::optional<AbstractState> rule_list_extension(const StateView& v, const Instr& in, Ctx& ctx) {
  const auto& s = v.s;
  const auto& pr = v.prover;
  Term val = opnd(s, in.a);
  Term pa = opnd(s, in.b);
  for (std::size_t li = 0; li < s.li.size(); ++li) {
    const auto& l = s.li[li];
    const std::size_t j = l.rec;
    const std::uint64_t bs = type_size(ctx.prog, l.ty);
    for (std::size_t ai = 0; ai < s.al.size(); ++ai) {
      const auto& A = s.al[ai];
      if (!pr.proves_eq(A.hi, Term(A.lo) + static_cast<std::int64_t>(bs) - 1)) continue;
      for (std::size_t m = 0; m < l.fields.size(); ++m) {
        if (l.fields[m].ty != in.ty) continue;
        if (!pr.proves_eq(pa, Term(A.lo) + static_cast<std::int64_t>(l.fields[m].off))) continue;
        // Values of the other fields of the new element.
        std::vector<SymVar> first(l.fields.size());
        bool ok = true;
        for (std::size_t i = 0; i < l.fields.size() && ok; ++i) {
          if (i == m) continue;
          ok = false;
          for (const auto& e : s.pt) {
            if (e.ty == l.fields[i].ty &&
                pr.proves_eq(e.addr, Term(A.lo) + static_cast<std::int64_t>(l.fields[i].off))) {
              first[i] = e.value;
              ok = true;
              break;
            }
          }
        }
        if (!ok) continue;
        Term link = m == j ? val : Term(first[j]);
        if (!pr.proves_eq(l.ad, link)) continue;

        AbstractState t = s;
        t.pos = next(t.pos);
        t.al.erase(t.al.begin() + static_cast<long>(ai));
        t.pt.clear();
        for (const auto& e : s.pt) {
          if (pr.proves(make_clause({Atom::lt(A.hi, e.addr),
                                     Atom::lt(Term(e.addr) + static_cast<std::int64_t>(type_size(ctx.prog, e.ty)) - 1,
                                              A.lo)})))
            t.pt.push_back(e);
        }
        SymVar vm = ctx.pool.fresh("v_m");
        first[m] = vm;
        SymVar len = ctx.pool.fresh("len");
        std::vector<SymVar> last;
        for (const auto& f : l.fields) last.push_back(f.last);
        t.li[li] = make_invariant(ctx.prog, l.ty, A.lo, len, first, last);
        t.kb.add(Atom::eq(vm, val));
        t.kb.add(Atom::eq(len, Term(l.len) + 1));
        return t;
      }
    }
  }
  return std::nullopt;
}

AbstractState rule_getelementptr_plain(const StateView& v, const Instr& in, Ctx& ctx) {
  AbstractState t = v.s;
  t.pos = next(t.pos);
  Term base = opnd(v.s, in.a);
  Term addr;
  if (in.op == Op::GepByte) {
    addr = base + opnd(v.s, in.b);
  } else {
    auto i0 = literal(in.b);
    auto fi = literal(in.c);
    if (!i0 || !fi) throw UndefinedVariable("non-constant aggregate index");
    const IrType& agg = ctx.prog.type(in.ty);
    if (*fi < 0 || static_cast<std::size_t>(*fi) >= agg.fields.size())
      throw UndefinedVariable("field index out of range");
    addr = base + *i0 * static_cast<std::int64_t>(type_size(ctx.prog, in.ty)) +
           static_cast<std::int64_t>(field_offset(ctx.prog, in.ty, static_cast<std::size_t>(*fi) + 1));
  }
  bind_fresh(t, in.dst, addr, ctx);
  return t;
}

std::optional<AbstractState> rule_list_traversal(const StateView& v, const Instr& in, Ctx& ctx, Traversal kind,
                                                 std::size_t target, std::size_t absorb) {
  const auto& s = v.s;
  const auto& pr = v.prover;
  if (target >= s.li.size()) return std::nullopt;
  const ListInvariant& l = s.li[target];
  const std::size_t j = l.rec;
  const auto off = traversal_offset(v, in, l);
  if (!off) return std::nullopt;
  const std::int64_t offj = *off;
  bool two = kind == Traversal::Main || kind == Traversal::Split;
  if (two ? !pr.proves(Atom::ge(l.len, 2)) : !pr.proves(Atom::eq(l.len, 1))) return std::nullopt;
  bool split = kind == Traversal::Split || kind == Traversal::SplitLast;
  if (split) {
    if (absorb == target || absorb >= s.li.size()) return std::nullopt;
    const auto& l1 = s.li[absorb];
    if (l1.ty != l.ty || !pr.proves_eq(l1.fields[j].last, l.ad)) return std::nullopt;
  }

  AbstractState t = s;
  t.pos = next(t.pos);
  std::vector<ListInvariant> li;
  SymVar wsj = ctx.pool.fresh("w_start_j");

  if (!split) {
    // Materialize the head element.
    SymVar vstart = ctx.pool.fresh("v_start"), vend = ctx.pool.fresh("v_end");
    t.al.push_back(Allocation{vstart, vend});
    t.kb.add(Atom::eq(vstart, l.ad));
    t.kb.add(Atom::eq(vend, Term(vstart) + static_cast<std::int64_t>(type_size(ctx.prog, l.ty)) - 1));
    for (const auto& f : l.fields) {
      SymVar a = ctx.pool.fresh("v_start_i");
      t.kb.add(Atom::eq(a, Term(l.ad) + static_cast<std::int64_t>(f.off)));
      t.pt.push_back(PointsTo{a, f.ty, f.first});
    }
  } else {
    const auto& l1 = s.li[absorb];
    SymVar ulen = ctx.pool.fresh("u_len");
    std::vector<SymVar> first, last;
    for (std::size_t i = 0; i < l1.fields.size(); ++i) {
      first.push_back(l1.fields[i].first);
      last.push_back(l.fields[i].first);
    }
    t.kb.add(Atom::eq(ulen, Term(l1.len) + 1));
    t.li[absorb] = make_invariant(ctx.prog, l1.ty, l1.ad, ulen, first, last);
  }

  if (two) {
    SymVar wstart = ctx.pool.fresh("w_start"), wlen = ctx.pool.fresh("w_len");
    std::vector<SymVar> first, last;
    for (const auto& f : l.fields) {
      first.push_back(ctx.pool.fresh("w_i"));
      last.push_back(f.last);
    }
    t.li[target] = make_invariant(ctx.prog, l.ty, wstart, wlen, first, last);
    t.kb.add(Atom::eq(wstart, l.fields[j].first));
    t.kb.add(Atom::eq(wlen, Term(l.len) - 1));
    t.kb.add(Atom::eq(wsj, Term(wstart) + offj));
  } else {
    t.li.erase(t.li.begin() + static_cast<long>(target));
    for (const auto& f : l.fields) t.kb.add(Atom::eq(f.first, f.last));
    t.kb.add(Atom::eq(wsj, Term(l.fields[j].first) + offj));
  }
  t.lv[in.dst] = wsj;
  return t;
}

std::optional<StepResult> try_traversal(const StateView& v, const Instr& in, Ctx& ctx) {
  const auto& s = v.s;
  for (std::size_t k = 0; k < s.li.size(); ++k) {
    const auto& l = s.li[k];
    if (!traversal_applies(v, in, l)) continue;
    bool ge2 = v.prover.proves(Atom::ge(l.len, 2));
    bool eq1 = !ge2 && v.prover.proves(Atom::eq(l.len, 1));
    if (!ge2 && !eq1) return refine(s, Atom::ge(l.len, 2), "refine-list-length");
    for (std::size_t a = 0; a < s.li.size(); ++a) {
      if (a == k) continue;
      auto r = rule_list_traversal(v, in, ctx, ge2 ? Traversal::Split : Traversal::SplitLast, k, a);
      if (r) return eval(std::move(*r), ge2 ? "list-traversal-split" : "list-traversal-split-last");
    }
    auto r = rule_list_traversal(v, in, ctx, ge2 ? Traversal::Main : Traversal::Last, k);
    if (r) return eval(std::move(*r), ge2 ? "list-traversal" : "list-traversal-last");
  }
  return std::nullopt;
}

StepResult rule_icmp_refine(const StateView& v, const Instr& in, Ctx& ctx) {
  Atom a = icmp_atom(in.pred, opnd(v.s, in.a), opnd(v.s, in.b));
  std::optional<int> value;
  if (v.prover.proves(a)) value = 1;
  else if (v.prover.proves(a.negate())) value = 0;
  if (!value) return refine(v.s, a, "refine-icmp");
  AbstractState t = v.s;
  t.pos = next(t.pos);
  bind_fresh(t, in.dst, Term(*value), ctx);
  return eval(std::move(t), "icmp");
}

StepResult step(const AbstractState& s, Ctx& ctx) {
  StateView v(s, ctx);
  return step(v, ctx);
}

StepResult step(const StateView& v, Ctx& ctx) {
  const AbstractState& s = v.s;
  if (s.err) throw std::logic_error("step on ERR");
  const Program& prog = ctx.prog;
  const Instr& in = prog.at(s.pos);
  try {
    switch (in.op) {
      case Op::Load: {
        if (auto t = rule_load_allocated(v, in, ctx)) return eval(std::move(*t), "load");
        if (auto t = rule_load_list_invariant(v, in, ctx)) return eval(std::move(*t), "load-list-invariant");
        return eval(AbstractState::error(s.pos), "load-unsafe");
      }
      case Op::Store: {
        if (auto t = rule_list_extension(v, in, ctx)) return eval(std::move(*t), "list-extension");
        if (auto t = rule_store_plain(v, in, ctx)) return eval(std::move(*t), "store");
        return eval(AbstractState::error(s.pos), "store-unsafe");
      }
      case Op::GepByte:
      case Op::GepField: {
        if (auto r = try_traversal(v, in, ctx)) return std::move(*r);
        return eval(rule_getelementptr_plain(v, in, ctx), "getelementptr");
      }
      case Op::Icmp: return rule_icmp_refine(v, in, ctx);
      case Op::BrCond: {
        Term c = opnd(s, in.a);
        Atom taken = Atom::ne(c, 0);
        AbstractState t = s;
        if (v.prover.proves(taken)) {
          t.pos = target(prog, in.then_label);
        } else if (v.prover.proves(taken.negate())) {
          t.pos = target(prog, in.else_label);
        } else {
          return refine(s, taken, "refine-branch");
        }
        return eval(std::move(t), "br");
      }
      case Op::Br: {
        AbstractState t = s;
        t.pos = target(prog, in.then_label);
        return eval(std::move(t), "br");
      }
      case Op::Add: {
        AbstractState t = s;
        t.pos = next(t.pos);
        bind_fresh(t, in.dst, opnd(s, in.a) + opnd(s, in.b), ctx);
        return eval(std::move(t), "add");
      }
      case Op::Bitcast: {
        AbstractState t = s;
        t.pos = next(t.pos);
        t.lv[in.dst] = as_var(t, opnd(s, in.a), ctx, in.dst);
        return eval(std::move(t), "bitcast");
      }
      case Op::Malloc: {
        AbstractState t = s;
        t.pos = next(t.pos);
        SymVar lo = ctx.pool.fresh(in.dst), hi = ctx.pool.fresh(in.dst + "_end");
        t.al.push_back(Allocation{lo, hi});
        t.kb.add(Atom::eq(hi, Term(lo) + static_cast<std::int64_t>(in.size) - 1));
        t.lv[in.dst] = lo;
        return eval(std::move(t), "malloc");
      }
      case Op::NondetInt: {
        AbstractState t = s;
        t.pos = next(t.pos);
        SymVar w = ctx.pool.fresh(in.dst);
        t.kb.add(Atom::ge(w, 0));
        if (ctx.prog.type(in.ty).bits == 1) t.kb.add(Atom::le(w, 1));
        t.lv[in.dst] = w;
        return eval(std::move(t), "nondet");
      }
      case Op::Free: {
        Term p = opnd(s, in.a);
        for (std::size_t i = 0; i < s.al.size(); ++i) {
          const auto& A = s.al[i];
          if (!v.prover.proves_eq(p, A.lo)) continue;
          AbstractState t = s;
          t.pos = next(t.pos);
          t.al.erase(t.al.begin() + static_cast<long>(i));
          t.pt.clear();
          for (const auto& e : s.pt)
            if (v.prover.proves(make_clause({Atom::lt(A.hi, e.addr),
                                             Atom::lt(Term(e.addr) + static_cast<std::int64_t>(type_size(prog, e.ty)) - 1,
                                                      A.lo)})))
              t.pt.push_back(e);
          return eval(std::move(t), "free");
        }
        return eval(AbstractState::error(s.pos), "free-unsafe");
      }
      case Op::Ret: throw std::logic_error("step on a return state");
    }
  } catch (const UndefinedVariable&) {
    return eval(AbstractState::error(s.pos), "undefined-variable");
  }
  throw std::logic_error("unknown instruction");
}

}  // namespace listterm
