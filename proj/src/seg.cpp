#include "listterm/seg.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

namespace listterm {

Term apply_mu(const Instantiation& mu, const Term& t) {
  return t.substitute([&](VarId v) -> std::optional<Term> {
    auto it = mu.find(v);
    if (it == mu.end()) return std::nullopt;
    return it->second;
  });
}

Atom apply_mu(const Instantiation& mu, const Atom& a) { return Atom(a.rel(), apply_mu(mu, a.term())); }

Formula apply_mu(const Instantiation& mu, const Formula& f) {
  return f.substitute([&](VarId v) -> std::optional<Term> {
    auto it = mu.find(v);
    if (it == mu.end()) return std::nullopt;
    return it->second;
  });
}

namespace {

Clause apply_clause(const Instantiation& mu, const Clause& c) {
  std::vector<Atom> out;
  for (const auto& a : c) out.push_back(apply_mu(mu, a));
  return make_clause(std::move(out));
}

std::int64_t isize(const Ctx& ctx, TypeId t) { return static_cast<std::int64_t>(type_size(ctx.prog, t)); }

std::optional<std::size_t> find_alloc(const AbstractState& s, const Prover& pr, const Term& lo,
                                      const std::set<std::size_t>& used) {
  for (std::size_t i = 0; i < s.al.size(); ++i)
    if (!used.count(i) && pr.proves_eq(s.al[i].lo, lo)) return i;
  return std::nullopt;
}

std::optional<std::size_t> find_li(const AbstractState& s, const Prover& pr, const Term& ad, TypeId ty,
                                   const std::set<std::size_t>& used) {
  for (std::size_t i = 0; i < s.li.size(); ++i)
    if (!used.count(i) && s.li[i].ty == ty && pr.proves_eq(s.li[i].ad, ad)) return i;
  return std::nullopt;
}

std::vector<TypeId> list_types(const Program& p) {
  std::vector<TypeId> out;
  for (TypeId t : p.aggregates)
    if (is_list_type(p, t)) out.push_back(t);
  return out;
}

// Atoms that describe memory layout; never dropped by widening.
bool small_atom(const Atom& a) {
  if (std::llabs(a.term().constant()) > 1) return false;
  for (const auto& [v, k] : a.term().coeffs())
    if (k != 1 && k != -1) return false;
  return true;
}

}  // namespace

std::optional<ListMatch> find_list(const AbstractState& s, const Prover& pr, const Term& start, TypeId ty,
                                   const Ctx& ctx, std::size_t max_len, const std::set<std::size_t>& excluded) {
  auto rec = recursive_index(ctx.prog, ty);
  if (!rec) return std::nullopt;
  const std::size_t j = *rec - 1;
  const IrType& T = ctx.prog.type(ty);
  const std::int64_t bs = isize(ctx, ty);
  ListMatch m;
  m.ty = ty;
  std::set<std::size_t> used = excluded;
  Term cur = start;
  while (m.length() < max_len) {
    std::optional<std::size_t> ai;
    for (std::size_t i = 0; i < s.al.size() && !ai; ++i) {
      if (used.count(i)) continue;
      if (pr.proves_eq(s.al[i].lo, cur) && pr.proves_eq(s.al[i].hi, Term(s.al[i].lo) + (bs - 1))) ai = i;
    }
    if (!ai) break;
    const Term lo = s.al[*ai].lo;
    std::vector<std::size_t> cells;
    std::vector<SymVar> vals;
    for (std::size_t f = 0; f < T.fields.size(); ++f) {
      const Term addr = lo + static_cast<std::int64_t>(field_offset(ctx.prog, ty, f + 1));
      for (std::size_t e = 0; e < s.pt.size(); ++e) {
        if (s.pt[e].ty == T.fields[f] && pr.proves_eq(s.pt[e].addr, addr)) {
          cells.push_back(e);
          vals.push_back(s.pt[e].value);
          break;
        }
      }
      if (cells.size() != f + 1) break;
    }
    if (cells.size() != T.fields.size()) break;
    used.insert(*ai);
    m.allocs.push_back(*ai);
    m.cells.push_back(std::move(cells));
    m.values.push_back(vals);
    cur = vals[j];
  }
  if (m.allocs.empty()) return std::nullopt;
  return m;
}

ListMatch prefix(const ListMatch& m, std::size_t len) {
  ListMatch r = m;
  r.allocs.resize(len);
  r.cells.resize(len);
  r.values.resize(len);
  return r;
}

// ---------------------------------------------------------------------------
// Merging

namespace {

bool is_pointer_var(const Program& prog, const std::string& name);

class Merger {
 public:
  Merger(const AbstractState& a, const AbstractState& b, Ctx& ctx, int widen, bool a_general)
      : s1_(a), s2_(b), ctx_(ctx), widen_(widen), a_general_(a_general), p1_(state_formula(a, ctx), ctx.cfg),
        p2_(state_formula(b, ctx), ctx.cfg) {}

  MergeResult run() {
    out_.pos = s1_.pos;
    for (const auto& [name, v1] : s1_.lv) out_.lv[name] = pair(v1, s2_.lv.at(name), name, is_pointer_var(ctx_.prog, name));
    // Lists reachable from program variables take precedence over plain allocations.
    const std::size_t nlv = order_.size();
    for (std::size_t i = 0; i < nlv; ++i) detect_list(order_[i]);
    for (std::size_t i = 0; i < order_.size(); ++i) {
      detect_list(order_[i]);
      close_alloc(order_[i]);
    }
    build_kb();
    return {std::move(out_), std::move(mu1_), std::move(mu2_)};
  }

 private:
  SymVar pair(const Term& t1, const Term& t2, std::string_view hint, bool ptr) {
    auto key = std::make_pair(t1, t2);
    auto it = pairs_.find(key);
    if (it != pairs_.end()) return it->second;
    SymVar x = ctx_.pool.fresh(hint);
    pairs_.emplace(key, x);
    if (ptr) pointers_.insert(x);
    mu1_[x.id] = t1;
    mu2_[x.id] = t2;
    order_.push_back(x);
    return x;
  }

  std::string hint_of(const Term& t) const {
    if (auto v = t.as_var()) return ctx_.pool.hint(v->id);
    return "x";
  }

  struct Side {
    std::optional<std::size_t> li;
    std::optional<ListMatch> chain;
    Term len;
    std::vector<Term> first, last;
  };

  std::optional<Side> side(const AbstractState& s, const Prover& pr, const Term& t, TypeId ty,
                           const std::set<std::size_t>& used_li, const std::set<std::size_t>& used_al) {
    Side r;
    if ((r.li = find_li(s, pr, t, ty, used_li))) {
      const auto& l = s.li[*r.li];
      r.len = l.len;
      for (const auto& f : l.fields) {
        r.first.emplace_back(f.first);
        r.last.emplace_back(f.last);
      }
      return r;
    }
    if ((r.chain = find_list(s, pr, t, ty, ctx_, SIZE_MAX, used_al))) {
      r.len = static_cast<std::int64_t>(r.chain->length());
      for (const auto& v : r.chain->values.front()) r.first.emplace_back(v);
      for (const auto& v : r.chain->values.back()) r.last.emplace_back(v);
      return r;
    }
    return std::nullopt;
  }

  void consume(const Side& sd, std::set<std::size_t>& used_li, std::set<std::size_t>& used_al,
               std::set<std::size_t>& used_pt) {
    if (sd.li) used_li.insert(*sd.li);
    if (sd.chain) {
      for (auto a : sd.chain->allocs) used_al.insert(a);
      for (const auto& row : sd.chain->cells)
        for (auto e : row) used_pt.insert(e);
    }
  }

  void detect_list(SymVar x) {
    if (listed_.count(x)) return;
    const Term t1 = mu1_.at(x.id), t2 = mu2_.at(x.id);
    for (TypeId ty : list_types(ctx_.prog)) {
      auto a = side(s1_, p1_, t1, ty, used_li1_, used_al1_);
      if (!a) continue;
      auto b = side(s2_, p2_, t2, ty, used_li2_, used_al2_);
      if (!b) continue;
      if (a->chain && b->chain && a->chain->length() == b->chain->length()) continue;
      listed_.insert(x);
      consume(*a, used_li1_, used_al1_, used_pt1_);
      consume(*b, used_li2_, used_al2_, used_pt2_);
      SymVar len = ctx_.pool.fresh("len");
      mu1_[len.id] = a->len;
      mu2_[len.id] = b->len;
      extra_.push_back(len);
      std::vector<SymVar> first, last;
      for (std::size_t i = 0; i < a->first.size(); ++i) {
        const bool ptr = ctx_.prog.type(ctx_.prog.type(ty).fields[i]).kind == IrType::Kind::Ptr;
        first.push_back(pair(a->first[i], b->first[i], hint_of(a->first[i]), ptr));
        last.push_back(pair(a->last[i], b->last[i], hint_of(a->last[i]), ptr));
      }
      out_.li.push_back(make_invariant(ctx_.prog, ty, x, len, first, last));
      if (a->chain && b->chain)
        structural_.add(Atom::ge(len, static_cast<std::int64_t>(std::min(a->chain->length(), b->chain->length()))));
      return;
    }
  }

  void close_alloc(SymVar x) {
    const Term t1 = mu1_.at(x.id), t2 = mu2_.at(x.id);
    auto a1 = find_alloc(s1_, p1_, t1, used_al1_);
    if (!a1) return;
    auto a2 = find_alloc(s2_, p2_, t2, used_al2_);
    if (!a2) return;
    used_al1_.insert(*a1);
    used_al2_.insert(*a2);
    const auto& A1 = s1_.al[*a1];
    const auto& A2 = s2_.al[*a2];
    SymVar hi = pair(A1.hi, A2.hi, hint_of(A1.hi), true);
    out_.al.push_back(Allocation{x, hi});
    auto k1 = p1_.implied_constant(Term(A1.hi) - A1.lo);
    auto k2 = p2_.implied_constant(Term(A2.hi) - A2.lo);
    if (k1 && k2 && *k1 == *k2) structural_.add(Atom::eq(hi, Term(x) + *k1));
    for (std::size_t e1 = 0; e1 < s1_.pt.size(); ++e1) {
      if (used_pt1_.count(e1)) continue;
      const auto& E1 = s1_.pt[e1];
      auto off = p1_.implied_constant(Term(E1.addr) - A1.lo);
      if (!off || *off < 0 || (k1 && *off > *k1)) continue;
      for (std::size_t e2 = 0; e2 < s2_.pt.size(); ++e2) {
        if (used_pt2_.count(e2)) continue;
        const auto& E2 = s2_.pt[e2];
        if (E2.ty != E1.ty) continue;
        auto off2 = p2_.implied_constant(Term(E2.addr) - A2.lo);
        if (!off2 || *off2 != *off) continue;
        used_pt1_.insert(e1);
        used_pt2_.insert(e2);
        SymVar xa = pair(E1.addr, E2.addr, hint_of(E1.addr), true);
        SymVar xv = pair(E1.value, E2.value, hint_of(E1.value),
                         ctx_.prog.type(E1.ty).kind == IrType::Kind::Ptr);
        out_.pt.push_back(PointsTo{xa, E1.ty, xv});
        if (xa != x) structural_.add(Atom::eq(xa, Term(x) + *off));
        break;
      }
    }
  }

  bool holds(const Atom& a) const { return p1_.proves(apply_mu(mu1_, a)) && p2_.proves(apply_mu(mu2_, a)); }
  bool holds(const Clause& c) const {
    return p1_.proves(apply_clause(mu1_, c)) && p2_.proves(apply_clause(mu2_, c));
  }

  bool widened_away(const Clause& c) const {
    if (widen_ >= 6) return true;
    if (widen_ >= 3) {
      for (const auto& a : c)
        if (!small_atom(a)) return true;
    }
    return false;
  }

  bool consider(const Clause& c) {
    if (tried_.count(c)) return out_.kb.contains(c.front()) && c.size() == 1;
    tried_.insert(c);
    if (widened_away(c) || !holds(c)) return false;
    out_.kb.add(c);
    return true;
  }

  void translate_kb(const AbstractState& s, const Instantiation& mu) {
    std::map<VarId, VarId> inv;
    for (const auto& [x, t] : mu)
      if (auto v = t.as_var()) inv.emplace(v->id, x);
    for (const auto& c : s.kb.clauses()) {
      bool ok = true;
      std::vector<Atom> atoms;
      for (const auto& a : c) {
        for (const auto& [v, k] : a.term().coeffs())
          if (!inv.count(v)) ok = false;
        if (!ok) break;
        atoms.push_back(a.rename(inv));
      }
      if (ok) consider(make_clause(std::move(atoms)));
    }
  }

  void build_kb() {
    for (const auto& c : structural_.clauses())
      if (holds(c)) out_.kb.add(c);
    translate_kb(s1_, mu1_);
    // Widening: a general first state only keeps its own facts that still hold.
    if (a_general_) return;
    translate_kb(s2_, mu2_);

    std::vector<SymVar> vars = order_;
    vars.insert(vars.end(), extra_.begin(), extra_.end());
    std::vector<std::optional<std::int64_t>> c1, c2;
    for (SymVar x : vars) {
      c1.push_back(p1_.implied_constant(mu1_.at(x.id)));
      c2.push_back(p2_.implied_constant(mu2_.at(x.id)));
    }
    auto fixed = [&](std::size_t i) { return c1[i] && c2[i] && *c1[i] == *c2[i]; };
    for (std::size_t i = 0; i < vars.size(); ++i) {
      if (fixed(i)) {
        consider({Atom::eq(vars[i], *c1[i])});
        continue;
      }
      if (!consider({Atom::ge(vars[i], 1)})) consider({Atom::ge(vars[i], 0)});
    }
    for (std::size_t i = 0; i < vars.size(); ++i) {
      if (fixed(i)) continue;
      for (std::size_t k = i + 1; k < vars.size(); ++k) {
        if (fixed(k)) continue;
        const Term d = Term(vars[i]) - vars[k];
        auto d1 = p1_.normalize(mu1_.at(vars[i].id) - mu1_.at(vars[k].id));
        auto d2 = p2_.normalize(mu2_.at(vars[i].id) - mu2_.at(vars[k].id));
        const bool p = pointers_.count(vars[i]) > 0;
        if (p != (pointers_.count(vars[k]) > 0)) continue;
        if (d1.is_constant() && d2.is_constant() && d1 == d2) {
          consider({Atom::eq(d, d1.constant())});
          continue;
        }
        // Orderings between addresses are rarely loop invariants; keep only integer ones.
        if (p) continue;
        // Only the tightest bound of each family, so widening drops a relation in one step.
        bool eq = false;
        for (std::int64_t c = -1; c <= 1 && !eq; ++c) eq = consider({Atom::eq(d, c)});
        if (eq) continue;
        for (std::int64_t c = -1; c <= 1; ++c)
          if (consider({Atom::le(d, c)})) break;
        for (std::int64_t c = 1; c >= -1; --c)
          if (consider({Atom::ge(d, c)})) break;
      }
    }
  }

  const AbstractState& s1_;
  const AbstractState& s2_;
  Ctx& ctx_;
  int widen_;
  bool a_general_;
  Prover p1_, p2_;
  AbstractState out_;
  Instantiation mu1_, mu2_;
  std::map<std::pair<Term, Term>, SymVar> pairs_;
  std::vector<SymVar> order_, extra_;
  std::set<SymVar> listed_, pointers_;
  std::set<std::size_t> used_al1_, used_al2_, used_pt1_, used_pt2_, used_li1_, used_li2_;
  Formula structural_;
  std::set<Clause> tried_;
};

bool is_pointer_var(const Program& prog, const std::string& name) {
  for (const auto& b : prog.blocks)
    for (const auto& in : b.instrs) {
      if (in.dst != name) continue;
      switch (in.op) {
        case Op::GepByte:
        case Op::GepField:
        case Op::Malloc: return true;
        case Op::Load:
        case Op::Bitcast: return prog.type(in.ty).kind == IrType::Kind::Ptr;
        default: return false;
      }
    }
  return false;
}

bool has_predecessor(const AbstractState& s, const Prover& pr, const ListInvariant& l, const Ctx& ctx) {
  auto pty = ctx.prog.ptr_to(l.ty);
  if (!pty) return false;
  const std::int64_t bs = isize(ctx, l.ty);
  const auto off = static_cast<std::int64_t>(l.fields[l.rec].off);
  for (const auto& e : s.pt) {
    if (e.ty != *pty || !pr.proves_eq(e.value, l.ad)) continue;
    for (const auto& a : s.al)
      if (pr.proves_eq(e.addr, Term(a.lo) + off) && pr.proves_eq(a.hi, Term(a.lo) + (bs - 1))) return true;
  }
  return false;
}

}  // namespace

MergeResult merge_states(const AbstractState& s1, const AbstractState& s2, Ctx& ctx, int widen, bool s1_general) {
  if (s1.err || s2.err || s1.pos != s2.pos) throw std::invalid_argument("merge_states: incompatible states");
  for (const auto& [n, v] : s1.lv)
    if (!s2.lv.count(n)) throw std::invalid_argument("merge_states: different variable domains");
  if (s1.lv.size() != s2.lv.size()) throw std::invalid_argument("merge_states: different variable domains");
  return Merger(s1, s2, ctx, widen, s1_general).run();
}

bool can_merge(const AbstractState& s1, const AbstractState& s2, const Ctx& ctx) {
  if (s1.err || s2.err || s1.pos != s2.pos || s1.lv.size() != s2.lv.size()) return false;
  for (const auto& [n, v] : s1.lv)
    if (!s2.lv.count(n)) return false;
  if (s1.li.empty() || s2.li.empty()) return true;
  Prover p1(state_formula(s1, ctx), ctx.cfg), p2(state_formula(s2, ctx), ctx.cfg);
  for (TypeId ty : list_types(ctx.prog)) {
    std::vector<bool> a, b;
    for (const auto& l : s1.li)
      if (l.ty == ty) a.push_back(has_predecessor(s1, p1, l, ctx));
    for (const auto& l : s2.li)
      if (l.ty == ty) b.push_back(has_predecessor(s2, p2, l, ctx));
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
      if (a[i] != b[i]) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Generalization

bool check_generalization(const AbstractState& s, const AbstractState& sbar, const Instantiation& mu,
                          bool has_eval_in, const Ctx& ctx, std::string* why) {
  auto fail = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  if (!has_eval_in) return fail("no incoming evaluation edge");
  if (s.err || sbar.err || s.pos != sbar.pos) return fail("positions differ");
  for (VarId v : state_vars(sbar))
    if (!mu.count(v)) return fail("instantiation undefined for " + ctx.pool.name(v));
  Prover pr(state_formula(s, ctx), ctx.cfg);

  if (s.lv.size() != sbar.lv.size()) return fail("variable domains differ");
  for (const auto& [name, xv] : sbar.lv) {
    auto it = s.lv.find(name);
    if (it == s.lv.end()) return fail("variable domains differ");
    if (!pr.proves_eq(it->second, apply_mu(mu, Term(xv)))) return fail("variable " + name);
  }
  for (const auto& c : sbar.kb.clauses())
    if (!pr.proves(apply_clause(mu, c))) return fail("knowledge " + c[0].str(&ctx.pool));

  std::set<std::size_t> used_al;
  for (const auto& a : sbar.al) {
    bool found = false;
    for (std::size_t i = 0; i < s.al.size() && !found; ++i) {
      if (used_al.count(i)) continue;
      if (pr.proves_eq(s.al[i].lo, apply_mu(mu, Term(a.lo))) && pr.proves_eq(s.al[i].hi, apply_mu(mu, Term(a.hi)))) {
        used_al.insert(i);
        found = true;
      }
    }
    if (!found) return fail("allocation " + ctx.pool.name(a.lo));
  }
  for (const auto& e : sbar.pt) {
    bool found = false;
    for (const auto& f : s.pt) {
      if (f.ty == e.ty && pr.proves_eq(f.addr, apply_mu(mu, Term(e.addr))) &&
          pr.proves_eq(f.value, apply_mu(mu, Term(e.value)))) {
        found = true;
        break;
      }
    }
    if (!found) return fail("points-to " + ctx.pool.name(e.addr));
  }

  std::set<std::size_t> used_li;
  for (const auto& l : sbar.li) {
    const Term ad = apply_mu(mu, Term(l.ad));
    const Term len = apply_mu(mu, Term(l.len));
    bool ok = false;
    for (std::size_t i = 0; i < s.li.size() && !ok; ++i) {
      const auto& m = s.li[i];
      if (used_li.count(i) || m.ty != l.ty) continue;
      if (!pr.proves_eq(m.ad, ad) || !pr.proves_eq(m.len, len)) continue;
      bool fields = true;
      for (std::size_t k = 0; k < l.fields.size() && fields; ++k)
        fields = pr.proves_eq(m.fields[k].first, apply_mu(mu, Term(l.fields[k].first))) &&
                 pr.proves_eq(m.fields[k].last, apply_mu(mu, Term(l.fields[k].last)));
      if (fields) {
        used_li.insert(i);
        ok = true;
      }
    }
    if (ok) continue;
    auto chain = find_list(s, pr, ad, l.ty, ctx, SIZE_MAX, used_al);
    if (!chain) return fail("no list at " + ctx.pool.name(l.ad));
    for (std::size_t n = chain->length(); n >= 1 && !ok; --n) {
      if (!pr.proves_eq(len, static_cast<std::int64_t>(n))) continue;
      ListMatch m = prefix(*chain, n);
      bool fields = true;
      for (std::size_t k = 0; k < l.fields.size() && fields; ++k)
        fields = pr.proves_eq(m.values.front()[k], apply_mu(mu, Term(l.fields[k].first))) &&
                 pr.proves_eq(m.values.back()[k], apply_mu(mu, Term(l.fields[k].last)));
      if (!fields) continue;
      bool disjoint = true;
      for (const auto& e : sbar.pt) {
        const Term z = apply_mu(mu, Term(e.addr));
        const std::int64_t sz = isize(ctx, e.ty);
        for (auto ai : m.allocs) {
          const auto& A = s.al[ai];
          if (!pr.proves(make_clause({Atom::lt(z + (sz - 1), A.lo), Atom::gt(z, A.hi)}))) disjoint = false;
        }
      }
      if (!disjoint) return fail("points-to entry overlaps list at " + ctx.pool.name(l.ad));
      for (auto ai : m.allocs) used_al.insert(ai);
      ok = true;
    }
    if (!ok) return fail("list at " + ctx.pool.name(l.ad));
  }
  return true;
}

namespace {

std::optional<Instantiation> instantiate(const AbstractState& s, const AbstractState& sbar, const Prover& pr,
                                         const Ctx& ctx, std::size_t forced_prefix, std::size_t* chain_len) {
  Instantiation mu;
  for (const auto& [name, xv] : sbar.lv) mu.emplace(xv.id, Term(s.lv.at(name)));
  auto known = [&](SymVar v) { return mu.count(v.id) > 0; };
  auto set = [&](SymVar v, const Term& t) {
    if (!known(v)) mu.emplace(v.id, t);
  };
  std::set<std::size_t> used_li, used_al;
  std::vector<bool> resolved(sbar.li.size(), false);
  bool first_chain = true;
  for (bool changed = true; changed;) {
    changed = false;
    const std::size_t before = mu.size();
    for (const auto& a : sbar.al) {
      if (known(a.lo) && !known(a.hi)) {
        if (auto i = find_alloc(s, pr, mu.at(a.lo.id), {})) set(a.hi, s.al[*i].hi);
      } else if (known(a.hi) && !known(a.lo)) {
        for (const auto& A : s.al)
          if (pr.proves_eq(A.hi, mu.at(a.hi.id))) set(a.lo, A.lo);
      }
    }
    for (const auto& e : sbar.pt) {
      if (!known(e.addr) || known(e.value)) continue;
      for (const auto& f : s.pt)
        if (f.ty == e.ty && pr.proves_eq(f.addr, mu.at(e.addr.id))) {
          set(e.value, f.value);
          break;
        }
    }
    for (std::size_t k = 0; k < sbar.li.size(); ++k) {
      const auto& l = sbar.li[k];
      if (resolved[k] || !known(l.ad)) continue;
      const Term ad = mu.at(l.ad.id);
      if (auto i = find_li(s, pr, ad, l.ty, used_li)) {
        used_li.insert(*i);
        const auto& m = s.li[*i];
        set(l.len, m.len);
        for (std::size_t f = 0; f < l.fields.size(); ++f) {
          set(l.fields[f].first, m.fields[f].first);
          set(l.fields[f].last, m.fields[f].last);
        }
        resolved[k] = true;
        continue;
      }
      auto chain = find_list(s, pr, ad, l.ty, ctx, SIZE_MAX, used_al);
      if (!chain) continue;
      std::size_t n = chain->length();
      if (first_chain) {
        if (chain_len) *chain_len = n;
        if (forced_prefix && forced_prefix < n) n = forced_prefix;
        first_chain = false;
      }
      ListMatch m = prefix(*chain, n);
      for (auto a : m.allocs) used_al.insert(a);
      set(l.len, static_cast<std::int64_t>(n));
      for (std::size_t f = 0; f < l.fields.size(); ++f) {
        set(l.fields[f].first, m.values.front()[f]);
        set(l.fields[f].last, m.values.back()[f]);
      }
      resolved[k] = true;
    }
    // Solve equalities of KB with a single unknown unit-coefficient variable.
    for (const auto& c : sbar.kb.clauses()) {
      if (c.size() != 1 || c[0].rel() != Rel::Eq) continue;
      const Term& t = c[0].term();
      std::optional<std::pair<VarId, std::int64_t>> unknown;
      int count = 0;
      for (const auto& [v, k] : t.coeffs())
        if (!mu.count(v)) {
          ++count;
          unknown = std::make_pair(v, k);
        }
      if (count != 1 || (unknown->second != 1 && unknown->second != -1)) continue;
      // k*x + rest = 0  =>  x = -k*rest
      Term rest = t - Term::var(unknown->first, unknown->second);
      mu.emplace(unknown->first, apply_mu(mu, rest) * -unknown->second);
    }
    changed = mu.size() != before;
  }
  for (VarId v : state_vars(sbar))
    if (!mu.count(v)) return std::nullopt;
  return mu;
}

}  // namespace

std::optional<Instantiation> find_instantiation(const AbstractState& s, const AbstractState& sbar, const Ctx& ctx,
                                                std::string* why) {
  auto fail = [&](const char* m) -> std::optional<Instantiation> {
    if (why) *why = m;
    return std::nullopt;
  };
  if (s.err || sbar.err || s.pos != sbar.pos || s.lv.size() != sbar.lv.size()) return fail("incompatible states");
  for (const auto& [n, v] : sbar.lv)
    if (!s.lv.count(n)) return fail("different variable domains");
  if (sbar.al.size() > s.al.size()) return fail("too few allocations");
  Prover pr(state_formula(s, ctx), ctx.cfg);
  std::size_t chain_len = 0;
  auto mu = instantiate(s, sbar, pr, ctx, 0, &chain_len);
  if (!mu) return fail("instantiation is not total");
  if (check_generalization(s, sbar, *mu, true, ctx, why)) return mu;
  for (std::size_t n = chain_len; n-- > 1;) {
    mu = instantiate(s, sbar, pr, ctx, n, nullptr);
    if (mu && check_generalization(s, sbar, *mu, true, ctx)) return mu;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Graph construction

const char* outcome_str(SegOutcome o) {
  switch (o) {
    case SegOutcome::Complete: return "complete";
    case SegOutcome::ContainsErr: return "contains-err";
    case SegOutcome::Incomplete: return "incomplete";
  }
  return "?";
}

std::string edge_kind_str(EdgeKind k) {
  switch (k) {
    case EdgeKind::Evaluation: return "eval";
    case EdgeKind::Refinement: return "ref";
    case EdgeKind::Generalization: return "gen";
  }
  return "?";
}

std::vector<int> Seg::out_edges(int n) const {
  std::vector<int> r;
  for (std::size_t i = 0; i < edges.size(); ++i)
    if (edges[i].src == n) r.push_back(static_cast<int>(i));
  return r;
}

namespace {

bool same_domain(const AbstractState& a, const AbstractState& b) {
  if (a.lv.size() != b.lv.size()) return false;
  for (const auto& [n, v] : a.lv)
    if (!b.lv.count(n)) return false;
  return true;
}

// Block heads entered by a back edge of a depth-first traversal of the CFG.
std::set<std::uint32_t> loop_heads(const Program& prog) {
  std::set<std::uint32_t> heads;
  std::vector<int> color(prog.blocks.size(), 0);
  auto succs = [&](std::uint32_t b) {
    std::vector<std::uint32_t> r;
    const Instr& t = prog.blocks[b].instrs.back();
    if (t.op == Op::Br || t.op == Op::BrCond) r.push_back(prog.block_index.at(t.then_label));
    if (t.op == Op::BrCond) r.push_back(prog.block_index.at(t.else_label));
    return r;
  };
  std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 0}};
  color[0] = 1;
  while (!stack.empty()) {
    auto& [b, i] = stack.back();
    auto ss = succs(b);
    if (i == ss.size()) {
      color[b] = 2;
      stack.pop_back();
      continue;
    }
    std::uint32_t c = ss[i++];
    if (color[c] == 1) heads.insert(c);
    if (color[c] == 0) {
      color[c] = 1;
      stack.emplace_back(c, 0);
    }
  }
  return heads;
}

}  // namespace

Seg build_seg(const Program& prog, Ctx& ctx, const SegConfig& cfg) {
  Seg g;
  AbstractState init;
  init.pos = prog.entry();
  g.nodes.push_back(SegNode{init, -1, false, false});
  std::vector<int> work{0};
  std::map<Position, std::vector<int>> at_pos;
  std::map<Position, int> merges;
  const std::set<std::uint32_t> heads = loop_heads(prog);

  auto add_node = [&](AbstractState st, int parent, bool eval_in, bool merged) {
    g.nodes.push_back(SegNode{std::move(st), parent, eval_in, merged});
    return static_cast<int>(g.nodes.size()) - 1;
  };

  while (!work.empty()) {
    if (g.nodes.size() > cfg.max_nodes) {
      g.outcome = SegOutcome::Incomplete;
      g.reason = "node limit of " + std::to_string(cfg.max_nodes) + " exceeded";
      return g;
    }
    const int n = work.back();
    work.pop_back();
    const AbstractState s = g.nodes[n].state;
    if (s.err) {
      g.outcome = SegOutcome::ContainsErr;
      g.err_node = n;
      g.reason = "possible memory-safety violation at " + prog.pos_str(s.pos);
      return g;
    }
    if (is_return_state(s, prog)) continue;

    if (g.nodes[n].eval_in && s.pos.index == 0 && heads.count(s.pos.block)) {
      bool done = false;
      for (int m : at_pos[s.pos]) {
        if (auto mu = find_instantiation(s, g.nodes[m].state, ctx)) {
          g.edges.push_back(SegEdge{n, m, EdgeKind::Generalization, "generalization", std::move(*mu)});
          ++g.stats.generalizations;
          done = true;
          break;
        }
      }
      if (done) continue;

      int anc = -1;
      for (int a = g.nodes[n].parent; a >= 0; a = g.nodes[a].parent) {
        const auto& as = g.nodes[a].state;
        if (as.pos == s.pos && same_domain(as, s) && can_merge(as, s, ctx)) {
          anc = a;
          break;
        }
      }
      if (anc >= 0) {
        int& count = merges[s.pos];
        if (count >= cfg.max_merges) {
          g.outcome = SegOutcome::Incomplete;
          g.reason = "merge limit reached at " + prog.pos_str(s.pos);
          return g;
        }
        MergeResult mr = merge_states(g.nodes[anc].state, s, ctx, count, g.nodes[anc].merged);
        ++count;
        if (check_generalization(s, mr.state, mr.mu2, true, ctx)) {
          ++g.stats.merges;
          int m = add_node(std::move(mr.state), n, false, true);
          g.edges.push_back(SegEdge{n, m, EdgeKind::Generalization, "merge", std::move(mr.mu2)});
          at_pos[s.pos].push_back(m);
          work.push_back(m);
          continue;
        }
        ++g.stats.rejected_merges;
      }
    }

    at_pos[s.pos].push_back(n);
    StepResult r = step(s, ctx);
    std::vector<int> created;
    for (auto& succ : r.successors) {
      int m = add_node(std::move(succ), n, r.kind == EdgeKind::Evaluation, false);
      g.edges.push_back(SegEdge{n, m, r.kind, r.rule, {}});
      created.push_back(m);
    }
    for (auto it = created.rbegin(); it != created.rend(); ++it) work.push_back(*it);
  }
  g.outcome = SegOutcome::Complete;
  return g;
}

namespace {

std::string escape(const std::string& s) {
  std::string r;
  for (char c : s) {
    if (c == '"' || c == '\\') r += '\\';
    if (c == '\n') {
      r += "\\n";
      continue;
    }
    r += c;
  }
  return r;
}

}  // namespace

std::string to_dot(const Seg& g, const Ctx& ctx) {
  std::ostringstream os;
  os << "digraph seg {\n  node [shape=box, fontname=\"monospace\", fontsize=9];\n";
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    os << "  n" << i << " [label=\"" << i << ": " << escape(state_str(g.nodes[i].state, ctx)) << "\"";
    if (g.nodes[i].state.err) os << ", color=red";
    os << "];\n";
  }
  for (const auto& e : g.edges) {
    os << "  n" << e.src << " -> n" << e.dst << " [label=\"" << edge_kind_str(e.kind) << ": " << escape(e.rule)
       << "\"";
    if (e.kind == EdgeKind::Refinement) os << ", style=dashed";
    if (e.kind == EdgeKind::Generalization) os << ", style=dotted, color=blue";
    os << "];\n";
  }
  os << "}\n";
  return os.str();
}

std::string to_json(const Seg& g, const Ctx& ctx) {
  nlohmann::json j;
  j["outcome"] = outcome_str(g.outcome);
  j["reason"] = g.reason;
  j["root"] = g.root;
  j["nodes"] = nlohmann::json::array();
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const auto& nd = g.nodes[i];
    j["nodes"].push_back({{"id", i},
                          {"position", ctx.prog.pos_str(nd.state.pos)},
                          {"err", nd.state.err},
                          {"merged", nd.merged},
                          {"state", state_str(nd.state, ctx)}});
  }
  j["edges"] = nlohmann::json::array();
  for (const auto& e : g.edges) {
    nlohmann::json je{{"src", e.src}, {"dst", e.dst}, {"kind", edge_kind_str(e.kind)}, {"rule", e.rule}};
    if (e.kind == EdgeKind::Generalization) {
      nlohmann::json m = nlohmann::json::object();
      for (const auto& [v, t] : e.mu) m[ctx.pool.name(v)] = t.str(&ctx.pool);
      je["instantiation"] = m;
    }
    j["edges"].push_back(je);
  }
  j["stats"] = {{"merges", g.stats.merges},
                {"generalizations", g.stats.generalizations},
                {"rejected_merges", g.stats.rejected_merges}};
  return j.dump(2) + "\n";
}

}  // namespace listterm
