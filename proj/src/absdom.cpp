#include "listterm/absdom.hpp"

#include <sstream>
#include <stdexcept>

namespace listterm {

ListInvariant make_invariant(const Program& p, TypeId ty, SymVar ad, SymVar len, const std::vector<SymVar>& first,
                             const std::vector<SymVar>& last) {
  ListInvariant l;
  l.ad = ad;
  l.len = len;
  l.ty = ty;
  l.rec = *recursive_index(p, ty) - 1;
  const IrType& t = p.type(ty);
  for (std::size_t i = 0; i < t.fields.size(); ++i)
    l.fields.push_back(ListField{field_offset(p, ty, i + 1), t.fields[i], first.at(i), last.at(i)});
  return l;
}

std::vector<VarId> state_vars(const AbstractState& s) {
  std::set<VarId> vs;
  for (const auto& [n, v] : s.lv) vs.insert(v.id);
  for (const auto& a : s.al) {
    vs.insert(a.lo.id);
    vs.insert(a.hi.id);
  }
  for (const auto& e : s.pt) {
    vs.insert(e.addr.id);
    vs.insert(e.value.id);
  }
  for (const auto& l : s.li) {
    vs.insert(l.ad.id);
    vs.insert(l.len.id);
    for (const auto& f : l.fields) {
      vs.insert(f.first.id);
      vs.insert(f.last.id);
    }
  }
  for (VarId v : s.kb.vars()) vs.insert(v);
  return {vs.begin(), vs.end()};
}

Formula state_formula(const AbstractState& s, const Ctx& ctx) {
  Formula f = s.kb;
  if (s.err) return f;
  for (std::size_t i = 0; i < s.al.size(); ++i) {
    const auto& a = s.al[i];
    f.add(Atom::ge(a.lo, 1));
    f.add(Atom::le(a.lo, a.hi));
    for (std::size_t j = i + 1; j < s.al.size(); ++j) {
      const auto& b = s.al[j];
      f.add(make_clause({Atom::lt(a.hi, b.lo), Atom::lt(b.hi, a.lo)}));
    }
  }
  for (const auto& e : s.pt) f.add(Atom::ge(e.addr, 1));
  for (const auto& l : s.li) {
    f.add(Atom::ge(l.len, 1));
    f.add(Atom::ge(l.ad, 1));
  }
  // Conditional families, saturated against the formula built so far.
  for (int round = 0; round < 64; ++round) {
    std::size_t before = f.size();
    Prover pr(f, ctx.cfg);
    if (pr.premise_unsat()) break;
    Formula add;
    for (std::size_t i = 0; i < s.pt.size(); ++i) {
      for (std::size_t j = i + 1; j < s.pt.size(); ++j) {
        const auto& a = s.pt[i];
        const auto& b = s.pt[j];
        if (a.ty != b.ty) continue;
        Atom same_val = Atom::eq(a.value, b.value);
        if (!f.contains(same_val) && pr.proves(Atom::eq(a.addr, b.addr))) add.add(same_val);
        Atom diff_addr = Atom::ne(a.addr, b.addr);
        if (!f.contains(diff_addr) && pr.proves(Atom::ne(a.value, b.value))) add.add(diff_addr);
      }
    }
    for (const auto& l : s.li) {
      if (pr.proves(Atom::eq(l.len, 1))) {
        for (const auto& fl : l.fields) add.add(Atom::eq(fl.first, fl.last));
      }
      Atom two = Atom::ge(l.len, 2);
      if (pr.proves(two)) add.add(Atom::ge(l.fields[l.rec].first, 1));
      if (!f.contains(two)) {
        for (const auto& fl : l.fields) {
          if (pr.proves(Atom::ne(fl.first, fl.last))) {
            add.add(two);
            break;
          }
        }
      }
    }
    f.add_all(add);
    if (f.size() == before) break;
  }
  return f;
}

bool is_concrete(const AbstractState& s, const Ctx& ctx) {
  if (s.err) return true;
  if (!s.li.empty()) return false;
  Formula phi = state_formula(s, ctx);
  Prover pr(phi, ctx.cfg);
  if (pr.premise_unsat() || pr.proves(Atom::falsity())) return false;
  std::map<VarId, std::int64_t> val;
  for (VarId v : state_vars(s)) {
    auto c = pr.implied_constant(Term::var(v));
    if (!c || *c < 0) return false;
    val[v] = *c;
  }
  std::map<std::int64_t, std::int64_t> bytes;
  for (const auto& e : s.pt) {
    const IrType& t = ctx.prog.type(e.ty);
    if (t.kind != IrType::Kind::Int || t.bits != 8) return false;
    std::int64_t v = val[e.value.id];
    if (v < 0 || v > 255) return false;
    bytes[val[e.addr.id]] = v;
  }
  for (const auto& a : s.al)
    for (std::int64_t b = val[a.lo.id]; b <= val[a.hi.id]; ++b)
      if (!bytes.count(b)) return false;
  for (const auto& [addr, v] : bytes) {
    bool inside = false;
    for (const auto& a : s.al)
      if (val[a.lo.id] <= addr && addr <= val[a.hi.id]) inside = true;
    if (!inside) return false;
  }
  return true;
}

AbstractState alpha_rename(const AbstractState& s, const std::map<VarId, VarId>& r) {
  std::set<VarId> images;
  auto vars = state_vars(s);
  for (VarId v : vars) {
    auto it = r.find(v);
    VarId img = it == r.end() ? v : it->second;
    if (!images.insert(img).second) throw std::invalid_argument("alpha_rename: renaming is not injective");
  }
  auto R = [&](SymVar v) {
    auto it = r.find(v.id);
    return it == r.end() ? v : SymVar{it->second};
  };
  AbstractState t = s;
  for (auto& [n, v] : t.lv) v = R(v);
  for (auto& a : t.al) {
    a.lo = R(a.lo);
    a.hi = R(a.hi);
  }
  for (auto& e : t.pt) {
    e.addr = R(e.addr);
    e.value = R(e.value);
  }
  for (auto& l : t.li) {
    l.ad = R(l.ad);
    l.len = R(l.len);
    for (auto& f : l.fields) {
      f.first = R(f.first);
      f.last = R(f.last);
    }
  }
  t.kb = s.kb.rename(r);
  return t;
}

std::string state_str(const AbstractState& s, const Ctx& ctx) {
  if (s.err) return "ERR";
  const VarPool* pool = &ctx.pool;
  auto N = [&](SymVar v) { return ctx.pool.name(v); };
  std::ostringstream os;
  os << ctx.prog.pos_str(s.pos) << ", {";
  bool first = true;
  for (const auto& [n, v] : s.lv) {
    os << (first ? "" : ", ") << n << " = " << N(v);
    first = false;
  }
  os << "}, {";
  for (std::size_t i = 0; i < s.al.size(); ++i)
    os << (i ? ", " : "") << "[[" << N(s.al[i].lo) << ", " << N(s.al[i].hi) << "]]";
  os << "}, {";
  for (std::size_t i = 0; i < s.pt.size(); ++i)
    os << (i ? ", " : "") << N(s.pt[i].addr) << " ->" << type_str(ctx.prog, s.pt[i].ty) << " " << N(s.pt[i].value);
  os << "}, {";
  for (std::size_t i = 0; i < s.li.size(); ++i) {
    const auto& l = s.li[i];
    os << (i ? ", " : "") << N(l.ad) << " ->" << type_str(ctx.prog, l.ty) << "_{" << N(l.len) << "} [";
    for (std::size_t k = 0; k < l.fields.size(); ++k) {
      const auto& f = l.fields[k];
      os << (k ? ", " : "") << "(" << f.off << ": " << type_str(ctx.prog, f.ty) << ": " << N(f.first) << ".."
         << N(f.last) << ")";
    }
    os << "]";
  }
  os << "}, " << s.kb.str(pool);
  return os.str();
}

}  // namespace listterm
