#include "listterm/concrete.hpp"

#include <algorithm>
#include <climits>
#include <set>
#include <sstream>

namespace listterm {

std::vector<std::uint8_t> encode_le(std::uint64_t value, std::size_t bytes) {
  std::vector<std::uint8_t> out(bytes);
  for (std::size_t i = 0; i < bytes; ++i) out[i] = i < 8 ? static_cast<std::uint8_t>(value >> (8 * i)) : 0;
  return out;
}

std::uint64_t decode_le(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < bytes.size() && i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

std::optional<std::uint64_t> read_mem(const Memory& mem, std::uint64_t addr, std::size_t bytes) {
  std::vector<std::uint8_t> b(bytes);
  for (std::size_t i = 0; i < bytes; ++i) {
    auto it = mem.find(addr + i);
    if (it == mem.end()) return std::nullopt;
    b[i] = it->second;
  }
  return decode_le(b);
}

std::int64_t NondetStream::next() {
  std::int64_t v;
  if (used_ < prefix_.size()) {
    v = prefix_[used_++];
  } else {
    v = std::uniform_int_distribution<std::int64_t>(0, max_)(rng_);
  }
  drawn_.push_back(v);
  return v;
}

ConcreteState initial_concrete(const Program& p) {
  ConcreteState c;
  c.pos = p.entry();
  return c;
}

namespace {

bool inside(const ConcreteState& c, std::int64_t addr, std::uint64_t size) {
  if (addr < 1) return false;
  const auto a = static_cast<std::uint64_t>(addr);
  return std::any_of(c.allocs.begin(), c.allocs.end(),
                     [&](const ConcreteAlloc& al) { return al.lo <= a && a + size - 1 <= al.hi; });
}

// Smallest address >= 1 whose block keeps a free byte on both sides of every live allocation.
std::uint64_t fresh_address(const ConcreteState& c, std::uint64_t size) {
  std::vector<std::uint64_t> cands{1};
  for (const auto& al : c.allocs) cands.push_back(al.hi + 2);
  std::sort(cands.begin(), cands.end());
  for (std::uint64_t a : cands) {
    bool ok = std::all_of(c.allocs.begin(), c.allocs.end(),
                          [&](const ConcreteAlloc& al) { return a + size < al.lo || a > al.hi + 1; });
    if (ok) return a;
  }
  return cands.back();
}

}  // namespace

ConcreteState concrete_step(const Program& p, const ConcreteState& c, NondetStream& nd) {
  ConcreteState t = c;
  const Instr& in = p.at(c.pos);
  auto fail = [&](const std::string& msg) {
    t.error = true;
    t.error_msg = msg;
    return t;
  };
  auto value = [&](const Operand& o) -> std::optional<std::int64_t> {
    if (const auto* lit = std::get_if<std::int64_t>(&o)) return *lit;
    auto it = c.as.find(std::get<std::string>(o));
    if (it == c.as.end()) return std::nullopt;
    return it->second;
  };
  auto advance = [&] { ++t.pos.index; };
  auto jump = [&](const std::string& label) { t.pos = {p.block_index.at(label), 0}; };

  switch (in.op) {
    case Op::Load: {
      auto a = value(in.a);
      if (!a) return fail("undefined variable");
      const std::uint64_t sz = type_size(p, in.ty);
      if (!inside(c, *a, sz)) return fail("load outside allocated memory");
      auto v = read_mem(c.mem, static_cast<std::uint64_t>(*a), sz);
      if (!v) return fail("load of undefined memory");
      t.as[in.dst] = static_cast<std::int64_t>(*v);
      advance();
      break;
    }
    case Op::Store: {
      auto v = value(in.a), a = value(in.b);
      if (!v || !a) return fail("undefined variable");
      const std::uint64_t sz = type_size(p, in.ty);
      if (!inside(c, *a, sz)) return fail("store outside allocated memory");
      auto bytes = encode_le(static_cast<std::uint64_t>(*v), sz);
      for (std::size_t i = 0; i < sz; ++i) t.mem[static_cast<std::uint64_t>(*a) + i] = bytes[i];
      advance();
      break;
    }
    case Op::GepByte: {
      auto a = value(in.a), b = value(in.b);
      if (!a || !b) return fail("undefined variable");
      t.as[in.dst] = *a + *b;
      advance();
      break;
    }
    case Op::GepField: {
      auto a = value(in.a), i0 = value(in.b), fi = value(in.c);
      if (!a || !i0 || !fi) return fail("undefined variable");
      if (*fi < 0 || static_cast<std::size_t>(*fi) >= p.type(in.ty).fields.size()) return fail("bad field index");
      t.as[in.dst] = *a + *i0 * static_cast<std::int64_t>(type_size(p, in.ty)) +
                     static_cast<std::int64_t>(field_offset(p, in.ty, static_cast<std::size_t>(*fi) + 1));
      advance();
      break;
    }
    case Op::Icmp: {
      auto a = value(in.a), b = value(in.b);
      if (!a || !b) return fail("undefined variable");
      bool r = false;
      switch (in.pred) {
        case Pred::Eq: r = *a == *b; break;
        case Pred::Ne: r = *a != *b; break;
        case Pred::Ult: case Pred::Slt: r = *a < *b; break;
        case Pred::Ule: case Pred::Sle: r = *a <= *b; break;
        case Pred::Ugt: case Pred::Sgt: r = *a > *b; break;
        case Pred::Uge: case Pred::Sge: r = *a >= *b; break;
      }
      t.as[in.dst] = r ? 1 : 0;
      advance();
      break;
    }
    case Op::BrCond: {
      auto a = value(in.a);
      if (!a) return fail("undefined variable");
      jump(*a != 0 ? in.then_label : in.else_label);
      break;
    }
    case Op::Br:
      jump(in.then_label);
      break;
    case Op::Add: {
      auto a = value(in.a), b = value(in.b);
      if (!a || !b) return fail("undefined variable");
      t.as[in.dst] = *a + *b;
      advance();
      break;
    }
    case Op::Bitcast: {
      auto a = value(in.a);
      if (!a) return fail("undefined variable");
      t.as[in.dst] = *a;
      advance();
      break;
    }
    case Op::Malloc: {
      const std::uint64_t lo = fresh_address(c, in.size);
      t.allocs.push_back({lo, lo + in.size - 1});
      for (std::uint64_t i = 0; i < in.size; ++i) t.mem[lo + i] = 0;
      t.as[in.dst] = static_cast<std::int64_t>(lo);
      advance();
      break;
    }
    case Op::NondetInt: {
      std::int64_t v = nd.next();
      if (p.type(in.ty).bits == 1) v %= 2;
      t.as[in.dst] = v;
      advance();
      break;
    }
    case Op::Free: {
      auto a = value(in.a);
      if (!a) return fail("undefined variable");
      auto it = std::find_if(t.allocs.begin(), t.allocs.end(),
                             [&](const ConcreteAlloc& al) { return static_cast<std::int64_t>(al.lo) == *a; });
      if (it == t.allocs.end()) return fail("free of a non-allocation");
      for (std::uint64_t x = it->lo; x <= it->hi; ++x) t.mem.erase(x);
      t.allocs.erase(it);
      advance();
      break;
    }
    case Op::Ret:
      t.halted = true;
      break;
  }
  return t;
}

const char* run_outcome_str(RunOutcome o) {
  switch (o) {
    case RunOutcome::Returned: return "returned";
    case RunOutcome::Error: return "error";
    case RunOutcome::FuelExhausted: return "fuel-exhausted";
  }
  return "?";
}

Trace run_concrete(const Program& p, NondetStream& nd, std::size_t fuel) {
  Trace tr;
  tr.states.push_back(initial_concrete(p));
  for (std::size_t i = 0; i < fuel; ++i) {
    const ConcreteState& c = tr.states.back();
    if (c.halted || c.error) break;
    tr.states.push_back(concrete_step(p, c, nd));
  }
  const ConcreteState& last = tr.states.back();
  tr.outcome = last.error ? RunOutcome::Error : last.halted ? RunOutcome::Returned : RunOutcome::FuelExhausted;
  return tr;
}

std::string trace_str(const Program& p, const Trace& t) {
  std::ostringstream os;
  for (std::size_t i = 1; i < t.states.size(); ++i) {
    const auto& a = t.states[i - 1];
    const auto& b = t.states[i];
    os << p.pos_str(a.pos) << " | " << instr_str(p, p.at(a.pos)) << " |";
    for (const auto& [x, v] : b.as) {
      auto it = a.as.find(x);
      if (it == a.as.end() || it->second != v) os << " " << x << "=" << v;
    }
    std::set<std::uint64_t> fresh;
    for (const auto& al : b.allocs)
      if (std::find(a.allocs.begin(), a.allocs.end(), al) == a.allocs.end()) {
        os << " alloc[" << al.lo << "," << al.hi << "]";
        for (auto x = al.lo; x <= al.hi; ++x) fresh.insert(x);
      }
    for (const auto& al : a.allocs)
      if (std::find(b.allocs.begin(), b.allocs.end(), al) == b.allocs.end())
        os << " free[" << al.lo << "," << al.hi << "]";
    for (const auto& [x, v] : b.mem) {
      if (fresh.count(x)) continue;
      auto it = a.mem.find(x);
      if (it == a.mem.end() || it->second != v) os << " @" << x << "=" << static_cast<int>(v);
    }
    if (b.error) os << " error: " << b.error_msg;
    os << "\n";
  }
  os << "outcome: " << run_outcome_str(t.outcome) << "\n";
  return os.str();
}

bool eval_li_predicate(const Memory& mem, std::uint64_t bs, std::size_t j, std::int64_t len, std::int64_t ad,
                       const std::vector<LiField>& fields, std::vector<std::uint64_t>* elements) {
  if (len < 1 || j >= fields.size()) return false;
  std::vector<std::uint64_t> starts;
  std::int64_t addr = ad;
  for (std::int64_t k = 1; k <= len; ++k) {
    if (addr < 1) return false;
    const auto a = static_cast<std::uint64_t>(addr);
    for (std::uint64_t x = a; x < a + bs; ++x)
      if (!mem.count(x)) return false;
    for (auto e : starts)
      if (a < e + bs && e < a + bs) return false;  // element footprints must be separate
    starts.push_back(a);
    std::int64_t next = 0;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto v = static_cast<std::int64_t>(*read_mem(mem, a + fields[i].off, fields[i].size));
      if (k == 1 && v != fields[i].first) return false;
      if (k == len && v != fields[i].last) return false;
      if (i == j) next = v;
    }
    addr = next;
  }
  if (elements) elements->insert(elements->end(), starts.begin(), starts.end());
  return true;
}

Interpretation extract_interpretation(const ConcreteState& c) { return {c.as, c.mem}; }

ConcreteState rebuild_state(Position pos, const Interpretation& i, const std::vector<ConcreteAlloc>& allocs) {
  ConcreteState c;
  c.pos = pos;
  c.as = i.as;
  c.mem = i.mem;
  c.allocs = allocs;
  return c;
}

// ---------------------------------------------------------------- representation

namespace {

class Representation {
 public:
  Representation(const ConcreteState& c, const AbstractState& s, const Ctx& ctx, const Formula& phi)
      : c_(c), s_(s), ctx_(ctx), phi_(phi) {
    for (const auto& cl : phi.clauses())
      if (cl.size() == 1 && cl[0].rel() == Rel::Eq) eqs_.push_back(cl[0].term());
    for (VarId v : state_vars(s)) vars_.insert(v);
    for (VarId v : phi.vars()) vars_.insert(v);
  }

  bool run(Assignment& sg) {
    for (const auto& [x, v] : s_.lv) {
      auto it = c_.as.find(x);
      if (it == c_.as.end()) return fail("variable " + x + " has no concrete value");
      if (!bind(sg, v.id, it->second)) return false;
    }
    if (s_.lv.size() != c_.as.size()) return fail("variable domains differ");
    std::vector<bool> done(s_.li.size(), false);
    return search(sg, done);
  }

  std::string why;

 private:
  bool fail(const std::string& m) {
    if (why.empty()) why = m;
    return false;
  }

  bool bind(Assignment& sg, VarId v, std::int64_t val) {
    auto [it, fresh] = sg.emplace(v, val);
    if (!fresh && it->second != val)
      return fail(ctx_.pool.name(v) + " needs both " + std::to_string(it->second) + " and " + std::to_string(val));
    return true;
  }

  const ConcreteAlloc* alloc_at(std::int64_t lo) const {
    for (const auto& a : c_.allocs)
      if (static_cast<std::int64_t>(a.lo) == lo) return &a;
    return nullptr;
  }

  std::uint64_t field_size(const ListField& f) const { return type_size(ctx_.prog, f.ty); }

  // Binds the parameters of invariant l from a walk of `len` elements starting at sg[ad].
  bool fix_list(Assignment& sg, const ListInvariant& l, std::int64_t len) {
    std::int64_t addr = sg.at(l.ad.id);
    const std::uint64_t bs = type_size(ctx_.prog, l.ty);
    for (std::int64_t k = 1; k <= len; ++k) {
      const ConcreteAlloc* a = alloc_at(addr);
      if (!a || a->hi - a->lo + 1 != bs) return fail("list element is not an allocation of the list type");
      std::int64_t next = 0;
      for (std::size_t i = 0; i < l.fields.size(); ++i) {
        const auto& f = l.fields[i];
        auto v = read_mem(c_.mem, static_cast<std::uint64_t>(addr) + f.off, field_size(f));
        if (!v) return fail("list field undefined");
        const auto val = static_cast<std::int64_t>(*v);
        if (k == 1 && !bind(sg, f.first.id, val)) return false;
        if (k == len && !bind(sg, f.last.id, val)) return false;
        if (i == l.rec) next = val;
      }
      addr = next;
    }
    return bind(sg, l.len.id, len);
  }

  bool propagate(Assignment& sg, std::vector<bool>& done) {
    for (bool changed = true; changed;) {
      changed = false;
      const std::size_t before = sg.size();
      for (const Term& t : eqs_) {
        std::int64_t rest = t.constant();
        std::optional<std::pair<VarId, std::int64_t>> unknown;
        bool several = false;
        for (const auto& [v, k] : t.coeffs()) {
          auto it = sg.find(v);
          if (it != sg.end()) {
            rest += k * it->second;
          } else if (unknown) {
            several = true;
          } else {
            unknown = std::make_pair(v, k);
          }
        }
        if (several) continue;
        if (!unknown) {
          if (rest != 0) return fail("equality " + Atom(Rel::Eq, t).str(&ctx_.pool) + " fails");
          continue;
        }
        if (rest % unknown->second != 0) return fail("equality has no integer solution");
        if (!bind(sg, unknown->first, -rest / unknown->second)) return false;
      }
      for (const auto& a : s_.al) {
        auto lo = sg.find(a.lo.id), hi = sg.find(a.hi.id);
        if (lo != sg.end() && hi == sg.end()) {
          const ConcreteAlloc* ca = alloc_at(lo->second);
          if (!ca) return fail("no allocation starts at " + std::to_string(lo->second));
          if (!bind(sg, a.hi.id, static_cast<std::int64_t>(ca->hi))) return false;
        } else if (hi != sg.end() && lo == sg.end()) {
          auto it = std::find_if(c_.allocs.begin(), c_.allocs.end(), [&](const ConcreteAlloc& x) {
            return static_cast<std::int64_t>(x.hi) == hi->second;
          });
          if (it == c_.allocs.end()) return fail("no allocation ends at " + std::to_string(hi->second));
          if (!bind(sg, a.lo.id, static_cast<std::int64_t>(it->lo))) return false;
        }
      }
      for (const auto& e : s_.pt) {
        auto ad = sg.find(e.addr.id);
        if (ad == sg.end() || sg.count(e.value.id)) continue;
        if (ad->second < 1) return fail("points-to address is not positive");
        auto v = read_mem(c_.mem, static_cast<std::uint64_t>(ad->second), type_size(ctx_.prog, e.ty));
        if (!v) return fail("points-to cell is undefined");
        if (!bind(sg, e.value.id, static_cast<std::int64_t>(*v))) return false;
      }
      for (std::size_t k = 0; k < s_.li.size(); ++k) {
        const auto& l = s_.li[k];
        if (done[k] || !sg.count(l.ad.id) || !sg.count(l.len.id)) continue;
        if (!fix_list(sg, l, sg.at(l.len.id))) return false;
        done[k] = true;
      }
      changed = sg.size() != before;
    }
    return true;
  }

  // Longest chain of list-typed allocations from addr (bounded, cycles cut).
  std::int64_t chain_length(const ListInvariant& l, std::int64_t addr) const {
    const std::uint64_t bs = type_size(ctx_.prog, l.ty);
    std::set<std::int64_t> seen;
    std::int64_t n = 0;
    while (n < 64 && !seen.count(addr)) {
      const ConcreteAlloc* a = alloc_at(addr);
      if (!a || a->hi - a->lo + 1 != bs) break;
      seen.insert(addr);
      ++n;
      auto v = read_mem(c_.mem, static_cast<std::uint64_t>(addr) + l.fields[l.rec].off, field_size(l.fields[l.rec]));
      if (!v) break;
      addr = static_cast<std::int64_t>(*v);
    }
    return n;
  }

  bool search(Assignment& sg, std::vector<bool>& done) {
    if (!propagate(sg, done)) return false;
    for (std::size_t k = 0; k < s_.li.size(); ++k) {
      if (done[k] || !sg.count(s_.li[k].ad.id)) continue;
      const std::int64_t m = chain_length(s_.li[k], sg.at(s_.li[k].ad.id));
      for (std::int64_t len = 1; len <= m; ++len) {
        Assignment trial = sg;
        std::vector<bool> d = done;
        const std::string saved = why;
        if (!fix_list(trial, s_.li[k], len)) continue;
        d[k] = true;
        if (search(trial, d)) {
          sg = std::move(trial);
          done = std::move(d);
          return true;
        }
        why = saved;
      }
      return fail("no list length fits the invariant at " + ctx_.pool.name(s_.li[k].ad));
    }
    if (std::find(done.begin(), done.end(), false) != done.end()) return fail("list start undetermined");
    for (VarId v : vars_)
      if (!sg.count(v) && !choose_free(sg, v)) return fail("no value for " + ctx_.pool.name(v));
    return final_check(sg);
  }

  // A variable only constrained by the formula: take the least value within its unit bounds.
  bool choose_free(Assignment& sg, VarId v) {
    std::int64_t lo = 0, hi = INT64_MAX;
    std::set<std::int64_t> banned;
    for (const auto& cl : phi_.clauses()) {
      if (cl.size() != 1 || !cl[0].term().mentions(v)) continue;
      std::int64_t rest = cl[0].term().constant(), k = 0;
      bool other = false;
      for (const auto& [w, c] : cl[0].term().coeffs()) {
        if (w == v) {
          k = c;
        } else if (auto it = sg.find(w); it != sg.end()) {
          rest += c * it->second;
        } else {
          other = true;
        }
      }
      if (other) continue;
      // k * v + rest REL 0
      if (cl[0].rel() == Rel::Ne) {
        if (rest % k == 0) banned.insert(-rest / k);
      } else if (cl[0].rel() == Rel::Eq) {
        if (rest % k != 0) return false;
        lo = std::max(lo, -rest / k);
        hi = std::min(hi, -rest / k);
      } else if (k > 0) {
        hi = std::min(hi, floor_div(-rest, k));
      } else {
        lo = std::max(lo, ceil_div(rest, -k));
      }
    }
    for (std::int64_t x = lo; x <= hi && x < lo + 64; ++x)
      if (!banned.count(x)) {
        sg[v] = x;
        return true;
      }
    return false;
  }
  static std::int64_t floor_div(std::int64_t a, std::int64_t b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0))); }
  static std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

  bool final_check(const Assignment& sg) {
    for (const auto& cl : phi_.clauses())
      if (!std::any_of(cl.begin(), cl.end(), [&](const Atom& a) { return eval_atom(sg, a); }))
        return fail("state formula clause fails: " + (cl.size() == 1 ? cl[0].str(&ctx_.pool) : std::string("disjunction")));

    std::set<std::uint64_t> used;  // allocation starts claimed by AL entries and list elements
    for (const auto& a : s_.al) {
      const ConcreteAlloc* ca = alloc_at(sg.at(a.lo.id));
      if (!ca || static_cast<std::int64_t>(ca->hi) != sg.at(a.hi.id)) return fail("allocation image mismatch");
      if (!used.insert(ca->lo).second) return fail("two allocations share an image");
    }
    for (const auto& e : s_.pt) {
      auto v = read_mem(c_.mem, static_cast<std::uint64_t>(sg.at(e.addr.id)), type_size(ctx_.prog, e.ty));
      if (!v || static_cast<std::int64_t>(*v) != sg.at(e.value.id)) return fail("points-to value mismatch");
    }
    for (const auto& l : s_.li) {
      std::vector<LiField> fs;
      for (const auto& f : l.fields) fs.push_back({f.off, field_size(f), sg.at(f.first.id), sg.at(f.last.id)});
      std::vector<std::uint64_t> elems;
      if (!eval_li_predicate(c_.mem, type_size(ctx_.prog, l.ty), l.rec, sg.at(l.len.id), sg.at(l.ad.id), fs, &elems))
        return fail("list predicate fails at " + ctx_.pool.name(l.ad));
      for (auto e : elems) {
        const ConcreteAlloc* ca = alloc_at(static_cast<std::int64_t>(e));
        if (!ca || ca->hi - ca->lo + 1 != type_size(ctx_.prog, l.ty)) return fail("list element is not an allocation");
        if (!used.insert(e).second) return fail("list element overlaps another part of the state");
      }
    }
    return true;
  }

  const ConcreteState& c_;
  const AbstractState& s_;
  const Ctx& ctx_;
  const Formula& phi_;
  std::vector<Term> eqs_;
  std::set<VarId> vars_;
};

}  // namespace

bool represents(const ConcreteState& c, const AbstractState& s, const Ctx& ctx, const Formula* phi, Assignment* sigma,
                std::string* why) {
  if (s.err) {
    if (why) *why = "error state";
    return false;
  }
  if (c.pos != s.pos) {
    if (why) *why = "positions differ";
    return false;
  }
  Formula own;
  if (!phi) {
    own = state_formula(s, ctx);
    phi = &own;
  }
  Representation r(c, s, ctx, *phi);
  Assignment sg;
  const bool ok = r.run(sg);
  if (ok && sigma) *sigma = std::move(sg);
  if (!ok && why) *why = r.why;
  return ok;
}

// ---------------------------------------------------------------- differential runs

const Formula& Differential::phi(int n) {
  auto it = phi_.find(n);
  if (it != phi_.end()) return it->second;
  return phi_.emplace(n, state_formula(g_.nodes[n].state, ctx_)).first->second;
}

void Differential::run(NondetStream& nd, std::size_t fuel, DiffReport& rep) {
  ++rep.runs;
  ConcreteState c = initial_concrete(prog_);
  int n = g_.root;
  std::string pending;  // rule of the edge just taken
  std::size_t steps = 0;
  auto violation = [&](const std::string& m) {
    ++rep.violations;
    if (rep.messages.size() < 20) rep.messages.push_back(m);
  };
  for (;;) {
    const SegNode& node = g_.nodes[n];
    if (node.state.err) return;  // the analysis already reports a possible error here
    std::string why;
    if (!represents(c, node.state, ctx_, &phi(n), nullptr, &why)) {
      violation("node " + std::to_string(n) + " at " + prog_.pos_str(node.state.pos) +
                (pending.empty() ? "" : " after " + pending) + ": " + why);
      return;
    }
    ++rep.checked_states;
    if (!pending.empty()) ++rep.rule_checks[pending];
    pending.clear();

    const auto outs = g_.out_edges(n);
    if (outs.empty()) return;  // return state, or the unexplored frontier of an incomplete graph
    const SegEdge& first = g_.edges[outs.front()];
    if (first.kind == EdgeKind::Generalization) {
      pending = first.rule;
      n = first.dst;
      continue;
    }
    if (first.kind == EdgeKind::Refinement) {
      int pick = -1;
      for (int ei : outs) {
        const int m = g_.edges[ei].dst;
        if (g_.nodes[m].state.err || represents(c, g_.nodes[m].state, ctx_, &phi(m))) {
          pick = ei;
          break;
        }
      }
      if (pick < 0) {
        violation("no refinement of node " + std::to_string(n) + " represents the concrete state");
        return;
      }
      pending = g_.edges[pick].rule;
      n = g_.edges[pick].dst;
      continue;
    }
    if (steps++ >= fuel) {
      ++rep.fuel_exhausted;
      return;
    }
    ConcreteState next = concrete_step(prog_, c, nd);
    if (next.error) {
      if (!g_.nodes[first.dst].state.err)
        violation("concrete error '" + next.error_msg + "' at " + prog_.pos_str(c.pos) + " not predicted");
      return;
    }
    pending = first.rule;
    n = first.dst;
    c = std::move(next);
  }
}

}  // namespace listterm
