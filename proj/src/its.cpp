#include "listterm/its.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace listterm {

int Its::loc_of(int node) const {
  for (std::size_t i = 0; i < locs.size(); ++i)
    if (locs[i].node == node) return static_cast<int>(i);
  return -1;
}

namespace {

std::vector<VarId> location_vars(const AbstractState& s) {
  std::vector<VarId> v;
  for (const auto& [_, x] : s.lv) v.push_back(x.id);
  for (const auto& l : s.li) {
    v.push_back(l.len.id);
    for (const auto& f : l.fields) {
      v.push_back(f.first.id);
      v.push_back(f.last.id);
    }
  }
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Tarjan; components in reverse topological order of the condensation.
std::vector<std::vector<int>> sccs(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::vector<int>> adj(n);
  for (auto [a, b] : edges) adj[a].push_back(b);
  std::vector<int> index(n, -1), low(n, 0), stack;
  std::vector<bool> on(n, false);
  std::vector<std::vector<int>> out;
  int counter = 0;
  std::function<void(int)> visit = [&](int v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on[v] = true;
    for (int w : adj[v]) {
      if (index[w] < 0) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<int> comp;
      int w;
      do {
        w = stack.back();
        stack.pop_back();
        on[w] = false;
        comp.push_back(w);
      } while (w != v);
      std::sort(comp.begin(), comp.end());
      out.push_back(std::move(comp));
    }
  };
  for (int v = 0; v < n; ++v)
    if (index[v] < 0) visit(v);
  return out;
}

bool nontrivial(const std::vector<int>& comp, const std::vector<std::pair<int, int>>& edges) {
  if (comp.size() > 1) return true;
  return std::any_of(edges.begin(), edges.end(),
                     [&](auto e) { return e.first == comp[0] && e.second == comp[0]; });
}

std::string symbol(const std::string& name) {
  std::string s;
  for (char c : name) s += std::isalnum(static_cast<unsigned char>(c)) || c == '_' ? c : '_';
  return s;
}

}  // namespace

Its extract_its(const Seg& g, const Ctx& ctx) {
  Its all;
  std::set<int> targets;
  for (const auto& e : g.edges)
    if (e.kind == EdgeKind::Generalization) targets.insert(e.dst);
  for (int t : targets) all.locs.push_back({t, location_vars(g.nodes[t].state)});

  std::map<int, Formula> phi;
  auto unit_facts = [&](int n) -> const Formula& {
    auto it = phi.find(n);
    if (it != phi.end()) return it->second;
    Formula f;
    const Formula full = state_formula(g.nodes[n].state, ctx);
    for (const auto& c : full.clauses())
      if (c.size() == 1) f.add(c);
    return phi.emplace(n, std::move(f)).first->second;
  };

  std::vector<int> path;
  auto emit = [&](int src, int dst, const Instantiation* mu) {
    ItsTransition t;
    t.src = src;
    t.dst = dst;
    t.path = path;
    for (int n : path) t.guard.add_all(unit_facts(n));
    for (VarId x : all.locs[dst].vars) {
      if (!mu) {
        t.update[x] = Term::var(x);
      } else if (auto it = mu->find(x); it != mu->end()) {
        t.update[x] = it->second;
      } else {
        t.update[x] = Term(ctx.pool.fresh("havoc"));
      }
    }
    all.trans.push_back(std::move(t));
  };
  std::function<void(int, int, bool)> walk = [&](int src, int n, bool first) {
    if (g.nodes[n].state.err) return;
    path.push_back(n);
    const int here = all.loc_of(n);
    if (!first && here >= 0) {
      emit(src, here, nullptr);
    } else {
      bool left = false;
      for (int ei : g.out_edges(n)) {
        const auto& e = g.edges[ei];
        if (e.kind == EdgeKind::Generalization) {
          emit(src, all.loc_of(e.dst), &e.mu);
          left = true;
          break;
        }
      }
      if (!left)
        for (int ei : g.out_edges(n)) walk(src, g.edges[ei].dst, false);
    }
    path.pop_back();
  };
  for (std::size_t l = 0; l < all.locs.size(); ++l) walk(static_cast<int>(l), all.locs[l].node, true);

  // Keep the cyclic part only.
  std::vector<std::pair<int, int>> es;
  for (const auto& t : all.trans) es.emplace_back(t.src, t.dst);
  std::vector<int> comp_of(all.locs.size(), -1);
  auto comps = sccs(static_cast<int>(all.locs.size()), es);
  for (std::size_t c = 0; c < comps.size(); ++c)
    if (nontrivial(comps[c], es))
      for (int v : comps[c]) comp_of[v] = static_cast<int>(c);

  Its its;
  std::map<int, int> reindex;
  for (std::size_t l = 0; l < all.locs.size(); ++l) {
    if (comp_of[l] < 0) continue;
    reindex[static_cast<int>(l)] = static_cast<int>(its.locs.size());
    its.locs.push_back(all.locs[l]);
  }
  for (auto& t : all.trans) {
    if (comp_of[t.src] < 0 || comp_of[t.src] != comp_of[t.dst]) continue;
    if (Prover(t.guard, ctx.cfg).premise_unsat()) continue;
    t.src = reindex[t.src];
    t.dst = reindex[t.dst];
    its.trans.push_back(std::move(t));
  }
  auto name = [&](VarId v) { its.names.emplace(v, symbol(ctx.pool.name(v))); };
  for (const auto& l : its.locs)
    for (VarId v : l.vars) name(v);
  for (const auto& t : its.trans) {
    for (VarId v : t.guard.vars()) name(v);
    for (const auto& [_, u] : t.update)
      for (const auto& [v, k] : u.coeffs()) name(v);
  }
  return its;
}

// ---------------------------------------------------------------- ranking

namespace {

Term apply_update(const ItsTransition& t, const Term& r) {
  return r.substitute([&](VarId v) -> std::optional<Term> {
    auto it = t.update.find(v);
    if (it == t.update.end()) return std::nullopt;
    return it->second;
  });
}

ItsTransition compose(const ItsTransition& a, const ItsTransition& b, const std::vector<VarId>& mid, VarPool& pool) {
  std::set<VarId> mids(mid.begin(), mid.end());
  std::map<VarId, Term> sigma;
  auto fresh = [&](VarId v) {
    if (sigma.count(v)) return;
    if (mids.count(v)) {
      auto it = a.update.find(v);
      sigma[v] = it != a.update.end() ? it->second : Term(pool.fresh("havoc"));
    } else {
      sigma[v] = Term(pool.fresh(pool.hint(v)));
    }
  };
  for (VarId v : b.guard.vars()) fresh(v);
  for (const auto& [_, u] : b.update)
    for (const auto& [v, k] : u.coeffs()) fresh(v);
  auto sub = [&](VarId v) -> std::optional<Term> {
    auto it = sigma.find(v);
    if (it == sigma.end()) return std::nullopt;
    return it->second;
  };
  ItsTransition c;
  c.src = a.src;
  c.dst = b.dst;
  c.path = a.path;
  c.path.insert(c.path.end(), b.path.begin(), b.path.end());
  c.guard = a.guard;
  c.guard.add_all(b.guard.substitute(sub));
  for (const auto& [x, u] : b.update) c.update[x] = u.substitute(sub);
  return c;
}

constexpr std::size_t kMaxComposed = 256;

struct Loop {
  const ItsTransition* t;
  Prover pr;
  std::map<VarId, std::int64_t> delta;  // constant change of each head variable
};

std::optional<std::int64_t> lower_bound(const Prover& pr, const Term& r) {
  if (auto c = pr.implied_constant(r)) return *c;
  for (std::int64_t c : {0, -1, -2, -4, -8, -16, -64, -256, -1024})
    if (pr.proves(Atom::ge(r, Term(c)))) return c;
  return std::nullopt;
}

// One lexicographic component over the remaining loops, or nullopt.
std::optional<RankingStep> find_rank(const std::vector<Loop>& loops, const std::vector<int>& live,
                                     const std::vector<VarId>& vars) {
  std::vector<VarId> known;
  for (VarId v : vars)
    if (std::all_of(live.begin(), live.end(), [&](int i) { return loops[i].delta.count(v) > 0; }))
      known.push_back(v);

  std::optional<RankingStep> best;
  auto consider = [&](const Term& r, const std::vector<std::int64_t>& dec) {
    RankingStep step;
    step.rank = r;
    bool first = true;
    for (std::size_t j = 0; j < live.size(); ++j) {
      if (dec[j] < 0) return;
      if (dec[j] == 0) continue;
      auto b = lower_bound(loops[live[j]].pr, r);
      if (!b) continue;
      step.transitions.push_back(live[j]);
      step.bound = first ? *b : std::min(step.bound, *b);
      first = false;
    }
    if (step.transitions.empty()) return;
    if (!best || step.transitions.size() > best->transitions.size()) best = std::move(step);
  };
  auto decrease = [&](const std::vector<std::pair<VarId, std::int64_t>>& lin) {
    std::vector<std::int64_t> dec;
    for (int i : live) {
      std::int64_t d = 0;
      for (auto [v, k] : lin) d -= k * loops[i].delta.at(v);
      dec.push_back(d);
    }
    return dec;
  };

  for (VarId v : known)
    for (std::int64_t k : {1, -1}) consider(Term::var(v, k), decrease({{v, k}}));
  if (best) return best;

  // Single variables whose change is not constant: ask the prover directly.
  for (VarId v : vars) {
    if (std::find(known.begin(), known.end(), v) != known.end()) continue;
    for (std::int64_t k : {1, -1}) {
      const Term r = Term::var(v, k);
      std::vector<std::int64_t> dec;
      for (int i : live) {
        const Term after = apply_update(*loops[i].t, r);
        if (loops[i].pr.proves(Atom::le(after, r - 1))) dec.push_back(1);
        else if (loops[i].pr.proves(Atom::le(after, r))) dec.push_back(0);
        else dec.push_back(-1);
      }
      consider(r, dec);
    }
  }
  if (best) return best;

  // Coefficient tuples by increasing magnitude, so the simplest rank is found first.
  auto tuples = [](std::size_t arity) {
    std::vector<std::vector<std::int64_t>> out;
    std::vector<std::int64_t> cur(arity, 0);
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
      if (i == arity) {
        std::int64_t g = 0;
        for (auto k : cur) g = std::gcd(g, k);
        if (g == 1) out.push_back(cur);
        return;
      }
      for (std::int64_t k = -4; k <= 4; ++k) {
        if (!k) continue;
        cur[i] = k;
        rec(i + 1);
      }
    };
    rec(0);
    auto norm = [](const std::vector<std::int64_t>& v) {
      std::int64_t n = 0;
      for (auto k : v) n += std::abs(k);
      return n;
    };
    std::stable_sort(out.begin(), out.end(), [&](const auto& a, const auto& b) { return norm(a) < norm(b); });
    return out;
  };
  auto combos = [&](std::size_t arity) {
    std::vector<std::size_t> idx(arity);
    std::function<void(std::size_t, std::size_t, const std::vector<std::vector<std::int64_t>>&)> rec =
        [&](std::size_t i, std::size_t from, const std::vector<std::vector<std::int64_t>>& ks) {
          if (i == arity) {
            for (const auto& k : ks) {
              Term r;
              std::vector<std::pair<VarId, std::int64_t>> lin;
              for (std::size_t j = 0; j < arity; ++j) {
                r += Term::var(known[idx[j]], k[j]);
                lin.emplace_back(known[idx[j]], k[j]);
              }
              consider(r, decrease(lin));
            }
            return;
          }
          for (std::size_t a = from; a < known.size(); ++a) {
            idx[i] = a;
            rec(i + 1, a + 1, ks);
          }
        };
    rec(0, 0, tuples(arity));
  };
  combos(2);
  if (best || known.size() > 16) return best;
  combos(3);
  return best;
}

}  // namespace

TerminationResult prove_termination(const Its& its, Ctx& ctx) {
  TerminationResult res;
  std::vector<std::pair<int, int>> es;
  for (const auto& t : its.trans) es.emplace_back(t.src, t.dst);
  auto comps = sccs(static_cast<int>(its.locs.size()), es);
  std::reverse(comps.begin(), comps.end());  // outer components first

  for (const auto& comp : comps) {
    if (!nontrivial(comp, es)) continue;
    SccCertificate cert;
    cert.locs = comp;
    cert.head = comp.front();
    std::set<int> in(comp.begin(), comp.end());

    std::vector<ItsTransition> ts;
    for (const auto& t : its.trans)
      if (in.count(t.src) && in.count(t.dst)) ts.push_back(t);
    for (int l : comp) {
      if (l == cert.head) continue;
      std::vector<ItsTransition> into, from, rest;
      for (auto& t : ts) {
        if (t.src == l && t.dst == l) {
          res.reason = "location " + std::to_string(its.locs[l].node) + " has a self-loop and is not the head";
          return res;
        }
        (t.dst == l ? into : t.src == l ? from : rest).push_back(std::move(t));
      }
      for (const auto& a : into)
        for (const auto& b : from) {
          auto c = compose(a, b, its.locs[l].vars, ctx.pool);
          if (!Prover(c.guard, ctx.cfg).premise_unsat()) rest.push_back(std::move(c));
        }
      if (rest.size() > kMaxComposed) {
        res.reason = "too many transitions after location elimination";
        return res;
      }
      ts = std::move(rest);
    }
    cert.loops = std::move(ts);

    std::vector<Loop> loops;
    const auto& vars = its.locs[cert.head].vars;
    for (const auto& t : cert.loops) {
      Loop lp{&t, Prover(t.guard, ctx.cfg), {}};
      for (VarId v : vars) {
        auto it = t.update.find(v);
        if (it == t.update.end()) continue;
        if (auto d = lp.pr.implied_constant(it->second - Term::var(v))) lp.delta[v] = *d;
      }
      loops.push_back(std::move(lp));
    }
    std::vector<int> live(loops.size());
    std::iota(live.begin(), live.end(), 0);
    while (!live.empty()) {
      auto step = find_rank(loops, live, vars);
      if (!step) {
        res.reason = "no linear ranking function for location " + std::to_string(its.locs[cert.head].node);
        return res;
      }
      for (int i : step->transitions) live.erase(std::find(live.begin(), live.end(), i));
      cert.steps.push_back(std::move(*step));
    }
    if (!verify_certificate(cert, its, ctx)) {
      res.reason = "certificate check failed";
      return res;
    }
    res.sccs.push_back(std::move(cert));
  }
  res.terminating = true;
  return res;
}

bool verify_certificate(const SccCertificate& c, const Its& its, const Ctx& ctx) {
  if (c.head < 0 || c.head >= static_cast<int>(its.locs.size())) return false;
  std::set<int> removed;
  for (const auto& s : c.steps) {
    for (std::size_t i = 0; i < c.loops.size(); ++i) {
      if (removed.count(static_cast<int>(i))) continue;
      const auto& t = c.loops[i];
      if (t.src != c.head || t.dst != c.head) return false;
      Prover pr(t.guard, ctx.cfg);
      const Term after = apply_update(t, s.rank);
      const bool strict = std::count(s.transitions.begin(), s.transitions.end(), static_cast<int>(i)) > 0;
      if (!pr.proves(Atom::le(after, strict ? s.rank - 1 : s.rank))) return false;
      if (strict && !pr.proves(Atom::ge(s.rank, Term(s.bound)))) return false;
    }
    for (int i : s.transitions) removed.insert(i);
  }
  return removed.size() == c.loops.size();
}

// ---------------------------------------------------------------- export

namespace {

struct Printer {
  const Its& its;
  std::string var(VarId v, bool primed = false) const {
    auto it = its.names.find(v);
    std::string n = it != its.names.end() ? it->second : "v_" + std::to_string(v);
    return primed ? n + "_p" : n;
  }
  static std::string num(std::int64_t k) { return k < 0 ? "(- " + std::to_string(-k) + ")" : std::to_string(k); }
  std::string term(const Term& t) const {
    std::vector<std::string> parts;
    for (const auto& [v, k] : t.coeffs()) parts.push_back(k == 1 ? var(v) : "(* " + num(k) + " " + var(v) + ")");
    if (t.constant() != 0 || parts.empty()) parts.push_back(num(t.constant()));
    if (parts.size() == 1) return parts[0];
    std::string s = "(+";
    for (const auto& p : parts) s += " " + p;
    return s + ")";
  }
  std::string atom(const Atom& a) const {
    const std::string t = term(a.term());
    switch (a.rel()) {
      case Rel::Eq: return "(= " + t + " 0)";
      case Rel::Ne: return "(not (= " + t + " 0))";
      case Rel::Le: return "(<= " + t + " 0)";
    }
    return "";
  }
  std::string clause(const Clause& c) const {
    if (c.size() == 1) return atom(c[0]);
    std::string s = "(or";
    for (const auto& a : c) s += " " + atom(a);
    return s + ")";
  }
  std::string app(int loc, bool primed) const {
    std::string s = "(L" + std::to_string(its.locs[loc].node);
    for (VarId v : its.locs[loc].vars) s += " " + var(v, primed);
    return s + ")";
  }
};

}  // namespace

std::string export_its(const Its& its) {
  Printer p{its};
  std::ostringstream os;
  for (const auto& l : its.locs) {
    os << "(declare-rel L" << l.node << " (";
    for (std::size_t i = 0; i < l.vars.size(); ++i) os << (i ? " " : "") << "Int";
    os << "))\n";
  }
  std::set<VarId> primed;
  for (const auto& l : its.locs) primed.insert(l.vars.begin(), l.vars.end());
  for (const auto& [v, _] : its.names) os << "(declare-var " << p.var(v) << " Int)\n";
  for (VarId v : primed) os << "(declare-var " << p.var(v, true) << " Int)\n";
  for (const auto& t : its.trans) {
    os << "(rule (=> (and";
    for (const auto& c : t.guard.clauses()) os << " " << p.clause(c);
    for (const auto& [x, u] : t.update) os << " (= " << p.var(x, true) << " " << p.term(u) << ")";
    os << " " << p.app(t.src, false) << ") " << p.app(t.dst, true) << "))\n";
  }
  return os.str();
}

// ---------------------------------------------------------------- reader

namespace {

struct Sexp {
  std::string atom;
  std::vector<Sexp> list;
  bool is_atom() const { return !atom.empty(); }
};

class SexpReader {
 public:
  explicit SexpReader(const std::string& s) : s_(s) {}
  std::optional<Sexp> next() {
    skip();
    if (i_ >= s_.size()) return std::nullopt;
    return read();
  }

 private:
  void skip() {
    while (i_ < s_.size()) {
      if (std::isspace(static_cast<unsigned char>(s_[i_]))) {
        ++i_;
      } else if (s_[i_] == ';') {
        while (i_ < s_.size() && s_[i_] != '\n') ++i_;
      } else {
        break;
      }
    }
  }
  Sexp read() {
    skip();
    if (i_ >= s_.size()) throw std::runtime_error("unexpected end of input");
    Sexp e;
    if (s_[i_] == '(') {
      ++i_;
      for (;;) {
        skip();
        if (i_ >= s_.size()) throw std::runtime_error("unbalanced parenthesis");
        if (s_[i_] == ')') {
          ++i_;
          return e;
        }
        e.list.push_back(read());
      }
    }
    if (s_[i_] == ')') throw std::runtime_error("unexpected ')'");
    while (i_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[i_])) && s_[i_] != '(' && s_[i_] != ')')
      e.atom += s_[i_++];
    return e;
  }
  const std::string& s_;
  std::size_t i_ = 0;
};

bool head_is(const Sexp& e, const char* h) { return !e.list.empty() && e.list[0].atom == h; }

}  // namespace

Its parse_its(const std::string& text, VarPool& pool) {
  Its its;
  std::map<std::string, VarId> vars;
  std::map<std::string, std::pair<int, std::size_t>> rels;  // name -> (loc, arity)

  auto lookup = [&](const std::string& n) -> VarId {
    auto it = vars.find(n);
    if (it == vars.end()) throw std::runtime_error("undeclared variable " + n);
    return it->second;
  };
  std::function<Term(const Sexp&)> term = [&](const Sexp& e) -> Term {
    if (e.is_atom()) {
      if (std::isdigit(static_cast<unsigned char>(e.atom[0]))) return Term(std::stoll(e.atom));
      return Term::var(lookup(e.atom));
    }
    if (head_is(e, "-") && e.list.size() == 2) return -term(e.list[1]);
    if (head_is(e, "*") && e.list.size() == 3) {
      const Term k = term(e.list[1]);
      if (!k.is_constant()) throw std::runtime_error("nonlinear term");
      return term(e.list[2]) * k.constant();
    }
    if (head_is(e, "+")) {
      Term t;
      for (std::size_t i = 1; i < e.list.size(); ++i) t += term(e.list[i]);
      return t;
    }
    throw std::runtime_error("malformed term");
  };
  auto atom = [&](const Sexp& e) -> Atom {
    if (head_is(e, "=") && e.list.size() == 3) return Atom::eq(term(e.list[1]), term(e.list[2]));
    if (head_is(e, "<=") && e.list.size() == 3) return Atom::le(term(e.list[1]), term(e.list[2]));
    if (head_is(e, "not") && e.list.size() == 2 && head_is(e.list[1], "=") && e.list[1].list.size() == 3)
      return Atom::ne(term(e.list[1].list[1]), term(e.list[1].list[2]));
    throw std::runtime_error("malformed atom");
  };
  auto app = [&](const Sexp& e) -> std::optional<std::pair<int, std::vector<std::string>>> {
    if (e.list.empty() || !rels.count(e.list[0].atom)) return std::nullopt;
    auto [loc, arity] = rels.at(e.list[0].atom);
    if (e.list.size() != arity + 1) throw std::runtime_error("wrong arity for " + e.list[0].atom);
    std::vector<std::string> args;
    for (std::size_t i = 1; i < e.list.size(); ++i) args.push_back(e.list[i].atom);
    return std::make_pair(loc, args);
  };
  auto unprime = [](const std::string& n) {
    if (n.size() < 3 || n.compare(n.size() - 2, 2, "_p") != 0) throw std::runtime_error("expected primed " + n);
    return n.substr(0, n.size() - 2);
  };
  auto set_vars = [&](int loc, const std::vector<std::string>& names) {
    auto& lv = its.locs[loc].vars;
    std::vector<VarId> ids;
    for (const auto& n : names) ids.push_back(lookup(n));
    if (lv.empty()) lv = ids;
    else if (lv != ids) throw std::runtime_error("inconsistent location arguments");
  };

  SexpReader rd(text);
  while (auto e = rd.next()) {
    if (head_is(*e, "declare-rel") && e->list.size() == 3) {
      const std::string& n = e->list[1].atom;
      if (n.size() < 2 || n[0] != 'L') throw std::runtime_error("bad relation name " + n);
      rels[n] = {static_cast<int>(its.locs.size()), e->list[2].list.size()};
      its.locs.push_back({std::stoi(n.substr(1)), {}});
    } else if (head_is(*e, "declare-var") && e->list.size() == 3) {
      const std::string& n = e->list[1].atom;
      if (n.size() >= 2 && n.compare(n.size() - 2, 2, "_p") == 0) {
        vars[n] = 0;  // primed names only appear in updates and heads
        continue;
      }
      const VarId v = pool.fresh(n).id;
      vars[n] = v;
      its.names[v] = n;
    } else if (head_is(*e, "rule") && e->list.size() == 2 && head_is(e->list[1], "=>") &&
               e->list[1].list.size() == 3) {
      const Sexp& body = e->list[1].list[1];
      const Sexp& head = e->list[1].list[2];
      auto dst = app(head);
      if (!dst || !head_is(body, "and")) throw std::runtime_error("malformed rule");
      std::vector<std::string> dst_names;
      for (const auto& a : dst->second) dst_names.push_back(unprime(a));
      set_vars(dst->first, dst_names);
      ItsTransition t;
      t.dst = dst->first;
      bool has_src = false;
      for (std::size_t i = 1; i < body.list.size(); ++i) {
        const Sexp& part = body.list[i];
        if (auto src = app(part)) {
          set_vars(src->first, src->second);
          t.src = src->first;
          has_src = true;
        } else if (head_is(part, "=") && part.list.size() == 3 && part.list[1].is_atom() &&
                   std::find(dst->second.begin(), dst->second.end(), part.list[1].atom) != dst->second.end()) {
          t.update[lookup(unprime(part.list[1].atom))] = term(part.list[2]);
        } else if (head_is(part, "or")) {
          std::vector<Atom> c;
          for (std::size_t j = 1; j < part.list.size(); ++j) c.push_back(atom(part.list[j]));
          t.guard.add(make_clause(std::move(c)));
        } else if (part.atom != "true") {
          t.guard.add(atom(part));
        }
      }
      if (!has_src) throw std::runtime_error("rule without source location");
      its.trans.push_back(std::move(t));
    } else {
      throw std::runtime_error("unknown command");
    }
  }
  return its;
}

std::string rank_str(const RankingStep& r, const Its& its) { return Printer{its}.term(r.rank); }

}  // namespace listterm
