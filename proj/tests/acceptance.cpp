// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <random>
#include <sstream>

#include "listterm/analysis.hpp"
#include "listterm/concrete.hpp"

using namespace listterm;

namespace {

using Clock = std::chrono::steady_clock;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string corpus_path(const std::string& name) { return std::string(CORPUS_DIR) + "/" + name; }
Program corpus(const std::string& name) { return parse_program(slurp(corpus_path(name))); }

struct Expected {
  std::string file;
  int code;
};

std::vector<Expected> expected_verdicts() {
  std::vector<Expected> out;
  std::istringstream in(slurp(corpus_path("expected.txt")));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Expected e;
    if (ls >> e.file >> e.code) out.push_back(e);
  }
  return out;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Result {
  bool ok = true;
  std::string detail;
  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

// ---------------------------------------------------------------------------------------------
// 1: the leading example is proved, with generalization and a decreasing list length.

Result leading_proved() {
  Result r;
  const auto t0 = Clock::now();
  Program p = corpus("leading.ll");
  VarPool pool;
  Ctx ctx{p, pool, ProverConfig{}};
  Seg g = build_seg(p, ctx);
  Its its = extract_its(g, ctx);
  TerminationResult t = prove_termination(its, ctx);
  const double secs = seconds_since(t0);

  if (g.outcome != SegOutcome::Complete) r.fail(std::string("graph ") + outcome_str(g.outcome));
  if (!t.terminating) r.fail("no termination proof: " + t.reason);
  for (const auto& c : t.sccs)
    if (!verify_certificate(c, its, ctx)) r.fail("certificate rejected");
  std::size_t gens = 0;
  for (const auto& e : g.edges) gens += e.kind == EdgeKind::Generalization;
  if (gens < 2) r.fail("only " + std::to_string(gens) + " generalization edges");

  bool decreasing = false;
  for (const auto& tr : its.trans) {
    Prover pr(tr.guard);
    for (const auto& loc : its.locs)
      for (VarId v : loc.vars) {
        if (pool.hint(v).find("len") == std::string::npos) continue;
        auto it = tr.update.find(v);
        if (it != tr.update.end() && pr.proves(Atom::eq(it->second, Term::var(v) - 1))) decreasing = true;
      }
  }
  if (!decreasing) r.fail("no transition decreases a list length by one");
  if (secs >= 10) r.fail("took " + std::to_string(secs) + " s");
  std::ostringstream d;
  d << gens << " generalization edges, " << its.trans.size() << " transitions, " << secs << " s";
  if (r.ok) r.detail = d.str();
  return r;
}

// ---------------------------------------------------------------------------------------------
// 2: states of the leading example's graph carry the expected facts.

struct Replay {
  const Program& p;
  const Seg& g;
  const Ctx& ctx;
  Result r;

  Position pos(const std::string& block, std::uint32_t i) const { return {p.block_index.at(block), i}; }

  std::vector<int> at(Position ps) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
      if (!g.nodes[i].state.err && g.nodes[i].state.pos == ps) out.push_back(static_cast<int>(i));
    return out;
  }
  int first_at(Position ps) const {
    auto v = at(ps);
    return v.empty() ? -1 : v.front();
  }

  const AbstractState& st(int n) const { return g.nodes[n].state; }
  Term lv(int n, const std::string& x) const {
    auto it = st(n).lv.find(x);
    if (it == st(n).lv.end()) throw std::runtime_error("no variable " + x);
    return it->second;
  }
  bool holds(int n, const Atom& a) const { return Prover(state_formula(st(n), ctx), ctx.cfg).proves(a); }

  // Is there a points-to entry whose address equals addr and whose value satisfies pred?
  bool points_to(int n, const Term& addr, const std::function<Atom(const Term&)>& pred) const {
    Prover pr(state_formula(st(n), ctx), ctx.cfg);
    for (const auto& e : st(n).pt)
      if (pr.proves_eq(e.addr, addr) && pr.proves(pred(e.value))) return true;
    return false;
  }
  bool allocation_of_size(int n, const Term& lo, std::int64_t size) const {
    Prover pr(state_formula(st(n), ctx), ctx.cfg);
    for (const auto& a : st(n).al)
      if (pr.proves_eq(a.lo, lo) && pr.proves_eq(a.hi, lo + (size - 1))) return true;
    return false;
  }

  void expect(bool cond, const std::string& what) {
    if (!cond) r.fail(what);
  }

  std::vector<int> ref_children(int n) const {
    std::vector<int> out;
    for (int e : g.out_edges(n))
      if (g.edges[e].kind == EdgeKind::Refinement) out.push_back(g.edges[e].dst);
    return out;
  }
};

Result leading_states() {
  Program p = corpus("leading.ll");
  VarPool pool;
  Ctx ctx{p, pool, ProverConfig{}};
  Seg g = build_seg(p, ctx);
  Replay R{p, g, ctx, {}};
  try {
    // Initial state at the first loop head: both cells hold 0.
    const int b = R.first_at(R.pos("cmpF", 0));
    R.expect(b >= 0 && R.st(b).li.empty(), "B: no first loop-head state");
    R.expect(R.allocation_of_size(b, R.lv(b, "tp_mem"), 8), "B: tail_ptr allocation");
    R.expect(R.allocation_of_size(b, R.lv(b, "kad_mem"), 4), "B: counter allocation");
    R.expect(R.points_to(b, R.lv(b, "tail_ptr"), [](const Term& v) { return Atom::eq(v, 0); }), "B: *tail_ptr = 0");
    R.expect(R.points_to(b, R.lv(b, "k_ad"), [](const Term& v) { return Atom::eq(v, 0); }), "B: *k_ad = 0");

    const int c = R.first_at(R.pos("cmpF", 1));
    R.expect(c >= 0 && R.holds(c, Atom::eq(R.lv(c, "k"), 0)), "C: k = 0");
    auto kids = R.ref_children(c);
    R.expect(kids.size() == 2, "C: two refinements");
    if (kids.size() == 2) {
      const Term n = R.lv(c, "n");
      const bool de = R.holds(kids[0], Atom::ge(n, 1)) && R.holds(kids[1], Atom::le(n, 0));
      const bool ed = R.holds(kids[1], Atom::ge(n, 1)) && R.holds(kids[0], Atom::le(n, 0));
      R.expect(de || ed, "D/E: n > 0 and n <= 0");
    }

    const int h = R.first_at(R.pos("bodyF", 1));
    R.expect(h >= 0 && R.allocation_of_size(h, R.lv(h, "mem"), 16), "H: 16-byte element allocated");

    const int j = R.first_at(R.pos("bodyF", 7));
    R.expect(j >= 0, "J: missing");
    const Term nd = R.lv(j, "nondet");
    R.expect(R.points_to(j, R.lv(j, "mem"), [&](const Term& v) { return Atom::eq(v, nd); }), "J: *mem = nondet");
    R.expect(R.holds(j, Atom::eq(R.lv(j, "tail"), 0)), "J: tail = 0");
    R.expect(R.holds(j, Atom::eq(R.lv(j, "curr_next"), R.lv(j, "mem") + 8)), "J: curr_next = mem + 8");

    const int k = R.first_at(R.pos("bodyF", 11));
    R.expect(k >= 0, "K: missing");
    const Term mem = R.lv(k, "mem");
    R.expect(R.points_to(k, R.lv(k, "curr_next"), [](const Term& v) { return Atom::eq(v, 0); }), "K: *curr_next = 0");
    R.expect(R.points_to(k, R.lv(k, "tail_ptr"), [&](const Term& v) { return Atom::eq(v, mem); }), "K: *tail_ptr = mem");
    R.expect(R.points_to(k, R.lv(k, "k_ad"), [](const Term& v) { return Atom::eq(v, 1); }), "K: *k_ad = 1");

    // Unmerged loop-head states with one and two concrete elements.
    int l = -1, m = -1;
    for (int n : R.at(R.pos("cmpF", 0))) {
      if (g.nodes[n].merged || !R.st(n).li.empty()) continue;
      if (R.st(n).al.size() == 3 && l < 0) l = n;
      if (R.st(n).al.size() == 4 && m < 0) m = n;
    }
    R.expect(l >= 0 && R.holds(l, Atom::ge(R.lv(l, "n"), 1)), "L: one element, n > 0");
    R.expect(m >= 0 && R.holds(m, Atom::ge(R.lv(m, "n"), 2)), "M: two elements, n > 1");

    // The generalized first loop head.
    int o = -1;
    for (const auto& e : g.edges)
      if (e.rule == "generalization" && R.st(e.dst).pos == R.pos("cmpF", 0)) o = e.dst;
    R.expect(o >= 0 && R.st(o).li.size() == 1, "O: one list invariant");
    if (o >= 0 && R.st(o).li.size() == 1) {
      const Term len = R.st(o).li[0].len;
      R.expect(R.holds(o, Atom::ge(len, 1)), "O: len >= 1");
      R.expect(R.holds(o, Atom::eq(len, R.lv(o, "kinc"))), "O: len = kinc");
      R.expect(R.holds(o, Atom::eq(R.lv(o, "kinc"), R.lv(o, "k") + 1)), "O: kinc = k + 1");
      R.expect(R.holds(o, Atom::gt(R.lv(o, "n"), R.lv(o, "k"))), "O: n > k");
      R.expect(R.holds(o, Atom::eq(R.lv(o, "curr_next"), R.lv(o, "mem") + 8)), "O: curr_next = mem + 8");
      R.expect(R.st(o).li[0].ad == R.st(o).lv.at("mem"), "O: list starts at mem");
    }

    // List extension P -> Q and traversal U -> V.
    bool ext = false, trav = false, split = false;
    for (const auto& e : g.edges) {
      const AbstractState& s = R.st(e.src);
      const AbstractState& t = R.st(e.dst);
      if (e.rule == "list-extension" && s.li.size() == 1 && t.li.size() == 1) {
        ext = ext || (R.holds(e.dst, Atom::eq(t.li[0].len, Term(s.li[0].len) + 1)) &&
                      R.holds(e.dst, Atom::eq(R.lv(e.dst, "curr_next"), R.lv(e.dst, "mem") + 8)) &&
                      t.li[0].ad == t.lv.at("mem"));
      }
      if (e.rule == "list-traversal" && s.li.size() == 1 && t.li.size() == 1) {
        const ListInvariant& a = s.li[0];
        const ListInvariant& w = t.li[0];
        bool ok = R.holds(e.dst, Atom::eq(w.len, Term(a.len) - 1)) &&
                  R.holds(e.dst, Atom::eq(w.ad, a.fields[a.rec].first)) &&
                  R.allocation_of_size(e.dst, a.ad, 16);
        for (const auto& f : a.fields)
          ok = ok && R.points_to(e.dst, Term(a.ad) + static_cast<std::int64_t>(f.off),
                                 [&](const Term& v) { return Atom::eq(v, f.first); });
        trav = trav || ok;
      }
      if (e.kind == EdgeKind::Generalization && t.pos == R.pos("cmpW", 0) && s.li.size() == 2 &&
          t.li.size() == 2) {
        split = split || (R.holds(e.src, Atom::eq(s.li[0].len, Term(t.li[0].len) + 1)) &&
                          R.holds(e.src, Atom::eq(s.li[1].len, Term(t.li[1].len) - 1)) &&
                          check_generalization(s, t, e.mu, g.nodes[e.src].eval_in, ctx));
      }
    }
    R.expect(ext, "P->Q: extension adds one element at mem");
    R.expect(trav, "U->V: traversal materializes the head and shortens the list");
    R.expect(split, "W'->W: prefix grows and suffix shrinks under generalization");
  } catch (const std::exception& ex) {
    R.r.fail(ex.what());
  }
  if (R.r.ok) R.r.detail = "B C D E H J K L M O P-Q U-V W-W'";
  return R.r;
}

// ---------------------------------------------------------------------------------------------
// 3: verdicts over the corpus.

int verdict_code(const std::string& file) {
  try {
    return exit_code(analyze_program(corpus(file), AnalysisOptions{}).verdict);
  } catch (const ParseError&) {
    return 1;
  }
}

Result corpus_verdicts() {
  Result r;
  auto exp = expected_verdicts();
  std::size_t agree = 0;
  for (const auto& e : exp) {
    const int got = verdict_code(e.file);
    if (got == e.code)
      ++agree;
    else
      r.fail(e.file + ": expected " + std::to_string(e.code) + ", got " + std::to_string(got));
  }
  if (exp.empty()) r.fail("empty corpus");
  if (r.ok) r.detail = std::to_string(agree) + "/" + std::to_string(exp.size()) + " programs";
  return r;
}

// ---------------------------------------------------------------------------------------------
// 4 and 6: differential runs.

struct Analyzed {
  std::string file;
  int expected;
  Program prog;
  VarPool pool;
  std::unique_ptr<Ctx> ctx;
  Seg seg;
};

std::vector<std::unique_ptr<Analyzed>> analyzable_corpus() {
  std::vector<std::unique_ptr<Analyzed>> out;
  for (const auto& e : expected_verdicts()) {
    if (e.code == 1) continue;
    auto a = std::make_unique<Analyzed>();
    a->file = e.file;
    a->expected = e.code;
    a->prog = corpus(e.file);
    a->ctx = std::make_unique<Ctx>(Ctx{a->prog, a->pool, ProverConfig{}});
    a->seg = build_seg(a->prog, *a->ctx);
    out.push_back(std::move(a));
  }
  return out;
}

DiffReport run_many(const Analyzed& a, std::uint64_t first_seed, std::size_t runs) {
  Differential d(a.prog, a.seg, *a.ctx);
  DiffReport rep;
  for (std::size_t i = 0; i < runs; ++i) {
    NondetStream nd(first_seed + i);
    d.run(nd, 10000, rep);
  }
  return rep;
}

Result differential(const std::vector<std::unique_ptr<Analyzed>>& progs) {
  Result r;
  const auto t0 = Clock::now();
  constexpr std::size_t kTotal = 1000;
  std::vector<std::future<DiffReport>> jobs;
  for (std::size_t i = 0; i < progs.size(); ++i) {
    std::size_t runs = kTotal / progs.size() + (i < kTotal % progs.size() ? 1 : 0);
    jobs.push_back(std::async(std::launch::async, run_many, std::cref(*progs[i]), 1, runs));
  }
  std::size_t runs = 0, states = 0;
  for (std::size_t i = 0; i < progs.size(); ++i) {
    DiffReport rep = jobs[i].get();
    runs += rep.runs;
    states += rep.checked_states;
    if (rep.violations) r.fail(progs[i]->file + ": " + (rep.messages.empty() ? "violation" : rep.messages[0]));
    if (progs[i]->expected == 0 && rep.fuel_exhausted)
      r.fail(progs[i]->file + ": proved terminating but a run ran out of fuel");
  }
  const double secs = seconds_since(t0);
  if (runs != kTotal) r.fail("only " + std::to_string(runs) + " runs");
  if (secs >= 300) r.fail("took " + std::to_string(secs) + " s");
  if (r.ok) r.detail = std::to_string(runs) + " runs, " + std::to_string(states) + " states, " +
                       std::to_string(static_cast<int>(secs)) + " s";
  return r;
}

Result rule_instances(const std::vector<std::unique_ptr<Analyzed>>& progs) {
  Result r;
  constexpr std::size_t kNeed = 200;
  std::size_t gen = 0, ext = 0, trav = 0, violations = 0;
  std::uint64_t seed = 5001;
  for (int round = 0; round < 20 && (gen < kNeed || ext < kNeed || trav < kNeed); ++round) {
    for (const auto& a : progs) {
      if (a->seg.outcome != SegOutcome::Complete || a->expected != 0) continue;
      DiffReport rep = run_many(*a, seed, 20);
      seed += 20;
      violations += rep.violations;
      if (rep.violations && r.ok) r.fail(a->file + ": " + (rep.messages.empty() ? "violation" : rep.messages[0]));
      for (const auto& [rule, n] : rep.rule_checks) {
        if (rule == "generalization" || rule == "merge") gen += n;
        if (rule == "list-extension") ext += n;
        if (rule.rfind("list-traversal", 0) == 0) trav += n;
      }
    }
  }
  std::ostringstream d;
  d << "generalization " << gen << ", extension " << ext << ", traversal " << trav << ", violations " << violations;
  if (gen < kNeed || ext < kNeed || trav < kNeed) r.fail(d.str());
  if (r.ok) r.detail = d.str();
  return r;
}

// ---------------------------------------------------------------------------------------------
// 5: random entailments against exhaustive enumeration.

Result entailment_soundness() {
  Result r;
  std::mt19937_64 rng(2024);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  VarPool pool;
  std::vector<SymVar> vars;
  for (int i = 0; i < 4; ++i) vars.push_back(pool.fresh("v"));

  auto random_term = [&](int nv) {
    Term t(pick(-6, 6));
    for (int i = 0; i < nv; ++i)
      if (int c = pick(-2, 2); c != 0) t += Term(vars[i]) * c;
    return t;
  };
  auto random_atom = [&](int nv) {
    Term t = random_term(nv);
    switch (pick(0, 5)) {
      case 0: return Atom(Rel::Eq, t);
      case 1: return Atom(Rel::Ne, t);
      default: return Atom(Rel::Le, t);
    }
  };

  std::size_t valid = 0, brute_valid = 0;
  constexpr int kInstances = 500;
  for (int i = 0; i < kInstances; ++i) {
    const int nv = pick(1, 4);
    Formula premise;
    std::vector<Term> les;
    const int np = pick(1, 4);
    for (int a = 0; a < np; ++a) {
      Atom at = random_atom(nv);
      premise.add(at);
      if (at.rel() == Rel::Le) les.push_back(at.term());
    }
    Atom goal;
    if (les.size() >= 2 && pick(0, 1)) {
      // positive combination of premises, slightly weakened, so that many goals are valid
      goal = Atom(Rel::Le, les[0] * pick(1, 2) + les[1] - pick(0, 2));
    } else if (!les.empty() && pick(0, 1)) {
      goal = Atom(Rel::Le, les[0] - pick(-1, 2));
    } else {
      goal = random_atom(nv);
    }
    Formula concl{goal};
    const bool proved = entails(premise, concl) == Verdict::Valid;
    const bool truth = brute_force_valid(premise, concl, 16);
    valid += proved;
    brute_valid += truth;
    if (proved && !truth) r.fail("unsound: " + premise.str(&pool) + " |= " + goal.str(&pool));
  }
  if (valid == 0) r.fail("no entailment was proved");
  if (r.ok)
    r.detail = std::to_string(kInstances) + " instances, " + std::to_string(valid) + " proved, " +
               std::to_string(brute_valid) + " valid on the box";
  return r;
}

// ---------------------------------------------------------------------------------------------
// 7: reproducible artifacts.

Result determinism() {
  Result r;
  for (const char* file : {"leading.ll", "create_append.ll", "null_deref.ll"}) {
    Program p = corpus(file);
    AnalysisReport a = analyze_program(p, AnalysisOptions{});
    AnalysisReport b = analyze_program(p, AnalysisOptions{});
    if (a.dot != b.dot) r.fail(std::string(file) + ": DOT differs");
    if (a.json_graph != b.json_graph) r.fail(std::string(file) + ": graph JSON differs");
    if (a.its_text != b.its_text) r.fail(std::string(file) + ": ITS differs");
    a.queries = b.queries = 0;  // counter is process-wide
    if (report_json(a) != report_json(b)) r.fail(std::string(file) + ": report differs");
    if (!a.its_text.empty()) {
      VarPool pool;
      try {
        if (export_its(parse_its(a.its_text, pool)) != a.its_text) r.fail(std::string(file) + ": ITS round trip");
      } catch (const std::exception& e) {
        r.fail(std::string(file) + ": " + e.what());
      }
    }
  }
  if (r.ok) r.detail = "DOT, JSON and ITS identical; ITS round trip exact";
  return r;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const Result& r) {
    std::cout << (r.ok ? "PASS" : "FAIL") << " " << id << " " << name << ": " << r.detail << std::endl;
    failures += !r.ok;
  };
  report(1, "leading example proved", leading_proved());
  report(2, "leading example states", leading_states());
  report(3, "corpus verdicts", corpus_verdicts());
  auto progs = analyzable_corpus();
  report(4, "differential runs", differential(progs));
  report(5, "entailment soundness", entailment_soundness());
  report(6, "rule instances checked", rule_instances(progs));
  report(7, "deterministic output", determinism());
  return failures == 0 ? 0 : 1;
}
