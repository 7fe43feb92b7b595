#include <doctest.h>

#include <fstream>
#include <sstream>

#include "listterm/its.hpp"

using namespace listterm;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Synthetic {
  Program prog = parse_program("define i32 @main() {\nentry:\n  ret i32 0\n}\n");
  VarPool pool;
  Ctx ctx{prog, pool, ProverConfig{}};
  Its its;

  SymVar var(const std::string& n) {
    SymVar v = pool.fresh(n);
    its.names[v.id] = n;
    return v;
  }
  int loc(std::vector<SymVar> vs) {
    ItsLocation l;
    l.node = static_cast<int>(its.locs.size());
    for (auto v : vs) l.vars.push_back(v.id);
    its.locs.push_back(l);
    return static_cast<int>(its.locs.size()) - 1;
  }
  ItsTransition& edge(int src, int dst, Formula guard, std::map<VarId, Term> update) {
    its.trans.push_back({src, dst, {}, std::move(guard), std::move(update)});
    return its.trans.back();
  }
};

}  // namespace

TEST_CASE("counting up without a guard is not proved") {
  Synthetic s;
  SymVar x = s.var("x");
  int l = s.loc({x});
  s.edge(l, l, {}, {{x.id, Term(x) + 1}});
  auto r = prove_termination(s.its, s.ctx);
  CHECK_FALSE(r.terminating);
  CHECK_FALSE(r.reason.empty());
}

TEST_CASE("a bounded countdown is ranked by its counter") {
  Synthetic s;
  SymVar x = s.var("x");
  int l = s.loc({x});
  s.edge(l, l, {Atom::ge(x, 1)}, {{x.id, Term(x) - 1}});
  auto r = prove_termination(s.its, s.ctx);
  REQUIRE(r.terminating);
  REQUIRE(r.sccs.size() == 1);
  REQUIRE(r.sccs[0].steps.size() == 1);
  CHECK(r.sccs[0].steps[0].rank == Term(x));
  CHECK(verify_certificate(r.sccs[0], s.its, s.ctx));

  SUBCASE("a tampered certificate fails the check") {
    auto c = r.sccs[0];
    c.steps[0].rank = -Term(x);
    CHECK_FALSE(verify_certificate(c, s.its, s.ctx));
  }
}

TEST_CASE("an upward loop bounded by another variable needs a difference rank") {
  Synthetic s;
  SymVar k = s.var("k"), n = s.var("n");
  int l = s.loc({k, n});
  s.edge(l, l, {Atom::lt(k, n)}, {{k.id, Term(k) + 1}, {n.id, Term(n)}});
  auto r = prove_termination(s.its, s.ctx);
  REQUIRE(r.terminating);
  CHECK(r.sccs[0].steps[0].rank == Term(n) - Term(k));
}

TEST_CASE("nested counters need a lexicographic rank") {
  Synthetic s;
  SymVar i = s.var("i"), j = s.var("j"), m = s.var("m");
  int l = s.loc({i, j, m});
  SymVar any = s.var("fresh");
  // inner step: j decreases; outer step: i decreases and j is reset to anything
  s.edge(l, l, {Atom::ge(j, 1)}, {{i.id, Term(i)}, {j.id, Term(j) - 1}, {m.id, Term(m)}});
  s.edge(l, l, {Atom::ge(i, 1), Atom::ge(any, 0)}, {{i.id, Term(i) - 1}, {j.id, Term(any)}, {m.id, Term(m)}});
  auto r = prove_termination(s.its, s.ctx);
  REQUIRE(r.terminating);
  CHECK(r.sccs[0].steps.size() == 2);
}

TEST_CASE("two-location cycles are reduced by location elimination") {
  Synthetic s;
  SymVar x = s.var("x"), y = s.var("y");
  int a = s.loc({x}), b = s.loc({y});
  s.edge(a, b, {Atom::ge(x, 1)}, {{y.id, Term(x) - 1}});
  s.edge(b, a, {}, {{x.id, Term(y)}});
  auto r = prove_termination(s.its, s.ctx);
  REQUIRE(r.terminating);
  CHECK(r.sccs[0].locs.size() == 2);
  CHECK(r.sccs[0].loops.size() == 1);
}

TEST_CASE("the leading example yields a terminating rule system") {
  Program prog = parse_program(slurp(CORPUS_DIR "/leading.ll"));
  VarPool pool;
  Ctx ctx{prog, pool, ProverConfig{}};
  Seg g = build_seg(prog, ctx);
  REQUIRE(g.outcome == SegOutcome::Complete);
  Its its = extract_its(g, ctx);
  CHECK(its.locs.size() >= 2);
  CHECK(its.trans.size() >= 2);
  auto r = prove_termination(its, ctx);
  REQUIRE(r.terminating);
  CHECK(r.sccs.size() == 2);

  // one loop is ranked by the list length, the other by the distance of the counter to its bound
  bool by_length = false, by_counter = false;
  for (const auto& c : r.sccs) {
    CHECK(verify_certificate(c, its, ctx));
    for (const auto& st : c.steps) {
      const auto& co = st.rank.coeffs();
      if (co.size() == 1 && pool.hint(co[0].first).find("len") != std::string::npos) by_length = true;
      if (co.size() == 2) by_counter = true;
    }
  }
  CHECK(by_length);
  CHECK(by_counter);

  SUBCASE("export has one rule per transition and reads back unchanged") {
    const std::string text = export_its(its);
    std::size_t rules = 0, rels = 0;
    for (std::size_t p = 0; (p = text.find("(rule ", p)) != std::string::npos; ++p) ++rules;
    for (std::size_t p = 0; (p = text.find("(declare-rel ", p)) != std::string::npos; ++p) ++rels;
    CHECK(rules == its.trans.size());
    CHECK(rels == its.locs.size());
    VarPool other;
    Its back = parse_its(text, other);
    CHECK(back.trans.size() == its.trans.size());
    CHECK(export_its(back) == text);
  }
}

TEST_CASE("the reader rejects malformed input") {
  VarPool pool;
  CHECK_THROWS(parse_its("(rule (=> (and true) (L1 x)))", pool));
  CHECK_THROWS(parse_its("(declare-rel L1 (Int)) (declare-var x Int) (rule (=> (and (L1 x)) (L1 x)))", pool));
  CHECK_THROWS(parse_its("(declare-rel L1 (Int)", pool));
}
