#include <doctest.h>

#include <fstream>
#include <functional>
#include <sstream>

#include "listterm/seg.hpp"

using namespace listterm;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct SegFixture {
  explicit SegFixture(const std::string& file = "leading.ll") : prog(parse_program(slurp(CORPUS_DIR "/" + file))) {}
  Program prog;
  VarPool pool;
  Ctx ctx{prog, pool, ProverConfig{}};

  // Null-terminated chain of n list elements reachable from the pointer variable "tail", at the loop head cmpF.
  AbstractState chain(int n) {
    const TypeId list = *prog.find_type("list");
    const TypeId i32 = prog.int_type(32);
    const TypeId ptr = *prog.ptr_to(list);
    AbstractState s;
    s.pos = {prog.block_index.at("cmpF"), 0};
    Term next = 0;
    for (int i = 0; i < n; ++i) {
      SymVar lo = pool.fresh("lo"), hi = pool.fresh("hi"), va = pool.fresh("va"), na = pool.fresh("na");
      SymVar val = pool.fresh("val"), nx = pool.fresh("nx");
      s.al.push_back({lo, hi});
      s.kb.add(Atom::eq(hi, Term(lo) + 15));
      s.kb.add(Atom::ge(lo, 1));
      s.kb.add(Atom::eq(va, lo));
      s.kb.add(Atom::eq(na, Term(lo) + 8));
      s.kb.add(Atom::ge(val, 0));
      s.kb.add(Atom::eq(nx, next));
      s.pt.push_back({va, i32, val});
      s.pt.push_back({na, ptr, nx});
      next = lo;
    }
    SymVar head = pool.fresh("head");
    s.kb.add(Atom::eq(head, next));
    s.lv["tail"] = head;
    return s;
  }
};

bool ref_gen_acyclic(const Seg& g) {
  std::vector<int> state(g.nodes.size(), 0);
  std::function<bool(int)> dfs = [&](int n) {
    state[n] = 1;
    for (int ei : g.out_edges(n)) {
      const auto& e = g.edges[ei];
      if (e.kind == EdgeKind::Evaluation) continue;
      if (state[e.dst] == 1) return false;
      if (state[e.dst] == 0 && !dfs(e.dst)) return false;
    }
    state[n] = 2;
    return true;
  };
  for (std::size_t n = 0; n < g.nodes.size(); ++n)
    if (state[n] == 0 && !dfs(static_cast<int>(n))) return false;
  return true;
}

}  // namespace

TEST_CASE("find_list follows a concrete chain") {
  SegFixture f;
  AbstractState s = f.chain(3);
  Prover pr(state_formula(s, f.ctx), f.ctx.cfg);
  auto m = find_list(s, pr, Term(s.lv.at("tail")), *f.prog.find_type("list"), f.ctx);
  REQUIRE(m);
  CHECK(m->length() == 3);
  CHECK(prefix(*m, 2).length() == 2);
  auto capped = find_list(s, pr, Term(s.lv.at("tail")), *f.prog.find_type("list"), f.ctx, 1);
  REQUIRE(capped);
  CHECK(capped->length() == 1);
}

TEST_CASE("merging chains of different length yields a list invariant") {
  SegFixture f;
  AbstractState a = f.chain(1), b = f.chain(2);
  REQUIRE(can_merge(a, b, f.ctx));
  MergeResult m = merge_states(a, b, f.ctx);
  REQUIRE(m.state.li.size() == 1);
  const auto& l = m.state.li[0];
  Prover pr(state_formula(m.state, f.ctx), f.ctx.cfg);
  CHECK(pr.proves(Atom::ge(l.len, 1)));
  CHECK(check_generalization(a, m.state, m.mu1, true, f.ctx));
  CHECK(check_generalization(b, m.state, m.mu2, true, f.ctx));

  SUBCASE("a wrong length instantiation is rejected") {
    Instantiation bad = m.mu2;
    bad[l.len.id] = Term(5);
    CHECK_FALSE(check_generalization(b, m.state, bad, true, f.ctx));
  }
  SUBCASE("generalization needs an evaluation edge into the specific state") {
    CHECK_FALSE(check_generalization(b, m.state, m.mu2, false, f.ctx));
  }
  SUBCASE("find_instantiation recovers an instantiation for a longer chain") {
    AbstractState c = f.chain(4);
    std::string why;
    auto mu = find_instantiation(c, m.state, f.ctx, &why);
    REQUIRE_MESSAGE(mu, why, "\n", state_str(m.state, f.ctx));
    CHECK(check_generalization(c, m.state, *mu, true, f.ctx));
  }
}

TEST_CASE("can_merge needs equal variable domains") {
  SegFixture f;
  AbstractState a = f.chain(1), b = f.chain(1);
  b.lv["other"] = f.pool.fresh("other");
  CHECK_FALSE(can_merge(a, b, f.ctx));
  CHECK(can_merge(a, f.chain(2), f.ctx));
}

TEST_CASE("the leading example has a complete graph with generalizations") {
  SegFixture f;
  Seg g = build_seg(f.prog, f.ctx);
  CHECK(g.outcome == SegOutcome::Complete);
  int gens = 0;
  for (const auto& e : g.edges) {
    if (e.kind != EdgeKind::Generalization) continue;
    ++gens;
    std::string why;
    CHECK_MESSAGE(check_generalization(g.nodes[e.src].state, g.nodes[e.dst].state, e.mu, g.nodes[e.src].eval_in,
                                       f.ctx, &why),
                  why);
    CHECK(g.nodes[e.src].state.pos == g.nodes[e.dst].state.pos);
  }
  CHECK(gens >= 2);
  CHECK(ref_gen_acyclic(g));
  for (const auto& n : g.nodes) CHECK_FALSE(n.state.err);
}

TEST_CASE("straight-line code needs no generalization") {
  SegFixture f("straight_line.ll");
  Seg g = build_seg(f.prog, f.ctx);
  CHECK(g.outcome == SegOutcome::Complete);
  for (const auto& e : g.edges) CHECK(e.kind != EdgeKind::Generalization);
}

TEST_CASE("an uninitialised load produces an error state") {
  SegFixture f("uninit_load.ll");
  Seg g = build_seg(f.prog, f.ctx);
  CHECK(g.outcome == SegOutcome::ContainsErr);
  REQUIRE(g.err_node >= 0);
  CHECK(g.nodes[g.err_node].state.err);
}

TEST_CASE("node limit makes the graph incomplete") {
  SegFixture f;
  SegConfig cfg;
  cfg.max_nodes = 20;
  Seg g = build_seg(f.prog, f.ctx, cfg);
  CHECK(g.outcome == SegOutcome::Incomplete);
}

TEST_CASE("graph output is deterministic") {
  SegFixture a, b;
  Seg ga = build_seg(a.prog, a.ctx), gb = build_seg(b.prog, b.ctx);
  CHECK(to_dot(ga, a.ctx) == to_dot(gb, b.ctx));
  CHECK(to_json(ga, a.ctx) == to_json(gb, b.ctx));
  CHECK(to_dot(ga, a.ctx).rfind("digraph", 0) == 0);
}
