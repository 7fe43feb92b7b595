#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "listterm/concrete.hpp"

using namespace listterm;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Program corpus(const std::string& name) { return parse_program(slurp(CORPUS_DIR "/" + name)); }

std::size_t visits(const Program& p, const Trace& t, const std::string& block) {
  std::size_t n = 0;
  for (const auto& c : t.states)
    if (c.pos == Position{p.block_index.at(block), 0}) ++n;
  return n;
}

void put(Memory& m, std::uint64_t addr, std::uint64_t v, std::size_t bytes) {
  auto b = encode_le(v, bytes);
  for (std::size_t i = 0; i < bytes; ++i) m[addr + i] = b[i];
}

// Two elements at 1408 -> 1216 -> null holding 5 and 0.
Memory two_element_list() {
  Memory m;
  for (std::uint64_t a : {1216u, 1408u})
    for (std::uint64_t i = 0; i < 16; ++i) m[a + i] = 0;
  put(m, 1408, 5, 4);
  put(m, 1416, 1216, 8);
  put(m, 1216, 0, 4);
  put(m, 1224, 0, 8);
  return m;
}

}  // namespace

TEST_CASE("little-endian codec round-trips") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    for (std::size_t w : {1u, 4u, 8u}) {
      std::uint64_t v = rng();
      if (w < 8) v &= (std::uint64_t{1} << (8 * w)) - 1;
      CHECK(decode_le(encode_le(v, w)) == v);
    }
  }
  CHECK(encode_le(5, 4) == std::vector<std::uint8_t>{5, 0, 0, 0});
}

TEST_CASE("stores write little-endian bytes") {
  Program p = parse_program(
      "define i32 @main() {\nentry:\n  m = call i8* @malloc(i64 4)\n  q = bitcast i8* m to i32*\n"
      "  store i32 261, i32* q\n  v = load i32, i32* q\n  ret i32 v\n}\n");
  NondetStream nd;
  Trace t = run_concrete(p, nd);
  REQUIRE(t.outcome == RunOutcome::Returned);
  const auto& last = t.states.back();
  CHECK(last.as.at("m") == 1);
  CHECK(last.mem.at(1) == 5);
  CHECK(last.mem.at(2) == 1);
  CHECK(last.mem.at(3) == 0);
  CHECK(last.as.at("v") == 261);
}

TEST_CASE("allocations leave a gap") {
  Program p = parse_program(
      "define i32 @main() {\nentry:\n  a = call i8* @malloc(i64 4)\n  b = call i8* @malloc(i64 8)\n  ret i32 0\n}\n");
  NondetStream nd;
  Trace t = run_concrete(p, nd);
  const auto& last = t.states.back();
  CHECK(last.as.at("a") == 1);
  CHECK(last.as.at("b") == 6);
}

TEST_CASE("the leading example iterates once per element") {
  Program p = corpus("leading.ll");
  SUBCASE("three elements") {
    NondetStream nd(1, 5, {3});
    Trace t = run_concrete(p, nd);
    CHECK(t.outcome == RunOutcome::Returned);
    CHECK(visits(p, t, "bodyF") == 3);
    CHECK(visits(p, t, "bodyW") == 3);
  }
  SUBCASE("empty list") {
    NondetStream nd(1, 5, {0});
    Trace t = run_concrete(p, nd);
    CHECK(t.outcome == RunOutcome::Returned);
    CHECK(visits(p, t, "bodyF") == 0);
    CHECK(visits(p, t, "initPtr") == 1);
  }
}

TEST_CASE("run outcomes") {
  NondetStream nd;
  CHECK(run_concrete(corpus("straight_line.ll"), nd).outcome == RunOutcome::Returned);
  CHECK(run_concrete(corpus("null_deref.ll"), nd).outcome == RunOutcome::Error);
  Trace cyc = run_concrete(corpus("cyclic_list.ll"), nd, 10000);
  CHECK(cyc.outcome == RunOutcome::FuelExhausted);
  CHECK(cyc.states.size() == 10001);
}

TEST_CASE("traces are reproducible") {
  Program p = corpus("leading.ll");
  NondetStream a(1), b(1);
  CHECK(trace_str(p, run_concrete(p, a)) == trace_str(p, run_concrete(p, b)));
}

TEST_CASE("list predicate") {
  const Memory m = two_element_list();
  std::vector<LiField> f{{0, 4, 5, 0}, {8, 8, 1216, 0}};
  std::vector<std::uint64_t> elems;
  CHECK(eval_li_predicate(m, 16, 1, 2, 1408, f, &elems));
  CHECK(elems == std::vector<std::uint64_t>{1408, 1216});
  CHECK_FALSE(eval_li_predicate(m, 16, 1, 3, 1408, f));

  SUBCASE("a single element needs first = last") {
    std::vector<LiField> one{{0, 4, 5, 0}, {8, 8, 1216, 1216}};
    CHECK_FALSE(eval_li_predicate(m, 16, 1, 1, 1408, one));
    std::vector<LiField> ok{{0, 4, 5, 5}, {8, 8, 1216, 1216}};
    CHECK(eval_li_predicate(m, 16, 1, 1, 1408, ok));
  }
  SUBCASE("overlapping elements are rejected") {
    Memory alias;
    for (std::uint64_t i = 100; i < 130; ++i) alias[i] = 0;
    put(alias, 108, 104, 8);  // next of the element at 100 points into itself
    std::vector<LiField> g{{0, 4, 0, 0}, {8, 8, 104, 0}};
    CHECK_FALSE(eval_li_predicate(alias, 16, 1, 2, 100, g));
    put(alias, 108, 100, 8);  // cycle of length one
    std::vector<LiField> h{{0, 4, 0, 0}, {8, 8, 100, 100}};
    CHECK_FALSE(eval_li_predicate(alias, 16, 1, 2, 100, h));
  }
}

TEST_CASE("representation of a two-element list") {
  Program p = corpus("leading.ll");
  VarPool pool;
  Ctx ctx{p, pool, ProverConfig{}};
  const TypeId list = *p.find_type("list");

  ConcreteState c;
  c.pos = {p.block_index.at("cmpW"), 0};
  c.as["str"] = 1408;
  c.allocs = {{1216, 1231}, {1408, 1423}};
  c.mem = two_element_list();

  AbstractState s;
  s.pos = c.pos;
  SymVar ad = pool.fresh("x_ad"), len = pool.fresh("x_l"), nd = pool.fresh("x_nd"), ndl = pool.fresh("x_nd_last"),
         nx = pool.fresh("x_next"), zero = pool.fresh("x_0");
  s.lv["str"] = ad;
  s.li.push_back(make_invariant(p, list, ad, len, {nd, nx}, {ndl, zero}));
  s.kb.add(Atom::eq(zero, 0));

  Assignment sigma;
  std::string why;
  CHECK_MESSAGE(represents(c, s, ctx, nullptr, &sigma, &why), why);
  CHECK(sigma.at(len.id) == 2);
  CHECK(sigma.at(nx.id) == 1216);

  SUBCASE("a contradicting length is not represented") {
    s.kb.add(Atom::eq(len, 3));
    CHECK_FALSE(represents(c, s, ctx));
  }
  SUBCASE("variable domains must agree") {
    c.as["extra"] = 1;
    CHECK_FALSE(represents(c, s, ctx));
  }
}

TEST_CASE("interpretation round-trip") {
  Program p = corpus("leading.ll");
  NondetStream nd(3);
  Trace t = run_concrete(p, nd);
  for (const auto& c : t.states) {
    Interpretation i = extract_interpretation(c);
    ConcreteState back = rebuild_state(c.pos, i, c.allocs);
    back.halted = c.halted;
    back.error = c.error;
    back.error_msg = c.error_msg;
    CHECK(back == c);
  }
  CHECK(extract_interpretation(initial_concrete(p)).mem.empty());
}

TEST_CASE("concrete runs follow the graph of the leading example") {
  Program p = corpus("leading.ll");
  VarPool pool;
  Ctx ctx{p, pool, ProverConfig{}};
  Seg g = build_seg(p, ctx);
  Differential d(p, g, ctx);
  DiffReport rep;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    NondetStream nd(seed);
    d.run(nd, 10000, rep);
  }
  for (const auto& m : rep.messages) MESSAGE(m);
  CHECK(rep.violations == 0);
  CHECK(rep.checked_states > 0);
  CHECK(rep.rule_checks["list-extension"] > 0);
  CHECK(rep.rule_checks["list-traversal"] + rep.rule_checks["list-traversal-split"] > 0);
}

TEST_CASE("freeing drops the cells of the block") {
  Program p = corpus("straight_line.ll");
  VarPool pool;
  Ctx ctx{p, pool, ProverConfig{}};
  Seg g = build_seg(p, ctx);
  Differential d(p, g, ctx);
  DiffReport rep;
  NondetStream nd(1);
  d.run(nd, 100, rep);
  CHECK(rep.violations == 0);
  CHECK(rep.rule_checks["free"] == 1);
}
