#include <doctest.h>

#include <fstream>
#include <sstream>

#include "listterm/ir.hpp"

using namespace listterm;

namespace {
std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}
}  // namespace

TEST_CASE("parse the leading example") {
  Program p = parse_program(slurp(CORPUS_DIR "/leading.ll"));
  REQUIRE(p.blocks.size() == 7);
  CHECK(p.blocks[0].name == "entry");
  CHECK(p.block_index.at("bodyW") == 5);
  auto list = p.find_type("list");
  REQUIRE(list);
  CHECK(type_size(p, *list) == 16);
  CHECK(field_offset(p, *list, 1) == 0);
  CHECK(field_offset(p, *list, 2) == 8);
  CHECK(recursive_index(p, *list) == 2);
  CHECK(is_list_type(p, *list));
  CHECK_FALSE(is_list_type(p, p.int_type(32)));
  CHECK(p.pos_str({5, 1}) == "(bodyW, 1)");
  const Instr& gep = p.at({5, 1});
  CHECK(gep.op == Op::GepByte);
  CHECK(std::get<std::int64_t>(gep.b) == 8);
  const Instr& fgep = p.at({2, 6});
  CHECK(fgep.op == Op::GepField);
  CHECK(std::get<std::int64_t>(fgep.c) == 1);
}

TEST_CASE("printing round-trips") {
  Program p = parse_program(slurp(CORPUS_DIR "/leading.ll"));
  std::string once = print_program(p);
  Program q = parse_program(once);
  CHECK(print_program(q) == once);
}

TEST_CASE("layout with mixed field sizes") {
  Program p = parse_program(
      "node = type { i8, node*, i32 }\n"
      "define i32 @main() {\n"
      "entry:\n"
      "  ret i32 0\n"
      "}\n");
  TypeId n = *p.find_type("node");
  CHECK(field_offset(p, n, 1) == 0);
  CHECK(field_offset(p, n, 2) == 8);
  CHECK(field_offset(p, n, 3) == 16);
  CHECK(type_size(p, n) == 24);
  CHECK(recursive_index(p, n) == 2);
}

TEST_CASE("parse errors carry positions") {
  auto fails = [](const std::string& text) {
    try {
      parse_program(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return -1;
  };
  CHECK(fails("define i32 @main() {\nentry:\n  x = add i32 1, 2\n}\n") > 0);
  CHECK(fails("define i32 @main() {\nentry:\n  br label nowhere\n}\n") == 3);
  CHECK(fails("define i32 @main() {\nentry:\n  x = frobnicate i32 1\n  ret i32 0\n}\n") == 3);
  CHECK(fails("") > 0);
}
