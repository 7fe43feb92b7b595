#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace listterm {

using TypeId = std::uint32_t;

struct IrType {
  enum class Kind { Int, Ptr, Aggregate };
  Kind kind = Kind::Int;
  unsigned bits = 0;             // Int
  TypeId pointee = 0;            // Ptr
  std::string name;              // Aggregate
  std::vector<TypeId> fields;    // Aggregate
};

// Fixed 64-bit little-endian layout: pointers 8 bytes, natural alignment.
struct DataLayout {
  std::uint64_t ptr_size = 8;
  std::map<unsigned, std::uint64_t> int_sizes{{1, 1}, {8, 1}, {32, 4}, {64, 8}};
  std::map<TypeId, std::vector<std::uint64_t>> field_offsets;
  std::map<TypeId, std::uint64_t> aggregate_sizes;
};

using Operand = std::variant<std::string, std::int64_t>;  // variable name or literal

enum class Op { Load, Store, GepByte, GepField, Icmp, BrCond, Br, Add, Bitcast, Malloc, NondetInt, Free, Ret };
enum class Pred { Eq, Ne, Ult, Ule, Ugt, Uge, Slt, Sle, Sgt, Sge };

struct Instr {
  Op op = Op::Ret;
  std::string dst;
  TypeId ty = 0;   // load/store/icmp/add value type, gep aggregate, bitcast target, nondet type
  TypeId ty2 = 0;  // bitcast source, index type for geps
  Operand a, b, c; // see parse_program for operand roles
  Pred pred = Pred::Eq;
  std::string then_label, else_label;
  std::uint64_t size = 0;  // malloc bytes
  bool has_value = false;  // ret
  int line = 0;
};

struct Block {
  std::string name;
  std::vector<Instr> instrs;
};

struct Position {
  std::uint32_t block = 0;
  std::uint32_t index = 0;
  auto operator<=>(const Position&) const = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int col, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg),
        line_(line), col_(col) {}
  int line() const { return line_; }
  int col() const { return col_; }

 private:
  int line_, col_;
};

struct Program {
  std::vector<IrType> types;
  std::vector<TypeId> aggregates;  // declaration order
  std::vector<Block> blocks;       // blocks[0] is the entry block
  std::map<std::string, std::uint32_t> block_index;
  DataLayout layout;
  std::vector<std::string> warnings;  // e.g. aggregates with several recursive fields

  const IrType& type(TypeId t) const { return types.at(t); }
  const Instr& at(Position p) const { return blocks.at(p.block).instrs.at(p.index); }
  Position entry() const { return {0, 0}; }
  std::string pos_str(Position p) const;
  std::optional<TypeId> find_type(const std::string& name) const;
  TypeId int_type(unsigned bits) const;
  std::optional<TypeId> ptr_to(TypeId t) const;
  std::vector<std::string> variables() const;  // all assigned names, sorted
};

Program parse_program(const std::string& text);
std::string print_program(const Program& p);
std::string type_str(const Program& p, TypeId t);
std::string instr_str(const Program& p, const Instr& in);

std::uint64_t type_size(const Program& p, TypeId t);
// 1-based field index, as in off_1 .. off_n.
std::uint64_t field_offset(const Program& p, TypeId agg, std::size_t i);
// 1-based index of the unique field of type agg*, if exactly one exists.
std::optional<std::size_t> recursive_index(const Program& p, TypeId agg);
bool is_list_type(const Program& p, TypeId t);

}  // namespace listterm
