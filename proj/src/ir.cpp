#include "listterm/ir.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace listterm {

namespace {

struct Token {
  enum Kind { Ident, Global, Number, Punct, End } kind = End;
  std::string text;
  std::int64_t value = 0;
  int col = 0;
};

std::vector<Token> tokenize(const std::string& line, int lineno) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto ident_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '\''; };
  while (i < line.size()) {
    char c = line[i];
    if (c == ';') break;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    Token t;
    t.col = static_cast<int>(i) + 1;
    if (c == '@') {
      std::size_t j = i + 1;
      while (j < line.size() && ident_char(line[j])) ++j;
      t.kind = Token::Global;
      t.text = line.substr(i + 1, j - i - 1);
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '-' && i + 1 < line.size() && std::isdigit(static_cast<unsigned char>(line[i + 1])))) {
      std::size_t j = i + 1;
      while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
      t.kind = Token::Number;
      t.text = line.substr(i, j - i);
      try {
        t.value = std::stoll(t.text);
      } catch (const std::exception&) {
        throw ParseError(lineno, t.col, "integer literal out of range");
      }
      i = j;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '%') {
      std::size_t j = i + (c == '%' ? 1 : 0);
      std::size_t start = j;
      while (j < line.size() && ident_char(line[j])) ++j;
      if (j == start) throw ParseError(lineno, t.col, "empty identifier");
      t.kind = Token::Ident;
      t.text = line.substr(start, j - start);
      i = j;
    } else if (std::string("=,{}()*:").find(c) != std::string::npos) {
      t.kind = Token::Punct;
      t.text = std::string(1, c);
      ++i;
    } else {
      throw ParseError(lineno, t.col, std::string("unexpected character '") + c + "'");
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.col = static_cast<int>(line.size()) + 1;
  out.push_back(end);
  return out;
}

class Parser {
 public:
  explicit Parser(Program& p) : p_(p) {}

  void set_line(std::vector<Token> toks, int lineno) {
    toks_ = std::move(toks);
    pos_ = 0;
    line_ = lineno;
  }

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool at_end() const { return peek().kind == Token::End; }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line_, peek().col, msg); }

  bool accept(const std::string& punct_or_kw) {
    const Token& t = peek();
    if ((t.kind == Token::Punct || t.kind == Token::Ident) && t.text == punct_or_kw) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(const std::string& s) {
    if (!accept(s)) fail("expected '" + s + "'");
  }
  std::string ident() {
    if (peek().kind != Token::Ident) fail("expected identifier");
    return toks_[pos_++].text;
  }
  std::int64_t number() {
    if (peek().kind != Token::Number) fail("expected integer literal");
    return toks_[pos_++].value;
  }
  void expect_end() {
    if (!at_end()) fail("unexpected trailing token '" + peek().text + "'");
  }

  TypeId intern(IrType t) {
    for (TypeId i = 0; i < p_.types.size(); ++i) {
      const IrType& u = p_.types[i];
      if (u.kind != t.kind) continue;
      if (t.kind == IrType::Kind::Int && u.bits == t.bits) return i;
      if (t.kind == IrType::Kind::Ptr && u.pointee == t.pointee) return i;
      if (t.kind == IrType::Kind::Aggregate && u.name == t.name) return i;
    }
    p_.types.push_back(std::move(t));
    return static_cast<TypeId>(p_.types.size() - 1);
  }

  TypeId type() {
    const Token& t = peek();
    if (t.kind != Token::Ident) fail("expected type");
    TypeId base;
    if (t.text.size() > 1 && t.text[0] == 'i' &&
        std::all_of(t.text.begin() + 1, t.text.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      unsigned bits = static_cast<unsigned>(std::stoul(t.text.substr(1)));
      if (bits != 1 && bits != 8 && bits != 32 && bits != 64) fail("unsupported integer width i" + std::to_string(bits));
      IrType it;
      it.kind = IrType::Kind::Int;
      it.bits = bits;
      base = intern(it);
    } else if (t.text == "void") {
      fail("void is not a value type");
    } else {
      auto found = p_.find_type(t.text);
      if (!found) fail("unknown type '" + t.text + "'");
      base = *found;
    }
    ++pos_;
    while (accept("*")) {
      IrType pt;
      pt.kind = IrType::Kind::Ptr;
      pt.pointee = base;
      base = intern(pt);
    }
    return base;
  }

  Operand operand() {
    const Token& t = peek();
    if (t.kind == Token::Number) return number();
    if (t.kind == Token::Ident) {
      if (t.text == "null") {
        ++pos_;
        return std::int64_t{0};
      }
      return ident();
    }
    fail("expected operand");
  }

  TypeId ptr_of(TypeId t) {
    IrType pt;
    pt.kind = IrType::Kind::Ptr;
    pt.pointee = t;
    return intern(pt);
  }

  Instr instruction() {
    Instr in;
    in.line = line_;
    if (peek().kind == Token::Ident && peek(1).kind == Token::Punct && peek(1).text == "=") {
      in.dst = ident();
      expect("=");
      std::string opname = ident();
      if (opname == "load") {
        in.op = Op::Load;
        in.ty = type();
        expect(",");
        TypeId at = type();
        if (at != ptr_of(in.ty)) fail("load address type must be a pointer to the loaded type");
        in.a = operand();
      } else if (opname == "getelementptr") {
        accept("inbounds");
        TypeId elem = type();
        expect(",");
        TypeId bt = type();
        if (bt != ptr_of(elem)) fail("getelementptr base must point to the element type");
        in.a = operand();
        expect(",");
        in.ty2 = type();
        in.b = operand();
        in.ty = elem;
        if (accept(",")) {
          type();
          in.c = operand();
          if (p_.type(elem).kind != IrType::Kind::Aggregate) fail("field form of getelementptr needs an aggregate");
          in.op = Op::GepField;
        } else {
          const IrType& e = p_.type(elem);
          if (e.kind != IrType::Kind::Int || e.bits != 8) fail("byte form of getelementptr needs i8");
          in.op = Op::GepByte;
        }
      } else if (opname == "icmp") {
        in.op = Op::Icmp;
        static const std::map<std::string, Pred> preds{{"eq", Pred::Eq},   {"ne", Pred::Ne},   {"ult", Pred::Ult},
                                                       {"ule", Pred::Ule}, {"ugt", Pred::Ugt}, {"uge", Pred::Uge},
                                                       {"slt", Pred::Slt}, {"sle", Pred::Sle}, {"sgt", Pred::Sgt},
                                                       {"sge", Pred::Sge}};
        std::string pr = ident();
        auto it = preds.find(pr);
        if (it == preds.end()) fail("unknown icmp predicate '" + pr + "'");
        in.pred = it->second;
        in.ty = type();
        in.a = operand();
        expect(",");
        in.b = operand();
      } else if (opname == "add") {
        in.op = Op::Add;
        accept("nuw");
        accept("nsw");
        in.ty = type();
        in.a = operand();
        expect(",");
        in.b = operand();
      } else if (opname == "bitcast") {
        in.op = Op::Bitcast;
        in.ty2 = type();
        in.a = operand();
        expect("to");
        in.ty = type();
      } else if (opname == "call") {
        TypeId rt = type();
        if (peek().kind != Token::Global) fail("expected callee");
        std::string callee = toks_[pos_++].text;
        expect("(");
        if (callee == "malloc") {
          in.op = Op::Malloc;
          type();
          std::int64_t n = number();
          if (n <= 0) fail("malloc size must be positive");
          in.size = static_cast<std::uint64_t>(n);
          in.ty = rt;
        } else if (callee.rfind("nondet", 0) == 0) {
          in.op = Op::NondetInt;
          in.ty = rt;
          if (p_.type(rt).kind != IrType::Kind::Int) fail("nondet call must return an integer");
        } else {
          fail("unsupported callee '@" + callee + "'");
        }
        expect(")");
      } else {
        fail("unknown instruction '" + opname + "'");
      }
      expect_end();
      return in;
    }
    std::string opname = ident();
    if (opname == "store") {
      in.op = Op::Store;
      in.ty = type();
      in.a = operand();
      expect(",");
      TypeId at = type();
      if (at != ptr_of(in.ty)) fail("store address type must be a pointer to the stored type");
      in.b = operand();
    } else if (opname == "br") {
      if (accept("label")) {
        in.op = Op::Br;
        in.then_label = ident();
      } else {
        in.op = Op::BrCond;
        TypeId ct = type();
        if (ct != intern(IrType{IrType::Kind::Int, 1, 0, {}, {}})) fail("branch condition must be i1");
        in.a = operand();
        expect(",");
        expect("label");
        in.then_label = ident();
        expect(",");
        expect("label");
        in.else_label = ident();
      }
    } else if (opname == "ret") {
      in.op = Op::Ret;
      if (!accept("void")) {
        in.ty = type();
        in.a = operand();
        in.has_value = true;
      }
    } else if (opname == "call") {
      expect("void");
      if (peek().kind != Token::Global || peek().text != "free") fail("only @free may be called without a result");
      ++pos_;
      expect("(");
      in.op = Op::Free;
      in.ty = type();
      in.a = operand();
      expect(")");
    } else {
      fail("unknown instruction '" + opname + "'");
    }
    expect_end();
    return in;
  }

 private:
  Program& p_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int line_ = 0;
};

bool is_terminator(Op op) { return op == Op::Br || op == Op::BrCond || op == Op::Ret; }

std::uint64_t align_of(const Program& p, TypeId t) {
  const IrType& ty = p.type(t);
  switch (ty.kind) {
    case IrType::Kind::Int: return p.layout.int_sizes.at(ty.bits);
    case IrType::Kind::Ptr: return p.layout.ptr_size;
    case IrType::Kind::Aggregate: {
      std::uint64_t a = 1;
      for (TypeId f : ty.fields) a = std::max(a, align_of(p, f));
      return a;
    }
  }
  return 1;
}

void compute_layout(Program& p, TypeId agg, std::set<TypeId>& busy) {
  if (p.layout.aggregate_sizes.count(agg)) return;
  if (!busy.insert(agg).second) throw ParseError(0, 0, "aggregate '" + p.type(agg).name + "' contains itself by value");
  const IrType& ty = p.type(agg);
  std::uint64_t off = 0, align = 1;
  std::vector<std::uint64_t> offs;
  for (TypeId f : ty.fields) {
    if (p.type(f).kind == IrType::Kind::Aggregate) compute_layout(p, f, busy);
    std::uint64_t a = align_of(p, f);
    align = std::max(align, a);
    off = (off + a - 1) / a * a;
    offs.push_back(off);
    off += type_size(p, f);
  }
  off = (off + align - 1) / align * align;
  p.layout.field_offsets[agg] = offs;
  p.layout.aggregate_sizes[agg] = off;
  busy.erase(agg);
}

std::string operand_str(const Operand& o) {
  if (std::holds_alternative<std::string>(o)) return std::get<std::string>(o);
  return std::to_string(std::get<std::int64_t>(o));
}

std::string ptr_operand_str(const Operand& o) {
  if (std::holds_alternative<std::int64_t>(o) && std::get<std::int64_t>(o) == 0) return "null";
  return operand_str(o);
}

const char* pred_str(Pred p) {
  switch (p) {
    case Pred::Eq: return "eq";
    case Pred::Ne: return "ne";
    case Pred::Ult: return "ult";
    case Pred::Ule: return "ule";
    case Pred::Ugt: return "ugt";
    case Pred::Uge: return "uge";
    case Pred::Slt: return "slt";
    case Pred::Sle: return "sle";
    case Pred::Sgt: return "sgt";
    case Pred::Sge: return "sge";
  }
  return "?";
}

}  // namespace

std::string Program::pos_str(Position p) const {
  return "(" + blocks.at(p.block).name + ", " + std::to_string(p.index) + ")";
}

std::optional<TypeId> Program::find_type(const std::string& name) const {
  for (TypeId i = 0; i < types.size(); ++i)
    if (types[i].kind == IrType::Kind::Aggregate && types[i].name == name) return i;
  return std::nullopt;
}

TypeId Program::int_type(unsigned bits) const {
  for (TypeId i = 0; i < types.size(); ++i)
    if (types[i].kind == IrType::Kind::Int && types[i].bits == bits) return i;
  throw std::out_of_range("integer type not interned");
}

std::optional<TypeId> Program::ptr_to(TypeId t) const {
  for (TypeId i = 0; i < types.size(); ++i)
    if (types[i].kind == IrType::Kind::Ptr && types[i].pointee == t) return i;
  return std::nullopt;
}

std::vector<std::string> Program::variables() const {
  std::set<std::string> s;
  for (const auto& b : blocks)
    for (const auto& in : b.instrs)
      if (!in.dst.empty()) s.insert(in.dst);
  return {s.begin(), s.end()};
}

Program parse_program(const std::string& text) {
  Program p;
  Parser ps(p);
  // Pre-intern the basic integer types so their ids are stable.
  for (unsigned bits : {1u, 8u, 32u, 64u}) ps.intern(IrType{IrType::Kind::Int, bits, 0, {}, {}});

  std::vector<std::pair<int, std::string>> lines;
  {
    std::istringstream is(text);
    std::string l;
    int n = 0;
    while (std::getline(is, l)) lines.emplace_back(++n, l);
  }

  // Pass 1: aggregate names, so declarations may refer to each other.
  for (const auto& [n, l] : lines) {
    auto toks = tokenize(l, n);
    if (toks.size() >= 4 && toks[0].kind == Token::Ident && toks[1].text == "=" && toks[2].text == "type") {
      if (p.find_type(toks[0].text)) throw ParseError(n, toks[0].col, "duplicate type '" + toks[0].text + "'");
      IrType a;
      a.kind = IrType::Kind::Aggregate;
      a.name = toks[0].text;
      p.types.push_back(a);
      p.aggregates.push_back(static_cast<TypeId>(p.types.size() - 1));
    }
  }

  enum class State { Top, Body } st = State::Top;
  Block* cur = nullptr;
  bool seen_main = false;
  int last_line = 1;
  for (const auto& [n, l] : lines) {
    last_line = n;
    auto toks = tokenize(l, n);
    if (toks.size() == 1) continue;
    ps.set_line(toks, n);
    if (st == State::Top) {
      if (toks[0].kind == Token::Ident && toks[1].text == "=" && toks[2].text == "type") {
        std::string name = ps.ident();
        ps.expect("=");
        ps.expect("type");
        ps.expect("{");
        TypeId id = *p.find_type(name);
        std::vector<TypeId> fields;
        if (!ps.accept("}")) {
          do {
            fields.push_back(ps.type());
          } while (ps.accept(","));
          ps.expect("}");
        }
        ps.expect_end();
        if (fields.empty()) throw ParseError(n, 1, "aggregate '" + name + "' has no fields");
        p.types[id].fields = fields;
      } else if (ps.accept("define")) {
        if (seen_main) ps.fail("only one function is supported");
        ps.type();
        if (ps.peek().kind != Token::Global || ps.peek().text != "main") ps.fail("expected @main");
        ps.set_line(toks, n);
        // Consume the remaining header tokens: define <ty> @main ( ) {
        std::size_t k = 0;
        while (toks[k].kind != Token::End && toks[k].text != "{") ++k;
        if (toks[k].text != "{" || toks[k + 1].kind != Token::End) ps.fail("malformed function header");
        seen_main = true;
        st = State::Body;
      } else {
        ps.fail("expected type declaration or function definition");
      }
      continue;
    }
    if (toks[0].kind == Token::Punct && toks[0].text == "}") {
      if (toks.size() != 2) ps.fail("unexpected tokens after '}'");
      st = State::Top;
      cur = nullptr;
      continue;
    }
    if (toks[0].kind == Token::Ident && toks[1].kind == Token::Punct && toks[1].text == ":" && toks.size() == 3) {
      if (p.block_index.count(toks[0].text)) ps.fail("duplicate block '" + toks[0].text + "'");
      p.block_index[toks[0].text] = static_cast<std::uint32_t>(p.blocks.size());
      p.blocks.push_back(Block{toks[0].text, {}});
      cur = &p.blocks.back();
      continue;
    }
    if (!cur) {
      p.block_index["entry"] = 0;
      p.blocks.push_back(Block{"entry", {}});
      cur = &p.blocks.back();
    }
    if (!cur->instrs.empty() && is_terminator(cur->instrs.back().op)) ps.fail("instruction after block terminator");
    cur->instrs.push_back(ps.instruction());
  }
  if (!seen_main) throw ParseError(last_line, 1, "missing define i32 @main()");
  if (st != State::Top) throw ParseError(last_line, 1, "missing closing '}'");
  if (p.blocks.empty()) throw ParseError(last_line, 1, "function has no blocks");

  for (const auto& b : p.blocks) {
    if (b.instrs.empty()) throw ParseError(last_line, 1, "block '" + b.name + "' is empty");
    if (!is_terminator(b.instrs.back().op))
      throw ParseError(b.instrs.back().line, 1, "block '" + b.name + "' does not end in br or ret");
    for (const auto& in : b.instrs) {
      for (const std::string* l : {&in.then_label, &in.else_label}) {
        if (!l->empty() && !p.block_index.count(*l)) throw ParseError(in.line, 1, "unknown block '" + *l + "'");
      }
    }
  }

  std::set<TypeId> busy;
  for (TypeId a : p.aggregates) compute_layout(p, a, busy);
  for (TypeId a : p.aggregates) {
    const IrType& ty = p.type(a);
    int rec = 0;
    for (TypeId f : ty.fields)
      if (p.type(f).kind == IrType::Kind::Ptr && p.type(f).pointee == a) ++rec;
    if (rec > 1) p.warnings.push_back("aggregate '" + ty.name + "' has " + std::to_string(rec) + " recursive fields; list rules ignore it");
  }
  return p;
}

std::string type_str(const Program& p, TypeId t) {
  const IrType& ty = p.type(t);
  switch (ty.kind) {
    case IrType::Kind::Int: return "i" + std::to_string(ty.bits);
    case IrType::Kind::Ptr: return type_str(p, ty.pointee) + "*";
    case IrType::Kind::Aggregate: return ty.name;
  }
  return "?";
}

std::string instr_str(const Program& p, const Instr& in) {
  auto T = [&](TypeId t) { return type_str(p, t); };
  auto PT = [&](TypeId t) { return type_str(p, t) + "*"; };
  std::string s = in.dst.empty() ? "" : in.dst + " = ";
  switch (in.op) {
    case Op::Load: return s + "load " + T(in.ty) + ", " + PT(in.ty) + " " + operand_str(in.a);
    case Op::Store: {
      bool ptr = p.type(in.ty).kind == IrType::Kind::Ptr;
      return "store " + T(in.ty) + " " + (ptr ? ptr_operand_str(in.a) : operand_str(in.a)) + ", " + PT(in.ty) + " " +
             operand_str(in.b);
    }
    case Op::GepByte:
      return s + "getelementptr " + T(in.ty) + ", " + PT(in.ty) + " " + operand_str(in.a) + ", " + T(in.ty2) + " " +
             operand_str(in.b);
    case Op::GepField:
      return s + "getelementptr " + T(in.ty) + ", " + PT(in.ty) + " " + operand_str(in.a) + ", " + T(in.ty2) + " " +
             operand_str(in.b) + ", " + T(in.ty2) + " " + operand_str(in.c);
    case Op::Icmp: {
      bool ptr = p.type(in.ty).kind == IrType::Kind::Ptr;
      auto o = [&](const Operand& x) { return ptr ? ptr_operand_str(x) : operand_str(x); };
      return s + "icmp " + pred_str(in.pred) + " " + T(in.ty) + " " + o(in.a) + ", " + o(in.b);
    }
    case Op::BrCond:
      return "br i1 " + operand_str(in.a) + ", label " + in.then_label + ", label " + in.else_label;
    case Op::Br: return "br label " + in.then_label;
    case Op::Add: return s + "add " + T(in.ty) + " " + operand_str(in.a) + ", " + operand_str(in.b);
    case Op::Bitcast: return s + "bitcast " + T(in.ty2) + " " + operand_str(in.a) + " to " + T(in.ty);
    case Op::Malloc: return s + "call " + T(in.ty) + " @malloc(i64 " + std::to_string(in.size) + ")";
    case Op::NondetInt: return s + "call " + T(in.ty) + " @nondet_uint()";
    case Op::Free: return "call void @free(" + T(in.ty) + " " + ptr_operand_str(in.a) + ")";
    case Op::Ret: return in.has_value ? "ret " + T(in.ty) + " " + operand_str(in.a) : "ret void";
  }
  return "?";
}

std::string print_program(const Program& p) {
  std::ostringstream os;
  for (TypeId a : p.aggregates) {
    const IrType& ty = p.type(a);
    os << ty.name << " = type { ";
    for (std::size_t i = 0; i < ty.fields.size(); ++i) os << (i ? ", " : "") << type_str(p, ty.fields[i]);
    os << " }\n";
  }
  if (!p.aggregates.empty()) os << "\n";
  os << "define i32 @main() {\n";
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    if (b) os << "\n";
    os << p.blocks[b].name << ":\n";
    for (const auto& in : p.blocks[b].instrs) os << "  " << instr_str(p, in) << "\n";
  }
  os << "}\n";
  return os.str();
}

std::uint64_t type_size(const Program& p, TypeId t) {
  const IrType& ty = p.type(t);
  switch (ty.kind) {
    case IrType::Kind::Int: return p.layout.int_sizes.at(ty.bits);
    case IrType::Kind::Ptr: return p.layout.ptr_size;
    case IrType::Kind::Aggregate: {
      auto it = p.layout.aggregate_sizes.find(t);
      if (it == p.layout.aggregate_sizes.end()) throw std::out_of_range("unknown aggregate '" + ty.name + "'");
      return it->second;
    }
  }
  return 0;
}

std::uint64_t field_offset(const Program& p, TypeId agg, std::size_t i) {
  auto it = p.layout.field_offsets.find(agg);
  if (it == p.layout.field_offsets.end()) throw std::out_of_range("not an aggregate");
  if (i < 1 || i > it->second.size()) throw std::out_of_range("field index out of range");
  return it->second[i - 1];
}

std::optional<std::size_t> recursive_index(const Program& p, TypeId agg) {
  const IrType& ty = p.type(agg);
  if (ty.kind != IrType::Kind::Aggregate) return std::nullopt;
  std::optional<std::size_t> found;
  for (std::size_t i = 0; i < ty.fields.size(); ++i) {
    const IrType& f = p.type(ty.fields[i]);
    if (f.kind == IrType::Kind::Ptr && f.pointee == agg) {
      if (found) return std::nullopt;
      found = i + 1;
    }
  }
  return found;
}

bool is_list_type(const Program& p, TypeId t) { return recursive_index(p, t).has_value(); }

}  // namespace listterm
