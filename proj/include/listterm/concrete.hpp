#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "listterm/seg.hpp"

namespace listterm {

using Memory = std::map<std::uint64_t, std::uint8_t>;

struct ConcreteAlloc {
  std::uint64_t lo = 0, hi = 0;
  bool operator==(const ConcreteAlloc&) const = default;
};

struct ConcreteState {
  Position pos;
  std::map<std::string, std::int64_t> as;
  std::vector<ConcreteAlloc> allocs;  // allocation order
  Memory mem;
  bool halted = false;
  bool error = false;
  std::string error_msg;
  bool operator==(const ConcreteState&) const = default;
};

// Little-endian codec.
std::vector<std::uint8_t> encode_le(std::uint64_t value, std::size_t bytes);
std::uint64_t decode_le(const std::vector<std::uint8_t>& bytes);
// Reads `bytes` bytes at addr; nullopt if any byte is undefined.
std::optional<std::uint64_t> read_mem(const Memory& mem, std::uint64_t addr, std::size_t bytes);

// Values for nondet calls: the given prefix first, then uniform draws from [0, max] of a seeded PRNG.
class NondetStream {
 public:
  explicit NondetStream(std::uint64_t seed = 1, std::int64_t max = 5, std::vector<std::int64_t> prefix = {})
      : rng_(seed), max_(max), prefix_(std::move(prefix)) {}
  std::int64_t next();
  const std::vector<std::int64_t>& drawn() const { return drawn_; }

 private:
  std::mt19937_64 rng_;
  std::int64_t max_;
  std::vector<std::int64_t> prefix_;
  std::size_t used_ = 0;
  std::vector<std::int64_t> drawn_;
};

ConcreteState initial_concrete(const Program& p);
// One instruction. Pre: not halted and no error.
ConcreteState concrete_step(const Program& p, const ConcreteState& c, NondetStream& nd);

enum class RunOutcome { Returned, Error, FuelExhausted };
const char* run_outcome_str(RunOutcome o);

struct Trace {
  std::vector<ConcreteState> states;  // states[0] is the initial state
  RunOutcome outcome = RunOutcome::Returned;
};

Trace run_concrete(const Program& p, NondetStream& nd, std::size_t fuel = 10000);
// `pos | instr | changed-cells` lines.
std::string trace_str(const Program& p, const Trace& t);

struct LiField {
  std::uint64_t off = 0, size = 0;
  std::int64_t first = 0, last = 0;
};

// The list predicate li_{bs,j}(len, ad, fields); j is 0-based. Element starts are appended to
// `elements` when given.
bool eval_li_predicate(const Memory& mem, std::uint64_t bs, std::size_t j, std::int64_t len, std::int64_t ad,
                       const std::vector<LiField>& fields, std::vector<std::uint64_t>* elements = nullptr);

struct Interpretation {
  std::map<std::string, std::int64_t> as;
  Memory mem;
  bool operator==(const Interpretation&) const = default;
};
Interpretation extract_interpretation(const ConcreteState& c);
ConcreteState rebuild_state(Position pos, const Interpretation& i, const std::vector<ConcreteAlloc>& allocs);

// Looks for an instantiation of s's variables under which c is represented by s.
// phi: <s> if already known. sigma receives the instantiation on success.
bool represents(const ConcreteState& c, const AbstractState& s, const Ctx& ctx, const Formula* phi = nullptr,
                Assignment* sigma = nullptr, std::string* why = nullptr);

// Follows a concrete run along the matching SEG path, checking `represents` at every node.
struct DiffReport {
  std::size_t runs = 0, checked_states = 0, violations = 0, fuel_exhausted = 0;
  std::map<std::string, std::size_t> rule_checks;  // rule -> edges whose both ends were checked
  std::vector<std::string> messages;               // first few violations
};

class Differential {
 public:
  Differential(const Program& p, const Seg& g, const Ctx& ctx) : prog_(p), g_(g), ctx_(ctx) {}
  void run(NondetStream& nd, std::size_t fuel, DiffReport& rep);

 private:
  const Formula& phi(int n);
  const Program& prog_;
  const Seg& g_;
  const Ctx& ctx_;
  std::map<int, Formula> phi_;
};

}  // namespace listterm
