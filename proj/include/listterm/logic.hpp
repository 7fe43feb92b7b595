#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace listterm {

using VarId = std::uint32_t;

struct SymVar {
  VarId id = 0;
  auto operator<=>(const SymVar&) const = default;
};

// Issues fresh symbolic variables. Ids start at 1 and are never reused.
class VarPool {
 public:
  SymVar fresh(std::string_view hint);
  std::string hint(VarId id) const;
  std::string name(VarId id) const;  // "hint#id"
  std::string name(SymVar v) const { return name(v.id); }
  VarId issued() const { return next_.load() - 1; }

 private:
  std::atomic<VarId> next_{1};
  mutable std::mutex mu_;
  std::unordered_map<VarId, std::string> hints_;
};

// Linear term: constant + sum of coeff * var, coefficients nonzero, sorted by id.
class Term {
 public:
  using Coeffs = std::vector<std::pair<VarId, std::int64_t>>;

  Term() = default;
  Term(std::int64_t c) : c_(c) {}  // NOLINT: implicit on purpose
  Term(SymVar v) : coeffs_{{v.id, 1}} {}  // NOLINT

  static Term var(VarId id, std::int64_t k = 1);

  std::int64_t constant() const { return c_; }
  const Coeffs& coeffs() const { return coeffs_; }
  bool is_constant() const { return coeffs_.empty(); }
  std::optional<SymVar> as_var() const;
  std::int64_t coeff(VarId id) const;
  bool mentions(VarId id) const { return coeff(id) != 0; }

  Term operator+(const Term& o) const;
  Term operator-(const Term& o) const;
  Term operator-() const { return *this * -1; }
  Term operator*(std::int64_t k) const;
  Term& operator+=(const Term& o) { return *this = *this + o; }
  bool operator==(const Term&) const = default;
  auto operator<=>(const Term& o) const {
    if (auto r = coeffs_ <=> o.coeffs_; r != 0) return r;
    return c_ <=> o.c_;
  }

  // Replace each variable by f(id); f returns nullopt to keep the variable.
  Term substitute(const std::function<std::optional<Term>(VarId)>& f) const;
  Term substitute(VarId id, const Term& by) const;
  Term rename(const std::map<VarId, VarId>& r) const;

  std::int64_t gcd_coeffs() const;
  std::string str(const VarPool* pool = nullptr) const;

 private:
  std::int64_t c_ = 0;
  Coeffs coeffs_;
};

inline Term operator+(std::int64_t c, const Term& t) { return Term(c) + t; }

enum class Rel { Eq, Ne, Le };

// Normalized atom: t REL 0.
class Atom {
 public:
  Atom() : rel_(Rel::Le), t_(0) {}
  Atom(Rel r, Term t);

  static Atom eq(const Term& a, const Term& b) { return {Rel::Eq, a - b}; }
  static Atom ne(const Term& a, const Term& b) { return {Rel::Ne, a - b}; }
  static Atom le(const Term& a, const Term& b) { return {Rel::Le, a - b}; }
  static Atom lt(const Term& a, const Term& b) { return {Rel::Le, a - b + 1}; }
  static Atom ge(const Term& a, const Term& b) { return le(b, a); }
  static Atom gt(const Term& a, const Term& b) { return lt(b, a); }
  static Atom truth() { return {Rel::Le, Term(0)}; }
  static Atom falsity() { return {Rel::Le, Term(1)}; }

  Rel rel() const { return rel_; }
  const Term& term() const { return t_; }
  bool is_ground() const { return t_.is_constant(); }
  bool ground_value() const;  // pre: is_ground()
  bool is_true() const { return is_ground() && ground_value(); }
  bool is_false() const { return is_ground() && !ground_value(); }

  // Negation as a disjunction of atoms (Eq negates to Ne; Ne to Eq; Le to Le).
  Atom negate() const;

  Atom substitute(const std::function<std::optional<Term>(VarId)>& f) const {
    return {rel_, t_.substitute(f)};
  }
  Atom rename(const std::map<VarId, VarId>& r) const { return {rel_, t_.rename(r)}; }

  bool operator==(const Atom&) const = default;
  auto operator<=>(const Atom& o) const {
    if (rel_ != o.rel_) return rel_ <=> o.rel_;
    return t_ <=> o.t_;
  }
  std::string str(const VarPool* pool = nullptr) const;

 private:
  Rel rel_;
  Term t_;
};

using Clause = std::vector<Atom>;  // disjunction, sorted and unique

Clause make_clause(std::vector<Atom> atoms);

// Conjunction of clauses, kept sorted and duplicate-free.
class Formula {
 public:
  Formula() = default;
  Formula(std::initializer_list<Atom> atoms) {
    for (const auto& a : atoms) add(a);
  }

  void add(const Atom& a) { add(Clause{a}); }
  void add(Clause c);
  void add_all(const Formula& f) {
    for (const auto& c : f.clauses()) add(c);
  }
  bool contains(const Atom& a) const;
  bool empty() const { return clauses_.empty(); }
  std::size_t size() const { return clauses_.size(); }
  const std::vector<Clause>& clauses() const { return clauses_; }
  std::vector<VarId> vars() const;

  Formula substitute(const std::function<std::optional<Term>(VarId)>& f) const;
  Formula rename(const std::map<VarId, VarId>& r) const;
  bool operator==(const Formula&) const = default;
  std::string str(const VarPool* pool = nullptr) const;

 private:
  std::vector<Clause> clauses_;
};

using Assignment = std::map<VarId, std::int64_t>;

std::int64_t eval_term(const Assignment& a, const Term& t);  // throws on unassigned
bool eval_atom(const Assignment& a, const Atom& at);
bool eval_formula(const Assignment& a, const Formula& f);

// Exhaustive check of premise => conclusion over [0, bound]^k, k <= 6.
bool brute_force_valid(const Formula& premise, const Formula& conclusion, std::int64_t bound);

enum class Verdict { Valid, NotProven };

struct ProverConfig {
  int effort = 10000;   // Fourier-Motzkin rows generated per query
  int max_splits = 14;  // case splits considered per relevance level
  std::string smt_cmd;  // external solver command, empty = internal only
};

struct ProverStats {
  std::atomic<std::uint64_t> queries{0};
  std::atomic<std::uint64_t> external_calls{0};
};
ProverStats& prover_stats();

// Entailment engine with a preprocessed premise; reuse it for many conclusions.
class Prover {
 public:
  explicit Prover(const Formula& premise, ProverConfig cfg = {});

  bool premise_unsat() const { return unsat_; }
  Verdict entails(const Atom& a) const;
  Verdict entails(const Clause& c) const;
  Verdict entails(const Formula& f) const;
  bool proves(const Atom& a) const { return entails(a) == Verdict::Valid; }
  bool proves(const Clause& c) const { return entails(c) == Verdict::Valid; }
  bool proves_eq(const Term& a, const Term& b) const { return proves(Atom::eq(a, b)); }

  // Term rewritten by the premise's solved equalities.
  Term normalize(const Term& t) const;
  // Constant value the premise's equalities force on t, if any.
  std::optional<std::int64_t> implied_constant(const Term& t) const;

  const Formula& premise() const { return premise_; }

 private:
  struct Split {
    std::vector<std::vector<Term>> alts;  // each alternative is a set of rows (row <= 0)
    std::vector<VarId> vars;
  };
  bool refute(std::vector<Term> rows, const std::vector<Term>& goal_split_rows) const;
  bool search(std::vector<Term>& rows, const std::vector<const Split*>& splits, std::size_t k,
              int& budget) const;
  Verdict external(const Clause& c) const;

  Formula premise_;
  ProverConfig cfg_;
  bool unsat_ = false;
  std::unordered_map<VarId, Term> subst_;
  std::vector<Term> rows_;  // unit inequalities after substitution
  std::vector<Split> splits_;
  std::unordered_map<VarId, int> occurrences_;
};

Verdict entails(const Formula& premise, const Formula& conclusion, const ProverConfig& cfg = {});

// Fourier-Motzkin refutation of a conjunction of rows (row <= 0). Returns true if unsat.
// Sets exhausted when the effort bound was hit (result then false).
bool fm_unsat(std::vector<Term> rows, int effort, bool* exhausted = nullptr);

std::string to_smtlib(const Formula& premise, const Clause& negated_goal_source);
std::optional<bool> run_smt_solver(const std::string& cmd, const std::string& script);

}  // namespace listterm
