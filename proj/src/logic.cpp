#include "listterm/logic.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace listterm {

namespace {

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("term overflow");
  return r;
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("term overflow");
  return r;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

}  // namespace

SymVar VarPool::fresh(std::string_view hint) {
  VarId id = next_.fetch_add(1);
  std::lock_guard<std::mutex> lock(mu_);
  hints_.emplace(id, std::string(hint));
  return SymVar{id};
}

std::string VarPool::hint(VarId id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = hints_.find(id);
  return it == hints_.end() ? std::string("v") : it->second;
}

std::string VarPool::name(VarId id) const { return hint(id) + "#" + std::to_string(id); }

Term Term::var(VarId id, std::int64_t k) {
  Term t;
  if (k != 0) t.coeffs_.emplace_back(id, k);
  return t;
}

std::optional<SymVar> Term::as_var() const {
  if (c_ == 0 && coeffs_.size() == 1 && coeffs_[0].second == 1) return SymVar{coeffs_[0].first};
  return std::nullopt;
}

std::int64_t Term::coeff(VarId id) const {
  auto it = std::lower_bound(coeffs_.begin(), coeffs_.end(), id,
                             [](const auto& p, VarId v) { return p.first < v; });
  return (it != coeffs_.end() && it->first == id) ? it->second : 0;
}

Term Term::operator+(const Term& o) const {
  Term r;
  r.c_ = checked_add(c_, o.c_);
  r.coeffs_.reserve(coeffs_.size() + o.coeffs_.size());
  std::size_t i = 0, j = 0;
  while (i < coeffs_.size() || j < o.coeffs_.size()) {
    if (j == o.coeffs_.size() || (i < coeffs_.size() && coeffs_[i].first < o.coeffs_[j].first)) {
      r.coeffs_.push_back(coeffs_[i++]);
    } else if (i == coeffs_.size() || o.coeffs_[j].first < coeffs_[i].first) {
      r.coeffs_.push_back(o.coeffs_[j++]);
    } else {
      std::int64_t k = checked_add(coeffs_[i].second, o.coeffs_[j].second);
      if (k != 0) r.coeffs_.emplace_back(coeffs_[i].first, k);
      ++i;
      ++j;
    }
  }
  return r;
}

Term Term::operator-(const Term& o) const { return *this + o * -1; }

Term Term::operator*(std::int64_t k) const {
  Term r;
  if (k == 0) return r;
  r.c_ = checked_mul(c_, k);
  r.coeffs_.reserve(coeffs_.size());
  for (const auto& [v, a] : coeffs_) r.coeffs_.emplace_back(v, checked_mul(a, k));
  return r;
}

Term Term::substitute(const std::function<std::optional<Term>(VarId)>& f) const {
  Term r(c_);
  Term::Coeffs kept;
  for (const auto& [v, a] : coeffs_) {
    if (auto by = f(v)) {
      r += *by * a;
    } else {
      kept.emplace_back(v, a);
    }
  }
  Term k;
  k.coeffs_ = std::move(kept);
  return r + k;
}

Term Term::substitute(VarId id, const Term& by) const {
  std::int64_t a = coeff(id);
  if (a == 0) return *this;
  return (*this - Term::var(id, a)) + by * a;
}

Term Term::rename(const std::map<VarId, VarId>& r) const {
  return substitute([&](VarId v) -> std::optional<Term> {
    auto it = r.find(v);
    if (it == r.end()) return std::nullopt;
    return Term::var(it->second);
  });
}

std::int64_t Term::gcd_coeffs() const {
  std::int64_t g = 0;
  for (const auto& [v, a] : coeffs_) g = std::gcd(g, a < 0 ? -a : a);
  return g;
}

std::string Term::str(const VarPool* pool) const {
  std::ostringstream os;
  bool first = true;
  for (const auto& [v, a] : coeffs_) {
    std::string name = pool ? pool->name(v) : "v" + std::to_string(v);
    if (first) {
      if (a == -1) os << "-";
      else if (a != 1) os << a << "*";
    } else {
      os << (a < 0 ? " - " : " + ");
      std::int64_t m = a < 0 ? -a : a;
      if (m != 1) os << m << "*";
    }
    os << name;
    first = false;
  }
  if (first) {
    os << c_;
  } else if (c_ != 0) {
    os << (c_ < 0 ? " - " : " + ") << (c_ < 0 ? -c_ : c_);
  }
  return os.str();
}

Atom::Atom(Rel r, Term t) : rel_(r), t_(std::move(t)) {
  if (t_.is_constant()) {
    bool v = r == Rel::Eq ? t_.constant() == 0 : r == Rel::Ne ? t_.constant() != 0 : t_.constant() <= 0;
    rel_ = Rel::Le;
    t_ = Term(v ? 0 : 1);
    return;
  }
  std::int64_t g = t_.gcd_coeffs();
  std::int64_t c = t_.constant();
  if (rel_ == Rel::Le) {
    if (g > 1) {
      Term nt = Term(ceil_div(c, g));
      for (const auto& [v, a] : t_.coeffs()) nt += Term::var(v, a / g);
      t_ = nt;
    }
    return;
  }
  if (c % g != 0) {
    bool v = rel_ == Rel::Ne;
    rel_ = Rel::Le;
    t_ = Term(v ? 0 : 1);
    return;
  }
  std::int64_t sign = t_.coeffs().front().second < 0 ? -1 : 1;
  if (g > 1 || sign < 0) {
    Term nt = Term(c / g * sign);
    for (const auto& [v, a] : t_.coeffs()) nt += Term::var(v, a / g * sign);
    t_ = nt;
  }
}

bool Atom::ground_value() const {
  switch (rel_) {
    case Rel::Eq: return t_.constant() == 0;
    case Rel::Ne: return t_.constant() != 0;
    case Rel::Le: return t_.constant() <= 0;
  }
  return false;
}

Atom Atom::negate() const {
  switch (rel_) {
    case Rel::Eq: return {Rel::Ne, t_};
    case Rel::Ne: return {Rel::Eq, t_};
    case Rel::Le: return {Rel::Le, -t_ + 1};
  }
  return *this;
}

std::string Atom::str(const VarPool* pool) const {
  if (is_ground()) return ground_value() ? "true" : "false";
  // Print as "lhs REL rhs" with positive-coefficient variables on the left.
  Term lhs, rhs;
  for (const auto& [v, a] : t_.coeffs()) {
    if (a > 0) lhs += Term::var(v, a);
    else rhs += Term::var(v, -a);
  }
  std::int64_t c = t_.constant();
  if (c > 0) lhs += Term(c);
  else rhs += Term(-c);
  const char* op = rel_ == Rel::Eq ? " = " : rel_ == Rel::Ne ? " != " : " <= ";
  if (lhs.is_constant() && !rhs.is_constant()) {
    std::swap(lhs, rhs);
    op = rel_ == Rel::Le ? " >= " : op;
  }
  return lhs.str(pool) + op + rhs.str(pool);
}

Clause make_clause(std::vector<Atom> atoms) {
  Clause c;
  for (auto& a : atoms) {
    if (a.is_true()) return {Atom::truth()};
    if (!a.is_false()) c.push_back(std::move(a));
  }
  if (c.empty()) return {Atom::falsity()};
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

void Formula::add(Clause c) {
  c = make_clause(std::move(c));
  if (c.size() == 1 && c[0].is_true()) return;
  auto it = std::lower_bound(clauses_.begin(), clauses_.end(), c);
  if (it != clauses_.end() && *it == c) return;
  clauses_.insert(it, std::move(c));
}

bool Formula::contains(const Atom& a) const {
  Clause c{a};
  return std::binary_search(clauses_.begin(), clauses_.end(), c);
}

std::vector<VarId> Formula::vars() const {
  std::set<VarId> s;
  for (const auto& c : clauses_)
    for (const auto& a : c)
      for (const auto& [v, k] : a.term().coeffs()) s.insert(v);
  return {s.begin(), s.end()};
}

Formula Formula::substitute(const std::function<std::optional<Term>(VarId)>& f) const {
  Formula r;
  for (const auto& c : clauses_) {
    Clause n;
    for (const auto& a : c) n.push_back(a.substitute(f));
    r.add(std::move(n));
  }
  return r;
}

Formula Formula::rename(const std::map<VarId, VarId>& m) const {
  Formula r;
  for (const auto& c : clauses_) {
    Clause n;
    for (const auto& a : c) n.push_back(a.rename(m));
    r.add(std::move(n));
  }
  return r;
}

std::string Formula::str(const VarPool* pool) const {
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (const auto& c : clauses_) {
    if (!first) os << ", ";
    first = false;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (i) os << " | ";
      os << c[i].str(pool);
    }
  }
  os << "}";
  return os.str();
}

std::int64_t eval_term(const Assignment& a, const Term& t) {
  std::int64_t r = t.constant();
  for (const auto& [v, k] : t.coeffs()) {
    auto it = a.find(v);
    if (it == a.end()) throw std::out_of_range("unassigned variable v" + std::to_string(v));
    r = checked_add(r, checked_mul(k, it->second));
  }
  return r;
}

bool eval_atom(const Assignment& a, const Atom& at) {
  std::int64_t v = eval_term(a, at.term());
  switch (at.rel()) {
    case Rel::Eq: return v == 0;
    case Rel::Ne: return v != 0;
    case Rel::Le: return v <= 0;
  }
  return false;
}

bool eval_formula(const Assignment& a, const Formula& f) {
  for (const auto& c : f.clauses()) {
    bool any = false;
    for (const auto& at : c) {
      if (eval_atom(a, at)) {
        any = true;
        break;
      }
    }
    if (!any) return false;
  }
  return true;
}

bool brute_force_valid(const Formula& premise, const Formula& conclusion, std::int64_t bound) {
  std::set<VarId> vs;
  for (VarId v : premise.vars()) vs.insert(v);
  for (VarId v : conclusion.vars()) vs.insert(v);
  if (vs.size() > 6) throw std::invalid_argument("brute_force_valid: more than 6 variables");
  std::vector<VarId> vars(vs.begin(), vs.end());
  Assignment a;
  for (VarId v : vars) a[v] = 0;
  while (true) {
    if (eval_formula(a, premise) && !eval_formula(a, conclusion)) return false;
    std::size_t i = 0;
    for (; i < vars.size(); ++i) {
      if (a[vars[i]] < bound) {
        ++a[vars[i]];
        break;
      }
      a[vars[i]] = 0;
    }
    if (i == vars.size()) return true;
  }
}

}  // namespace listterm
