#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <unistd.h>

#include "listterm/logic.hpp"

namespace listterm {

ProverStats& prover_stats() {
  static ProverStats s;
  return s;
}

namespace {

// Tightened row, or a ground value: returns false if the row is ground and violated.
Term tighten(const Term& t) { return Atom(Rel::Le, t).term(); }

void collect_vars(const Term& t, std::set<VarId>& out) {
  for (const auto& [v, k] : t.coeffs()) out.insert(v);
}

bool intersects(const std::vector<VarId>& a, const std::set<VarId>& s) {
  for (VarId v : a)
    if (s.count(v)) return true;
  return false;
}

}  // namespace

bool fm_unsat(std::vector<Term> rows, int effort, bool* exhausted) {
  if (exhausted) *exhausted = false;
  int generated = 0;
  while (true) {
    // Normalize and keep the strongest row per coefficient vector.
    std::map<Term::Coeffs, std::int64_t> best;
    for (const auto& r0 : rows) {
      Term r = tighten(r0);
      if (r.is_constant()) {
        if (r.constant() > 0) return true;
        continue;
      }
      auto [it, ins] = best.emplace(r.coeffs(), r.constant());
      if (!ins) it->second = std::max(it->second, r.constant());
    }
    rows.clear();
    std::map<VarId, std::pair<int, int>> sign;
    for (const auto& [cs, c] : best) {
      Term t(c);
      for (const auto& [v, k] : cs) {
        t += Term::var(v, k);
        auto& s = sign[v];
        (k > 0 ? s.first : s.second)++;
      }
      rows.push_back(std::move(t));
    }
    if (sign.empty()) return false;
    // Opposite pairs give a cheap contradiction check.
    for (const auto& [cs, c] : best) {
      Term::Coeffs neg = cs;
      for (auto& p : neg) p.second = -p.second;
      auto it = best.find(neg);
      if (it != best.end() && c + it->second > 0) return true;
    }
    VarId pick = 0;
    long cost = -1;
    for (const auto& [v, s] : sign) {
      long c = static_cast<long>(s.first) * s.second - s.first - s.second;
      if (s.first == 0 || s.second == 0) c = -1000000;
      if (cost == -1 || c < cost) {
        cost = c;
        pick = v;
      }
    }
    std::vector<Term> pos, neg, rest;
    for (auto& r : rows) {
      std::int64_t k = r.coeff(pick);
      if (k > 0) pos.push_back(std::move(r));
      else if (k < 0) neg.push_back(std::move(r));
      else rest.push_back(std::move(r));
    }
    for (const auto& p : pos) {
      for (const auto& n : neg) {
        std::int64_t a = p.coeff(pick), b = -n.coeff(pick);
        try {
          rest.push_back(p * b + n * a);
        } catch (const std::overflow_error&) {
          if (exhausted) *exhausted = true;
          return false;
        }
        if (++generated > effort) {
          if (exhausted) *exhausted = true;
          return false;
        }
      }
    }
    rows = std::move(rest);
  }
}

Prover::Prover(const Formula& premise, ProverConfig cfg) : premise_(premise), cfg_(std::move(cfg)) {
  std::vector<Term> eqs;
  std::vector<Term> les, nes;
  std::vector<Clause> multi;
  auto classify = [&](const Atom& a) {
    switch (a.rel()) {
      case Rel::Eq: eqs.push_back(a.term()); break;
      case Rel::Ne: nes.push_back(a.term()); break;
      case Rel::Le: les.push_back(a.term()); break;
    }
  };
  for (const auto& c : premise_.clauses()) {
    if (c.size() == 1) classify(c[0]);
    else multi.push_back(c);
  }
  try {
    bool changed = true;
    while (changed && !unsat_) {
      changed = false;
      for (const auto& e0 : eqs) {
        Term e = normalize(e0);
        if (e.is_constant()) {
          if (e.constant() != 0) unsat_ = true;
          continue;
        }
        // Eliminate the newest variable with a unit coefficient.
        VarId x = 0;
        std::int64_t a = 0;
        for (auto it = e.coeffs().rbegin(); it != e.coeffs().rend(); ++it) {
          if (it->second == 1 || it->second == -1) {
            x = it->first;
            a = it->second;
            break;
          }
        }
        if (a == 0) {
          les.push_back(e);
          les.push_back(-e);
          continue;
        }
        Term val = (e - Term::var(x, a)) * -a;
        for (auto& [v, t] : subst_) t = t.substitute(x, val);
        subst_.emplace(x, val);
      }
      eqs.clear();
      std::vector<Clause> keep;
      for (const auto& c : multi) {
        std::vector<Atom> atoms;
        for (const auto& a : c) atoms.emplace_back(a.rel(), normalize(a.term()));
        Clause n = make_clause(atoms);
        if (n.size() == 1 && n[0].is_true()) continue;
        if (n.size() == 1) {
          if (n[0].is_false()) {
            unsat_ = true;
            break;
          }
          classify(n[0]);
          if (n[0].rel() == Rel::Eq) changed = true;
          continue;
        }
        keep.push_back(std::move(n));
      }
      multi = std::move(keep);
    }
    if (unsat_) return;
    for (const auto& l : les) {
      Term t = tighten(normalize(l));
      if (t.is_constant()) {
        if (t.constant() > 0) unsat_ = true;
        continue;
      }
      rows_.push_back(t);
    }
    for (const auto& n0 : nes) {
      Atom a(Rel::Ne, normalize(n0));
      if (a.is_ground()) {
        if (!a.ground_value()) unsat_ = true;
        continue;
      }
      Split s;
      s.alts = {{a.term() + 1}, {-a.term() + 1}};
      for (const auto& [v, k] : a.term().coeffs()) s.vars.push_back(v);
      splits_.push_back(std::move(s));
    }
    for (const auto& c : multi) {
      Split s;
      std::set<VarId> vs;
      for (const auto& a : c) {
        collect_vars(a.term(), vs);
        switch (a.rel()) {
          case Rel::Le: s.alts.push_back({a.term()}); break;
          case Rel::Eq: s.alts.push_back({a.term(), -a.term()}); break;
          case Rel::Ne:
            s.alts.push_back({a.term() + 1});
            s.alts.push_back({-a.term() + 1});
            break;
        }
      }
      s.vars.assign(vs.begin(), vs.end());
      splits_.push_back(std::move(s));
    }
  } catch (const std::overflow_error&) {
    rows_.clear();
    splits_.clear();
    unsat_ = false;
  }
  for (const auto& r : rows_)
    for (const auto& [v, k] : r.coeffs()) occurrences_[v]++;
  for (const auto& s : splits_)
    for (VarId v : s.vars) occurrences_[v]++;
  if (!unsat_) unsat_ = fm_unsat(rows_, cfg_.effort);
}

Term Prover::normalize(const Term& t) const {
  if (subst_.empty()) return t;
  return t.substitute([&](VarId v) -> std::optional<Term> {
    auto it = subst_.find(v);
    if (it == subst_.end()) return std::nullopt;
    return it->second;
  });
}

std::optional<std::int64_t> Prover::implied_constant(const Term& t) const {
  try {
    Term n = normalize(t);
    if (n.is_constant()) return n.constant();
  } catch (const std::overflow_error&) {
  }
  return std::nullopt;
}

bool Prover::search(std::vector<Term>& rows, const std::vector<const Split*>& splits, std::size_t k,
                    int& budget) const {
  if (--budget < 0) return false;
  bool exhausted = false;
  if (fm_unsat(rows, cfg_.effort, &exhausted)) return true;
  if (k == splits.size()) return false;
  for (const auto& alt : splits[k]->alts) {
    std::size_t n = rows.size();
    rows.insert(rows.end(), alt.begin(), alt.end());
    bool r = search(rows, splits, k + 1, budget);
    rows.resize(n);
    if (!r) return false;
  }
  return true;
}

bool Prover::refute(std::vector<Term> goal_rows, const std::vector<Term>& goal_split) const {
  std::set<VarId> goal_vars;
  for (const auto& r : goal_rows) collect_vars(r, goal_vars);
  for (const auto& r : goal_split) collect_vars(r, goal_vars);
  Split gsplit;
  if (!goal_split.empty()) {
    for (const auto& r : goal_split) gsplit.alts.push_back({r});
  }

  std::set<VarId> relevant = goal_vars;
  if (goal_vars.empty()) {
    // Plain satisfiability question: everything is relevant.
    for (const auto& r : rows_) collect_vars(r, relevant);
    for (const auto& s : splits_) relevant.insert(s.vars.begin(), s.vars.end());
  }
  std::vector<bool> row_used(rows_.size(), false);
  std::vector<bool> split_used(splits_.size(), false);
  std::vector<Term> rows = goal_rows;
  std::vector<const Split*> chosen;
  if (!goal_split.empty()) chosen.push_back(&gsplit);
  int budget = std::max(64, cfg_.effort / 4);

  auto close_rows = [&] {
    bool grew = true;
    while (grew) {
      grew = false;
      for (std::size_t i = 0; i < rows_.size(); ++i) {
        if (row_used[i]) continue;
        bool touch = false;
        for (const auto& [v, k] : rows_[i].coeffs())
          if (relevant.count(v)) touch = true;
        if (!touch) continue;
        row_used[i] = true;
        rows.push_back(rows_[i]);
        for (const auto& [v, k] : rows_[i].coeffs())
          if (relevant.insert(v).second) grew = true;
      }
    }
  };

  while (true) {
    close_rows();
    if (search(rows, chosen, 0, budget)) return true;
    if (budget <= 0) return false;
    // Next relevance level: splits touching the current variable set, most goal-related first.
    std::vector<std::pair<int, std::size_t>> cand;
    for (std::size_t i = 0; i < splits_.size(); ++i) {
      if (split_used[i] || !intersects(splits_[i].vars, relevant)) continue;
      int score = 0;
      for (VarId v : splits_[i].vars) score += goal_vars.count(v) ? 1 : 0;
      cand.emplace_back(-score, i);
    }
    if (cand.empty()) return false;
    std::sort(cand.begin(), cand.end());
    std::size_t room = cfg_.max_splits > static_cast<int>(chosen.size())
                           ? static_cast<std::size_t>(cfg_.max_splits) - chosen.size()
                           : 0;
    if (room == 0) return false;
    for (std::size_t n = 0; n < cand.size() && n < room; ++n) {
      std::size_t i = cand[n].second;
      split_used[i] = true;
      chosen.push_back(&splits_[i]);
      for (VarId v : splits_[i].vars) relevant.insert(v);
    }
  }
}

Verdict Prover::entails(const Atom& a0) const {
  prover_stats().queries++;
  if (unsat_) return Verdict::Valid;
  try {
    Atom a(a0.rel(), normalize(a0.term()));
    if (a.is_true()) return Verdict::Valid;
    std::vector<Term> rows, split;
    auto free_var = [&](bool need_unit) {
      for (const auto& [v, k] : a.term().coeffs()) {
        auto it = occurrences_.find(v);
        if ((it == occurrences_.end() || it->second == 0) && (!need_unit || k == 1 || k == -1)) return true;
      }
      return false;
    };
    if (!a.is_false()) {
      switch (a.rel()) {
        case Rel::Le:
          if (free_var(false)) return external(Clause{a0});
          rows.push_back(-a.term() + 1);
          break;
        case Rel::Eq:
          if (free_var(false)) return external(Clause{a0});
          split = {a.term() + 1, -a.term() + 1};
          break;
        case Rel::Ne:
          if (free_var(true)) return external(Clause{a0});
          rows.push_back(a.term());
          rows.push_back(-a.term());
          break;
      }
    }
    if (refute(rows, split)) return Verdict::Valid;
  } catch (const std::overflow_error&) {
  }
  return external(Clause{a0});
}

Verdict Prover::entails(const Clause& c) const {
  if (c.size() == 1) return entails(c[0]);
  prover_stats().queries++;
  if (unsat_) return Verdict::Valid;
  for (const auto& a : c)
    if (entails(a) == Verdict::Valid) return Verdict::Valid;
  // Negation of the disjunction is a conjunction; fold Ne negations into splits one at a time.
  try {
    std::vector<Term> rows, split;
    bool ok = true;
    for (const auto& a0 : c) {
      Atom a(a0.rel(), normalize(a0.term()));
      if (a.is_false()) continue;
      if (a.is_true()) return Verdict::Valid;
      switch (a.rel()) {
        case Rel::Le: rows.push_back(-a.term() + 1); break;
        case Rel::Ne:
          rows.push_back(a.term());
          rows.push_back(-a.term());
          break;
        case Rel::Eq:
          if (!split.empty()) ok = false;
          split = {a.term() + 1, -a.term() + 1};
          break;
      }
    }
    if (ok && refute(rows, split)) return Verdict::Valid;
  } catch (const std::overflow_error&) {
  }
  return external(c);
}

Verdict Prover::entails(const Formula& f) const {
  for (const auto& c : f.clauses())
    if (entails(c) != Verdict::Valid) return Verdict::NotProven;
  return Verdict::Valid;
}

Verdict Prover::external(const Clause& c) const {
  if (cfg_.smt_cmd.empty()) return Verdict::NotProven;
  prover_stats().external_calls++;
  auto r = run_smt_solver(cfg_.smt_cmd, to_smtlib(premise_, c));
  return (r && *r) ? Verdict::Valid : Verdict::NotProven;
}

Verdict entails(const Formula& premise, const Formula& conclusion, const ProverConfig& cfg) {
  return Prover(premise, cfg).entails(conclusion);
}

namespace {

std::string smt_term(const Term& t) {
  std::ostringstream os;
  std::vector<std::string> parts;
  for (const auto& [v, k] : t.coeffs()) {
    std::string var = "v" + std::to_string(v);
    if (k == 1) parts.push_back(var);
    else if (k < 0) parts.push_back("(* (- " + std::to_string(-k) + ") " + var + ")");
    else parts.push_back("(* " + std::to_string(k) + " " + var + ")");
  }
  std::int64_t c = t.constant();
  if (c != 0 || parts.empty())
    parts.push_back(c < 0 ? "(- " + std::to_string(-c) + ")" : std::to_string(c));
  if (parts.size() == 1) return parts[0];
  os << "(+";
  for (const auto& p : parts) os << " " << p;
  os << ")";
  return os.str();
}

std::string smt_atom(const Atom& a) {
  std::string t = smt_term(a.term());
  switch (a.rel()) {
    case Rel::Eq: return "(= " + t + " 0)";
    case Rel::Ne: return "(not (= " + t + " 0))";
    case Rel::Le: return "(<= " + t + " 0)";
  }
  return "true";
}

std::string smt_clause(const Clause& c) {
  if (c.size() == 1) return smt_atom(c[0]);
  std::string s = "(or";
  for (const auto& a : c) s += " " + smt_atom(a);
  return s + ")";
}

}  // namespace

std::string to_smtlib(const Formula& premise, const Clause& goal) {
  std::set<VarId> vs;
  for (VarId v : premise.vars()) vs.insert(v);
  for (const auto& a : goal) collect_vars(a.term(), vs);
  std::ostringstream os;
  os << "(set-logic QF_LIA)\n";
  for (VarId v : vs) os << "(declare-fun v" << v << " () Int)\n";
  for (const auto& c : premise.clauses()) os << "(assert " << smt_clause(c) << ")\n";
  os << "(assert (not " << smt_clause(goal) << "))\n(check-sat)\n";
  return os.str();
}

std::optional<bool> run_smt_solver(const std::string& cmd, const std::string& script) {
  char path[] = "/tmp/listterm_smt_XXXXXX";
  int fd = mkstemp(path);
  if (fd < 0) {
    std::cerr << "warning: cannot create SMT query file\n";
    return std::nullopt;
  }
  {
    std::ofstream out(path);
    out << script;
  }
  close(fd);
  std::string full = cmd + " " + path + " 2>/dev/null";
  FILE* p = popen(full.c_str(), "r");
  if (!p) {
    std::remove(path);
    std::cerr << "warning: cannot start SMT solver '" << cmd << "'\n";
    return std::nullopt;
  }
  std::string out;
  char buf[256];
  while (fgets(buf, sizeof buf, p)) out += buf;
  int status = pclose(p);
  std::remove(path);
  auto b = out.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    std::cerr << "warning: SMT solver produced no answer (status " << status << ")\n";
    return std::nullopt;
  }
  out = out.substr(b);
  if (out.rfind("unsat", 0) == 0) return true;
  return false;
}

}  // namespace listterm
