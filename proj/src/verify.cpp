#include "xlit/verify.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <set>
#include <sstream>

namespace xlit::verify {

namespace {

bool check_linear(const LinearC& c, const std::vector<int64_t>& a) {
  __int128 sum = 0;
  for (const auto& t : c.terms) sum += __int128(t.coeff) * a[t.var];
  __int128 bound = c.bound;
  if (c.rhs_var != kNoVar) bound += a[c.rhs_var];
  if (c.is_eq) return sum == bound;
  return c.rel == LinRel::LE ? sum <= bound : sum >= bound;
}

bool check_unary(const UnaryAtom& u, const std::vector<int64_t>& a) {
  int64_t v = a[u.var];
  switch (u.op) {
    case CmpOp::Eq: return v == u.val;
    case CmpOp::Ne: return v != u.val;
    case CmpOp::Le: return v <= u.val;
    case CmpOp::Ge: return v >= u.val;
  }
  return false;
}

bool check_constraint(const Constraint& c, const std::vector<int64_t>& a) {
  switch (c.kind) {
    case CKind::Linear: return check_linear(c.linear, a);
    case CKind::LexLess: {
      const auto& l = c.lex;
      for (size_t i = 0; i < l.xs.size(); ++i) {
        if (a[l.xs[i]] < a[l.ys[i]]) return true;
        if (a[l.xs[i]] > a[l.ys[i]]) return false;
      }
      return !l.strict;
    }
    case CKind::Table: {
      for (const auto& row : c.table.rows) {
        bool match = true;
        for (size_t i = 0; i < row.size(); ++i)
          if (a[c.table.vars[i]] != row[i]) match = false;
        if (match) return true;
      }
      return false;
    }
    case CKind::Disjunctive: {
      const auto& d = c.disj;
      for (size_t i = 0; i < d.starts.size(); ++i)
        for (size_t j = i + 1; j < d.starts.size(); ++j) {
          int64_t si = a[d.starts[i]], sj = a[d.starts[j]];
          if (si + d.durations[i] > sj && sj + d.durations[j] > si) return false;
        }
      return true;
    }
    case CKind::Implication:
      return !check_unary(c.imp.antecedent, a) || check_unary(c.imp.consequent, a);
    case CKind::AllDiff: {
      const auto& vs = c.alldiff.vars;
      for (size_t i = 0; i < vs.size(); ++i)
        for (size_t j = i + 1; j < vs.size(); ++j)
          if (a[vs[i]] == a[vs[j]]) return false;
      return true;
    }
    case CKind::Neq:
      return a[c.neq.x] != a[c.neq.y];
  }
  return true;
}

bool eval_lit(const ModelInstance& m, const SemLit& l, const std::vector<int64_t>& a) {
  bool v = false;
  const AtomDesc& d = l.desc;
  switch (d.kind) {
    case AtomKind::BoundGeq: v = a[d.a] >= d.b; break;
    case AtomKind::Eq: v = a[d.a] == d.b; break;
    case AtomKind::PsumGeq: {
      const LinearC& lin = m.constraints.at(d.a).linear;
      __int128 sum = 0;
      for (int64_t i = 0; i < d.b; ++i) sum += __int128(lin.terms[i].coeff) * a[lin.terms[i].var];
      v = sum >= __int128(d.c);
      break;
    }
    case AtomKind::CmpGeq: v = a[d.a] >= a[d.b]; break;
    case AtomKind::CmpGt: v = a[d.a] > a[d.b]; break;
    case AtomKind::Sched: {
      const DisjunctiveC& dc = m.constraints.at(d.a).disj;
      v = a[dc.starts[d.b]] + dc.durations[d.b] <= a[dc.starts[d.c]];
      break;
    }
    case AtomKind::Tuple: {
      const TableC& tc = m.constraints.at(d.a).table;
      const auto& row = tc.rows.at(d.b);
      v = true;
      for (size_t i = 0; i < row.size(); ++i)
        if (a[tc.vars[i]] != row[i]) v = false;
      break;
    }
  }
  return l.neg ? !v : v;
}

void collect_vars(const ModelInstance& m, const Constraint& c, std::set<Var>& out) {
  (void)m;
  switch (c.kind) {
    case CKind::Linear:
      for (const auto& t : c.linear.terms) out.insert(t.var);
      if (c.linear.rhs_var != kNoVar) out.insert(c.linear.rhs_var);
      break;
    case CKind::LexLess:
      out.insert(c.lex.xs.begin(), c.lex.xs.end());
      out.insert(c.lex.ys.begin(), c.lex.ys.end());
      break;
    case CKind::Table: out.insert(c.table.vars.begin(), c.table.vars.end()); break;
    case CKind::Disjunctive: out.insert(c.disj.starts.begin(), c.disj.starts.end()); break;
    case CKind::Implication:
      out.insert(c.imp.antecedent.var);
      out.insert(c.imp.consequent.var);
      break;
    case CKind::AllDiff: out.insert(c.alldiff.vars.begin(), c.alldiff.vars.end()); break;
    case CKind::Neq:
      out.insert(c.neq.x);
      out.insert(c.neq.y);
      break;
  }
}

void collect_lit_vars(const ModelInstance& m, const SemLit& l, std::set<Var>& out) {
  const AtomDesc& d = l.desc;
  switch (d.kind) {
    case AtomKind::BoundGeq:
    case AtomKind::Eq: out.insert(static_cast<Var>(d.a)); break;
    case AtomKind::PsumGeq: {
      const LinearC& lin = m.constraints.at(d.a).linear;
      for (int64_t i = 0; i < d.b; ++i) out.insert(lin.terms[i].var);
      break;
    }
    case AtomKind::CmpGeq:
    case AtomKind::CmpGt:
      out.insert(static_cast<Var>(d.a));
      out.insert(static_cast<Var>(d.b));
      break;
    case AtomKind::Sched: {
      const DisjunctiveC& dc = m.constraints.at(d.a).disj;
      out.insert(dc.starts[d.b]);
      out.insert(dc.starts[d.c]);
      break;
    }
    case AtomKind::Tuple: {
      const TableC& tc = m.constraints.at(d.a).table;
      out.insert(tc.vars.begin(), tc.vars.end());
      break;
    }
  }
}

struct Box {
  std::vector<int64_t> lo, hi;
  std::vector<std::set<int64_t>> holes;
  bool empty = false;

  explicit Box(const ModelInstance& m) {
    lo.resize(m.vars.size());
    hi.resize(m.vars.size());
    holes.resize(m.vars.size());
    for (const auto& v : m.vars) {
      lo[v.id] = v.lb;
      hi[v.id] = v.ub;
    }
  }
  void require_geq(Var x, int64_t v) { lo[x] = std::max(lo[x], v); }
  void require_leq(Var x, int64_t v) { hi[x] = std::min(hi[x], v); }
  void require_eq(Var x, int64_t v) {
    require_geq(x, v);
    require_leq(x, v);
  }
  void require_neq(Var x, int64_t v) { holes[x].insert(v); }
  int64_t count(Var x) const {
    if (lo[x] > hi[x]) return 0;
    int64_t c = hi[x] - lo[x] + 1;
    for (int64_t h : holes[x])
      if (h >= lo[x] && h <= hi[x]) --c;
    return c;
  }
  uint64_t size_over(const std::set<Var>& vars, uint64_t guard) {
    __int128 prod = 1;
    for (Var x : vars) {
      int64_t c = count(x);
      if (c <= 0) {
        empty = true;
        return 0;
      }
      prod *= c;
      if (prod > __int128(guard)) return guard + 1;
    }
    return static_cast<uint64_t>(prod);
  }
};

bool partial_violated(const ModelInstance& m, const Constraint& c, const std::vector<int64_t>& a,
                      const std::vector<bool>& mask);

// Core counterexample search shared by check_implied and body_implies.
bool implied_over(const ModelInstance& m, const std::vector<const Constraint*>& cons,
                  const std::vector<SemLit>& clause, uint64_t guard, bool allow_projection) {
  Box box(m);
  std::vector<SemLit> residual;
  for (const SemLit& l : clause) {
    const AtomDesc& d = l.desc;
    if (d.kind == AtomKind::BoundGeq) {
      if (!l.neg)
        box.require_leq(static_cast<Var>(d.a), d.b - 1);
      else
        box.require_geq(static_cast<Var>(d.a), d.b);
    } else if (d.kind == AtomKind::Eq) {
      if (!l.neg)
        box.require_neq(static_cast<Var>(d.a), d.b);
      else
        box.require_eq(static_cast<Var>(d.a), d.b);
    } else {
      residual.push_back(l);
    }
  }

  std::set<Var> vars;
  for (const Constraint* c : cons) collect_vars(m, *c, vars);
  for (const SemLit& l : clause) collect_lit_vars(m, l, vars);

  // The objective bound variable interacts only through its channel linear;
  // check it as an interval instead of enumerating its domain.
  std::optional<Var> proj;
  const LinearC* proj_chan = nullptr;
  if (allow_projection && m.normalized && m.obj_var != kNoVar && vars.count(m.obj_var)) {
    bool only_channel = true;
    for (const Constraint* c : cons) {
      std::set<Var> vs;
      collect_vars(m, *c, vs);
      if (vs.count(m.obj_var) && c->id() != m.obj_channel) only_channel = false;
    }
    for (const SemLit& l : residual) {
      std::set<Var> vs;
      collect_lit_vars(m, l, vs);
      if (vs.count(m.obj_var)) only_channel = false;
    }
    bool chan_in_scope = false;
    for (const Constraint* c : cons) chan_in_scope |= c->id() == m.obj_channel;
    if (only_channel && chan_in_scope) {
      proj = m.obj_var;
      proj_chan = &m.constraints.at(m.obj_channel).linear;
      vars.erase(m.obj_var);
    }
  }

  uint64_t space = box.size_over(vars, guard);
  if (box.empty) return true;  // negated clause unsatisfiable: tautology
  if (space > guard) throw GuardExceeded("implication check exceeds the guard");

  std::vector<Var> order(vars.begin(), vars.end());
  // Tightest boxes first: cheap failures surface early.
  std::sort(order.begin(), order.end(), [&](Var x, Var y) {
    int64_t cx = box.count(x), cy = box.count(y);
    if (cx != cy) return cx < cy;
    return x < y;
  });
  std::vector<int64_t> a(m.vars.size(), 0);
  for (const auto& v : m.vars) a[v.id] = v.lb;
  std::vector<bool> mask(m.vars.size(), false);
  std::vector<std::vector<const Constraint*>> watch(m.vars.size());
  for (const Constraint* c : cons) {
    std::set<Var> vs;
    collect_vars(m, *c, vs);
    for (Var v : vs)
      if (vars.count(v)) watch[v].push_back(c);
  }

  std::function<bool(size_t)> find_cex = [&](size_t i) -> bool {
    if (i > 0)
      for (const Constraint* c : watch[order[i - 1]])
        if (partial_violated(m, *c, a, mask)) return false;
    if (i == order.size()) {
      for (const SemLit& l : residual)
        if (eval_lit(m, l, a)) return false;
      if (proj) {
        __int128 sum = 0;
        for (const auto& t : proj_chan->terms) sum += __int128(t.coeff) * a[t.var];
        __int128 lo = box.lo[*proj], hi = box.hi[*proj];
        if (proj_chan->rel == LinRel::GE)
          hi = std::min<__int128>(hi, sum - proj_chan->bound);  // sum >= bound + obj
        else
          lo = std::max<__int128>(lo, sum - proj_chan->bound);  // sum <= bound + obj
        if (lo > hi) return false;
        __int128 cnt = hi - lo + 1;
        for (int64_t h : box.holes[*proj])
          if (h >= lo && h <= hi) --cnt;
        if (cnt <= 0) return false;
        for (__int128 v = lo; v <= hi; ++v)
          if (!box.holes[*proj].count(static_cast<int64_t>(v))) {
            a[*proj] = static_cast<int64_t>(v);
            break;
          }
        for (const Constraint* c : cons)
          if (!check_constraint(*c, a)) return false;
        return true;
      }
      for (const Constraint* c : cons)
        if (!check_constraint(*c, a)) return false;
      return true;
    }
    Var x = order[i];
    mask[x] = true;
    for (int64_t v = box.lo[x]; v <= box.hi[x]; ++v) {
      if (box.holes[x].count(v)) continue;
      a[x] = v;
      if (find_cex(i + 1)) return true;
    }
    mask[x] = false;
    return false;
  };
  return !find_cex(0);
}

// Violation test on a partial assignment. Pure checking against initial
// bounds; no domain reduction.
bool partial_violated(const ModelInstance& m, const Constraint& c, const std::vector<int64_t>& a,
                      const std::vector<bool>& mask) {
  auto set = [&](Var v) { return mask[static_cast<size_t>(v)]; };
  switch (c.kind) {
    case CKind::Linear: {
      const LinearC& lin = c.linear;
      __int128 min_sum = 0, max_sum = 0;
      for (const auto& t : lin.terms) {
        if (set(t.var)) {
          min_sum += __int128(t.coeff) * a[t.var];
          max_sum += __int128(t.coeff) * a[t.var];
        } else {
          min_sum += __int128(t.coeff) * m.var(t.var).lb;
          max_sum += __int128(t.coeff) * m.var(t.var).ub;
        }
      }
      __int128 bmin = lin.bound, bmax = lin.bound;
      if (lin.rhs_var != kNoVar) {
        bmin += set(lin.rhs_var) ? a[lin.rhs_var] : m.var(lin.rhs_var).lb;
        bmax += set(lin.rhs_var) ? a[lin.rhs_var] : m.var(lin.rhs_var).ub;
      }
      if (lin.is_eq) return min_sum > bmax || max_sum < bmin;
      return lin.rel == LinRel::LE ? min_sum > bmax : max_sum < bmin;
    }
    case CKind::LexLess: {
      for (size_t i = 0; i < c.lex.xs.size(); ++i) {
        if (!set(c.lex.xs[i]) || !set(c.lex.ys[i])) return false;
        if (a[c.lex.xs[i]] < a[c.lex.ys[i]]) return false;
        if (a[c.lex.xs[i]] > a[c.lex.ys[i]]) return true;
      }
      return c.lex.strict;
    }
    case CKind::Table: {
      size_t arity = c.table.vars.size();
      for (const auto& row : c.table.rows) {
        bool compatible = true;
        for (size_t i = 0; i < arity && compatible; ++i)
          if (set(c.table.vars[i]) && a[c.table.vars[i]] != row[i]) compatible = false;
        if (compatible) return false;
      }
      return true;
    }
    case CKind::Disjunctive: {
      const auto& d = c.disj;
      for (size_t i = 0; i < d.starts.size(); ++i) {
        if (!set(d.starts[i])) continue;
        for (size_t j = i + 1; j < d.starts.size(); ++j) {
          if (!set(d.starts[j])) continue;
          int64_t si = a[d.starts[i]], sj = a[d.starts[j]];
          if (si + d.durations[i] > sj && sj + d.durations[j] > si) return true;
        }
      }
      return false;
    }
    case CKind::Implication:
      if (!set(c.imp.antecedent.var) || !set(c.imp.consequent.var)) return false;
      return check_unary(c.imp.antecedent, a) && !check_unary(c.imp.consequent, a);
    case CKind::AllDiff: {
      const auto& vs = c.alldiff.vars;
      for (size_t i = 0; i < vs.size(); ++i)
        for (size_t j = i + 1; j < vs.size(); ++j)
          if (set(vs[i]) && set(vs[j]) && a[vs[i]] == a[vs[j]]) return true;
      return false;
    }
    case CKind::Neq:
      return set(c.neq.x) && set(c.neq.y) && a[c.neq.x] == a[c.neq.y];
  }
  return false;
}

}  // namespace

BruteResult brute_force(const ModelInstance& m, uint64_t guard) {
  if (m.normalized) throw InternalError("brute_force expects a parsed model");
  __int128 space = 1;
  for (const auto& v : m.vars) {
    space *= (v.ub - v.lb + 1);
    if (space > __int128(guard))
      throw GuardExceeded("assignment space exceeds the oracle guard");
  }

  BruteResult out;
  size_t n = m.vars.size();
  std::vector<int64_t> a(n, 0);
  // Constraints re-checked whenever one of their variables gets a value.
  std::vector<std::vector<const Constraint*>> watch(n);
  for (const auto& c : m.constraints) {
    std::set<Var> vs;
    collect_vars(m, c, vs);
    for (Var v : vs) watch[v].push_back(&c);
  }
  bool maximize = m.objective && m.objective->sense == ObjSense::Max;

  std::vector<bool> mask(n, false);
  std::function<void(size_t)> rec = [&](size_t i) {
    ++out.nodes;
    if (i > 0)
      for (const Constraint* c : watch[i - 1])
        if (partial_violated(m, *c, a, mask)) return;
    if (i == n) {
      if (!m.objective) {
        if (!out.sat) {
          out.sat = true;
          out.best_assignment = a;
        }
        return;
      }
      __int128 val = 0;
      for (const auto& t : m.objective->terms) val += __int128(t.coeff) * a[t.var];
      int64_t v = static_cast<int64_t>(val);
      if (!out.sat || (maximize ? v > *out.best_objective : v < *out.best_objective)) {
        out.sat = true;
        out.best_objective = v;
        out.best_assignment = a;
      }
      return;
    }
    mask[i] = true;
    for (int64_t v = m.vars[i].lb; v <= m.vars[i].ub; ++v) {
      a[i] = v;
      rec(i + 1);
    }
    mask[i] = false;
  };
  rec(0);
  return out;
}

bool check_implied(const ModelInstance& m, std::optional<ConstraintId> scope,
                   const std::vector<SemLit>& clause, uint64_t guard) {
  std::vector<const Constraint*> cons;
  if (scope) {
    if (*scope >= 0) cons.push_back(&m.constraints.at(*scope));
    // scope < 0: domain-channel clause, no constraints involved.
  } else {
    for (const auto& c : m.constraints) cons.push_back(&c);
  }
  return implied_over(m, cons, clause, guard, /*allow_projection=*/true);
}

bool body_implies(const ModelInstance& m, const std::vector<SemLit>& a,
                  const std::vector<SemLit>& b, uint64_t guard) {
  // a => b iff for every literal of b, (a and ~lit) is unsatisfiable over
  // the initial domains, i.e. the clause (~a1 | ... | ~ak | lit) holds.
  for (const SemLit& lit : b) {
    std::vector<SemLit> clause;
    for (const SemLit& al : a) clause.push_back(SemLit{al.desc, !al.neg});
    clause.push_back(lit);
    if (!implied_over(m, {}, clause, guard, /*allow_projection=*/false)) return false;
  }
  return true;
}

const char* verdict_str(Verdict v) {
  switch (v) {
    case Verdict::E2StrictlyMoreGeneral: return "E2_STRICTLY_MORE_GENERAL";
    case Verdict::E1StrictlyMoreGeneral: return "E1_STRICTLY_MORE_GENERAL";
    case Verdict::Equivalent: return "EQUIVALENT";
    case Verdict::Incomparable: return "INCOMPARABLE";
  }
  return "?";
}

Verdict more_general(const ModelInstance& m, const SemLit& head1, const std::vector<SemLit>& body1,
                     const SemLit& head2, const std::vector<SemLit>& body2, uint64_t guard) {
  if (!(head1.desc == head2.desc) || head1.neg != head2.neg)
    throw ModelError("more_general requires identical heads");
  bool fwd = body_implies(m, body1, body2, guard);  // E1's body implies E2's
  bool bwd = body_implies(m, body2, body1, guard);
  if (fwd && bwd) return Verdict::Equivalent;
  if (fwd) return Verdict::E2StrictlyMoreGeneral;
  if (bwd) return Verdict::E1StrictlyMoreGeneral;
  return Verdict::Incomparable;
}

TraceReport check_trace(const ModelInstance& parsed, const ModelInstance& normalized,
                        const std::string& trace_text, uint64_t guard) {
  (void)parsed;
  TraceReport rep;
  std::istringstream in(trace_text);
  std::string line;
  auto parse_clause = [&](const std::string& s) {
    std::vector<SemLit> out;
    size_t pos = 0;
    while (pos < s.size()) {
      size_t sep = s.find(" | ", pos);
      std::string tok = s.substr(pos, sep == std::string::npos ? std::string::npos : sep - pos);
      if (!tok.empty() && tok != "false") {
        ParsedLit pl = lit_from_string(normalized, tok);
        out.push_back(SemLit{pl.desc, pl.neg});
      }
      if (sep == std::string::npos) break;
      pos = sep + 3;
    }
    return out;
  };
  while (std::getline(in, line)) {
    try {
      if (line.rfind("X\t", 0) == 0) {
        size_t tab = line.find('\t', 2);
        if (tab == std::string::npos) continue;
        ConstraintId cid = static_cast<ConstraintId>(std::stoll(line.substr(2, tab - 2)));
        std::vector<SemLit> clause = parse_clause(line.substr(tab + 1));
        ++rep.explanations_checked;
        std::optional<ConstraintId> scope = cid;
        if (check_implied(normalized, scope, clause, guard))
          ++rep.explanations_passed;
        else
          rep.failures.push_back("explanation not implied: " + line);
      } else if (line.rfind("NG ", 0) == 0) {
        size_t arrow = line.rfind(" => ");
        size_t at = line.rfind(" @");
        if (arrow == std::string::npos || at == std::string::npos || at < arrow) continue;
        std::vector<SemLit> ng = parse_clause(line.substr(arrow + 4, at - arrow - 4));
        ++rep.nogoods_checked;
        if (check_implied(normalized, std::nullopt, ng, guard))
          ++rep.nogoods_passed;
        else
          rep.failures.push_back("nogood not implied: " + line);
      }
    } catch (const GuardExceeded&) {
      ++rep.refused;
    }
  }
  return rep;
}

}  // namespace xlit::verify
