#include <limits>

#include "xlit/propagators.hpp"

namespace xlit {

namespace {
Pos head_pos(Engine& e, const std::optional<Lit>& head, int64_t stamp) {
  if (head) {
    const AtomRec& a = e.atom(head->atom());
    if (a.pos.valid()) return a.pos;
  }
  return e.pos_of_stamp_end(stamp + 1);
}
}  // namespace

TableProp::TableProp(const TableC& tab) : c(&tab) {
  cid = tab.id;
  row_atoms.assign(tab.rows.size(), kNoAtom);
}

void TableProp::atom_collected(AtomId id) {
  for (auto& a : row_atoms)
    if (a == id) a = kNoAtom;
}

bool TableProp::row_live_at(Engine& e, size_t t, int64_t stamp) const {
  const auto& row = c->rows[t];
  for (size_t i = 0; i < row.size(); ++i)
    if (!e.in_domain_at(c->vars[i], row[i], stamp)) return false;
  return true;
}

// Earliest-falsified cell of a dead row: the cell whose value left its
// variable's domain at the lowest trail position.
std::pair<size_t, double> TableProp::dead_cell(Engine& e, size_t t, int64_t stamp) const {
  size_t best = c->vars.size();
  double best_pos = std::numeric_limits<double>::infinity();
  const auto& row = c->rows[t];
  for (size_t i = 0; i < row.size(); ++i) {
    double p = e.removal_pos(c->vars[i], row[i], stamp);
    if (p < best_pos) {
      best_pos = p;
      best = i;
    }
  }
  if (best == c->vars.size()) throw InternalError("dead_cell on a live row");
  return {best, best_pos};
}

void TableProp::cell_lits(Engine& e, size_t t, int64_t stamp, Pos before,
                          std::vector<Lit>& out) {
  auto [i, p] = dead_cell(e, t, stamp);
  e.lits_neq_true(c->vars[i], c->rows[t][i], stamp, before, out);
}

// The true literal ~r_t for a dead row, interned on demand in extended mode.
void TableProp::row_lits(Engine& e, size_t t, int64_t stamp, Pos before,
                         std::vector<Lit>& out) {
  AtomId id = e.intern(AtomDesc::tuple(cid, static_cast<int64_t>(t)));
  if (row_atoms[t] == kNoAtom) {
    row_atoms[t] = id;
    e.subscribe_atom_owner(id, cid);
  }
  Lit lit = Lit::make(id, true);
  const AtomRec& rec = e.atom(id);
  if (rec.value != TruthVal::Unknown) {
    if (e.truth(lit) == TruthVal::True && rec.pos < before)
      out.push_back(lit);
    else
      cell_lits(e, t, stamp, before, out);
    return;
  }
  std::vector<Lit> body;
  cell_lits(e, t, stamp, before, body);
  Lit self = e.assign_virtual(id, TruthVal::False, body, stamp, before);
  if (e.options().on_explanation) {
    std::vector<Lit> logged{self};
    for (Lit bl : body) logged.push_back(~bl);
    e.options().on_explanation(cid, logged);
  }
  out.push_back(self);
}

bool TableProp::propagate(Engine& e) {
  size_t nrows = c->rows.size();
  std::vector<bool> live(nrows);
  size_t nlive = 0;
  for (size_t t = 0; t < nrows; ++t) {
    live[t] = row_live_at(e, t, e.stamp());
    if (live[t]) ++nlive;
  }
  if (nlive == 0) {
    Reason r = Reason::deferred(cid, kConflict, 0, 0, e.stamp());
    e.raise_conflict(e.materialize(std::nullopt, r));
    return false;
  }

  // Channel interned row atoms.
  for (size_t t = 0; t < nrows; ++t) {
    AtomId id = row_atoms[t];
    if (id == kNoAtom) continue;
    TruthVal tv = e.value(id);
    if (tv == TruthVal::Unknown) {
      if (!live[t]) {
        if (!e.enqueue(Lit::make(id, true),
                       Reason::deferred(cid, kRowDead, static_cast<int64_t>(t), 0, e.stamp())))
          return false;
        continue;
      }
      bool all_fixed = true;
      for (size_t i = 0; i < c->vars.size(); ++i)
        if (!(e.fixed(c->vars[i]) && e.lb(c->vars[i]) == c->rows[t][i])) all_fixed = false;
      if (all_fixed) {
        if (!e.enqueue(Lit::make(id, false),
                       Reason::deferred(cid, kRowFixed, static_cast<int64_t>(t), 0, e.stamp())))
          return false;
      }
    } else if (tv == TruthVal::True) {
      // The row is taken: fix its cells.
      for (size_t i = 0; i < c->vars.size(); ++i) {
        LitC l = e.lit_eq(c->vars[i], c->rows[t][i]);
        Reason r = Reason::deferred(cid, kRowCells, static_cast<int64_t>(t),
                                    static_cast<int64_t>(i), e.stamp());
        if (l.is_false()) {
          e.raise_conflict(e.materialize(std::nullopt, r));
          return false;
        }
        if (l.is_lit() && e.truth(l.lit) != TruthVal::True)
          if (!e.enqueue(l.lit, r)) return false;
      }
    }
  }

  // Value-support pruning (simple tabular reduction).
  for (size_t i = 0; i < c->vars.size(); ++i) {
    Var x = c->vars[i];
    for (int64_t v = e.lb(x); v <= e.ub(x); ++v) {
      if (!e.in_domain(x, v)) continue;
      bool supported = false;
      for (size_t t = 0; t < nrows && !supported; ++t)
        if (live[t] && c->rows[t][i] == v) supported = true;
      if (supported) continue;
      LitC l = e.lit_neq(x, v);
      if (!l.is_lit()) continue;
      if (e.truth(l.lit) == TruthVal::True) continue;
      Reason r = Reason::deferred(cid, kPrune, static_cast<int64_t>(i), v, e.stamp());
      if (!e.enqueue(l.lit, r)) return false;
    }
  }
  return true;
}

std::vector<Lit> TableProp::explain(Engine& e, std::optional<Lit> head, const Reason& r) {
  Pos before = head_pos(e, head, r.stamp);
  std::vector<Lit> body;
  switch (r.tag) {
    case kPrune: {
      size_t i = static_cast<size_t>(r.a);
      int64_t v = r.b;
      for (size_t t = 0; t < c->rows.size(); ++t) {
        if (c->rows[t][i] != v) continue;
        if (row_live_at(e, t, r.stamp)) throw InternalError("support still live");
        if (extended)
          row_lits(e, t, r.stamp, before, body);
        else
          cell_lits(e, t, r.stamp, before, body);
      }
      break;
    }
    case kRowDead: {
      cell_lits(e, static_cast<size_t>(r.a), r.stamp, before, body);
      break;
    }
    case kRowFixed: {
      size_t t = static_cast<size_t>(r.a);
      for (size_t i = 0; i < c->vars.size(); ++i)
        e.lits_eq_true(c->vars[i], c->rows[t][i], r.stamp, before, body);
      break;
    }
    case kRowCells: {
      body.push_back(Lit::make(row_atoms[static_cast<size_t>(r.a)], false));
      break;
    }
    case kConflict: {
      for (size_t t = 0; t < c->rows.size(); ++t) {
        if (extended)
          row_lits(e, t, r.stamp, before, body);
        else
          cell_lits(e, t, r.stamp, before, body);
      }
      break;
    }
    default:
      throw InternalError("unknown table payload");
  }
  // Identical cell literals may support several rows; dedupe.
  std::vector<Lit> clause;
  for (Lit b : body) {
    Lit nl = ~b;
    bool dup = false;
    for (Lit cl : clause) dup |= cl == nl;
    if (!dup) clause.push_back(nl);
  }
  if (head) clause.push_back(*head);
  return clause;
}

}  // namespace xlit
