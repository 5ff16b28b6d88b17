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

LexProp::LexProp(const LexLessC& lex) : c(&lex) {
  cid = lex.id;
  geq_atoms.assign(n(), kNoAtom);
  gt_atoms.assign(n(), kNoAtom);
}

void LexProp::atom_collected(AtomId id) {
  for (auto& a : geq_atoms)
    if (a == id) a = kNoAtom;
  for (auto& a : gt_atoms)
    if (a == id) a = kNoAtom;
}

bool LexProp::forced_geq(Engine& e, size_t i, int64_t stamp) const {
  return e.lb_at(c->xs[i], stamp) >= e.ub_at(c->ys[i], stamp);
}

bool LexProp::forced_gt(Engine& e, size_t i, int64_t stamp) const {
  return e.lb_at(c->xs[i], stamp) > e.ub_at(c->ys[i], stamp);
}

size_t LexProp::frontier_at(Engine& e, int64_t stamp) const {
  size_t q = 0;
  while (q < n()) {
    Var x = c->xs[q], y = c->ys[q];
    int64_t xl = e.lb_at(x, stamp), xu = e.ub_at(x, stamp);
    int64_t yl = e.lb_at(y, stamp), yu = e.ub_at(y, stamp);
    if (xl == xu && yl == yu && xl == yl)
      ++q;
    else
      break;
  }
  return q;
}

// Micro-channeler for interned comparison atoms: detection (bounds force the
// atom) and propagation (the atom forces bounds), both directions.
bool LexProp::channel_cmp(Engine& e) {
  for (size_t i = 0; i < n(); ++i) {
    for (int strict = 0; strict <= 1; ++strict) {
      AtomId id = strict ? gt_atoms[i] : geq_atoms[i];
      if (id == kNoAtom) continue;
      Var x = c->xs[i], y = c->ys[i];
      int64_t s = strict;  // x >= y + s
      TruthVal tv = e.value(id);
      if (tv == TruthVal::Unknown) {
        if (e.lb(x) >= e.ub(y) + s) {
          if (!e.enqueue(Lit::make(id, false),
                         Reason::deferred(cid, kCmpDetect, id, 0, e.stamp())))
            return false;
        } else if (e.ub(x) < e.lb(y) + s) {
          if (!e.enqueue(Lit::make(id, true), Reason::deferred(cid, kCmpDetect, id, 0, e.stamp())))
            return false;
        }
        continue;
      }
      if (tv == TruthVal::True) {
        // x >= y + s: raise lb(x), cap ub(y).
        LitC l1 = e.lit_geq(x, e.lb(y) + s);
        if (l1.is_lit() && e.truth(l1.lit) != TruthVal::True)
          if (!e.enqueue(l1.lit, Reason::deferred(cid, kCmpChan, id, 0, e.stamp()))) return false;
        LitC l2 = e.lit_leq(y, e.ub(x) - s);
        if (l2.is_lit() && e.truth(l2.lit) != TruthVal::True)
          if (!e.enqueue(l2.lit, Reason::deferred(cid, kCmpChan, id, 1, e.stamp()))) return false;
      } else {
        // x < y + s, i.e. x <= y + s - 1.
        LitC l1 = e.lit_leq(x, e.ub(y) + s - 1);
        if (l1.is_lit() && e.truth(l1.lit) != TruthVal::True)
          if (!e.enqueue(l1.lit, Reason::deferred(cid, kCmpChan, id, 0, e.stamp()))) return false;
        LitC l2 = e.lit_geq(y, e.lb(x) - s + 1);
        if (l2.is_lit() && e.truth(l2.lit) != TruthVal::True)
          if (!e.enqueue(l2.lit, Reason::deferred(cid, kCmpChan, id, 1, e.stamp()))) return false;
      }
    }
  }
  return true;
}

bool LexProp::propagate(Engine& e) {
  if (!channel_cmp(e)) return false;
  const int64_t stamp = e.stamp();
  size_t q = frontier_at(e, stamp);
  if (q == n()) {
    if (!c->strict) return true;
    Reason r = Reason::deferred(cid, kConflict, static_cast<int64_t>(q), 0, stamp);
    e.raise_conflict(e.materialize(std::nullopt, r));
    return false;
  }
  // Strictness at the frontier: a forced x>y later in an otherwise forced-geq
  // run, or a fully forced-geq suffix under strict lex.
  int64_t witness = -1;
  size_t i = q + 1;
  for (; i < n(); ++i) {
    if (forced_gt(e, i, stamp)) {
      witness = static_cast<int64_t>(i);
      break;
    }
    if (!forced_geq(e, i, stamp)) break;
  }
  if (i == n() && c->strict && witness < 0) witness = static_cast<int64_t>(n());
  int64_t s = witness >= 0 ? 1 : 0;
  int32_t tag = witness >= 0 ? kStrictFrontier : kFrontier;
  Var x = c->xs[q], y = c->ys[q];

  LitC l1 = e.lit_leq(x, e.ub(y) - s);
  Reason r1 = Reason::deferred(cid, tag, static_cast<int64_t>(q), witness, e.stamp());
  if (l1.is_false()) {
    e.raise_conflict(e.materialize(std::nullopt, r1));
    return false;
  }
  if (l1.is_lit() && e.truth(l1.lit) != TruthVal::True)
    if (!e.enqueue(l1.lit, r1)) return false;

  LitC l2 = e.lit_geq(y, e.lb(x) + s);
  Reason r2 = Reason::deferred(cid, tag, static_cast<int64_t>(q), witness, e.stamp());
  if (l2.is_false()) {
    e.raise_conflict(e.materialize(std::nullopt, r2));
    return false;
  }
  if (l2.is_lit() && e.truth(l2.lit) != TruthVal::True)
    if (!e.enqueue(l2.lit, r2)) return false;
  return true;
}

// Appends a true form of x_i >= y_i (+1 when strict) at the stamp: the
// comparison atom in extended mode, else the bound pair.
void LexProp::cmp_lits(Engine& e, bool strict, size_t i, int64_t stamp, Pos before,
                       std::vector<Lit>& out) {
  int64_t s = strict ? 1 : 0;
  int64_t cut = e.ub_at(c->ys[i], stamp);
  Var x = c->xs[i], y = c->ys[i];
  auto bound_pair = [&]() {
    e.lits_geq(x, cut + s, stamp, before, out);
    e.lits_leq(y, cut, stamp, before, out);
  };
  if (!extended) {
    bound_pair();
    return;
  }
  AtomId& slot = strict ? gt_atoms[i] : geq_atoms[i];
  AtomDesc d = strict ? AtomDesc::cmp_gt(x, y) : AtomDesc::cmp_geq(x, y);
  AtomId id = e.intern(d);
  if (slot == kNoAtom) {
    slot = id;
    e.subscribe_atom_owner(id, cid);
  }
  const AtomRec& rec = e.atom(id);
  Lit lit = Lit::make(id, false);
  if (rec.value != TruthVal::Unknown) {
    if (e.truth(lit) == TruthVal::True && rec.pos < before)
      out.push_back(lit);
    else
      bound_pair();
    return;
  }
  std::vector<Lit> body;
  e.lits_geq(x, cut + s, stamp, before, body);
  e.lits_leq(y, cut, stamp, before, body);
  Lit self = e.assign_virtual(id, TruthVal::True, body, stamp, before);
  if (e.options().on_explanation) {
    std::vector<Lit> logged{self};
    for (Lit bl : body) logged.push_back(~bl);
    e.options().on_explanation(cid, logged);
  }
  out.push_back(self);
}

void LexProp::prefix_body(Engine& e, size_t upto, int64_t stamp, Pos before,
                          std::vector<Lit>& body) {
  for (size_t i = 0; i < upto; ++i) {
    if (extended) {
      cmp_lits(e, false, i, stamp, before, body);
    } else {
      int64_t v = e.lb_at(c->xs[i], stamp);
      e.lits_eq_true(c->xs[i], v, stamp, before, body);
      e.lits_eq_true(c->ys[i], v, stamp, before, body);
    }
  }
}

std::vector<Lit> LexProp::explain(Engine& e, std::optional<Lit> head, const Reason& r) {
  Pos before = head_pos(e, head, r.stamp);
  std::vector<Lit> body;
  switch (r.tag) {
    case kFrontier:
    case kStrictFrontier: {
      size_t q = static_cast<size_t>(r.a);
      prefix_body(e, q, r.stamp, before, body);
      if (!head) {
        // Frontier bound clash: both bounds in the body.
        e.lits_geq(c->xs[q], e.lb_at(c->xs[q], r.stamp), r.stamp, before, body);
        e.lits_leq(c->ys[q], e.ub_at(c->ys[q], r.stamp), r.stamp, before, body);
      } else {
        const AtomDesc hd = e.atom(head->atom()).desc;
        if (static_cast<Var>(hd.a) == c->xs[q])
          e.lits_leq(c->ys[q], e.ub_at(c->ys[q], r.stamp), r.stamp, before, body);
        else
          e.lits_geq(c->xs[q], e.lb_at(c->xs[q], r.stamp), r.stamp, before, body);
      }
      if (r.tag == kStrictFrontier) {
        size_t witness = static_cast<size_t>(r.b);
        for (size_t i = q + 1; i < witness && i < n(); ++i)
          cmp_lits(e, false, i, r.stamp, before, body);
        if (witness < n()) cmp_lits(e, true, witness, r.stamp, before, body);
      }
      break;
    }
    case kConflict: {
      prefix_body(e, static_cast<size_t>(r.a), r.stamp, before, body);
      break;
    }
    case kCmpDetect: {
      AtomId id = r.a;
      const AtomDesc d = e.atom(id).desc;
      int64_t s = d.kind == AtomKind::CmpGt ? 1 : 0;
      Var x = static_cast<Var>(d.a), y = static_cast<Var>(d.b);
      if (!head) throw InternalError("cmp detection cannot conflict");
      if (!head->neg()) {
        int64_t cut = e.ub_at(y, r.stamp);
        e.lits_geq(x, cut + s, r.stamp, before, body);
        e.lits_leq(y, cut, r.stamp, before, body);
      } else {
        int64_t cut = e.ub_at(x, r.stamp);
        e.lits_leq(x, cut, r.stamp, before, body);
        e.lits_geq(y, cut + 1 - s, r.stamp, before, body);
      }
      break;
    }
    case kCmpChan: {
      AtomId id = r.a;
      const AtomDesc d = e.atom(id).desc;
      int64_t s = d.kind == AtomKind::CmpGt ? 1 : 0;
      Var x = static_cast<Var>(d.a), y = static_cast<Var>(d.b);
      TruthVal tv = e.value(id);
      body.push_back(Lit::make(id, tv == TruthVal::False));
      if (!head) throw InternalError("cmp channel cannot conflict");
      const AtomDesc hd = e.atom(head->atom()).desc;
      bool on_x = static_cast<Var>(hd.a) == x;
      if (tv == TruthVal::True) {
        if (on_x)
          e.lits_geq(y, hd.b - s, r.stamp, before, body);  // head x >= w
        else
          e.lits_leq(x, hd.b - 1 + s, r.stamp, before, body);  // head y <= u
      } else {
        if (on_x)
          e.lits_leq(y, hd.b - s, r.stamp, before, body);  // head x <= u
        else
          e.lits_geq(x, hd.b + s - 1, r.stamp, before, body);  // head y >= w
      }
      break;
    }
    default:
      throw InternalError("unknown lex payload");
  }
  std::vector<Lit> clause;
  for (Lit b : body) clause.push_back(~b);
  if (head) clause.push_back(*head);
  return clause;
}

}  // namespace xlit
