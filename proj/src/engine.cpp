#include "xlit/engine.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace xlit {

Engine::Engine(const ModelInstance& m, EngineOptions opts) : model_(&m), opts_(std::move(opts)) {
  if (!m.normalized) throw InternalError("engine requires a normalized model");
  size_t n = m.vars.size();
  lb_.resize(n);
  ub_.resize(n);
  holes_.resize(n);
  lb_hist_.resize(n);
  ub_hist_.resize(n);
  bound_atoms_.resize(n);
  eq_atoms_.resize(n);
  var_subs_.resize(n);
  for (size_t i = 0; i < n; ++i) {
    lb_[i] = m.vars[i].lb;
    ub_[i] = m.vars[i].ub;
  }
}

bool Engine::in_domain(Var x, int64_t v) const {
  if (v < lb_[x] || v > ub_[x]) return false;
  return holes_[x].find(v) == holes_[x].end();
}

int64_t Engine::lb_at(Var x, int64_t stamp) const {
  int64_t v = model_->var(x).lb;
  for (const auto& h : lb_hist_[x]) {
    if (h.pos > static_cast<double>(stamp)) break;
    v = h.val;
  }
  return v;
}

int64_t Engine::ub_at(Var x, int64_t stamp) const {
  int64_t v = model_->var(x).ub;
  for (const auto& h : ub_hist_[x]) {
    if (h.pos > static_cast<double>(stamp)) break;
    v = h.val;
  }
  return v;
}

bool Engine::in_domain_at(Var x, int64_t v, int64_t stamp) const {
  if (v < lb_at(x, stamp) || v > ub_at(x, stamp)) return false;
  auto it = holes_[x].find(v);
  if (it != holes_[x].end() && it->second <= static_cast<double>(stamp)) return false;
  return true;
}

double Engine::removal_pos(Var x, int64_t v, int64_t stamp) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& h : lb_hist_[x]) {
    if (h.pos > static_cast<double>(stamp)) break;
    if (h.val > v) {
      best = h.pos;
      break;
    }
  }
  for (const auto& h : ub_hist_[x]) {
    if (h.pos > static_cast<double>(stamp)) break;
    if (h.val < v) {
      best = std::min(best, h.pos);
      break;
    }
  }
  auto it = holes_[x].find(v);
  if (it != holes_[x].end() && it->second <= static_cast<double>(stamp))
    best = std::min(best, it->second);
  return best;
}

// ---------------------------------------------------------------------------
// Atom registry
// ---------------------------------------------------------------------------

AtomId Engine::find(const AtomDesc& d) const {
  auto it = intern_.find(d);
  return it == intern_.end() ? kNoAtom : it->second;
}

AtomId Engine::intern(const AtomDesc& d) {
  auto it = intern_.find(d);
  if (it != intern_.end()) return it->second;

  switch (d.kind) {
    case AtomKind::BoundGeq: {
      const VarDecl& v = model_->var(static_cast<Var>(d.a));
      if (d.b < v.lb + 1 || d.b > v.ub)
        throw InternalError("bound atom outside initial domain: " + v.name + ">=" +
                            std::to_string(d.b));
      break;
    }
    case AtomKind::Eq: {
      const VarDecl& v = model_->var(static_cast<Var>(d.a));
      if (d.b < v.lb || d.b > v.ub)
        throw InternalError("eq atom outside initial domain: " + v.name + "==" +
                            std::to_string(d.b));
      break;
    }
    case AtomKind::PsumGeq: {
      if (d.a < 0 || d.a >= static_cast<int64_t>(model_->constraints.size()))
        throw ModelError("psum atom references unknown constraint");
      const Constraint& c = model_->constraints[d.a];
      if (c.kind != CKind::Linear) throw ModelError("psum atom owner is not a linear");
      auto cps = checkpoints(c.linear);
      if (std::find(cps.begin(), cps.end(), d.b) == cps.end())
        throw ModelError("psum prefix " + std::to_string(d.b) + " is not a checkpoint");
      break;
    }
    case AtomKind::Sched: {
      const Constraint& c = model_->constraints.at(d.a);
      if (c.kind != CKind::Disjunctive || d.b >= d.c ||
          d.c >= static_cast<int64_t>(c.disj.starts.size()))
        throw InternalError("bad sched atom");
      break;
    }
    case AtomKind::Tuple: {
      const Constraint& c = model_->constraints.at(d.a);
      if (c.kind != CKind::Table || d.b >= static_cast<int64_t>(c.table.rows.size()))
        throw InternalError("bad tuple atom");
      break;
    }
    default:
      break;
  }

  AtomId id;
  if (!free_atoms_.empty()) {
    id = free_atoms_.back();
    free_atoms_.pop_back();
    atoms_[id] = AtomRec{};
  } else {
    id = static_cast<AtomId>(atoms_.size());
    atoms_.emplace_back();
    watches_.resize(atoms_.size() * 2);
  }
  atoms_[id].desc = d;
  intern_[d] = id;
  if (d.kind == AtomKind::BoundGeq)
    bound_atoms_[d.a][d.b] = id;
  else if (d.kind == AtomKind::Eq)
    eq_atoms_[d.a][d.b] = id;
  else if (d.kind == AtomKind::PsumGeq)
    ++stats_.psum_created;
  if (d.kind == AtomKind::BoundGeq || d.kind == AtomKind::Eq) fresh_domain_atoms_.push_back(id);
  return id;
}

LitC Engine::lit_geq(Var x, int64_t v) {
  if (v <= init_lb(x)) return LitC::yes();
  if (v > init_ub(x)) return LitC::no();
  return LitC::of(Lit::make(intern(AtomDesc::bound_geq(x, v)), false));
}

LitC Engine::lit_leq(Var x, int64_t v) { return ~lit_geq(x, v + 1); }

LitC Engine::lit_eq(Var x, int64_t v) {
  if (v < init_lb(x) || v > init_ub(x)) return LitC::no();
  if (init_lb(x) == v && init_ub(x) == v) return LitC::yes();
  return LitC::of(Lit::make(intern(AtomDesc::eq(x, v)), false));
}

LitC Engine::lit_neq(Var x, int64_t v) { return ~lit_eq(x, v); }

// ---------------------------------------------------------------------------
// Trail operations
// ---------------------------------------------------------------------------

bool Engine::decide(Lit l) {
  if (conflict_) throw InternalError("decide with an outstanding conflict");
  if (truth(l) != TruthVal::Unknown) throw InternalError("decide on an assigned literal");
  level_lims_.push_back(trail_.size());
  return enqueue(l, Reason::decision());
}

bool Engine::enqueue(Lit l, const Reason& r) {
  TruthVal t = truth(l);
  if (t == TruthVal::True) return true;
  if (t == TruthVal::False) {
    std::vector<Lit> cl = materialize(l, r);
    raise_conflict(std::move(cl));
    return false;
  }
  AtomRec& a = atoms_[l.atom()];
  size_t tidx = trail_.size();
  a.value = l.neg() ? TruthVal::False : TruthVal::True;
  a.level = level();
  a.trail_index = static_cast<int32_t>(tidx);
  a.pos = Pos{static_cast<double>(tidx) + 1.0, 0};
  a.vclause.clear();
  trail_.push_back(TrailEntry{l, r, level(), undo_.size()});
  if (r.kind != Reason::Kind::Decision) ++stats_.propagations;
  if (r.kind == Reason::Kind::Clause && clauses_[r.clause].learnt) ++stats_.learnt_fires;
  if (r.kind == Reason::Kind::Deferred && is_extension(atoms_[l.atom()].desc.kind))
    ++stats_.psum_fixes;
  if (opts_.trace) trace_entry(trail_.back());
  return apply_domain(l, static_cast<int64_t>(tidx));
}

bool Engine::apply_domain(Lit l, int64_t tidx) {
  const AtomDesc d = atoms_[l.atom()].desc;
  switch (d.kind) {
    case AtomKind::BoundGeq:
      return l.neg() ? set_ub(static_cast<Var>(d.a), d.b - 1, l)
                     : set_lb(static_cast<Var>(d.a), d.b, l);
    case AtomKind::Eq:
      if (!l.neg()) {
        if (!set_lb(static_cast<Var>(d.a), d.b, l)) return false;
        return set_ub(static_cast<Var>(d.a), d.b, l);
      }
      return apply_neq(static_cast<Var>(d.a), d.b, l);
    default: {
      auto it = atom_owner_.find(l.atom());
      if (it != atom_owner_.end()) mark_dirty(it->second);
      (void)tidx;
      return true;
    }
  }
}

bool Engine::set_lb(Var x, int64_t v, Lit cause) {
  if (v <= lb_[x]) return true;
  int64_t old_lb = lb_[x];
  int64_t v0 = v;
  while (holes_[x].count(v)) ++v;
  if (v > ub_[x]) {
    // Empty domain: the cause plus the holes it skipped clash with the ub.
    std::vector<Lit> cl;
    cl.push_back(~cause);
    for (int64_t w = v0; w < v; ++w) {
      LitC h = lit_neq(x, w);
      if (h.is_lit()) cl.push_back(~h.lit);
    }
    if (!ub_hist_[x].empty()) cl.push_back(~ub_hist_[x].back().cause);
    raise_conflict(std::move(cl));
    return false;
  }
  // Holes at or below the new lb leave the open interval; scrub with undo.
  for (auto it = holes_[x].begin(); it != holes_[x].end() && it->first <= v;) {
    undo_.push_back(Undo{Undo::K::HoleDrop, x, it->first, it->second});
    it = holes_[x].erase(it);
  }
  undo_.push_back(Undo{Undo::K::LB, x, old_lb, 0});
  lb_[x] = v;
  lb_hist_[x].push_back(BoundHist{atoms_[cause.atom()].pos.p, v, cause});
  for (ConstraintId cid : var_subs_[x]) mark_dirty(cid);
  return faithfulness_scan(x, old_lb, ub_[x], /*lb_side=*/true);
}

bool Engine::set_ub(Var x, int64_t v, Lit cause) {
  if (v >= ub_[x]) return true;
  int64_t old_ub = ub_[x];
  int64_t v0 = v;
  while (holes_[x].count(v)) --v;
  if (v < lb_[x]) {
    std::vector<Lit> cl;
    cl.push_back(~cause);
    for (int64_t w = v + 1; w <= v0; ++w) {
      LitC h = lit_neq(x, w);
      if (h.is_lit()) cl.push_back(~h.lit);
    }
    if (!lb_hist_[x].empty()) cl.push_back(~lb_hist_[x].back().cause);
    raise_conflict(std::move(cl));
    return false;
  }
  for (auto it = holes_[x].lower_bound(v); it != holes_[x].end();) {
    undo_.push_back(Undo{Undo::K::HoleDrop, x, it->first, it->second});
    it = holes_[x].erase(it);
  }
  undo_.push_back(Undo{Undo::K::UB, x, old_ub, 0});
  ub_[x] = v;
  ub_hist_[x].push_back(BoundHist{atoms_[cause.atom()].pos.p, v, cause});
  for (ConstraintId cid : var_subs_[x]) mark_dirty(cid);
  return faithfulness_scan(x, lb_[x], old_ub, /*lb_side=*/false);
}

bool Engine::apply_neq(Var x, int64_t v, Lit cause) {
  if (v < lb_[x] || v > ub_[x] || holes_[x].count(v)) return true;
  if (v == lb_[x]) return set_lb(x, v + 1, cause);
  if (v == ub_[x]) return set_ub(x, v - 1, cause);
  undo_.push_back(Undo{Undo::K::HoleAdd, x, v, 0});
  holes_[x][v] = atoms_[cause.atom()].pos.p;
  for (ConstraintId cid : var_subs_[x]) mark_dirty(cid);
  // Interior removal can only falsify the matching eq atom and, if the
  // domain collapses around holes, that is handled by the bound moves above.
  auto it = eq_atoms_[x].find(v);
  if (it != eq_atoms_[x].end() && atoms_[it->second].value == TruthVal::Unknown)
    return channel_enqueue(Lit::make(it->second, true));
  return true;
}

bool Engine::faithfulness_scan(Var x, int64_t old_lb, int64_t old_ub, bool lb_side) {
  if (lb_side) {
    int64_t L = lb_[x];
    for (auto it = bound_atoms_[x].upper_bound(old_lb);
         it != bound_atoms_[x].end() && it->first <= L; ++it)
      if (atoms_[it->second].value == TruthVal::Unknown)
        if (!channel_enqueue(Lit::make(it->second, false))) return false;
    for (auto it = eq_atoms_[x].lower_bound(old_lb); it != eq_atoms_[x].end() && it->first < L;
         ++it)
      if (atoms_[it->second].value == TruthVal::Unknown)
        if (!channel_enqueue(Lit::make(it->second, true))) return false;
  } else {
    int64_t U = ub_[x];
    for (auto it = bound_atoms_[x].upper_bound(U);
         it != bound_atoms_[x].end() && it->first <= old_ub; ++it)
      if (atoms_[it->second].value == TruthVal::Unknown)
        if (!channel_enqueue(Lit::make(it->second, true))) return false;
    for (auto it = eq_atoms_[x].upper_bound(U); it != eq_atoms_[x].end() && it->first <= old_ub;
         ++it)
      if (atoms_[it->second].value == TruthVal::Unknown)
        if (!channel_enqueue(Lit::make(it->second, true))) return false;
  }
  if (lb_[x] == ub_[x]) {
    auto it = eq_atoms_[x].find(lb_[x]);
    if (it != eq_atoms_[x].end() && atoms_[it->second].value == TruthVal::Unknown)
      if (!channel_enqueue(Lit::make(it->second, false))) return false;
  }
  return true;
}

bool Engine::channel_enqueue(Lit l) { return enqueue(l, Reason::channel(stamp())); }

bool Engine::flush_fresh_atoms() {
  // Keep lazily interned bound/eq atoms faithful to the current domain.
  while (!fresh_domain_atoms_.empty()) {
    AtomId id = fresh_domain_atoms_.back();
    fresh_domain_atoms_.pop_back();
    AtomRec& a = atoms_[id];
    if (!a.alive || a.value != TruthVal::Unknown) continue;
    Var x = static_cast<Var>(a.desc.a);
    if (a.desc.kind == AtomKind::BoundGeq) {
      if (lb_[x] >= a.desc.b) {
        if (!channel_enqueue(Lit::make(id, false))) return false;
      } else if (ub_[x] < a.desc.b) {
        if (!channel_enqueue(Lit::make(id, true))) return false;
      }
    } else if (a.desc.kind == AtomKind::Eq) {
      if (lb_[x] == a.desc.b && ub_[x] == a.desc.b) {
        if (!channel_enqueue(Lit::make(id, false))) return false;
      } else if (!in_domain(x, a.desc.b)) {
        if (!channel_enqueue(Lit::make(id, true))) return false;
      }
    }
  }
  return true;
}

std::optional<Conflict> Engine::propagate() {
  if (conflict_) return conflict_;
  for (;;) {
    if (!flush_fresh_atoms()) return conflict_;
    if (qhead_ < trail_.size()) {
      Lit l = trail_[qhead_++].lit;
      if (!scan_watches(~l)) return conflict_;
      continue;
    }
    if (dirty_.empty()) return std::nullopt;
    ConstraintId cid = *dirty_.begin();
    dirty_.erase(dirty_.begin());
    if (!props_[cid]->propagate(*this)) return conflict_;
  }
}

bool Engine::scan_watches(Lit false_lit) {
  // enqueue/raise_conflict below may intern atoms, which resizes watches_, so
  // the list is drained onto a local copy and survivors re-appended.
  std::vector<ClauseId> ws;
  ws.swap(watches_[false_lit.code]);
  size_t i = 0;
  bool ok = true;
  for (; i < ws.size(); ++i) {
    ClauseId cid = ws[i];
    Clause& c = clauses_[cid];
    if (c.deleted) continue;
    if (c.lits[0] == false_lit) std::swap(c.lits[0], c.lits[1]);
    if (truth(c.lits[0]) == TruthVal::True) {
      watches_[false_lit.code].push_back(cid);
      continue;
    }
    bool moved = false;
    for (size_t k = 2; k < c.lits.size(); ++k) {
      if (truth(c.lits[k]) != TruthVal::False) {
        std::swap(c.lits[1], c.lits[k]);
        watches_[c.lits[1].code].push_back(cid);
        moved = true;
        break;
      }
    }
    if (moved) continue;
    watches_[false_lit.code].push_back(cid);
    if (truth(c.lits[0]) == TruthVal::False) {
      raise_conflict(c.lits);
      ok = false;
      ++i;
      break;
    }
    if (!enqueue(c.lits[0], Reason::from_clause(cid))) {
      ok = false;
      ++i;
      break;
    }
  }
  for (; i < ws.size(); ++i) watches_[false_lit.code].push_back(ws[i]);
  return ok;
}

void Engine::backjump(int32_t target) {
  if (target >= level()) throw InternalError("backjump target must be below the current level");
  size_t lim = level_lims_[target];
  for (size_t i = trail_.size(); i-- > lim;) {
    const TrailEntry& e = trail_[i];
    AtomRec& a = atoms_[e.lit.atom()];
    a.phase = a.value == TruthVal::True;
    a.value = TruthVal::Unknown;
    a.pos = Pos{};
    a.level = -1;
    a.trail_index = -1;
    // The atom may still be implied at the target level; requeue it for its
    // channeler so faithfulness is restored at the next fixpoint.
    if (!is_extension(a.desc.kind)) {
      fresh_domain_atoms_.push_back(e.lit.atom());
    } else {
      auto it = atom_owner_.find(e.lit.atom());
      if (it != atom_owner_.end()) mark_dirty(it->second);
    }
    while (undo_.size() > e.undo_start) {
      const Undo& u = undo_.back();
      switch (u.k) {
        case Undo::K::LB: lb_[u.var] = u.val; break;
        case Undo::K::UB: ub_[u.var] = u.val; break;
        case Undo::K::HoleAdd: holes_[u.var].erase(u.val); break;
        case Undo::K::HoleDrop: holes_[u.var][u.val] = u.hole_pos; break;
      }
      undo_.pop_back();
    }
  }
  trail_.resize(lim);
  level_lims_.resize(target);
  qhead_ = std::min(qhead_, lim);
  double plim = static_cast<double>(lim);
  for (auto& hist : lb_hist_)
    while (!hist.empty() && hist.back().pos > plim) hist.pop_back();
  for (auto& hist : ub_hist_)
    while (!hist.empty() && hist.back().pos > plim) hist.pop_back();
  clear_virtuals(target);
  conflict_.reset();
}

void Engine::clear_virtuals(int32_t max_level) {
  std::vector<AtomId> kept;
  for (AtomId id : virtuals_) {
    AtomRec& a = atoms_[id];
    if (a.trail_index >= 0) continue;  // got re-fixed for real in the meantime
    if (a.value == TruthVal::Unknown) continue;
    if (max_level >= 0 && a.level <= max_level) {
      kept.push_back(id);
      continue;
    }
    a.phase = a.value == TruthVal::True;
    a.value = TruthVal::Unknown;
    a.pos = Pos{};
    a.level = -1;
    a.vclause.clear();
    if (!is_extension(a.desc.kind)) {
      fresh_domain_atoms_.push_back(id);
    } else {
      auto it = atom_owner_.find(id);
      if (it != atom_owner_.end()) mark_dirty(it->second);
    }
  }
  virtuals_ = std::move(kept);
}

// ---------------------------------------------------------------------------
// Explanations
// ---------------------------------------------------------------------------

void Engine::raise_conflict(std::vector<Lit> clause) {
  smooth_channel_lits(clause);
  int32_t lvl = 0;
  for (Lit l : clause) lvl = std::max(lvl, atoms_[l.atom()].level);
  conflict_ = Conflict{std::move(clause), lvl};
  if (opts_.trace) *opts_.trace << "C\t" << clause_str(conflict_->clause) << "\n";
}

// Resolves away literals whose falsity only records a domain-channel step, so
// conflicts read in terms of the semantically assigned literals.
void Engine::smooth_channel_lits(std::vector<Lit>& clause) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < clause.size(); ++i) {
      AtomRec& a = atoms_[clause[i].atom()];
      if (a.trail_index < 0) continue;
      const TrailEntry& e = trail_[a.trail_index];
      if (e.reason.kind != Reason::Kind::Deferred || e.reason.cid != -1) continue;
      std::vector<Lit> body = explain_domain(e.lit, e.reason.stamp);
      clause.erase(clause.begin() + static_cast<ptrdiff_t>(i));
      for (Lit b : body)
        if (std::find(clause.begin(), clause.end(), ~b) == clause.end()) clause.push_back(~b);
      changed = true;
      break;
    }
  }
}

std::vector<Lit> Engine::materialize(std::optional<Lit> head, const Reason& r) {
  switch (r.kind) {
    case Reason::Kind::Clause:
      return clauses_[r.clause].lits;
    case Reason::Kind::Deferred: {
      if (r.cid >= 0) {
        std::vector<Lit> cl = props_[r.cid]->explain(*this, head, r);
        if (opts_.on_explanation) opts_.on_explanation(r.cid, cl);
        return cl;
      }
      if (!head) throw InternalError("channel reason without a head");
      std::vector<Lit> body = explain_domain(*head, r.stamp);
      std::vector<Lit> cl;
      cl.push_back(*head);
      for (Lit b : body) cl.push_back(~b);
      if (opts_.on_explanation) opts_.on_explanation(-1, cl);
      return cl;
    }
    default:
      throw InternalError("cannot materialize a decision or empty reason");
  }
}

std::vector<Lit> Engine::explain_domain(Lit l, int64_t stamp) {
  const AtomRec& rec = atoms_[l.atom()];
  if (rec.trail_index >= 0 && trail_[rec.trail_index].reason.kind == Reason::Kind::Decision &&
      trail_[rec.trail_index].lit == l)
    throw InternalError("explain_domain on a decision literal");
  Pos before = rec.pos.valid() ? rec.pos : pos_of_stamp_end(stamp + 1);
  return explain_domain_impl(l, stamp, before);
}

// Justification of x >= v at `stamp` in terms of trailed literals: the history
// entry that reached v, plus any holes it skipped, plus (for a disequality
// trigger) the bound it stood on.
void Engine::justify_geq(Var x, int64_t v, int64_t stamp, Pos before, std::vector<Lit>& body,
                         double pos_limit) {
  for (const auto& h : lb_hist_[x]) {
    if (h.pos > static_cast<double>(stamp) || h.pos >= pos_limit) break;
    if (h.val < v) continue;
    body.push_back(h.cause);
    const AtomDesc cd = atoms_[h.cause.atom()].desc;
    int64_t hole_from;
    if (cd.kind == AtomKind::BoundGeq || (cd.kind == AtomKind::Eq && !h.cause.neg())) {
      hole_from = cd.b;  // enqueued bound (or fixing value)
    } else {
      // x != u raised the bound off u; it stood on x >= u.
      hole_from = cd.b + 1;
      justify_geq(x, cd.b, stamp, before, body, h.pos);
    }
    for (int64_t w = hole_from; w < v; ++w)
      if (lit_neq(x, w).is_lit()) body.push_back(register_eq_atom(x, w, stamp, before));
    return;
  }
  if (v > init_lb(x)) throw InternalError("no trailed support for lower bound");
}

void Engine::justify_leq(Var x, int64_t v, int64_t stamp, Pos before, std::vector<Lit>& body,
                         double pos_limit) {
  for (const auto& h : ub_hist_[x]) {
    if (h.pos > static_cast<double>(stamp) || h.pos >= pos_limit) break;
    if (h.val > v) continue;
    body.push_back(h.cause);
    const AtomDesc cd = atoms_[h.cause.atom()].desc;
    int64_t hole_from;
    if (cd.kind == AtomKind::BoundGeq) {
      hole_from = cd.b - 1;  // cause was x <= cd.b - 1
    } else if (cd.kind == AtomKind::Eq && !h.cause.neg()) {
      hole_from = cd.b;
    } else {
      hole_from = cd.b - 1;
      justify_leq(x, cd.b, stamp, before, body, h.pos);
    }
    for (int64_t w = v + 1; w <= hole_from; ++w)
      if (lit_neq(x, w).is_lit()) body.push_back(register_eq_atom(x, w, stamp, before));
    return;
  }
  if (v < init_ub(x)) throw InternalError("no trailed support for upper bound");
}

std::vector<Lit> Engine::explain_domain_impl(Lit l, int64_t stamp, Pos before) {
  const AtomDesc d = atoms_[l.atom()].desc;
  Var x = static_cast<Var>(d.a);
  std::vector<Lit> body;
  switch (d.kind) {
    case AtomKind::BoundGeq: {
      if (!l.neg())
        justify_geq(x, d.b, stamp, before, body);
      else
        justify_leq(x, d.b - 1, stamp, before, body);
      return body;
    }
    case AtomKind::Eq: {
      if (!l.neg()) {
        if (init_lb(x) < d.b) body.push_back(register_bound_true(x, d.b, stamp, before));
        if (init_ub(x) > d.b) body.push_back(register_ub_true(x, d.b, stamp, before));
        return body;
      }
      if (lb_at(x, stamp) > d.b) {
        body.push_back(register_bound_true(x, d.b + 1, stamp, before));
      } else if (ub_at(x, stamp) < d.b) {
        body.push_back(register_ub_true(x, d.b - 1, stamp, before));
      } else {
        throw InternalError("explain_domain: disequality not implied by bounds");
      }
      return body;
    }
    default:
      throw InternalError("explain_domain on a non-domain atom");
  }
}

std::vector<Lit> Engine::reason_clause(AtomId id) {
  AtomRec& a = atoms_[id];
  if (a.value == TruthVal::Unknown) throw InternalError("reason_clause on unassigned atom");
  if (a.trail_index >= 0) {
    const TrailEntry& e = trail_[a.trail_index];
    return materialize(e.lit, e.reason);
  }
  return a.vclause;
}

Pos Engine::pos_between(Pos lo, double hi) {
  double p;
  if (!lo.valid() || lo.p <= 0.0) {
    p = 0.0;
  } else {
    p = (lo.p + hi) / 2.0;
    if (!(p > lo.p && p < hi)) throw InternalError("virtual position precision exhausted");
  }
  return Pos{p, ++pos_seq_};
}

Lit Engine::assign_virtual(AtomId id, TruthVal val, std::vector<Lit> reason_body, int64_t stamp,
                           Pos before) {
  AtomRec& a = atoms_[id];
  if (a.value != TruthVal::Unknown) throw InternalError("assign_virtual on assigned atom");
  Pos lo{};
  int32_t lvl = 0;
  for (Lit b : reason_body) {
    const AtomRec& br = atoms_[b.atom()];
    if (!br.pos.valid()) throw InternalError("virtual antecedent is unassigned");
    if (br.pos.valid() && !(br.pos < before))
      throw InternalError("virtual antecedent does not precede consequent");
    if (lo < br.pos) lo = br.pos;
    lvl = std::max(lvl, br.level);
  }
  a.value = val;
  a.level = lvl;
  a.trail_index = -1;
  a.pos = pos_between(lo, before.p);
  Lit self = Lit::make(id, val == TruthVal::False);
  a.vclause.clear();
  a.vclause.push_back(self);
  for (Lit b : reason_body) a.vclause.push_back(~b);
  virtuals_.push_back(id);
  (void)stamp;
  return self;
}

Lit Engine::register_bound_true(Var x, int64_t v, int64_t stamp, Pos before) {
  LitC lc = lit_geq(x, v);
  if (!lc.is_lit()) throw InternalError("register_bound_true on a folded constant");
  AtomId id = lc.lit.atom();
  if (atoms_[id].value != TruthVal::Unknown) {
    if (truth(lc.lit) != TruthVal::True) throw InternalError("register_bound_true: not true");
    return lc.lit;
  }
  std::vector<Lit> body = explain_domain_impl(lc.lit, stamp, before);
  Lit out = assign_virtual(id, TruthVal::True, body, stamp, before);
  if (opts_.on_explanation) opts_.on_explanation(-1, atoms_[id].vclause);
  return out;
}

Lit Engine::register_ub_true(Var x, int64_t v, int64_t stamp, Pos before) {
  LitC lc = lit_leq(x, v);
  if (!lc.is_lit()) throw InternalError("register_ub_true on a folded constant");
  AtomId id = lc.lit.atom();
  if (atoms_[id].value != TruthVal::Unknown) {
    if (truth(lc.lit) != TruthVal::True) throw InternalError("register_ub_true: not true");
    return lc.lit;
  }
  std::vector<Lit> body = explain_domain_impl(lc.lit, stamp, before);
  Lit out = assign_virtual(id, TruthVal::False, body, stamp, before);
  if (opts_.on_explanation) opts_.on_explanation(-1, atoms_[id].vclause);
  return out;
}

void Engine::lits_geq(Var x, int64_t v, int64_t stamp, Pos before, std::vector<Lit>& body) {
  if (v <= init_lb(x)) return;
  LitC lc = lit_geq(x, v);
  if (lc.is_false()) throw InternalError("lits_geq above the initial domain");
  const AtomRec& a = atoms_[lc.lit.atom()];
  if (a.value == TruthVal::Unknown) {
    body.push_back(register_bound_true(x, v, stamp, before));
    return;
  }
  if (truth(lc.lit) == TruthVal::True && a.pos < before) {
    body.push_back(lc.lit);
    return;
  }
  justify_geq(x, v, stamp, before, body);
}

void Engine::lits_leq(Var x, int64_t v, int64_t stamp, Pos before, std::vector<Lit>& body) {
  if (v >= init_ub(x)) return;
  LitC lc = lit_leq(x, v);
  if (lc.is_false()) throw InternalError("lits_leq below the initial domain");
  const AtomRec& a = atoms_[lc.lit.atom()];
  if (a.value == TruthVal::Unknown) {
    body.push_back(register_ub_true(x, v, stamp, before));
    return;
  }
  if (truth(lc.lit) == TruthVal::True && a.pos < before) {
    body.push_back(lc.lit);
    return;
  }
  justify_leq(x, v, stamp, before, body);
}

void Engine::lits_eq_true(Var x, int64_t v, int64_t stamp, Pos before, std::vector<Lit>& body) {
  LitC lc = lit_eq(x, v);
  if (lc.is_true()) return;
  if (lc.is_false()) throw InternalError("lits_eq_true outside the initial domain");
  const AtomRec& a = atoms_[lc.lit.atom()];
  if (a.value == TruthVal::Unknown) {
    body.push_back(register_eq_atom(x, v, stamp, before));
    return;
  }
  if (truth(lc.lit) == TruthVal::True && a.pos < before) {
    body.push_back(lc.lit);
    return;
  }
  lits_geq(x, v, stamp, before, body);
  lits_leq(x, v, stamp, before, body);
}

void Engine::lits_neq_true(Var x, int64_t v, int64_t stamp, Pos before, std::vector<Lit>& body) {
  LitC lc = lit_neq(x, v);
  if (lc.is_true()) return;
  if (lc.is_false()) throw InternalError("lits_neq_true on a folded constant");
  const AtomRec& a = atoms_[lc.lit.atom()];
  if (a.value == TruthVal::Unknown) {
    body.push_back(register_eq_atom(x, v, stamp, before));
    return;
  }
  if (truth(lc.lit) == TruthVal::True && a.pos < before) {
    body.push_back(lc.lit);
    return;
  }
  if (lb_at(x, stamp) > v)
    lits_geq(x, v + 1, stamp, before, body);
  else if (ub_at(x, stamp) < v)
    lits_leq(x, v - 1, stamp, before, body);
  else
    throw InternalError("lits_neq_true: removal has no usable support");
}

Lit Engine::register_eq_atom(Var x, int64_t v, int64_t stamp, Pos before) {
  LitC lc = lit_eq(x, v);
  if (!lc.is_lit()) throw InternalError("register_eq_atom on a folded constant");
  AtomId id = lc.lit.atom();
  if (atoms_[id].value != TruthVal::Unknown)
    return atoms_[id].value == TruthVal::True ? lc.lit : ~lc.lit;
  bool is_true = lb_at(x, stamp) == v && ub_at(x, stamp) == v;
  Lit self = is_true ? lc.lit : ~lc.lit;
  std::vector<Lit> body = explain_domain_impl(self, stamp, before);
  Lit out = assign_virtual(id, is_true ? TruthVal::True : TruthVal::False, body, stamp, before);
  if (opts_.on_explanation) opts_.on_explanation(-1, atoms_[id].vclause);
  return out;
}

// ---------------------------------------------------------------------------
// Clauses
// ---------------------------------------------------------------------------

ClauseId Engine::add_clause(std::vector<Lit> lits, bool learnt) {
  if (lits.size() < 2) throw InternalError("clauses need >= 2 literals; use post_root_clause");
  ClauseId id;
  if (!free_clauses_.empty()) {
    id = free_clauses_.back();
    free_clauses_.pop_back();
    clauses_[id] = Clause{};
  } else {
    id = static_cast<ClauseId>(clauses_.size());
    clauses_.emplace_back();
  }
  Clause& c = clauses_[id];
  c.lits = std::move(lits);
  c.learnt = learnt;
  attach(id);
  return id;
}

void Engine::attach(ClauseId id) {
  Clause& c = clauses_[id];
  watches_[c.lits[0].code].push_back(id);
  watches_[c.lits[1].code].push_back(id);
}

void Engine::delete_clause(ClauseId id) {
  Clause& c = clauses_[id];
  if (c.deleted) return;
  for (int w = 0; w < 2; ++w) {
    auto& ws = watches_[c.lits[w].code];
    ws.erase(std::remove(ws.begin(), ws.end(), id), ws.end());
  }
  c.deleted = true;
  c.lits.clear();
  free_clauses_.push_back(id);
}

std::vector<ClauseId> Engine::learnt_clauses() const {
  std::vector<ClauseId> out;
  for (size_t i = 0; i < clauses_.size(); ++i)
    if (clauses_[i].learnt && !clauses_[i].deleted) out.push_back(static_cast<ClauseId>(i));
  return out;
}

bool Engine::post_root_clause(std::vector<Lit> lits) {
  if (level() != 0) throw InternalError("root clauses must be posted at level 0");
  std::vector<Lit> live;
  for (Lit l : lits) {
    TruthVal t = truth(l);
    if (t == TruthVal::True) return true;
    if (t == TruthVal::Unknown) live.push_back(l);
  }
  if (live.empty()) {
    raise_conflict(std::move(lits));
    return false;
  }
  if (live.size() == 1) {
    // Kept as a stored unit so the literal has a materializable reason.
    ClauseId id;
    if (!free_clauses_.empty()) {
      id = free_clauses_.back();
      free_clauses_.pop_back();
      clauses_[id] = Clause{};
    } else {
      id = static_cast<ClauseId>(clauses_.size());
      clauses_.emplace_back();
    }
    clauses_[id].lits = live;
    return enqueue(live[0], Reason::from_clause(id));
  }
  add_clause(std::move(live), false);
  return true;
}

// ---------------------------------------------------------------------------
// Propagators, GC, misc
// ---------------------------------------------------------------------------

void Engine::add_propagator(std::unique_ptr<Propagator> p, const std::vector<Var>& scope) {
  ConstraintId cid = p->cid;
  if (cid != static_cast<ConstraintId>(props_.size()))
    throw InternalError("propagators must be added in constraint id order");
  props_.push_back(std::move(p));
  for (Var x : scope) {
    auto& subs = var_subs_[x];
    if (std::find(subs.begin(), subs.end(), cid) == subs.end()) subs.push_back(cid);
  }
  mark_dirty(cid);
}

int64_t Engine::gc_unused() {
  int64_t removed = 0;
  for (AtomId id = 0; id < static_cast<AtomId>(atoms_.size()); ++id) {
    AtomRec& a = atoms_[id];
    if (!a.alive || !is_extension(a.desc.kind)) continue;
    if (a.occ != 0 || a.value != TruthVal::Unknown) continue;
    a.alive = false;
    intern_.erase(a.desc);
    auto it = atom_owner_.find(id);
    if (it != atom_owner_.end()) {
      props_[it->second]->atom_collected(id);
      atom_owner_.erase(it);
    }
    if (a.desc.kind == AtomKind::PsumGeq) ++stats_.psum_collected;
    free_atoms_.push_back(id);
    ++removed;
  }
  return removed;
}

void Engine::bump_atom(AtomId id, double inc) {
  AtomRec& a = atoms_[id];
  a.activity += inc;
  if (a.activity > 1e100) {
    for (auto& rec : atoms_) rec.activity *= 1e-100;
    act_inc_ *= 1e-100;
  }
}

void Engine::debug_check() const {
  for (size_t x = 0; x < lb_.size(); ++x) {
    if (lb_[x] > ub_[x]) throw InternalError("debug: empty domain");
    for (const auto& [v, p] : holes_[x])
      if (v <= lb_[x] || v >= ub_[x]) throw InternalError("debug: hole outside open interval");
  }
  for (AtomId id = 0; id < static_cast<AtomId>(atoms_.size()); ++id) {
    const AtomRec& a = atoms_[id];
    if (!a.alive) continue;
    if (a.desc.kind == AtomKind::BoundGeq) {
      Var x = static_cast<Var>(a.desc.a);
      TruthVal want = lb_[x] >= a.desc.b   ? TruthVal::True
                      : ub_[x] < a.desc.b ? TruthVal::False
                                          : TruthVal::Unknown;
      if (a.value != want)
        throw InternalError("debug: bound atom unfaithful: " +
                            lit_to_string(*model_, a.desc, false));
    } else if (a.desc.kind == AtomKind::Eq) {
      Var x = static_cast<Var>(a.desc.a);
      TruthVal want = (lb_[x] == a.desc.b && ub_[x] == a.desc.b) ? TruthVal::True
                      : !in_domain(x, a.desc.b)                  ? TruthVal::False
                                                                 : TruthVal::Unknown;
      if (a.value != want)
        throw InternalError("debug: eq atom unfaithful: " +
                            lit_to_string(*model_, a.desc, false));
    }
  }
}

uint64_t Engine::state_hash() const {
  uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](uint64_t v) {
    h ^= v;
    h *= 1099511628211ULL;
  };
  for (size_t i = 0; i < lb_.size(); ++i) {
    mix(static_cast<uint64_t>(lb_[i]));
    mix(static_cast<uint64_t>(ub_[i]));
    for (const auto& [v, p] : holes_[i]) mix(static_cast<uint64_t>(v));
  }
  for (const auto& a : atoms_) {
    mix(static_cast<uint64_t>(a.value));
    mix(a.alive ? 7u : 13u);
  }
  return h;
}

std::string Engine::lit_str(Lit l) const {
  return lit_to_string(*model_, atoms_[l.atom()].desc, l.neg());
}

std::string Engine::clause_str(const std::vector<Lit>& c) const {
  std::string out;
  for (size_t i = 0; i < c.size(); ++i) {
    if (i) out += " | ";
    out += lit_str(c[i]);
  }
  return out.empty() ? "false" : out;
}

std::string Engine::dump_atoms() const {
  std::ostringstream os;
  for (AtomId id = 0; id < static_cast<AtomId>(atoms_.size()); ++id) {
    const AtomRec& a = atoms_[id];
    if (!a.alive) continue;
    const char* tv = a.value == TruthVal::True    ? "true"
                     : a.value == TruthVal::False ? "false"
                                                  : "unknown";
    os << id << "\t" << lit_to_string(*model_, a.desc, false) << "\t" << tv << "\t";
    if (a.pos.valid())
      os << a.pos.p;
    else
      os << "-";
    os << "\t" << a.occ << "\n";
  }
  return os.str();
}

void Engine::trace_entry(const TrailEntry& e) {
  std::string reason;
  switch (e.reason.kind) {
    case Reason::Kind::Decision: reason = "decision"; break;
    case Reason::Kind::Clause: reason = "clause " + std::to_string(e.reason.clause); break;
    case Reason::Kind::Deferred:
      reason = e.reason.cid < 0 ? "channel" : ("c" + std::to_string(e.reason.cid));
      break;
    default: reason = "?"; break;
  }
  *opts_.trace << "T\t" << e.level << "\t" << lit_str(e.lit) << "\t" << reason << "\n";
}

}  // namespace xlit
