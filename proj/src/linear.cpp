#include <algorithm>
#include <cassert>

#include "xlit/propagators.hpp"

namespace xlit {

using i128 = __int128;

namespace {

int64_t floor_div(int64_t a, int64_t b) {
  int64_t q = a / b, r = a % b;
  return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}

int64_t narrow(i128 v) {
  if (v > i128(kInt64Max) || v < i128(kInt64Min)) throw InternalError("linear overflow");
  return static_cast<int64_t>(v);
}

Pos pos_of_head(Engine& e, const std::optional<Lit>& head, int64_t stamp) {
  if (head) {
    const AtomRec& a = e.atom(head->atom());
    if (a.pos.valid()) return a.pos;
  }
  return e.pos_of_stamp_end(stamp + 1);
}

constexpr i128 kInf = i128(1) << 100;

}  // namespace

LinearProp::LinearProp(const ModelInstance& m, const LinearC& lin) : c(&lin) {
  cid = lin.id;
  extended = lin.psum_enabled;
  boundaries.push_back(0);
  if (lin.psum_enabled)
    for (int64_t k : checkpoints(lin)) boundaries.push_back(k);
  boundaries.push_back(nterms());
  pmin_init.assign(nterms() + 1, 0);
  pmax_init.assign(nterms() + 1, 0);
  for (int64_t i = 0; i < nterms(); ++i) {
    const VarDecl& v = m.var(lin.terms[i].var);
    pmin_init[i + 1] = pmin_init[i] + lin.terms[i].coeff * v.lb;
    pmax_init[i + 1] = pmax_init[i] + lin.terms[i].coeff * v.ub;
  }
}

size_t LinearProp::boundary_index(int64_t k) const {
  for (size_t t = 0; t < boundaries.size(); ++t)
    if (boundaries[t] == k) return t;
  throw InternalError("not a segment boundary");
}

// Floor values (min of the sign-normalized prefix) forward, cap values
// (max of it, informed by the constraint bound) backward.
struct LinearProp::View {
  int64_t stamp = 0;
  std::vector<i128> qlo, qhi;
  std::vector<AtomId> qlo_atom, qhi_atom;  // provenance; kNoAtom = accumulated/seed
  std::vector<int64_t> tlb, tub;           // per-term bounds at the stamp
  int64_t rhs_lb = 0, rhs_ub = 0;
};

LinearProp::View LinearProp::build_view(Engine& e, int64_t stamp) const {
  View v;
  v.stamp = stamp;
  size_t m = boundaries.size();
  v.qlo.assign(m, 0);
  v.qhi.assign(m, kInf);
  v.qlo_atom.assign(m, kNoAtom);
  v.qhi_atom.assign(m, kNoAtom);
  v.tlb.resize(nterms());
  v.tub.resize(nterms());
  for (int64_t i = 0; i < nterms(); ++i) {
    v.tlb[i] = e.lb_at(c->terms[i].var, stamp);
    v.tub[i] = e.ub_at(c->terms[i].var, stamp);
  }
  const bool le = is_le();
  auto cmin = [&](int64_t i) -> i128 {
    return le ? i128(c->terms[i].coeff) * v.tlb[i] : -i128(c->terms[i].coeff) * v.tub[i];
  };
  // An atom assignment counts only if real and within the stamped prefix.
  auto atom_at = [&](AtomId id) -> TruthVal {
    const AtomRec& a = e.atom(id);
    if (a.value == TruthVal::Unknown || a.trail_index < 0) return TruthVal::Unknown;
    if (a.pos.p > static_cast<double>(stamp)) return TruthVal::Unknown;
    return a.value;
  };

  for (size_t t = 1; t < m; ++t) {
    i128 acc = v.qlo[t - 1];
    for (int64_t i = boundaries[t - 1]; i < boundaries[t]; ++i) acc += cmin(i);
    v.qlo[t] = acc;
    auto it = psum_atoms.find(boundaries[t]);
    if (it != psum_atoms.end()) {
      for (const auto& [pv, id] : it->second) {
        TruthVal tv = atom_at(id);
        // Floor atoms: LE true atoms give P >= pv; GE false atoms give
        // P <= pv-1, i.e. Q >= 1-pv.
        i128 w = le ? i128(pv) : i128(1) - pv;
        bool applies = le ? tv == TruthVal::True : tv == TruthVal::False;
        if (applies && w > v.qlo[t]) {
          v.qlo[t] = w;
          v.qlo_atom[t] = id;
        }
      }
    }
  }

  i128 seed;
  if (c->rhs_var != kNoVar) {
    v.rhs_lb = e.lb_at(c->rhs_var, stamp);
    v.rhs_ub = e.ub_at(c->rhs_var, stamp);
    seed = le ? i128(c->bound) + v.rhs_ub : -(i128(c->bound) + v.rhs_lb);
  } else {
    seed = le ? i128(c->bound) : -i128(c->bound);
  }
  v.qhi[m - 1] = seed;
  for (size_t t = m - 1; t-- > 0;) {
    i128 acc = v.qhi[t + 1];
    for (int64_t i = boundaries[t]; i < boundaries[t + 1]; ++i) acc -= cmin(i);
    v.qhi[t] = acc;
    auto it = psum_atoms.find(boundaries[t]);
    if (it != psum_atoms.end()) {
      for (const auto& [pv, id] : it->second) {
        TruthVal tv = atom_at(id);
        // Cap atoms: LE false atoms give P <= pv-1; GE true atoms give Q <= -pv.
        i128 w = le ? i128(pv) - 1 : -i128(pv);
        bool applies = le ? tv == TruthVal::False : tv == TruthVal::True;
        if (applies && w < v.qhi[t]) {
          v.qhi[t] = w;
          v.qhi_atom[t] = id;
        }
      }
    }
  }
  return v;
}

Lit LinearProp::psum_pos_lit(Engine& e, int64_t k, int64_t v) {
  AtomId id = e.intern(AtomDesc::psum_geq(cid, k, v));
  if (psum_atoms[k].emplace(v, id).second) e.subscribe_atom_owner(id, cid);
  return Lit::make(id, false);
}

void LinearProp::atom_collected(AtomId id) {
  for (auto& [k, byv] : psum_atoms)
    for (auto it = byv.begin(); it != byv.end(); ++it)
      if (it->second == id) {
        byv.erase(it);
        return;
      }
}

bool LinearProp::propagate(Engine& e) {
  const int64_t stamp = e.stamp();
  View view = build_view(e, stamp);
  const size_t m = boundaries.size();
  const bool le = is_le();

  for (size_t t = 0; t < m; ++t) {
    if (view.qlo[t] > view.qhi[t]) {
      Reason r = Reason::deferred(cid, kConflict, static_cast<int64_t>(t), 0, stamp);
      e.raise_conflict(e.materialize(std::nullopt, r));
      return false;
    }
  }

  // Fix registered partial-sum atoms implied either way.
  for (auto& [k, byv] : psum_atoms) {
    size_t t = boundary_index(k);
    for (auto& [pv, id] : byv) {
      if (e.value(id) != TruthVal::Unknown) continue;
      i128 floor_w = le ? i128(pv) : i128(1) - pv;
      i128 cap_w = le ? i128(pv) - 1 : -i128(pv);
      if (view.qlo[t] >= floor_w) {
        Lit l = Lit::make(id, !le);
        if (!e.enqueue(l, Reason::deferred(cid, kPsumFloor, id, 0, stamp))) return false;
      } else if (view.qhi[t] <= cap_w) {
        Lit l = Lit::make(id, le);
        if (!e.enqueue(l, Reason::deferred(cid, kPsumCap, id, 0, stamp))) return false;
      }
    }
  }

  // Term filtering between consecutive boundaries.
  for (size_t t = 1; t < m; ++t) {
    i128 seg_min = 0;
    for (int64_t i = boundaries[t - 1]; i < boundaries[t]; ++i)
      seg_min +=
          le ? i128(c->terms[i].coeff) * view.tlb[i] : -i128(c->terms[i].coeff) * view.tub[i];
    for (int64_t i = boundaries[t - 1]; i < boundaries[t]; ++i) {
      int64_t a = c->terms[i].coeff;
      Var x = c->terms[i].var;
      i128 own = le ? i128(a) * view.tlb[i] : -i128(a) * view.tub[i];
      i128 avail = view.qhi[t] - view.qlo[t - 1] - (seg_min - own);
      i128 cur_top = le ? i128(a) * e.ub(x) : -i128(a) * e.lb(x);
      if (avail >= cur_top) continue;
      int64_t u = floor_div(narrow(avail), a);  // sigma * x_i <= u
      Reason r = Reason::deferred(cid, kTerm, i, u, stamp);
      LitC lit = le ? e.lit_leq(x, u) : e.lit_geq(x, -u);
      if (lit.is_true()) continue;
      if (lit.is_false()) {
        e.raise_conflict(e.materialize(std::nullopt, r));
        return false;
      }
      if (e.truth(lit.lit) == TruthVal::True) continue;
      if (!e.enqueue(lit.lit, r)) return false;
    }
  }

  // Bound on the rhs variable (the objective channel).
  if (c->rhs_var != kNoVar) {
    i128 w = view.qlo[m - 1] - (le ? i128(c->bound) : -i128(c->bound));
    int64_t bnd = le ? narrow(w) : narrow(-w);
    LitC lit = le ? e.lit_geq(c->rhs_var, bnd) : e.lit_leq(c->rhs_var, bnd);
    Reason r = Reason::deferred(cid, kRhs, 0, bnd, stamp);
    if (lit.is_false()) {
      e.raise_conflict(e.materialize(std::nullopt, r));
      return false;
    }
    if (lit.is_lit() && e.truth(lit.lit) != TruthVal::True)
      if (!e.enqueue(lit.lit, r)) return false;
  }
  return true;
}

// A body contribution that lifting may weaken. Weakening by one unit lowers
// the guaranteed value by `unit`.
struct LinearProp::Piece {
  enum class K : uint8_t { RhsSeed, Term } k;
  int64_t term_index = -1;
  int64_t unit = 1;
  int64_t weaken = 0, max_weaken = 0;
  int64_t base = 0;  // term: stamped bound; rhs: stamped bound
};

std::optional<Lit> LinearProp::try_floor_atom(Engine& e, const View& view, int64_t stamp,
                                              Pos before, size_t b, int64_t w, AtomId head_atom) {
  const bool le = is_le();
  if (!is_checkpoint_boundary(b)) return std::nullopt;
  int64_t pv = le ? w : 1 - w;  // atom threshold in P-space
  AtomDesc want = AtomDesc::psum_geq(cid, boundaries[b], pv);
  if (head_atom != kNoAtom && e.atom(head_atom).desc == want) return std::nullopt;
  if (view.qlo[b] < i128(w)) return std::nullopt;
  Lit lit = psum_pos_lit(e, boundaries[b], pv);
  if (!le) lit = ~lit;  // the literal that must be TRUE
  const AtomRec& rec = e.atom(lit.atom());
  if (rec.value != TruthVal::Unknown) {
    if (e.truth(lit) == TruthVal::True && rec.pos < before) return lit;
    return std::nullopt;
  }
  // Fresh atom: assign virtually with its own explanation, the
  // lazy-introduction chain of the extension language.
  std::vector<Lit> cl = floor_clause(e, view, stamp, before, b, w, lit.atom());
  std::vector<Lit> body;
  body.reserve(cl.size());
  for (Lit l : cl) body.push_back(~l);
  Lit self = e.assign_virtual(lit.atom(), lit.neg() ? TruthVal::False : TruthVal::True, body,
                              stamp, before);
  if (e.options().on_explanation) {
    std::vector<Lit> logged{self};
    for (Lit bl : body) logged.push_back(~bl);
    e.options().on_explanation(cid, logged);
  }
  return self;
}

// Clause (negated body) justifying "floor at boundary b >= w": either a
// same-boundary lattice step from a stronger assigned atom, or the
// next-lower-checkpoint assembly.
std::vector<Lit> LinearProp::floor_clause(Engine& e, const View& view, int64_t stamp, Pos before,
                                          size_t b, int64_t w, AtomId head_atom) {
  if (view.qlo_atom[b] != kNoAtom && view.qlo_atom[b] != head_atom) {
    Lit src = Lit::make(view.qlo_atom[b], !is_le());
    return {~src};
  }
  return assemble(e, view, stamp, before, b, std::nullopt, std::nullopt, i128(w),
                  /*place_floor_atom=*/false, /*place_cap_atom=*/false, head_atom);
}

// The true literal of a cap fact "P-prefix at boundary b bounded so that the
// Q-space value is <= w", interned and virtually assigned on demand.
std::optional<Lit> LinearProp::try_cap_atom(Engine& e, const View& view, int64_t stamp,
                                            Pos before, size_t b, int64_t w, AtomId head_atom) {
  const bool le = is_le();
  if (!is_checkpoint_boundary(b)) return std::nullopt;
  int64_t pv = le ? w + 1 : -w;  // atom threshold in P-space; lit is its cap form
  if (pv <= pmin_init[boundaries[b]] || pv > pmax_init[boundaries[b]] + 1) return std::nullopt;
  AtomDesc want = AtomDesc::psum_geq(cid, boundaries[b], pv);
  if (head_atom != kNoAtom && e.atom(head_atom).desc == want) return std::nullopt;
  if (view.qhi[b] > i128(w)) return std::nullopt;
  Lit lit = psum_pos_lit(e, boundaries[b], pv);
  if (le) lit = ~lit;  // cap form: LE wants the negation, GE the positive atom
  const AtomRec& rec = e.atom(lit.atom());
  if (rec.value != TruthVal::Unknown) {
    if (e.truth(lit) == TruthVal::True && rec.pos < before) return lit;
    return std::nullopt;
  }
  std::vector<Lit> cl = cap_clause(e, view, stamp, before, b, w, lit.atom());
  std::vector<Lit> body;
  body.reserve(cl.size());
  for (Lit l : cl) body.push_back(~l);
  Lit self = e.assign_virtual(lit.atom(), lit.neg() ? TruthVal::False : TruthVal::True, body,
                              stamp, before);
  if (e.options().on_explanation) {
    std::vector<Lit> logged{self};
    for (Lit bl : body) logged.push_back(~bl);
    e.options().on_explanation(cid, logged);
  }
  return self;
}

// Clause (negated body) justifying "cap at boundary b <= w": a same-boundary
// lattice step from a stronger assigned cap, or the rightward chain.
std::vector<Lit> LinearProp::cap_clause(Engine& e, const View& view, int64_t stamp, Pos before,
                                        size_t b, int64_t w, AtomId head_atom) {
  if (view.qhi_atom[b] != kNoAtom && view.qhi_atom[b] != head_atom) {
    Lit src = Lit::make(view.qhi_atom[b], is_le());
    return {~src};
  }
  return assemble(e, view, stamp, before, std::nullopt, b, std::nullopt, -i128(w),
                  /*place_floor_atom=*/false, /*place_cap_atom=*/false, head_atom);
}

// Shared explanation assembler. Produces the NEGATED body (clause form,
// without the head). `need` is the floor+others-cap requirement in Q-space.
std::vector<Lit> LinearProp::assemble(Engine& e, const View& view, int64_t stamp, Pos before,
                                      std::optional<size_t> floor_b, std::optional<size_t> cap_b,
                                      std::optional<int64_t> skip_term, i128 need,
                                      bool place_floor_atom, bool place_cap_atom,
                                      AtomId head_atom) {
  const bool le = is_le();
  const bool lift = e.options().lift;
  std::vector<Piece> pieces;
  std::optional<Lit> floor_lit, cap_lit;
  i128 supply = 0;

  auto term_piece = [&](int64_t i) {
    if (skip_term && *skip_term == i) return;
    Piece p;
    p.k = Piece::K::Term;
    p.term_index = i;
    p.unit = c->terms[i].coeff;
    p.base = le ? view.tlb[i] : view.tub[i];
    Var x = c->terms[i].var;
    p.max_weaken = le ? p.base - e.init_lb(x) : e.init_ub(x) - p.base;
    pieces.push_back(p);
    supply += le ? i128(p.unit) * p.base : -i128(p.unit) * p.base;
  };

  // Others: the segment between the floor and cap boundaries (term heads).
  if (floor_b && cap_b) {
    for (int64_t i = boundaries[*floor_b]; i < boundaries[*cap_b]; ++i) term_piece(i);
  }

  const i128 floor_stamped = floor_b ? view.qlo[*floor_b] : i128(0);

  // Cap side: walk rightward; wrap the derivation in a prefix cap atom at the
  // first usable checkpoint so nogoods stay inside the extension language.
  if (cap_b) {
    size_t b = *cap_b;
    const size_t m = boundaries.size();
    if (!place_cap_atom) {
      for (int64_t i = boundaries[b]; b + 1 < m && i < boundaries[b + 1]; ++i) term_piece(i);
      ++b;
    }
    for (;;) {
      if (b + 1 == m) {
        if (c->rhs_var != kNoVar) {
          Piece p;
          p.k = Piece::K::RhsSeed;
          p.base = le ? view.rhs_ub : view.rhs_lb;
          p.unit = 1;
          p.max_weaken = le ? e.init_ub(c->rhs_var) - p.base : p.base - e.init_lb(c->rhs_var);
          pieces.push_back(p);
          supply -= le ? i128(c->bound) + p.base : -(i128(c->bound) + p.base);
        } else {
          supply -= le ? i128(c->bound) : -i128(c->bound);
        }
        break;
      }
      // Maximal cap preserving the requirement, given everything else at its
      // stamped strength.
      i128 allowance = floor_stamped + supply - need;
      if (allowance >= i128(qmax_init(boundaries[b]))) {
        supply -= qmax_init(boundaries[b]);
        break;
      }
      int64_t capv = narrow(allowance);
      if (std::optional<Lit> cl = try_cap_atom(e, view, stamp, before, b, capv, head_atom)) {
        cap_lit = cl;
        supply -= capv;
        break;
      }
      if (view.qhi_atom[b] != kNoAtom && view.qhi_atom[b] != head_atom) {
        Lit bl = Lit::make(view.qhi_atom[b], le);
        const AtomRec& br = e.atom(bl.atom());
        if (e.truth(bl) == TruthVal::True && br.pos < before) {
          cap_lit = bl;
          const AtomDesc d = br.desc;
          supply -= le ? i128(d.c) - 1 : -i128(d.c);
          break;
        }
      }
      for (int64_t i = boundaries[b]; i < boundaries[b + 1]; ++i) term_piece(i);
      ++b;
    }
  }

  // Floor side last: the minimal atom threshold follows from everything else.
  if (floor_b) {
    size_t b = *floor_b;
    if (!place_floor_atom && b > 0) {
      for (int64_t i = boundaries[b - 1]; i < boundaries[b]; ++i) term_piece(i);
      --b;
    }
    for (;;) {
      if (b == 0) break;
      int64_t w = narrow(need - supply);
      if (w <= qmin_init(boundaries[b])) {
        supply += qmin_init(boundaries[b]);
        break;
      }
      if (std::optional<Lit> al = try_floor_atom(e, view, stamp, before, b, w, head_atom)) {
        floor_lit = al;
        supply += w;
        break;
      }
      // The minimal atom is unusable; fall back to the assigned atom that
      // boosted this boundary, if any, else expand the segment.
      if (view.qlo_atom[b] != kNoAtom && view.qlo_atom[b] != head_atom) {
        Lit bl = Lit::make(view.qlo_atom[b], !le);
        const AtomRec& br = e.atom(bl.atom());
        if (e.truth(bl) == TruthVal::True && br.pos < before) {
          floor_lit = bl;
          const AtomDesc d = br.desc;
          supply += le ? i128(d.c) : i128(1) - d.c;
          break;
        }
      }
      for (int64_t i = boundaries[b - 1]; i < boundaries[b]; ++i) term_piece(i);
      --b;
    }
  }

  i128 slack = supply - need;
  if (slack < 0) throw InternalError("explanation assembly slack is negative");

  // The rhs seed lifts before terms; terms in structural order.
  std::stable_sort(pieces.begin(), pieces.end(), [](const Piece& a, const Piece& b) {
    auto rank = [](const Piece& p) { return p.k == Piece::K::RhsSeed ? 0 : 1; };
    if (rank(a) != rank(b)) return rank(a) < rank(b);
    return a.term_index < b.term_index;
  });
  for (auto& p : pieces) {
    if (!lift && (p.k == Piece::K::Term || p.k == Piece::K::RhsSeed)) continue;
    if (slack < p.unit) continue;
    int64_t d = std::min<int64_t>(p.max_weaken, narrow(slack / p.unit));
    p.weaken = d;
    slack -= i128(d) * p.unit;
  }

  // Emit the clause (negated body): floor atom, cap atom, rhs, then terms.
  std::vector<Lit> clause;
  if (floor_lit) clause.push_back(~*floor_lit);
  if (cap_lit) clause.push_back(~*cap_lit);
  for (const auto& p : pieces) {
    switch (p.k) {
      case Piece::K::RhsSeed: {
        int64_t bnd = le ? p.base + p.weaken : p.base - p.weaken;
        std::vector<Lit> body;
        if (le)
          e.lits_leq(c->rhs_var, bnd, stamp, before, body);
        else
          e.lits_geq(c->rhs_var, bnd, stamp, before, body);
        for (Lit b : body) clause.push_back(~b);
        break;
      }
      case Piece::K::Term: {
        int64_t bnd = le ? p.base - p.weaken : p.base + p.weaken;
        Var x = c->terms[p.term_index].var;
        std::vector<Lit> body;
        if (le)
          e.lits_geq(x, bnd, stamp, before, body);
        else
          e.lits_leq(x, bnd, stamp, before, body);
        for (Lit b : body) clause.push_back(~b);
        break;
      }
    }
  }
  return clause;
}

std::vector<Lit> LinearProp::explain(Engine& e, std::optional<Lit> head, const Reason& r) {
  View view = build_view(e, r.stamp);
  const bool le = is_le();
  Pos before = pos_of_head(e, head, r.stamp);
  std::vector<Lit> clause;

  switch (r.tag) {
    case kTerm: {
      int64_t i = r.a;
      int64_t a = c->terms[i].coeff;
      int64_t u = r.b;  // sigma * x_i <= u
      i128 t_cap = i128(a) * (i128(u) + 1) - 1;
      size_t seg = 1;
      while (boundaries[seg] < i + 1) ++seg;
      // cap - floor - others <= t_cap  <=>  floor + others - cap >= -t_cap
      clause = assemble(e, view, r.stamp, before, seg - 1, seg, i, -t_cap, true, true, kNoAtom);
      break;
    }
    case kRhs: {
      i128 w = le ? i128(r.b) + c->bound : -i128(r.b) - c->bound;
      clause = assemble(e, view, r.stamp, before, boundaries.size() - 1, std::nullopt,
                        std::nullopt, w, true, true, kNoAtom);
      break;
    }
    case kPsumFloor: {
      AtomId id = r.a;
      const AtomDesc d = e.atom(id).desc;
      size_t b = boundary_index(d.b);
      i128 w = le ? i128(d.c) : i128(1) - d.c;
      clause = floor_clause(e, view, r.stamp, before, b, narrow(w), id);
      break;
    }
    case kPsumCap: {
      AtomId id = r.a;
      const AtomDesc d = e.atom(id).desc;
      size_t b = boundary_index(d.b);
      i128 w = le ? i128(d.c) - 1 : -i128(d.c);
      clause = cap_clause(e, view, r.stamp, before, b, narrow(w), id);
      break;
    }
    case kConflict: {
      size_t t = static_cast<size_t>(r.a);
      // floor - cap >= 1
      clause = assemble(e, view, r.stamp, before, t, t, std::nullopt, 1, true, false, kNoAtom);
      break;
    }
    default:
      throw InternalError("unknown linear payload");
  }
  if (head) clause.push_back(*head);
  return clause;
}

LinearProp::RegResult LinearProp::register_psum(Engine& e, int64_t prefix_len, int64_t v) {
  Lit pos = psum_pos_lit(e, prefix_len, v);
  AtomId id = pos.atom();
  {
    const AtomRec& rec = e.atom(id);
    if (rec.value != TruthVal::Unknown) return {pos, rec.value, rec.pos};
  }
  int64_t stamp = e.stamp();
  View view = build_view(e, stamp);
  size_t b = boundary_index(prefix_len);
  Pos before = e.pos_of_stamp_end(stamp + 1);
  const bool le = is_le();
  i128 floor_w = le ? i128(v) : i128(1) - v;
  i128 cap_w = le ? i128(v) - 1 : -i128(v);
  std::vector<Lit> cl;
  TruthVal tv = TruthVal::Unknown;
  if (view.qlo[b] >= floor_w) {
    tv = le ? TruthVal::True : TruthVal::False;
    cl = floor_clause(e, view, stamp, before, b, narrow(floor_w), id);
  } else if (view.qhi[b] <= cap_w) {
    tv = le ? TruthVal::False : TruthVal::True;
    cl = cap_clause(e, view, stamp, before, b, narrow(cap_w), id);
  } else {
    return {pos, TruthVal::Unknown, std::nullopt};
  }
  std::vector<Lit> body;
  body.reserve(cl.size());
  for (Lit l : cl) body.push_back(~l);
  Lit self = e.assign_virtual(id, tv, body, stamp, before);
  if (e.options().on_explanation) {
    std::vector<Lit> logged{self};
    for (Lit bl : body) logged.push_back(~bl);
    e.options().on_explanation(cid, logged);
  }
  return {pos, tv, e.atom(id).pos};
}

}  // namespace xlit
