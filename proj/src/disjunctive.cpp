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

DisjunctiveProp::DisjunctiveProp(const DisjunctiveC& d) : c(&d) { cid = d.id; }

void DisjunctiveProp::atom_collected(AtomId id) {
  for (auto it = sched_atoms.begin(); it != sched_atoms.end(); ++it)
    if (it->second == id) {
      sched_atoms.erase(it);
      return;
    }
}

Lit DisjunctiveProp::sched_lit(Engine& e, int64_t i, int64_t j) {
  bool flip = i > j;
  if (flip) std::swap(i, j);
  AtomId id = e.intern(AtomDesc::sched(cid, i, j));
  if (sched_atoms.emplace(std::make_pair(i, j), id).second) e.subscribe_atom_owner(id, cid);
  return Lit::make(id, flip);
}

bool DisjunctiveProp::propagate(Engine& e) {
  const size_t n = ntasks();
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      Var si = c->starts[i], sj = c->starts[j];
      int64_t di = c->durations[i], dj = c->durations[j];
      if (extended) {
        AtomId id = e.find(AtomDesc::sched(cid, static_cast<int64_t>(i), static_cast<int64_t>(j)));
        TruthVal tv = id == kNoAtom ? TruthVal::Unknown : e.value(id);
        if (tv == TruthVal::Unknown) {
          // Detection: one order impossible fixes the opposite. The atom is
          // interned only here, when it first carries an inference.
          if (e.lb(si) + di > e.ub(sj)) {
            Lit before_ij = sched_lit(e, i, j);
            if (!e.enqueue(~before_ij, Reason::deferred(cid, kDetect, j, i, e.stamp())))
              return false;
            tv = TruthVal::False;
          } else if (e.lb(sj) + dj > e.ub(si)) {
            Lit before_ij = sched_lit(e, i, j);
            if (!e.enqueue(before_ij, Reason::deferred(cid, kDetect, i, j, e.stamp())))
              return false;
            tv = TruthVal::True;
          }
        }
        if (tv == TruthVal::True) {
          // s_i + d_i <= s_j
          LitC l1 = e.lit_geq(sj, e.lb(si) + di);
          if (l1.is_lit() && e.truth(l1.lit) != TruthVal::True)
            if (!e.enqueue(l1.lit, Reason::deferred(cid, kChanLower, i, j, e.stamp()))) return false;
          LitC l2 = e.lit_leq(si, e.ub(sj) - di);
          if (l2.is_lit() && e.truth(l2.lit) != TruthVal::True)
            if (!e.enqueue(l2.lit, Reason::deferred(cid, kChanUpper, i, j, e.stamp()))) return false;
        } else if (tv == TruthVal::False) {
          // s_j + d_j <= s_i
          LitC l1 = e.lit_geq(si, e.lb(sj) + dj);
          if (l1.is_lit() && e.truth(l1.lit) != TruthVal::True)
            if (!e.enqueue(l1.lit, Reason::deferred(cid, kChanLower, j, i, e.stamp()))) return false;
          LitC l2 = e.lit_leq(sj, e.ub(si) - dj);
          if (l2.is_lit() && e.truth(l2.lit) != TruthVal::True)
            if (!e.enqueue(l2.lit, Reason::deferred(cid, kChanUpper, j, i, e.stamp()))) return false;
        }
      } else {
        // Basic mode: detection and bound propagation in one step.
        if (e.lb(si) + di > e.ub(sj)) {
          // j must precede i.
          LitC l1 = e.lit_geq(si, e.lb(sj) + dj);
          if (l1.is_lit() && e.truth(l1.lit) != TruthVal::True)
            if (!e.enqueue(l1.lit, Reason::deferred(cid, kBasicLower, j, i, e.stamp()))) return false;
          LitC l2 = e.lit_leq(sj, e.ub(si) - dj);
          if (l2.is_lit() && e.truth(l2.lit) != TruthVal::True)
            if (!e.enqueue(l2.lit, Reason::deferred(cid, kBasicUpper, j, i, e.stamp()))) return false;
        }
        if (e.lb(sj) + dj > e.ub(si)) {
          LitC l1 = e.lit_geq(sj, e.lb(si) + di);
          if (l1.is_lit() && e.truth(l1.lit) != TruthVal::True)
            if (!e.enqueue(l1.lit, Reason::deferred(cid, kBasicLower, i, j, e.stamp()))) return false;
          LitC l2 = e.lit_leq(si, e.ub(sj) - di);
          if (l2.is_lit() && e.truth(l2.lit) != TruthVal::True)
            if (!e.enqueue(l2.lit, Reason::deferred(cid, kBasicUpper, i, j, e.stamp()))) return false;
        }
      }
    }
  }
  return true;
}

std::vector<Lit> DisjunctiveProp::explain(Engine& e, std::optional<Lit> head, const Reason& r) {
  Pos before = head_pos(e, head, r.stamp);
  std::vector<Lit> body;
  // Payload (a, b) names the established order: task a runs before task b.
  size_t a = static_cast<size_t>(r.a), b = static_cast<size_t>(r.b);
  Var sa = c->starts[a], sb = c->starts[b];
  int64_t da = c->durations[a], db = c->durations[b];

  auto detection_body = [&]() {
    // b cannot precede a: lb(s_b) + d_b > ub(s_a), lifted to the weakest lb.
    int64_t ua = e.ub_at(sa, r.stamp);
    int64_t wl = ua - db + 1;  // smallest lb(s_b) with lb + d_b > ub(s_a)
    e.lits_geq(sb, wl, r.stamp, before, body);
    e.lits_leq(sa, ua, r.stamp, before, body);
  };

  switch (r.tag) {
    case kDetect:
      detection_body();
      break;
    case kChanLower: {
      body.push_back(sched_lit(e, static_cast<int64_t>(a), static_cast<int64_t>(b)));
      if (!head) throw InternalError("sched channel cannot conflict");
      int64_t w = e.atom(head->atom()).desc.b;  // head: s_b >= w
      e.lits_geq(sa, w - da, r.stamp, before, body);
      break;
    }
    case kChanUpper: {
      body.push_back(sched_lit(e, static_cast<int64_t>(a), static_cast<int64_t>(b)));
      if (!head) throw InternalError("sched channel cannot conflict");
      int64_t u = e.atom(head->atom()).desc.b - 1;  // head: s_a <= u
      e.lits_leq(sb, u + da, r.stamp, before, body);
      break;
    }
    case kBasicLower: {
      detection_body();
      if (!head) throw InternalError("basic sched channel cannot conflict");
      int64_t w = e.atom(head->atom()).desc.b;  // head: s_b >= w
      e.lits_geq(sa, w - da, r.stamp, before, body);
      break;
    }
    case kBasicUpper: {
      detection_body();
      if (!head) throw InternalError("basic sched channel cannot conflict");
      int64_t u = e.atom(head->atom()).desc.b - 1;  // head: s_a <= u
      e.lits_leq(sb, u + da, r.stamp, before, body);
      break;
    }
    default:
      throw InternalError("unknown disjunctive payload");
  }
  std::vector<Lit> clause;
  for (Lit bl : body) clause.push_back(~bl);
  if (head) clause.push_back(*head);
  return clause;
}

}  // namespace xlit
