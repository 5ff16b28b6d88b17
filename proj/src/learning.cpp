#include "xlit/learning.hpp"

#include <algorithm>
#include <map>
#include <tuple>
#include <cassert>

namespace xlit {

Learner::Learner(Engine& e, LearnerOptions opts) : e_(e), opts_(std::move(opts)) {}

void Learner::bump_clause(ClauseId id) {
  Clause& c = e_.clause_mut(id);
  if (!c.learnt) return;
  c.activity += cla_inc_;
  if (c.activity > 1e100) {
    for (size_t i = 0; i < e_.num_clauses(); ++i) {
      Clause& o = e_.clause_mut(static_cast<ClauseId>(i));
      if (o.learnt && !o.deleted) o.activity *= 1e-100;
    }
    cla_inc_ *= 1e-100;
  }
}

AnalyzeResult Learner::analyze(const Conflict& conf) {
  AnalyzeResult out;
  int32_t clevel = conf.level;
  if (clevel == 0) {
    out.unsat = true;
    return out;
  }

  // Working set: false literals of the evolving clause. Conflict-level
  // literals are resolved in decreasing assignment position (virtual
  // positions interleaved); lower-level literals accumulate in the tail.
  struct Entry {
    Pos pos;
    Lit lit;
    bool operator<(const Entry& o) const { return pos < o.pos; }  // max-heap
  };
  std::priority_queue<Entry> heap;
  std::set<int32_t> present;
  std::vector<Lit> tail;
  size_t top_count = 0;

  double inc = e_.activity_inc();
  auto add = [&](Lit l) {
    if (present.count(l.code)) return;
    present.insert(l.code);
    const AtomRec& a = e_.atom(l.atom());
    if (e_.truth(l) != TruthVal::False)
      throw InternalError("analysis literal is not false: " + e_.lit_str(l) +
                          (e_.truth(l) == TruthVal::True ? " (true)" : " (unknown)"));
    e_.bump_atom(l.atom(), inc);
    if (a.level >= clevel) {
      heap.push(Entry{a.pos, l});
      ++top_count;
    } else {
      tail.push_back(l);
    }
  };

  std::string trace_line;
  if (opts_.trace) trace_line = "NG " + std::to_string(ng_counter_) + " : " +
                                e_.clause_str(conf.clause);

  for (Lit l : conf.clause) add(l);
  Lit asserting{};
  for (;;) {
    if (top_count == 0) throw InternalError("conflict clause has no literal at its level");
    Entry top = heap.top();
    heap.pop();
    if (!present.count(top.lit.code)) continue;  // superseded entry
    if (top_count == 1) {
      asserting = top.lit;
      break;
    }
    // Resolve on ~top.lit with its reason.
    present.erase(top.lit.code);
    --top_count;
    const AtomRec& a = e_.atom(top.lit.atom());
    if (a.trail_index >= 0) {
      const Reason& r = e_.trail()[a.trail_index].reason;
      if (r.kind == Reason::Kind::Decision)
        throw InternalError("resolving a decision literal");
      if (r.kind == Reason::Kind::Clause) bump_clause(r.clause);
    }
    std::vector<Lit> reason = e_.reason_clause(top.lit.atom());
    if (opts_.trace) trace_line += " [res " + e_.clause_str(reason) + "]";
    Lit self = ~top.lit;
    for (Lit l : reason) {
      if (l == self) continue;
      add(l);
    }
  }

  out.nogood.push_back(asserting);
  out.assert_level = 0;
  std::set<int32_t> levels;
  levels.insert(clevel);
  for (Lit l : tail) {
    out.nogood.push_back(l);
    int32_t lv = e_.atom(l.atom()).level;
    levels.insert(lv);
    out.assert_level = std::max(out.assert_level, lv);
  }
  out.lbd = static_cast<int32_t>(levels.size());

  if (opts_.trace) {
    trace_line += " => " + e_.clause_str(out.nogood) + " @" +
                  std::to_string(out.assert_level);
    *opts_.trace << trace_line << "\n";
  }
  ++ng_counter_;
  e_.activity_inc() = inc / opts_.decay;
  if (opts_.on_nogood) opts_.on_nogood(out.nogood);
  return out;
}

void Learner::occ_delta(const std::vector<Lit>& lits, int32_t d) {
  for (Lit l : lits) {
    AtomRec& a = e_.atom_mut(l.atom());
    if (!is_extension(a.desc.kind)) continue;
    a.occ += d;
    if (a.occ < 0) throw InternalError("negative occurrence count");
  }
}

void Learner::learn(const AnalyzeResult& r) {
  if (r.unsat) throw InternalError("learn called after UNSAT analysis");
  ++stats_.nogoods_learned;
  if (e_.level() > r.assert_level) e_.backjump(r.assert_level);

  if (r.nogood.size() == 1) {
    // Unit nogood: root fact with a stored reason clause.
    if (!e_.post_root_clause(r.nogood)) return;  // root conflict surfaces next propagate
    return;
  }
  std::vector<Lit> lits = r.nogood;
  // lits[1]: an unassigned literal if any (re-channeled extension atoms),
  // else the false literal assigned at the assertion level.
  size_t pick = 1;
  for (size_t i = 1; i < lits.size(); ++i) {
    if (e_.truth(lits[i]) == TruthVal::Unknown) {
      pick = i;
      break;
    }
    if (e_.atom(lits[i].atom()).level >= e_.atom(lits[pick].atom()).level) pick = i;
  }
  std::swap(lits[1], lits[pick]);
  ClauseId id = e_.add_clause(lits, /*learnt=*/true);
  Clause& c = e_.clause_mut(id);
  c.lbd = r.lbd;
  c.activity = cla_inc_;
  occ_delta(c.lits, +1);
  if (!e_.enqueue(r.nogood[0], Reason::from_clause(id)))
    throw InternalError("asserting literal enqueue failed");
}

bool Learner::maybe_reduce_db() {
  int64_t learnt = 0;
  for (ClauseId id : e_.learnt_clauses()) {
    (void)id;
    ++learnt;
  }
  if (learnt <= opts_.db_cap) return false;
  reduce_db();
  return true;
}

std::pair<int64_t, int64_t> Learner::reduce_db() {
  std::vector<ClauseId> learnt = e_.learnt_clauses();
  if (static_cast<int64_t>(learnt.size()) <= opts_.db_cap) return {0, 0};

  std::set<ClauseId> locked;
  for (const auto& entry : e_.trail())
    if (entry.reason.kind == Reason::Kind::Clause) locked.insert(entry.reason.clause);

  std::vector<ClauseId> cands;
  for (ClauseId id : learnt) {
    const Clause& c = e_.clause(id);
    if (locked.count(id) || c.lits.size() <= 2) continue;
    cands.push_back(id);
  }
  std::sort(cands.begin(), cands.end(), [this](ClauseId a, ClauseId b) {
    const Clause& ca = e_.clause(a);
    const Clause& cb = e_.clause(b);
    if (ca.lbd != cb.lbd) return ca.lbd < cb.lbd;
    if (ca.activity != cb.activity) return ca.activity > cb.activity;
    return a < b;
  });
  int64_t removed = 0;
  for (size_t i = cands.size() / 2; i < cands.size(); ++i) {
    Clause& c = e_.clause_mut(cands[i]);
    occ_delta(c.lits, -1);
    e_.delete_clause(cands[i]);
    ++removed;
  }
  stats_.nogoods_deleted += static_cast<uint64_t>(removed);
  opts_.db_cap = static_cast<int64_t>(static_cast<double>(opts_.db_cap) * opts_.cap_growth);
  int64_t collected = e_.gc_unused();
  stats_.atoms_collected += static_cast<uint64_t>(collected);
  return {removed, collected};
}

}  // namespace xlit
