#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "xlit/model.hpp"
#include "xlit/types.hpp"

namespace xlit {

enum class AtomKind : uint8_t { BoundGeq, Eq, PsumGeq, CmpGeq, CmpGt, Sched, Tuple };

inline bool is_extension(AtomKind k) {
  return k != AtomKind::BoundGeq && k != AtomKind::Eq;
}

// Interned semantic proposition. Field use per kind:
//   BoundGeq: a=var, b=v              meaning  a >= b
//   Eq:       a=var, b=v              meaning  a == b
//   PsumGeq:  a=linear cid, b=prefix len, c=v   meaning  sum of first b terms >= c
//   CmpGeq:   a=x, b=y                meaning  x >= y
//   CmpGt:    a=x, b=y                meaning  x > y
//   Sched:    a=disj cid, b=i, c=j (i<j)  meaning  task i runs before task j
//   Tuple:    a=table cid, b=row index    meaning  that row is the taken tuple
struct AtomDesc {
  AtomKind kind = AtomKind::BoundGeq;
  int64_t a = 0, b = 0, c = 0;

  bool operator<(const AtomDesc& o) const {
    if (kind != o.kind) return kind < o.kind;
    if (a != o.a) return a < o.a;
    if (b != o.b) return b < o.b;
    return c < o.c;
  }
  bool operator==(const AtomDesc& o) const {
    return kind == o.kind && a == o.a && b == o.b && c == o.c;
  }

  static AtomDesc bound_geq(Var x, int64_t v) { return {AtomKind::BoundGeq, x, v, 0}; }
  static AtomDesc eq(Var x, int64_t v) { return {AtomKind::Eq, x, v, 0}; }
  static AtomDesc psum_geq(ConstraintId cid, int64_t k, int64_t v) {
    return {AtomKind::PsumGeq, cid, k, v};
  }
  static AtomDesc cmp_geq(Var x, Var y) { return {AtomKind::CmpGeq, x, y, 0}; }
  static AtomDesc cmp_gt(Var x, Var y) { return {AtomKind::CmpGt, x, y, 0}; }
  static AtomDesc sched(ConstraintId cid, int64_t i, int64_t j) {
    return {AtomKind::Sched, cid, i, j};
  }
  static AtomDesc tuple(ConstraintId cid, int64_t row) { return {AtomKind::Tuple, cid, row, 0}; }
};

// Assignment position. Real trail entries sit at integer positions 1, 2, ...;
// lazily created atoms are slotted between their antecedents and consequent
// at fractional positions. seq breaks ties between independent insertions.
struct Pos {
  double p = -1.0;
  uint64_t seq = 0;

  bool valid() const { return p >= 0.0; }
  bool operator<(const Pos& o) const { return p != o.p ? p < o.p : seq < o.seq; }
  bool operator>(const Pos& o) const { return o < *this; }
};

struct Reason {
  enum class Kind : uint8_t { None, Decision, Clause, Deferred };
  Kind kind = Kind::None;
  ClauseId clause = kNoClause;
  ConstraintId cid = -1;  // -1 with Deferred means the engine's domain channel
  int32_t tag = 0;
  int64_t a = 0, b = 0;
  int64_t stamp = 0;  // trail length when the inference was made

  static Reason decision() { return {Kind::Decision}; }
  static Reason from_clause(ClauseId id) {
    Reason r{Kind::Clause};
    r.clause = id;
    return r;
  }
  static Reason deferred(ConstraintId cid, int32_t tag, int64_t a, int64_t b, int64_t stamp) {
    Reason r{Kind::Deferred};
    r.cid = cid;
    r.tag = tag;
    r.a = a;
    r.b = b;
    r.stamp = stamp;
    return r;
  }
  static Reason channel(int64_t stamp) { return deferred(-1, 0, 0, 0, stamp); }
};

struct AtomRec {
  AtomDesc desc;
  TruthVal value = TruthVal::Unknown;
  Pos pos;
  int32_t level = -1;
  int32_t trail_index = -1;   // -1 while the assignment is virtual
  std::vector<Lit> vclause;   // cached reason clause for virtual assignments
  int32_t occ = 0;            // live nogoods containing the atom, either polarity
  double activity = 0.0;
  bool phase = false;
  bool alive = true;
};

struct Clause {
  std::vector<Lit> lits;
  double activity = 0.0;
  int32_t lbd = 0;
  bool learnt = false;
  bool deleted = false;
};

struct TrailEntry {
  Lit lit;
  Reason reason;
  int32_t level = 0;
  size_t undo_start = 0;
};

struct Conflict {
  std::vector<Lit> clause;  // materialized; every literal false at the conflict point
  int32_t level = 0;
};

// Literal-or-constant, for bound/eq literal construction with folding of
// values outside the initial domain.
struct LitC {
  enum class K : uint8_t { Lit, True, False } k = K::True;
  Lit lit;

  static LitC yes() { return {K::True, {}}; }
  static LitC no() { return {K::False, {}}; }
  static LitC of(Lit l) { return {K::Lit, l}; }
  bool is_lit() const { return k == K::Lit; }
  bool is_true() const { return k == K::True; }
  bool is_false() const { return k == K::False; }
  LitC operator~() const {
    if (k == K::Lit) return of(~lit);
    return k == K::True ? no() : yes();
  }
};

class Engine;

struct Propagator {
  ConstraintId cid = -1;
  bool extended = false;  // whether this constraint may use extension atoms

  virtual ~Propagator() = default;
  // Runs to a local fixpoint; enqueues inferences. Returns false if it raised
  // a conflict through the engine.
  virtual bool propagate(Engine& e) = 0;
  // Materializes a deferred reason into a full clause. head is the inferred
  // literal, or nullopt for a conflict payload. Must be deterministic given
  // the payload and the trail prefix identified by r.stamp.
  virtual std::vector<Lit> explain(Engine& e, std::optional<Lit> head, const Reason& r) = 0;
  virtual void atom_collected(AtomId /*id*/) {}
};

struct EngineStats {
  uint64_t propagations = 0;
  uint64_t psum_created = 0;
  uint64_t psum_collected = 0;
  uint64_t learnt_fires = 0;   // enqueues whose reason is a learnt clause
  uint64_t psum_fixes = 0;     // extension atoms fixed by their channelers
};

struct EngineOptions {
  bool lift = true;  // greedy explanation lifting (off reproduces naive bodies)
  std::ostream* trace = nullptr;
  // Called for every materialized explanation clause (cid = -1 for the
  // engine's domain channel). Used by the verifying solver modes.
  std::function<void(ConstraintId, const std::vector<Lit>&)> on_explanation;
};

class Engine {
public:
  Engine(const ModelInstance& m, EngineOptions opts = {});

  const ModelInstance& model() const { return *model_; }
  const EngineOptions& options() const { return opts_; }
  EngineStats& stats() { return stats_; }

  // ---- domains ----
  int64_t lb(Var x) const { return lb_[x]; }
  int64_t ub(Var x) const { return ub_[x]; }
  int64_t init_lb(Var x) const { return model_->var(x).lb; }
  int64_t init_ub(Var x) const { return model_->var(x).ub; }
  bool fixed(Var x) const { return lb_[x] == ub_[x]; }
  bool in_domain(Var x, int64_t v) const;
  int64_t lb_at(Var x, int64_t stamp) const;
  int64_t ub_at(Var x, int64_t stamp) const;
  bool in_domain_at(Var x, int64_t v, int64_t stamp) const;
  // Trail position at which value v left the domain of x (infinity if it is
  // still present at the stamp).
  double removal_pos(Var x, int64_t v, int64_t stamp) const;
  size_t num_vars() const { return lb_.size(); }

  // ---- atoms ----
  AtomId intern(const AtomDesc& d);  // validates variant invariants
  AtomId find(const AtomDesc& d) const;
  const AtomRec& atom(AtomId id) const { return atoms_[id]; }
  AtomRec& atom_mut(AtomId id) { return atoms_[id]; }
  size_t num_atoms() const { return atoms_.size(); }
  TruthVal value(AtomId id) const { return atoms_[id].value; }
  TruthVal truth(Lit l) const {
    TruthVal v = atoms_[l.atom()].value;
    return l.neg() ? negate(v) : v;
  }

  // Bound/eq literal makers with constant folding against initial domains.
  LitC lit_geq(Var x, int64_t v);   //  x >= v
  LitC lit_leq(Var x, int64_t v);   //  x <= v  ==  ~(x >= v+1)
  LitC lit_eq(Var x, int64_t v);    //  x == v
  LitC lit_neq(Var x, int64_t v);   //  x != v
  std::string lit_str(Lit l) const;
  std::string clause_str(const std::vector<Lit>& c) const;

  // ---- trail ----
  int32_t level() const { return static_cast<int32_t>(level_lims_.size()); }
  int64_t stamp() const { return static_cast<int64_t>(trail_.size()); }
  const std::vector<TrailEntry>& trail() const { return trail_; }
  bool decide(Lit l);  // throws InternalError if l is already assigned
  bool enqueue(Lit l, const Reason& r);
  std::optional<Conflict> propagate();
  void backjump(int32_t target);
  const std::optional<Conflict>& conflict() const { return conflict_; }
  void clear_conflict() { conflict_.reset(); }

  // ---- explanation machinery ----
  // head==nullopt: conflict payload. Logs via on_explanation.
  std::vector<Lit> materialize(std::optional<Lit> head, const Reason& r);
  // Single-step channel-lattice explanation body for a bound/eq-family
  // literal implied by the domain as of `stamp` (not directly trailed).
  std::vector<Lit> explain_domain(Lit l, int64_t stamp);
  // Reason clause for the atom behind a false/true literal in conflict
  // analysis: trail reason materialized, or the cached virtual clause.
  std::vector<Lit> reason_clause(AtomId id);

  // Lazily created atom whose truth is already implied as of `stamp`;
  // assigns it virtually, strictly after its antecedents and before
  // `before`. Returns the lit that is TRUE.
  Lit assign_virtual(AtomId id, TruthVal val, std::vector<Lit> reason_body, int64_t stamp,
                     Pos before);
  // Bound/eq atom creation + virtual assignment from the domain channel.
  Lit register_bound_true(Var x, int64_t v, int64_t stamp, Pos before);   // x >= v holds
  Lit register_ub_true(Var x, int64_t v, int64_t stamp, Pos before);      // x <= v holds
  Lit register_eq_atom(Var x, int64_t v, int64_t stamp, Pos before);      // whatever holds
  // Explanation-body builders: append literal(s), true as of `stamp` and
  // positioned strictly before `before`, expressing the fact. When the
  // interned atom carries a later assignment, the underlying trail literals
  // are inlined instead.
  void lits_geq(Var x, int64_t v, int64_t stamp, Pos before, std::vector<Lit>& body);
  void lits_leq(Var x, int64_t v, int64_t stamp, Pos before, std::vector<Lit>& body);
  void lits_eq_true(Var x, int64_t v, int64_t stamp, Pos before, std::vector<Lit>& body);
  void lits_neq_true(Var x, int64_t v, int64_t stamp, Pos before, std::vector<Lit>& body);
  // Rewinds virtual assignments above the level; those at or below it stay
  // (their antecedent cones survive the backjump).
  void clear_virtuals(int32_t max_level = -1);

  Pos pos_between(Pos lo, double hi);
  Pos pos_of_stamp_end(int64_t stamp) const { return Pos{static_cast<double>(stamp), 0}; }

  // ---- clauses ----
  ClauseId add_clause(std::vector<Lit> lits, bool learnt);
  bool post_root_clause(std::vector<Lit> lits);  // false on root conflict
  const Clause& clause(ClauseId id) const { return clauses_[id]; }
  Clause& clause_mut(ClauseId id) { return clauses_[id]; }
  size_t num_clauses() const { return clauses_.size(); }
  void delete_clause(ClauseId id);  // eager watch detach
  std::vector<ClauseId> learnt_clauses() const;

  // ---- propagators ----
  void add_propagator(std::unique_ptr<Propagator> p, const std::vector<Var>& scope);
  Propagator* propagator(ConstraintId cid) { return props_[cid].get(); }
  size_t num_propagators() const { return props_.size(); }
  void mark_dirty(ConstraintId cid) { dirty_.insert(cid); }
  // Owner lookup for extension atoms whose truth changed (to re-dirty them).
  void subscribe_atom_owner(AtomId id, ConstraintId cid) { atom_owner_[id] = cid; }

  // ---- garbage collection ----
  int64_t gc_unused();

  // ---- misc ----
  // Asserts per-atom domain faithfulness and bound sanity; for tests.
  void debug_check() const;
  uint64_t state_hash() const;  // domains + atom truths, for restoration checks
  std::string dump_atoms() const;
  void raise_conflict(std::vector<Lit> clause);
  void bump_atom(AtomId id, double inc);
  double& activity_inc() { return act_inc_; }

private:
  friend struct LinearProp;

  bool apply_domain(Lit l, int64_t tidx);
  bool set_lb(Var x, int64_t v, Lit cause);
  bool set_ub(Var x, int64_t v, Lit cause);
  bool apply_neq(Var x, int64_t v, Lit cause);
  bool faithfulness_scan(Var x, int64_t old_lb, int64_t old_ub, bool lb_side);
  bool channel_enqueue(Lit l);
  bool flush_fresh_atoms();
  bool scan_watches(Lit false_lit);
  void attach(ClauseId id);
  void smooth_channel_lits(std::vector<Lit>& clause);
  void trace_entry(const TrailEntry& e);
  std::vector<Lit> explain_domain_impl(Lit l, int64_t stamp, Pos before);
  void justify_geq(Var x, int64_t v, int64_t stamp, Pos before, std::vector<Lit>& body,
                   double pos_limit = 1e300);
  void justify_leq(Var x, int64_t v, int64_t stamp, Pos before, std::vector<Lit>& body,
                   double pos_limit = 1e300);

  struct BoundHist {
    double pos;
    int64_t val;
    Lit cause;
  };
  struct Undo {
    enum class K : uint8_t { LB, UB, HoleAdd, HoleDrop } k;
    Var var;
    int64_t val;
    double hole_pos;
  };

  const ModelInstance* model_;
  EngineOptions opts_;
  EngineStats stats_;

  std::vector<int64_t> lb_, ub_;
  std::vector<std::map<int64_t, double>> holes_;  // value -> removal position
  std::vector<std::vector<BoundHist>> lb_hist_, ub_hist_;
  std::vector<Undo> undo_;

  std::vector<AtomRec> atoms_;
  std::map<AtomDesc, AtomId> intern_;
  std::vector<AtomId> free_atoms_;
  std::vector<std::map<int64_t, AtomId>> bound_atoms_, eq_atoms_;  // per var: v -> atom

  std::vector<TrailEntry> trail_;
  std::vector<size_t> level_lims_;
  size_t qhead_ = 0;

  std::vector<Clause> clauses_;
  std::vector<ClauseId> free_clauses_;
  std::vector<std::vector<ClauseId>> watches_;  // indexed by lit code

  std::vector<std::unique_ptr<Propagator>> props_;
  std::vector<std::vector<ConstraintId>> var_subs_;
  std::map<AtomId, ConstraintId> atom_owner_;
  std::set<ConstraintId> dirty_;

  std::vector<AtomId> virtuals_;
  std::vector<AtomId> fresh_domain_atoms_;
  std::optional<Conflict> conflict_;
  uint64_t pos_seq_ = 0;
  double act_inc_ = 1.0;
};

// Lit/clause text form used by traces, dumps and the standalone verifier.
std::string lit_to_string(const ModelInstance& m, const AtomDesc& d, bool neg);
struct ParsedLit {
  AtomDesc desc;
  bool neg = false;
};
ParsedLit lit_from_string(const ModelInstance& m, const std::string& s);

}  // namespace xlit
