#pragma once

#include <map>
#include <optional>
#include <vector>

#include "xlit/engine.hpp"
#include "xlit/model.hpp"

namespace xlit {

// All explanation arithmetic runs in a sign-normalized space: for LE linears
// the prefix sums are used as-is, for GE they are negated, so both relations
// share one floor (forward) / cap (backward) pass.
struct LinearProp : Propagator {
  enum Tag : int32_t { kTerm = 1, kRhs, kPsumFloor, kPsumCap, kConflict };

  const LinearC* c;
  std::vector<int64_t> boundaries;          // {0} U checkpoints U {n}
  std::vector<int64_t> pmin_init, pmax_init;  // prefix sums of initial bounds
  std::map<int64_t, std::map<int64_t, AtomId>> psum_atoms;  // checkpoint -> v -> atom

  LinearProp(const ModelInstance& m, const LinearC& lin);

  bool propagate(Engine& e) override;
  std::vector<Lit> explain(Engine& e, std::optional<Lit> head, const Reason& r) override;
  void atom_collected(AtomId id) override;

  // Spec-level registration entry point: interns the atom, computes its truth
  // at the current state, virtually assigns it when determined.
  struct RegResult {
    Lit lit;               // positive-polarity literal of the atom
    TruthVal truth;
    std::optional<Pos> pos;
  };
  RegResult register_psum(Engine& e, int64_t prefix_len, int64_t v);

private:
  struct View;
  struct Piece;
  View build_view(Engine& e, int64_t stamp) const;
  bool is_le() const { return c->rel == LinRel::LE; }
  int64_t nterms() const { return static_cast<int64_t>(c->terms.size()); }
  int64_t qmin_init(int64_t k) const { return is_le() ? pmin_init[k] : -pmax_init[k]; }
  int64_t qmax_init(int64_t k) const { return is_le() ? pmax_init[k] : -pmin_init[k]; }
  size_t boundary_index(int64_t k) const;
  std::vector<Lit> assemble(Engine& e, const View& view, int64_t stamp, Pos before,
                            std::optional<size_t> floor_b, std::optional<size_t> cap_b,
                            std::optional<int64_t> skip_term, __int128 need, bool place_floor_atom,
                            bool place_cap_atom, AtomId head_atom);
  std::vector<Lit> floor_clause(Engine& e, const View& view, int64_t stamp, Pos before, size_t b,
                                int64_t w, AtomId head_atom);
  std::vector<Lit> cap_clause(Engine& e, const View& view, int64_t stamp, Pos before, size_t b,
                              int64_t w, AtomId head_atom);
  std::optional<Lit> try_floor_atom(Engine& e, const View& view, int64_t stamp, Pos before,
                                    size_t b, int64_t w, AtomId head_atom);
  std::optional<Lit> try_cap_atom(Engine& e, const View& view, int64_t stamp, Pos before,
                                  size_t b, int64_t w, AtomId head_atom);
  bool is_checkpoint_boundary(size_t b) const {
    return b > 0 && b + 1 < boundaries.size();
  }
  Lit psum_pos_lit(Engine& e, int64_t k, int64_t v);
};

struct NeqProp : Propagator {
  Var x, y;
  NeqProp(ConstraintId id, Var x_, Var y_) : x(x_), y(y_) { cid = id; }
  bool propagate(Engine& e) override;
  std::vector<Lit> explain(Engine& e, std::optional<Lit> head, const Reason& r) override;
};

struct LexProp : Propagator {
  enum Tag : int32_t { kFrontier = 1, kStrictFrontier, kConflict, kCmpDetect, kCmpChan };

  const LexLessC* c;
  std::vector<AtomId> geq_atoms, gt_atoms;  // per position, kNoAtom when absent

  explicit LexProp(const LexLessC& lex);
  bool propagate(Engine& e) override;
  std::vector<Lit> explain(Engine& e, std::optional<Lit> head, const Reason& r) override;
  void atom_collected(AtomId id) override;

private:
  size_t n() const { return c->xs.size(); }
  // Frontier q at a stamp: the first index whose pair is not fixed-equal.
  size_t frontier_at(Engine& e, int64_t stamp) const;
  // True when position i is forced x_i >= y_i (lb x >= ub y) at stamp.
  bool forced_geq(Engine& e, size_t i, int64_t stamp) const;
  bool forced_gt(Engine& e, size_t i, int64_t stamp) const;
  void prefix_body(Engine& e, size_t upto, int64_t stamp, Pos before, std::vector<Lit>& body);
  void cmp_lits(Engine& e, bool strict, size_t i, int64_t stamp, Pos before,
                std::vector<Lit>& out);
  bool channel_cmp(Engine& e);
};

struct TableProp : Propagator {
  enum Tag : int32_t { kPrune = 1, kRowDead, kRowCells, kRowFixed, kConflict };

  const TableC* c;
  std::vector<AtomId> row_atoms;  // kNoAtom when not interned

  explicit TableProp(const TableC& tab);
  bool propagate(Engine& e) override;
  std::vector<Lit> explain(Engine& e, std::optional<Lit> head, const Reason& r) override;
  void atom_collected(AtomId id) override;

private:
  bool row_live_at(Engine& e, size_t t, int64_t stamp) const;
  // Earliest-falsified cell of a dead row at a stamp: (var index, value).
  std::pair<size_t, double> dead_cell(Engine& e, size_t t, int64_t stamp) const;
  void cell_lits(Engine& e, size_t t, int64_t stamp, Pos before, std::vector<Lit>& out);
  void row_lits(Engine& e, size_t t, int64_t stamp, Pos before,
                std::vector<Lit>& out);  // ~r_t, interning on demand
};

struct DisjunctiveProp : Propagator {
  enum Tag : int32_t { kDetect = 1, kChanLower, kChanUpper, kBasicLower, kBasicUpper };

  const DisjunctiveC* c;
  std::map<std::pair<int64_t, int64_t>, AtomId> sched_atoms;

  explicit DisjunctiveProp(const DisjunctiveC& d);
  bool propagate(Engine& e) override;
  std::vector<Lit> explain(Engine& e, std::optional<Lit> head, const Reason& r) override;
  void atom_collected(AtomId id) override;

private:
  size_t ntasks() const { return c->starts.size(); }
  Lit sched_lit(Engine& e, int64_t i, int64_t j);  // "i before j", interned on demand
};

// Implications become root clauses; returns false on immediate root conflict.
bool post_implication(Engine& e, const ImplicationC& imp);

// Builds propagators/clauses for every constraint of a normalized model.
// ext toggles which families may intern extension atoms.
bool install_constraints(Engine& e, const ModelInstance& m, const ExtConfig& ext);

}  // namespace xlit
