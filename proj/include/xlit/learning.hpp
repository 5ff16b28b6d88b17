#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <vector>

#include "xlit/engine.hpp"

namespace xlit {

struct AnalyzeResult {
  bool unsat = false;
  std::vector<Lit> nogood;  // asserting literal first
  int32_t assert_level = 0;
  int32_t lbd = 0;
};

struct LearnStats {
  uint64_t nogoods_learned = 0;
  uint64_t nogoods_deleted = 0;
  uint64_t atoms_collected = 0;
};

struct LearnerOptions {
  int64_t db_cap = 2000;        // learned-clause cap; grows geometrically
  double cap_growth = 1.5;
  double decay = 0.999;         // activity bump grows by 1/decay per conflict
  std::ostream* trace = nullptr;
  std::function<void(const std::vector<Lit>&)> on_nogood;  // verification hook
};

class Learner {
public:
  Learner(Engine& e, LearnerOptions opts = {});

  // 1UIP derivation over the implication graph; materializes deferred
  // explanations and lazily created atoms on demand.
  AnalyzeResult analyze(const Conflict& conf);
  // Backjump to the assertion level, attach the nogood, enqueue the
  // asserting literal, update extension-atom occurrence counts.
  void learn(const AnalyzeResult& r);
  // DB reduction + extension-atom GC when over cap.
  bool maybe_reduce_db();
  std::pair<int64_t, int64_t> reduce_db();  // (nogoods removed, atoms collected)

  const LearnStats& stats() const { return stats_; }
  int64_t db_cap() const { return opts_.db_cap; }

private:
  void bump_clause(ClauseId id);
  void occ_delta(const std::vector<Lit>& lits, int32_t d);

  Engine& e_;
  LearnerOptions opts_;
  LearnStats stats_;
  double cla_inc_ = 1.0;
  uint64_t ng_counter_ = 0;
};

}  // namespace xlit
