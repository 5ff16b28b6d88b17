#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "xlit/engine.hpp"
#include "xlit/learning.hpp"
#include "xlit/model.hpp"

namespace xlit {

enum class Status : uint8_t { Optimal, Sat, Unsat, Unknown };

const char* status_str(Status s);

struct SolveStats {
  uint64_t fails = 0;
  uint64_t decisions = 0;
  uint64_t propagations = 0;
  uint64_t restarts = 0;
  uint64_t psum_created = 0;
  uint64_t psum_collected = 0;
  uint64_t nogoods_learned = 0;
  uint64_t nogoods_deleted = 0;
  int64_t wall_ms = 0;
};

struct VerifyReport {
  uint64_t explanations_checked = 0;
  uint64_t explanations_failed = 0;
  uint64_t nogoods_checked = 0;
  uint64_t nogoods_failed = 0;
  uint64_t refusals = 0;
  std::vector<std::string> failures;  // first few, for diagnostics
};

struct SolveResult {
  Status status = Status::Unknown;
  std::optional<int64_t> best_objective;
  // Values of the original (pre-normalize) variables at the best solution.
  std::optional<std::vector<int64_t>> best_assignment;
  SolveStats stats;
  VerifyReport verify;
};

struct ScriptedDecision {
  enum class K : uint8_t { Geq, Leq, Eq, Neq } k = K::Eq;
  Var var = kNoVar;
  int64_t val = 0;
};

struct SolverConfig {
  ExtConfig ext;
  int64_t psum_interval = 1;
  PsumOrder psum_order = PsumOrder::Struct;
  std::optional<Heuristic> heuristic;  // overrides the model's search block
  uint64_t seed = 0;
  std::optional<uint64_t> max_conflicts;
  std::optional<int64_t> timeout_ms;
  bool lift = true;
  bool verify_explanations = false;
  bool verify_nogoods = false;
  uint64_t verify_guard = uint64_t{1} << 20;
  std::ostream* trace = nullptr;
  std::vector<ScriptedDecision> script;  // test hook: consumed before the heuristic
  int64_t luby_base = 100;
  int64_t db_cap = 2000;
};

class Solver {
public:
  // Takes a parsed (pre-normalize) model; extension flags, term ordering and
  // normalization are applied per the config.
  Solver(const ModelInstance& parsed, SolverConfig cfg = {});
  ~Solver();

  SolveResult solve();

  Engine& engine() { return *engine_; }
  Learner& learner() { return *learner_; }
  const ModelInstance& normalized() const { return norm_; }
  std::optional<Lit> next_decision();  // exposed for unit tests

private:
  void on_solution();
  bool scripted_lit(Lit& out);
  Lit decision_lit(Var x);

  ModelInstance norm_;
  SolverConfig cfg_;
  size_t n_orig_vars_ = 0;
  std::unique_ptr<Engine> engine_;
  std::unique_ptr<Learner> learner_;
  bool root_conflict_ = false;
  size_t script_next_ = 0;
  Heuristic heuristic_ = Heuristic::Fixed;
  std::optional<int64_t> incumbent_;
  std::optional<std::vector<int64_t>> incumbent_assignment_;
  VerifyReport verify_;
};

}  // namespace xlit
