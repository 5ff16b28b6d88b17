#include <cstdlib>
#include "xlit/solver.hpp"

#include <algorithm>
#include <cassert>

#include "xlit/propagators.hpp"
#include "xlit/verify.hpp"

namespace xlit {

const char* status_str(Status s) {
  switch (s) {
    case Status::Optimal: return "OPTIMAL";
    case Status::Sat: return "SAT";
    case Status::Unsat: return "UNSAT";
    case Status::Unknown: return "UNKNOWN";
  }
  return "?";
}

namespace {

// Luby restart sequence (1,1,2,1,1,2,4,...).
int64_t luby(int64_t x) {
  int64_t size = 1, seq = 0;
  while (size < x + 1) {
    ++seq;
    size = 2 * size + 1;
  }
  while (size - 1 != x) {
    size = (size - 1) >> 1;
    --seq;
    x = x % size;
  }
  return int64_t{1} << seq;
}

std::vector<verify::SemLit> to_sem(const Engine& e, const std::vector<Lit>& clause) {
  std::vector<verify::SemLit> out;
  out.reserve(clause.size());
  for (Lit l : clause) out.push_back(verify::SemLit{e.atom(l.atom()).desc, l.neg()});
  return out;
}

}  // namespace

Solver::Solver(const ModelInstance& parsed, SolverConfig cfg) : cfg_(std::move(cfg)) {
  ModelInstance pre = parsed;
  if (pre.normalized) throw InternalError("Solver expects a parsed model");
  n_orig_vars_ = pre.vars.size();
  apply_extensions(pre, cfg_.ext, cfg_.psum_interval, cfg_.psum_order, cfg_.seed);
  norm_ = normalize(pre);
  heuristic_ = cfg_.heuristic.value_or(norm_.search.heuristic);

  EngineOptions eopts;
  eopts.lift = cfg_.lift;
  eopts.trace = cfg_.trace;
  if (cfg_.verify_explanations || cfg_.trace) {
    eopts.on_explanation = [this](ConstraintId cid, const std::vector<Lit>& clause) {
      if (cfg_.trace)
        *cfg_.trace << "X\t" << cid << "\t" << engine_->clause_str(clause) << "\n";
      if (!cfg_.verify_explanations) return;
      ++verify_.explanations_checked;
      try {
        std::optional<ConstraintId> scope = cid;
        if (!verify::check_implied(norm_, scope, to_sem(*engine_, clause), cfg_.verify_guard)) {
          ++verify_.explanations_failed;
          if (verify_.failures.size() < 16)
            verify_.failures.push_back("explanation c" + std::to_string(cid) + ": " +
                                       engine_->clause_str(clause));
        }
      } catch (const verify::GuardExceeded&) {
        ++verify_.refusals;
      }
    };
  }
  engine_ = std::make_unique<Engine>(norm_, std::move(eopts));

  LearnerOptions lopts;
  lopts.trace = cfg_.trace;
  lopts.db_cap = cfg_.db_cap;
  if (cfg_.verify_nogoods) {
    lopts.on_nogood = [this](const std::vector<Lit>& ng) {
      ++verify_.nogoods_checked;
      try {
        if (!verify::check_implied(norm_, std::nullopt, to_sem(*engine_, ng),
                                   cfg_.verify_guard)) {
          ++verify_.nogoods_failed;
          if (verify_.failures.size() < 16)
            verify_.failures.push_back("nogood: " + engine_->clause_str(ng));
        }
      } catch (const verify::GuardExceeded&) {
        ++verify_.refusals;
      }
    };
  }
  learner_ = std::make_unique<Learner>(*engine_, std::move(lopts));

  root_conflict_ = !install_constraints(*engine_, norm_, cfg_.ext);
}

Solver::~Solver() = default;

bool Solver::scripted_lit(Lit& out) {
  while (script_next_ < cfg_.script.size()) {
    const ScriptedDecision& sd = cfg_.script[script_next_++];
    LitC lc;
    switch (sd.k) {
      case ScriptedDecision::K::Geq: lc = engine_->lit_geq(sd.var, sd.val); break;
      case ScriptedDecision::K::Leq: lc = engine_->lit_leq(sd.var, sd.val); break;
      case ScriptedDecision::K::Eq: lc = engine_->lit_eq(sd.var, sd.val); break;
      case ScriptedDecision::K::Neq: lc = engine_->lit_neq(sd.var, sd.val); break;
    }
    if (!lc.is_lit()) throw ModelError("scripted decision folds to a constant");
    if (engine_->truth(lc.lit) != TruthVal::Unknown) continue;  // already settled
    out = lc.lit;
    return true;
  }
  return false;
}

Lit Solver::decision_lit(Var x) {
  bool take_max = norm_.search.value_choice == ValueChoice::Max;
  int64_t v = take_max ? engine_->ub(x) : engine_->lb(x);
  LitC lc = engine_->lit_eq(x, v);
  if (!lc.is_lit()) throw InternalError("decision literal folded");
  return lc.lit;
}

std::optional<Lit> Solver::next_decision() {
  Lit scripted;
  if (scripted_lit(scripted)) return scripted;

  if (heuristic_ == Heuristic::Vsids) {
    AtomId best = kNoAtom;
    double best_act = -1.0;
    for (AtomId id = 0; id < static_cast<AtomId>(engine_->num_atoms()); ++id) {
      const AtomRec& a = engine_->atom(id);
      if (!a.alive || a.value != TruthVal::Unknown) continue;
      if (a.activity > best_act) {
        best_act = a.activity;
        best = id;
      }
    }
    if (best != kNoAtom) {
      const AtomRec& a = engine_->atom(best);
      return Lit::make(best, !a.phase);  // initial phase negative
    }
    // No undetermined atom: fall through to the structural order so every
    // variable still gets fixed.
  }
  for (Var x : norm_.search.order)
    if (!engine_->fixed(x)) return decision_lit(x);
  return std::nullopt;
}

void Solver::on_solution() {
  std::vector<int64_t> assignment(n_orig_vars_);
  for (size_t i = 0; i < n_orig_vars_; ++i) {
    if (!engine_->fixed(static_cast<Var>(i))) throw InternalError("solution with unfixed var");
    assignment[i] = engine_->lb(static_cast<Var>(i));
  }
  incumbent_assignment_ = std::move(assignment);
  if (norm_.obj_var != kNoVar) incumbent_ = engine_->lb(norm_.obj_var);
}

SolveResult Solver::solve() {
  auto t0 = std::chrono::steady_clock::now();
  SolveResult out;
  auto finish = [&](Status st) {
    out.status = st;
    out.stats.propagations = engine_->stats().propagations;
    out.stats.psum_created = engine_->stats().psum_created;
    out.stats.psum_collected = engine_->stats().psum_collected;
    out.stats.nogoods_learned = learner_->stats().nogoods_learned;
    out.stats.nogoods_deleted = learner_->stats().nogoods_deleted;
    out.stats.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
    if (incumbent_assignment_ &&
        (st == Status::Optimal || st == Status::Sat || st == Status::Unknown)) {
      out.best_assignment = incumbent_assignment_;
      out.best_objective = incumbent_;
    }
    out.verify = verify_;
    return out;
  };

  if (root_conflict_) return finish(Status::Unsat);

  int64_t restart_count = 0;
  uint64_t conflicts_at_restart = 0;

  const bool paranoid = std::getenv("XLIT_PARANOID") != nullptr;
  for (;;) {
    std::optional<Conflict> conf = engine_->propagate();
    if (paranoid && !conf) engine_->debug_check();
    if (conf) {
      ++out.stats.fails;
      if (conf->level == 0)
        return finish(incumbent_assignment_ ? Status::Optimal : Status::Unsat);
      AnalyzeResult ar = learner_->analyze(*conf);
      if (ar.unsat) return finish(incumbent_assignment_ ? Status::Optimal : Status::Unsat);
      learner_->learn(ar);  // backjumps, which also clears the episode state
      learner_->maybe_reduce_db();
      if ((out.stats.fails & 63) == 0) {
        if (cfg_.max_conflicts && out.stats.fails >= *cfg_.max_conflicts)
          return finish(Status::Unknown);
        if (cfg_.timeout_ms) {
          int64_t ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
          if (ms >= *cfg_.timeout_ms) return finish(Status::Unknown);
        }
      }
      continue;
    }

    if (heuristic_ == Heuristic::Vsids && engine_->level() > 0) {
      uint64_t since = out.stats.fails - conflicts_at_restart;
      if (static_cast<int64_t>(since) >= cfg_.luby_base * luby(restart_count)) {
        ++restart_count;
        ++out.stats.restarts;
        conflicts_at_restart = out.stats.fails;
        engine_->backjump(0);
        continue;
      }
    }

    std::optional<Lit> d = next_decision();
    if (!d) {
      on_solution();
      if (norm_.obj_var == kNoVar) return finish(Status::Sat);
      // Branch and bound: cut past the incumbent and restart from the root.
      bool maximize = norm_.objective->sense == ObjSense::Max;
      LitC cut = maximize ? engine_->lit_geq(norm_.obj_var, *incumbent_ + 1)
                          : engine_->lit_leq(norm_.obj_var, *incumbent_ - 1);
      if (engine_->level() > 0) engine_->backjump(0);
      if (cut.is_false()) return finish(Status::Optimal);
      if (cut.is_true()) throw InternalError("objective cut is trivially true");
      if (engine_->truth(cut.lit) == TruthVal::False) return finish(Status::Optimal);
      if (!engine_->post_root_clause({cut.lit})) {
        engine_->clear_conflict();
        return finish(Status::Optimal);
      }
      continue;
    }
    ++out.stats.decisions;
    engine_->decide(*d);
  }
}

}  // namespace xlit
