#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "xlit/engine.hpp"
#include "xlit/model.hpp"

namespace xlit::verify {

// Loud refusal when an enumeration would exceed its guard.
struct GuardExceeded : std::runtime_error {
  explicit GuardExceeded(const std::string& m) : std::runtime_error(m) {}
};

constexpr uint64_t kModelGuard = uint64_t{1} << 20;
constexpr uint64_t kConstraintGuard = uint64_t{1} << 24;

struct SemLit {
  AtomDesc desc;
  bool neg = false;
};

struct BruteResult {
  bool sat = false;
  std::optional<int64_t> best_objective;
  std::optional<std::vector<int64_t>> best_assignment;
  uint64_t nodes = 0;
};

// Exhaustive depth-first enumeration with constraint checking only. Takes a
// parsed (pre-normalize) model; the objective is evaluated directly.
BruteResult brute_force(const ModelInstance& m, uint64_t guard = kModelGuard);

// True iff every assignment (within initial domains) satisfying the scope
// satisfies the clause. scope = nullopt checks against all constraints of
// the model; a constraint id restricts the check to that constraint.
// Extension atoms are expanded to their defining expressions.
bool check_implied(const ModelInstance& m, std::optional<ConstraintId> scope,
                   const std::vector<SemLit>& clause, uint64_t guard);

enum class Verdict : uint8_t {
  E2StrictlyMoreGeneral,
  E1StrictlyMoreGeneral,
  Equivalent,
  Incomparable,
};

const char* verdict_str(Verdict v);

// Def-2 comparison of two explanations with identical heads: mutual
// implication of the body conjunctions over the initial domains.
Verdict more_general(const ModelInstance& m, const SemLit& head1, const std::vector<SemLit>& body1,
                     const SemLit& head2, const std::vector<SemLit>& body2,
                     uint64_t guard = kConstraintGuard);

// True iff the conjunction of a implies the conjunction of b over the
// initial domains.
bool body_implies(const ModelInstance& m, const std::vector<SemLit>& a,
                  const std::vector<SemLit>& b, uint64_t guard);

// Replay of a solve trace (trail + explanation + nogood lines) against the
// model; used by the standalone `verify` command.
struct TraceReport {
  uint64_t explanations_checked = 0, explanations_passed = 0;
  uint64_t nogoods_checked = 0, nogoods_passed = 0;
  uint64_t refused = 0;
  std::vector<std::string> failures;
};
TraceReport check_trace(const ModelInstance& parsed, const ModelInstance& normalized,
                        const std::string& trace_text, uint64_t guard = kModelGuard);

}  // namespace xlit::verify
