#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xlit/types.hpp"

namespace xlit {

struct VarDecl {
  Var id = kNoVar;
  std::string name;
  int64_t lb = 0;
  int64_t ub = 0;
};

enum class LinRel : uint8_t { LE, GE };

struct LinTerm {
  int64_t coeff = 0;  // strictly positive after validation
  Var var = kNoVar;
};

// sum(coeff_i * var_i) REL bound [+ rhs_var]. The optional rhs_var is how the
// objective channel is represented after normalization: the effective bound
// is bound + value(rhs_var).
struct LinearC {
  ConstraintId id = -1;
  std::vector<LinTerm> terms;  // structural order, exactly as given
  LinRel rel = LinRel::LE;
  int64_t bound = 0;
  Var rhs_var = kNoVar;
  int64_t interval = 1;     // checkpoint spacing for partial-sum atoms
  bool psum_enabled = false;
  bool is_eq = false;       // parsed as linear_eq; split into LE/GE by normalize
};

struct LexLessC {
  ConstraintId id = -1;
  std::vector<Var> xs, ys;
  bool strict = true;
};

struct TableC {
  ConstraintId id = -1;
  std::vector<Var> vars;
  std::vector<std::vector<int64_t>> rows;
};

struct DisjunctiveC {
  ConstraintId id = -1;
  std::vector<Var> starts;
  std::vector<int64_t> durations;
};

enum class CmpOp : uint8_t { Eq, Ne, Le, Ge };

struct UnaryAtom {
  Var var = kNoVar;
  CmpOp op = CmpOp::Eq;
  int64_t val = 0;
};

struct ImplicationC {
  ConstraintId id = -1;
  UnaryAtom antecedent, consequent;
};

struct AllDiffC {
  ConstraintId id = -1;
  std::vector<Var> vars;
};

// Pairwise disequality; produced by alldiff decomposition during normalize.
struct NeqC {
  ConstraintId id = -1;
  Var x = kNoVar, y = kNoVar;
};

enum class CKind : uint8_t { Linear, LexLess, Table, Disjunctive, Implication, AllDiff, Neq };

struct Constraint {
  CKind kind;
  // Exactly one of these is populated, per kind. A variant would also do; the
  // flat struct keeps the accessors unsurprising.
  LinearC linear;
  LexLessC lex;
  TableC table;
  DisjunctiveC disj;
  ImplicationC imp;
  AllDiffC alldiff;
  NeqC neq;

  ConstraintId id() const;
  void set_id(ConstraintId cid);
};

enum class ObjSense : uint8_t { Min, Max };

struct Objective {
  ObjSense sense = ObjSense::Min;
  std::vector<LinTerm> terms;
};

enum class Heuristic : uint8_t { Fixed, Vsids };
enum class ValueChoice : uint8_t { Min, Max, Default };

struct SearchSpec {
  Heuristic heuristic = Heuristic::Fixed;
  std::vector<Var> order;  // permutation of var ids when heuristic == Fixed
  ValueChoice value_choice = ValueChoice::Default;
};

struct ModelInstance {
  std::vector<VarDecl> vars;
  std::vector<Constraint> constraints;
  std::optional<Objective> objective;
  SearchSpec search;

  bool normalized = false;
  // Set by normalize when there is an objective: the dedicated bound variable
  // and the id of its channel linear.
  Var obj_var = kNoVar;
  ConstraintId obj_channel = -1;
  // Extension settings recorded by apply_extensions so normalize can equip
  // the objective channel linear the same way as user linears.
  bool psum_on_linears = false;
  int64_t psum_interval = 1;
  std::vector<std::string> warnings;

  Var var_by_name(const std::string& name) const;  // kNoVar if absent
  const VarDecl& var(Var v) const { return vars.at(static_cast<size_t>(v)); }
};

// Parses and validates a model document (JSON). Throws ModelError with
// line/column context on any syntax or semantic problem.
ModelInstance parse_model(const std::string& text);

// Canonical form: merged duplicate linear terms, equalities split into a
// LE/GE pair, dead table rows dropped, alldiff decomposed to pairwise
// disequalities, objective rewritten as obj variable + channel linear.
// Idempotent.
ModelInstance normalize(const ModelInstance& m);

// Prefix lengths at which partial-sum atoms may exist: multiples of the
// interval strictly between 0 and |terms|.
std::vector<int64_t> checkpoints(const LinearC& c);

enum class PsumOrder : uint8_t { Struct, Random, Coeff };

// Which constraint families get extension atoms.
struct ExtConfig {
  bool linear = false;
  bool lex = false;
  bool table = false;
  bool disj = false;

  static ExtConfig none() { return {}; }
  static ExtConfig all() { return {true, true, true, true}; }
};

ExtConfig parse_ext(const std::string& spec);  // "none" | "all" | "linear,lex,..."

// Applies a run configuration to a parsed (pre-normalize) model: flags
// psum-enabled linears, sets their checkpoint interval and reorders their
// terms per `order` (random uses `seed`; struct leaves the file order alone).
void apply_extensions(ModelInstance& m, const ExtConfig& ext, int64_t psum_interval,
                      PsumOrder order, uint64_t seed);

std::string to_json(const ModelInstance& m);  // model file round-trip (parsed form)

}  // namespace xlit
