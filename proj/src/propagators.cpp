#include "xlit/propagators.hpp"

namespace xlit {

namespace {

// Placeholder for constraints realized as root clauses; keeps propagator
// slots aligned with constraint ids.
struct NullProp : Propagator {
  explicit NullProp(ConstraintId id) { cid = id; }
  bool propagate(Engine&) override { return true; }
  std::vector<Lit> explain(Engine&, std::optional<Lit>, const Reason&) override {
    throw InternalError("null propagator has no deferred reasons");
  }
};

LitC unary_lit(Engine& e, const UnaryAtom& a) {
  switch (a.op) {
    case CmpOp::Eq: return e.lit_eq(a.var, a.val);
    case CmpOp::Ne: return e.lit_neq(a.var, a.val);
    case CmpOp::Le: return e.lit_leq(a.var, a.val);
    case CmpOp::Ge: return e.lit_geq(a.var, a.val);
  }
  return LitC::no();
}

}  // namespace

bool post_implication(Engine& e, const ImplicationC& imp) {
  LitC a = unary_lit(e, imp.antecedent);
  LitC b = unary_lit(e, imp.consequent);
  LitC na = ~a;
  if (na.is_true() || b.is_true()) return true;
  std::vector<Lit> lits;
  if (na.is_lit()) lits.push_back(na.lit);
  if (b.is_lit()) lits.push_back(b.lit);
  if (lits.empty()) {
    e.raise_conflict({});
    return false;
  }
  return e.post_root_clause(std::move(lits));
}

bool install_constraints(Engine& e, const ModelInstance& m, const ExtConfig& ext) {
  bool ok = true;
  for (const auto& c : m.constraints) {
    switch (c.kind) {
      case CKind::Linear: {
        auto p = std::make_unique<LinearProp>(m, c.linear);
        std::vector<Var> scope;
        for (const auto& t : c.linear.terms) scope.push_back(t.var);
        if (c.linear.rhs_var != kNoVar) scope.push_back(c.linear.rhs_var);
        e.add_propagator(std::move(p), scope);
        break;
      }
      case CKind::LexLess: {
        auto p = std::make_unique<LexProp>(c.lex);
        p->extended = ext.lex;
        std::vector<Var> scope = c.lex.xs;
        scope.insert(scope.end(), c.lex.ys.begin(), c.lex.ys.end());
        e.add_propagator(std::move(p), scope);
        break;
      }
      case CKind::Table: {
        auto p = std::make_unique<TableProp>(c.table);
        p->extended = ext.table;
        e.add_propagator(std::move(p), c.table.vars);
        break;
      }
      case CKind::Disjunctive: {
        auto p = std::make_unique<DisjunctiveProp>(c.disj);
        p->extended = ext.disj;
        e.add_propagator(std::move(p), c.disj.starts);
        break;
      }
      case CKind::Neq: {
        auto p = std::make_unique<NeqProp>(c.neq.id, c.neq.x, c.neq.y);
        e.add_propagator(std::move(p), {c.neq.x, c.neq.y});
        break;
      }
      case CKind::Implication: {
        e.add_propagator(std::make_unique<NullProp>(c.imp.id), {});
        if (ok) ok = post_implication(e, c.imp);
        break;
      }
      case CKind::AllDiff:
        throw InternalError("alldiff must be decomposed by normalize");
    }
  }
  return ok;
}

}  // namespace xlit
