#include "xlit/propagators.hpp"

namespace xlit {

bool NeqProp::propagate(Engine& e) {
  if (e.fixed(x) && e.in_domain(y, e.lb(x))) {
    LitC l = e.lit_neq(y, e.lb(x));
    if (l.is_lit() && e.truth(l.lit) != TruthVal::True)
      if (!e.enqueue(l.lit, Reason::deferred(cid, 0, 0, 0, e.stamp()))) return false;
  }
  if (e.fixed(y) && e.in_domain(x, e.lb(y))) {
    LitC l = e.lit_neq(x, e.lb(y));
    if (l.is_lit() && e.truth(l.lit) != TruthVal::True)
      if (!e.enqueue(l.lit, Reason::deferred(cid, 1, 0, 0, e.stamp()))) return false;
  }
  return true;
}

std::vector<Lit> NeqProp::explain(Engine& e, std::optional<Lit> head, const Reason& r) {
  if (!head) throw InternalError("neq conflicts arise through enqueue only");
  Var src = r.tag == 0 ? x : y;
  int64_t v = e.atom(head->atom()).desc.b;
  Pos before = e.atom(head->atom()).pos.valid() ? e.atom(head->atom()).pos
                                                : e.pos_of_stamp_end(r.stamp + 1);
  std::vector<Lit> body;
  e.lits_eq_true(src, v, r.stamp, before, body);
  std::vector<Lit> clause;
  for (Lit b : body) clause.push_back(~b);
  clause.push_back(*head);
  return clause;
}

}  // namespace xlit
