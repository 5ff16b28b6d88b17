#include "xlit/model.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "xlit/rng.hpp"

namespace xlit {

using json = nlohmann::json;

ConstraintId Constraint::id() const {
  switch (kind) {
    case CKind::Linear: return linear.id;
    case CKind::LexLess: return lex.id;
    case CKind::Table: return table.id;
    case CKind::Disjunctive: return disj.id;
    case CKind::Implication: return imp.id;
    case CKind::AllDiff: return alldiff.id;
    case CKind::Neq: return neq.id;
  }
  return -1;
}

void Constraint::set_id(ConstraintId cid) {
  switch (kind) {
    case CKind::Linear: linear.id = cid; break;
    case CKind::LexLess: lex.id = cid; break;
    case CKind::Table: table.id = cid; break;
    case CKind::Disjunctive: disj.id = cid; break;
    case CKind::Implication: imp.id = cid; break;
    case CKind::AllDiff: alldiff.id = cid; break;
    case CKind::Neq: neq.id = cid; break;
  }
}

Var ModelInstance::var_by_name(const std::string& name) const {
  for (const auto& v : vars)
    if (v.name == name) return v.id;
  return kNoVar;
}

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ModelError(msg); }

std::pair<int, int> line_col(const std::string& text, size_t byte) {
  int line = 1, col = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

int64_t get_int(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key)) fail(ctx + ": missing key '" + key + "'");
  if (!j[key].is_number_integer()) fail(ctx + ": '" + key + "' must be an integer");
  return j[key].get<int64_t>();
}

std::string get_str(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key)) fail(ctx + ": missing key '" + key + "'");
  if (!j[key].is_string()) fail(ctx + ": '" + key + "' must be a string");
  return j[key].get<std::string>();
}

Var resolve_var(const ModelInstance& m, const json& j, const std::string& ctx) {
  if (!j.is_string()) fail(ctx + ": variable reference must be a name string");
  Var v = m.var_by_name(j.get<std::string>());
  if (v == kNoVar) fail(ctx + ": undeclared variable '" + j.get<std::string>() + "'");
  return v;
}

std::vector<Var> resolve_vars(const ModelInstance& m, const json& j, const std::string& ctx) {
  if (!j.is_array()) fail(ctx + ": expected an array of variable names");
  std::vector<Var> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(resolve_var(m, e, ctx));
  return out;
}

CmpOp parse_op(const std::string& s, const std::string& ctx) {
  if (s == "=" || s == "==") return CmpOp::Eq;
  if (s == "!=") return CmpOp::Ne;
  if (s == "<=") return CmpOp::Le;
  if (s == ">=") return CmpOp::Ge;
  fail(ctx + ": unknown op '" + s + "' (want =, !=, <=, >=)");
}

UnaryAtom parse_unary(const ModelInstance& m, const json& j, const std::string& ctx) {
  UnaryAtom a;
  a.var = resolve_var(m, j.contains("var") ? j["var"] : json(), ctx);
  a.op = parse_op(get_str(j, "op", ctx), ctx);
  a.val = get_int(j, "val", ctx);
  return a;
}

// Overflow guard from the model contract: sum |a_i| * max(|lb|,|ub|) < 2^62.
void check_linear_overflow(const ModelInstance& m, const std::vector<LinTerm>& terms,
                           int64_t bound, const std::string& ctx) {
  constexpr int64_t kLimit = int64_t{1} << 62;
  int64_t acc = 0;
  for (const auto& t : terms) {
    const VarDecl& v = m.var(t.var);
    int64_t mag = std::max(std::llabs(v.lb), std::llabs(v.ub));
    if (mag > 0 && t.coeff > (kLimit - acc) / mag)
      fail(ctx + ": coefficient magnitudes overflow the 2^62 budget");
    acc += t.coeff * mag;
  }
  if (std::llabs(bound) >= kLimit - acc) fail(ctx + ": bound overflows the 2^62 budget");
}

std::vector<LinTerm> parse_terms(const ModelInstance& m, const json& j, const std::string& ctx) {
  if (!j.contains("coeffs") || !j["coeffs"].is_array())
    fail(ctx + ": missing 'coeffs' array");
  if (!j.contains("vars") || !j["vars"].is_array()) fail(ctx + ": missing 'vars' array");
  if (j["coeffs"].size() != j["vars"].size())
    fail(ctx + ": arity mismatch between coeffs and vars");
  std::vector<LinTerm> terms;
  terms.reserve(j["coeffs"].size());
  for (size_t i = 0; i < j["coeffs"].size(); ++i) {
    if (!j["coeffs"][i].is_number_integer()) fail(ctx + ": coefficients must be integers");
    int64_t c = j["coeffs"][i].get<int64_t>();
    if (c < 0) fail(ctx + ": negative coefficient " + std::to_string(c));
    if (c == 0) fail(ctx + ": zero coefficient");
    terms.push_back({c, resolve_var(m, j["vars"][i], ctx)});
  }
  return terms;
}

}  // namespace

ModelInstance parse_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    fail("syntax error at line " + std::to_string(line) + ", column " + std::to_string(col) +
         ": " + e.what());
  }
  if (!doc.is_object()) fail("model document must be a JSON object");

  ModelInstance m;

  if (!doc.contains("vars") || !doc["vars"].is_array()) fail("missing top-level 'vars' array");
  std::set<std::string> seen_names;
  for (const auto& jv : doc["vars"]) {
    VarDecl v;
    v.id = static_cast<Var>(m.vars.size());
    v.name = get_str(jv, "name", "var " + std::to_string(v.id));
    v.lb = get_int(jv, "lb", "var " + v.name);
    v.ub = get_int(jv, "ub", "var " + v.name);
    if (v.lb > v.ub) fail("var " + v.name + ": lb > ub");
    if (!seen_names.insert(v.name).second) fail("duplicate variable name '" + v.name + "'");
    m.vars.push_back(std::move(v));
  }

  if (doc.contains("constraints")) {
    if (!doc["constraints"].is_array()) fail("'constraints' must be an array");
    for (const auto& jc : doc["constraints"]) {
      std::string ctx = "constraint " + std::to_string(m.constraints.size());
      std::string type = get_str(jc, "type", ctx);
      ctx += " (" + type + ")";
      Constraint c;
      if (type == "linear_le" || type == "linear_ge" || type == "linear_eq") {
        c.kind = CKind::Linear;
        c.linear.terms = parse_terms(m, jc, ctx);
        c.linear.bound = get_int(jc, "bound", ctx);
        c.linear.rel = (type == "linear_ge") ? LinRel::GE : LinRel::LE;
        c.linear.is_eq = (type == "linear_eq");
        check_linear_overflow(m, c.linear.terms, c.linear.bound, ctx);
      } else if (type == "lex_less") {
        c.kind = CKind::LexLess;
        c.lex.xs = resolve_vars(m, jc.contains("xs") ? jc["xs"] : json(), ctx);
        c.lex.ys = resolve_vars(m, jc.contains("ys") ? jc["ys"] : json(), ctx);
        c.lex.strict = jc.value("strict", true);
        if (c.lex.xs.size() != c.lex.ys.size() || c.lex.xs.empty())
          fail(ctx + ": xs and ys must be equal-length, non-empty");
      } else if (type == "table") {
        c.kind = CKind::Table;
        c.table.vars = resolve_vars(m, jc.contains("vars") ? jc["vars"] : json(), ctx);
        if (c.table.vars.empty()) fail(ctx + ": needs at least one variable");
        if (!jc.contains("rows") || !jc["rows"].is_array()) fail(ctx + ": missing 'rows'");
        for (const auto& jr : jc["rows"]) {
          if (!jr.is_array() || jr.size() != c.table.vars.size())
            fail(ctx + ": row length must equal the number of variables");
          std::vector<int64_t> row;
          for (const auto& cell : jr) {
            if (!cell.is_number_integer()) fail(ctx + ": row values must be integers");
            row.push_back(cell.get<int64_t>());
          }
          c.table.rows.push_back(std::move(row));
        }
      } else if (type == "disjunctive") {
        c.kind = CKind::Disjunctive;
        c.disj.starts = resolve_vars(m, jc.contains("starts") ? jc["starts"] : json(), ctx);
        if (!jc.contains("durations") || !jc["durations"].is_array())
          fail(ctx + ": missing 'durations'");
        for (const auto& jd : jc["durations"]) {
          if (!jd.is_number_integer() || jd.get<int64_t>() <= 0)
            fail(ctx + ": durations must be positive integers");
          c.disj.durations.push_back(jd.get<int64_t>());
        }
        if (c.disj.starts.size() != c.disj.durations.size() || c.disj.starts.size() < 2)
          fail(ctx + ": needs >= 2 tasks with matching durations");
      } else if (type == "implication") {
        c.kind = CKind::Implication;
        if (!jc.contains("if") || !jc.contains("then")) fail(ctx + ": needs 'if' and 'then'");
        c.imp.antecedent = parse_unary(m, jc["if"], ctx);
        c.imp.consequent = parse_unary(m, jc["then"], ctx);
      } else if (type == "alldiff") {
        c.kind = CKind::AllDiff;
        c.alldiff.vars = resolve_vars(m, jc.contains("vars") ? jc["vars"] : json(), ctx);
        if (c.alldiff.vars.size() < 2) fail(ctx + ": needs >= 2 variables");
      } else {
        fail(ctx + ": unknown constraint type");
      }
      c.set_id(static_cast<ConstraintId>(m.constraints.size()));
      m.constraints.push_back(std::move(c));
    }
  }

  if (doc.contains("objective") && !doc["objective"].is_null()) {
    const json& jo = doc["objective"];
    Objective obj;
    std::string sense = get_str(jo, "sense", "objective");
    if (sense == "min")
      obj.sense = ObjSense::Min;
    else if (sense == "max")
      obj.sense = ObjSense::Max;
    else
      fail("objective: sense must be 'min' or 'max'");
    obj.terms = parse_terms(m, jo, "objective");
    check_linear_overflow(m, obj.terms, 0, "objective");
    m.objective = std::move(obj);
  }

  if (doc.contains("search") && !doc["search"].is_null()) {
    const json& js = doc["search"];
    if (js.contains("heuristic")) {
      std::string h = get_str(js, "heuristic", "search");
      if (h == "fixed")
        m.search.heuristic = Heuristic::Fixed;
      else if (h == "vsids")
        m.search.heuristic = Heuristic::Vsids;
      else
        fail("search: heuristic must be 'fixed' or 'vsids'");
    }
    if (js.contains("order")) m.search.order = resolve_vars(m, js["order"], "search order");
    if (js.contains("value_choice")) {
      std::string v = get_str(js, "value_choice", "search");
      if (v == "min")
        m.search.value_choice = ValueChoice::Min;
      else if (v == "max")
        m.search.value_choice = ValueChoice::Max;
      else
        fail("search: value_choice must be 'min' or 'max'");
    }
  }
  if (m.search.order.empty()) {
    m.search.order.resize(m.vars.size());
    std::iota(m.search.order.begin(), m.search.order.end(), 0);
  } else if (m.search.heuristic == Heuristic::Fixed) {
    std::vector<Var> sorted = m.search.order;
    std::sort(sorted.begin(), sorted.end());
    for (size_t i = 0; i < sorted.size(); ++i)
      if (i >= m.vars.size() || sorted[i] != static_cast<Var>(i))
        fail("search: order must be a permutation of all variables");
    if (sorted.size() != m.vars.size())
      fail("search: order must be a permutation of all variables");
  }
  return m;
}

namespace {

std::vector<LinTerm> merge_terms(const std::vector<LinTerm>& terms, const std::string& ctx) {
  std::vector<LinTerm> out;
  std::map<Var, size_t> at;
  for (const auto& t : terms) {
    auto it = at.find(t.var);
    if (it == at.end()) {
      at[t.var] = out.size();
      out.push_back(t);
    } else {
      out[it->second].coeff += t.coeff;
    }
  }
  for (auto it = out.begin(); it != out.end();) {
    if (it->coeff < 0) fail(ctx + ": merged coefficient is negative");
    it = (it->coeff == 0) ? out.erase(it) : it + 1;
  }
  return out;
}

std::string fresh_name(const ModelInstance& m, std::string base) {
  while (m.var_by_name(base) != kNoVar) base += "_";
  return base;
}

}  // namespace

ModelInstance normalize(const ModelInstance& input) {
  if (input.normalized) return input;
  ModelInstance m;
  m.vars = input.vars;
  m.search = input.search;
  m.normalized = true;
  m.psum_on_linears = input.psum_on_linears;
  m.psum_interval = input.psum_interval;

  auto push = [&m](Constraint c) {
    c.set_id(static_cast<ConstraintId>(m.constraints.size()));
    m.constraints.push_back(std::move(c));
  };

  for (const auto& c : input.constraints) {
    switch (c.kind) {
      case CKind::Linear: {
        LinearC lin = c.linear;
        lin.terms = merge_terms(lin.terms, "linear " + std::to_string(lin.id));
        if (lin.is_eq) {
          lin.is_eq = false;
          Constraint le;
          le.kind = CKind::Linear;
          le.linear = lin;
          le.linear.rel = LinRel::LE;
          push(le);
          Constraint ge;
          ge.kind = CKind::Linear;
          ge.linear = lin;
          ge.linear.rel = LinRel::GE;
          push(ge);
        } else {
          Constraint out;
          out.kind = CKind::Linear;
          out.linear = lin;
          push(out);
        }
        break;
      }
      case CKind::Table: {
        Constraint out = c;
        out.table.rows.clear();
        for (const auto& row : c.table.rows) {
          bool ok = true;
          for (size_t i = 0; i < row.size(); ++i) {
            const VarDecl& v = m.var(c.table.vars[i]);
            if (row[i] < v.lb || row[i] > v.ub) ok = false;
          }
          if (ok)
            out.table.rows.push_back(row);
          else
            m.warnings.push_back("table " + std::to_string(c.table.id) +
                                 ": dropped row outside initial domains");
        }
        push(out);
        break;
      }
      case CKind::AllDiff: {
        // Pairwise disequality decomposition; no GAC alldifferent.
        const auto& vs = c.alldiff.vars;
        for (size_t i = 0; i < vs.size(); ++i)
          for (size_t j = i + 1; j < vs.size(); ++j) {
            Constraint nc;
            nc.kind = CKind::Neq;
            nc.neq.x = vs[i];
            nc.neq.y = vs[j];
            push(nc);
          }
        break;
      }
      default:
        push(c);
        break;
    }
  }

  // Drop duplicate disequality pairs left by overlapping alldiffs.
  {
    std::set<std::pair<Var, Var>> seen;
    std::vector<Constraint> kept;
    for (auto& c : m.constraints) {
      if (c.kind == CKind::Neq) {
        auto key = std::minmax(c.neq.x, c.neq.y);
        if (!seen.insert(key).second) continue;
      }
      kept.push_back(std::move(c));
    }
    m.constraints = std::move(kept);
    for (size_t i = 0; i < m.constraints.size(); ++i)
      m.constraints[i].set_id(static_cast<ConstraintId>(i));
  }

  if (input.objective) {
    const Objective& obj = *input.objective;
    std::vector<LinTerm> terms = merge_terms(obj.terms, "objective");
    int64_t lo = 0, hi = 0;
    for (const auto& t : terms) {
      lo += t.coeff * m.var(t.var).lb;
      hi += t.coeff * m.var(t.var).ub;
    }
    VarDecl ov;
    ov.id = static_cast<Var>(m.vars.size());
    ov.name = fresh_name(m, "obj");
    ov.lb = lo;
    ov.ub = hi;
    m.vars.push_back(ov);
    m.obj_var = ov.id;
    m.objective = obj;
    m.objective->terms = terms;

    Constraint chan;
    chan.kind = CKind::Linear;
    chan.linear.terms = terms;
    chan.linear.rel = (obj.sense == ObjSense::Max) ? LinRel::GE : LinRel::LE;
    chan.linear.bound = 0;
    chan.linear.rhs_var = ov.id;
    chan.linear.psum_enabled = m.psum_on_linears;
    chan.linear.interval = m.psum_interval;
    chan.set_id(static_cast<ConstraintId>(m.constraints.size()));
    m.obj_channel = chan.linear.id;
    m.constraints.push_back(std::move(chan));

    m.search.order.push_back(ov.id);
    if (m.search.value_choice == ValueChoice::Default)
      m.search.value_choice = (obj.sense == ObjSense::Max) ? ValueChoice::Max : ValueChoice::Min;
  } else if (m.search.value_choice == ValueChoice::Default) {
    m.search.value_choice = ValueChoice::Min;
  }

  // Propagate psum settings from the input (apply_extensions runs pre-normalize).
  return m;
}

std::vector<int64_t> checkpoints(const LinearC& c) {
  std::vector<int64_t> out;
  int64_t n = static_cast<int64_t>(c.terms.size());
  if (c.interval <= 0) return out;
  for (int64_t k = c.interval; k < n; k += c.interval) out.push_back(k);
  return out;
}

ExtConfig parse_ext(const std::string& spec) {
  if (spec == "none" || spec.empty()) return ExtConfig::none();
  if (spec == "all") return ExtConfig::all();
  ExtConfig e;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "linear")
      e.linear = true;
    else if (item == "lex")
      e.lex = true;
    else if (item == "table")
      e.table = true;
    else if (item == "disj" || item == "disjunctive")
      e.disj = true;
    else
      fail("unknown extension family '" + item + "'");
  }
  return e;
}

void apply_extensions(ModelInstance& m, const ExtConfig& ext, int64_t psum_interval,
                      PsumOrder order, uint64_t seed) {
  if (m.normalized) throw InternalError("apply_extensions must run before normalize");
  if (psum_interval <= 0) fail("psum interval must be positive");
  SplitMix64 rng(seed ^ 0x5eedc0de5eedc0deULL);
  auto reorder = [&](std::vector<LinTerm>& ts) {
    if (order == PsumOrder::Coeff) {
      std::stable_sort(ts.begin(), ts.end(),
                       [](const LinTerm& a, const LinTerm& b) { return a.coeff > b.coeff; });
    } else if (order == PsumOrder::Random) {
      for (size_t i = ts.size(); i > 1; --i)
        std::swap(ts[i - 1], ts[rng.uniform(0, static_cast<int64_t>(i) - 1)]);
    }
  };
  m.psum_on_linears = ext.linear;
  m.psum_interval = psum_interval;
  for (auto& c : m.constraints) {
    if (c.kind != CKind::Linear) continue;
    c.linear.interval = psum_interval;
    if (!ext.linear) continue;
    c.linear.psum_enabled = true;
    reorder(c.linear.terms);
  }
  if (ext.linear && m.objective) reorder(m.objective->terms);
}

std::string to_json(const ModelInstance& m) {
  json doc;
  doc["vars"] = json::array();
  for (const auto& v : m.vars)
    doc["vars"].push_back({{"name", v.name}, {"lb", v.lb}, {"ub", v.ub}});
  doc["constraints"] = json::array();
  auto names = [&m](const std::vector<Var>& vs) {
    json a = json::array();
    for (Var v : vs) a.push_back(m.var(v).name);
    return a;
  };
  for (const auto& c : m.constraints) {
    json jc;
    switch (c.kind) {
      case CKind::Linear: {
        jc["type"] = c.linear.is_eq ? "linear_eq"
                                    : (c.linear.rel == LinRel::LE ? "linear_le" : "linear_ge");
        json coeffs = json::array(), vars = json::array();
        for (const auto& t : c.linear.terms) {
          coeffs.push_back(t.coeff);
          vars.push_back(m.var(t.var).name);
        }
        jc["coeffs"] = coeffs;
        jc["vars"] = vars;
        jc["bound"] = c.linear.bound;
        break;
      }
      case CKind::LexLess:
        jc["type"] = "lex_less";
        jc["xs"] = names(c.lex.xs);
        jc["ys"] = names(c.lex.ys);
        jc["strict"] = c.lex.strict;
        break;
      case CKind::Table:
        jc["type"] = "table";
        jc["vars"] = names(c.table.vars);
        jc["rows"] = c.table.rows;
        break;
      case CKind::Disjunctive:
        jc["type"] = "disjunctive";
        jc["starts"] = names(c.disj.starts);
        jc["durations"] = c.disj.durations;
        break;
      case CKind::Implication: {
        auto dump = [&m](const UnaryAtom& a) {
          const char* op = a.op == CmpOp::Eq   ? "="
                           : a.op == CmpOp::Ne ? "!="
                           : a.op == CmpOp::Le ? "<="
                                               : ">=";
          return json{{"var", m.var(a.var).name}, {"op", op}, {"val", a.val}};
        };
        jc["type"] = "implication";
        jc["if"] = dump(c.imp.antecedent);
        jc["then"] = dump(c.imp.consequent);
        break;
      }
      case CKind::AllDiff:
        jc["type"] = "alldiff";
        jc["vars"] = names(c.alldiff.vars);
        break;
      case CKind::Neq:
        jc["type"] = "alldiff";
        jc["vars"] = names({c.neq.x, c.neq.y});
        break;
    }
    doc["constraints"].push_back(jc);
  }
  if (m.objective) {
    json coeffs = json::array(), vars = json::array();
    for (const auto& t : m.objective->terms) {
      coeffs.push_back(t.coeff);
      vars.push_back(m.var(t.var).name);
    }
    doc["objective"] = {{"sense", m.objective->sense == ObjSense::Max ? "max" : "min"},
                        {"coeffs", coeffs},
                        {"vars", vars}};
  }
  json js;
  js["heuristic"] = m.search.heuristic == Heuristic::Vsids ? "vsids" : "fixed";
  js["order"] = names(m.search.order);
  if (m.search.value_choice != ValueChoice::Default)
    js["value_choice"] = m.search.value_choice == ValueChoice::Max ? "max" : "min";
  doc["search"] = js;
  return doc.dump(2) + "\n";
}

}  // namespace xlit
