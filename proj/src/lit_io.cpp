#include <sstream>

#include "xlit/engine.hpp"

namespace xlit {

std::string lit_to_string(const ModelInstance& m, const AtomDesc& d, bool neg) {
  std::ostringstream os;
  switch (d.kind) {
    case AtomKind::BoundGeq:
      os << m.var(static_cast<Var>(d.a)).name << (neg ? "<=" : ">=") << (neg ? d.b - 1 : d.b);
      break;
    case AtomKind::Eq:
      os << m.var(static_cast<Var>(d.a)).name << (neg ? "!=" : "==") << d.b;
      break;
    case AtomKind::PsumGeq:
      os << "psum(" << d.a << "," << d.b << ")" << (neg ? "<=" : ">=") << (neg ? d.c - 1 : d.c);
      break;
    case AtomKind::CmpGeq:
      os << (neg ? "~" : "") << "geq(" << m.var(static_cast<Var>(d.a)).name << ","
         << m.var(static_cast<Var>(d.b)).name << ")";
      break;
    case AtomKind::CmpGt:
      os << (neg ? "~" : "") << "gt(" << m.var(static_cast<Var>(d.a)).name << ","
         << m.var(static_cast<Var>(d.b)).name << ")";
      break;
    case AtomKind::Sched:
      os << (neg ? "~" : "") << "sched(" << d.a << "," << d.b << "->" << d.c << ")";
      break;
    case AtomKind::Tuple:
      os << (neg ? "~" : "") << "row(" << d.a << "," << d.b << ")";
      break;
  }
  return os.str();
}

namespace {

[[noreturn]] void bad(const std::string& s, const std::string& why) {
  throw ModelError("cannot parse literal '" + s + "': " + why);
}

std::vector<std::string> split_args(const std::string& inner) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : inner) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

int64_t to_int(const std::string& s, const std::string& whole) {
  try {
    size_t used = 0;
    int64_t v = std::stoll(s, &used);
    if (used != s.size()) bad(whole, "bad integer '" + s + "'");
    return v;
  } catch (const std::exception&) {
    bad(whole, "bad integer '" + s + "'");
  }
}

Var need_var(const ModelInstance& m, const std::string& name, const std::string& whole) {
  Var v = m.var_by_name(name);
  if (v == kNoVar) bad(whole, "unknown variable '" + name + "'");
  return v;
}

}  // namespace

ParsedLit lit_from_string(const ModelInstance& m, const std::string& raw) {
  std::string s = raw;
  bool tilde = false;
  if (!s.empty() && s[0] == '~') {
    tilde = true;
    s = s.substr(1);
  }
  ParsedLit out;
  auto call = [&](const std::string& fn) -> std::optional<std::vector<std::string>> {
    if (s.rfind(fn + "(", 0) != 0) return std::nullopt;
    size_t close = s.find(')');
    if (close == std::string::npos) bad(raw, "missing ')'");
    return split_args(s.substr(fn.size() + 1, close - fn.size() - 1));
  };

  if (auto args = call("psum")) {
    if (args->size() != 2) bad(raw, "psum needs (cid,prefix)");
    size_t close = s.find(')');
    std::string rest = s.substr(close + 1);
    int64_t cid = to_int((*args)[0], raw), k = to_int((*args)[1], raw);
    if (rest.rfind(">=", 0) == 0) {
      out.desc = AtomDesc::psum_geq(static_cast<ConstraintId>(cid), k, to_int(rest.substr(2), raw));
      out.neg = tilde;
    } else if (rest.rfind("<=", 0) == 0) {
      out.desc =
          AtomDesc::psum_geq(static_cast<ConstraintId>(cid), k, to_int(rest.substr(2), raw) + 1);
      out.neg = !tilde;
    } else {
      bad(raw, "psum needs >= or <=");
    }
    return out;
  }
  if (auto args = call("geq")) {
    if (args->size() != 2) bad(raw, "geq needs (x,y)");
    out.desc = AtomDesc::cmp_geq(need_var(m, (*args)[0], raw), need_var(m, (*args)[1], raw));
    out.neg = tilde;
    return out;
  }
  if (auto args = call("gt")) {
    if (args->size() != 2) bad(raw, "gt needs (x,y)");
    out.desc = AtomDesc::cmp_gt(need_var(m, (*args)[0], raw), need_var(m, (*args)[1], raw));
    out.neg = tilde;
    return out;
  }
  if (auto args = call("sched")) {
    if (args->size() != 2) bad(raw, "sched needs (cid,i->j)");
    size_t arrow = (*args)[1].find("->");
    if (arrow == std::string::npos) bad(raw, "sched needs i->j");
    int64_t cid = to_int((*args)[0], raw);
    int64_t i = to_int((*args)[1].substr(0, arrow), raw);
    int64_t j = to_int((*args)[1].substr(arrow + 2), raw);
    if (i < j) {
      out.desc = AtomDesc::sched(static_cast<ConstraintId>(cid), i, j);
      out.neg = tilde;
    } else {
      out.desc = AtomDesc::sched(static_cast<ConstraintId>(cid), j, i);
      out.neg = !tilde;
    }
    return out;
  }
  if (auto args = call("row")) {
    if (args->size() != 2) bad(raw, "row needs (cid,index)");
    out.desc = AtomDesc::tuple(static_cast<ConstraintId>(to_int((*args)[0], raw)),
                               to_int((*args)[1], raw));
    out.neg = tilde;
    return out;
  }

  for (const char* op : {">=", "<=", "==", "!="}) {
    size_t at = s.find(op);
    if (at == std::string::npos) continue;
    Var x = need_var(m, s.substr(0, at), raw);
    int64_t v = to_int(s.substr(at + 2), raw);
    std::string o = op;
    if (o == ">=") {
      out.desc = AtomDesc::bound_geq(x, v);
      out.neg = tilde;
    } else if (o == "<=") {
      out.desc = AtomDesc::bound_geq(x, v + 1);
      out.neg = !tilde;
    } else if (o == "==") {
      out.desc = AtomDesc::eq(x, v);
      out.neg = tilde;
    } else {
      out.desc = AtomDesc::eq(x, v);
      out.neg = !tilde;
    }
    return out;
  }
  bad(raw, "unrecognized form");
}

}  // namespace xlit
