#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace xlit {

using Var = int32_t;
using AtomId = int32_t;
using ClauseId = int32_t;
using ConstraintId = int32_t;

constexpr Var kNoVar = -1;
constexpr AtomId kNoAtom = -1;
constexpr ClauseId kNoClause = -1;

// Truth value of an atom or literal.
enum class TruthVal : uint8_t { Unknown, True, False };

inline TruthVal negate(TruthVal v) {
  if (v == TruthVal::True) return TruthVal::False;
  if (v == TruthVal::False) return TruthVal::True;
  return TruthVal::Unknown;
}

// Signed atom. Encoded as 2*atom + sign so it can index watch lists.
struct Lit {
  int32_t code = -1;

  Lit() = default;
  static Lit make(AtomId a, bool neg) { return Lit{a * 2 + (neg ? 1 : 0)}; }

  AtomId atom() const { return code >> 1; }
  bool neg() const { return code & 1; }
  Lit operator~() const { return Lit{code ^ 1}; }
  bool operator==(const Lit& o) const { return code == o.code; }
  bool operator!=(const Lit& o) const { return code != o.code; }
  bool operator<(const Lit& o) const { return code < o.code; }

private:
  explicit Lit(int32_t c) : code(c) {}
};

constexpr int64_t kInt64Max = std::numeric_limits<int64_t>::max();
constexpr int64_t kInt64Min = std::numeric_limits<int64_t>::min();

// User-facing failure (bad model file, bad arguments).
struct ModelError : std::runtime_error {
  explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

// Internal invariant breakage.
struct InternalError : std::logic_error {
  explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace xlit
