#pragma once

#include <cassert>
#include <optional>
#include <string>

#include "osl/rational.hpp"

namespace osl {

// The three interpretations of choice. Det and Nondet share the carrier
// {0,1}; Prob carries exact rationals in [0,1].
enum class Algebra { Det, Nondet, Prob };

inline std::string algebra_name(Algebra a) {
  switch (a) {
  case Algebra::Det: return "det";
  case Algebra::Nondet: return "nondet";
  case Algebra::Prob: return "prob";
  }
  return "?";
}

inline std::optional<Algebra> parse_algebra(const std::string &s) {
  if (s == "det") return Algebra::Det;
  if (s == "nondet") return Algebra::Nondet;
  if (s == "prob") return Algebra::Prob;
  return std::nullopt;
}

struct Weight {
  Algebra alg;
  Rat v;

  bool is_zero() const { return v == 0; }
  bool is_one() const { return v == 1; }

  friend bool operator==(const Weight &a, const Weight &b) {
    return a.alg == b.alg && a.v == b.v;
  }
};

inline Weight wzero(Algebra a) { return {a, Rat(0)}; }
inline Weight wone(Algebra a) { return {a, Rat(1)}; }

// Whether q is a member of the algebra's carrier.
inline bool carrier_contains(Algebra a, const Rat &q) {
  switch (a) {
  case Algebra::Det:
  case Algebra::Nondet: return q == 0 || q == 1;
  case Algebra::Prob: return q >= 0 && q <= 1;
  }
  return false;
}

inline Weight make_weight(Algebra a, const Rat &q) {
  assert(carrier_contains(a, q));
  return {a, q};
}

// Partial semiring addition; nullopt is the distinguished "undefined" result.
inline std::optional<Weight> wadd(const Weight &a, const Weight &b) {
  assert(a.alg == b.alg);
  switch (a.alg) {
  case Algebra::Det:
    if (a.v == 1 && b.v == 1) return std::nullopt;
    return Weight{a.alg, a.v + b.v};
  case Algebra::Nondet:
    return Weight{a.alg, (a.v == 1 || b.v == 1) ? Rat(1) : Rat(0)};
  case Algebra::Prob: {
    Rat s = a.v + b.v;
    if (s > 1) return std::nullopt;
    return Weight{a.alg, s};
  }
  }
  return std::nullopt;
}

// Total multiplication; logical conjunction for Nondet, numeric otherwise
// (they coincide on {0,1}).
inline Weight wmul(const Weight &a, const Weight &b) {
  assert(a.alg == b.alg);
  return Weight{a.alg, a.v * b.v};
}

inline std::string weight_str(const Weight &w) { return rat_str(w.v); }

} // namespace osl
