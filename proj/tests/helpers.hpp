#pragma once

#include <random>

#include "osl/weighting.hpp"

namespace osl::testing {

using Rng = std::mt19937_64;

inline long rnd(Rng &rng, long lo, long hi) {
  return lo + static_cast<long>(rng() % static_cast<unsigned long>(hi - lo + 1));
}

inline Rat random_weight_value(Rng &rng, Algebra alg) {
  if (alg != Algebra::Prob) return Rat(rnd(rng, 0, 1));
  long den = rnd(rng, 1, 20);
  long num = rnd(rng, 0, den);
  Rat q(num, den);
  q.canonicalize();
  return q;
}

inline Store random_store(Rng &rng) {
  Store s;
  static const char *vars[] = {"x", "y", "z"};
  for (const char *v : vars)
    if (rnd(rng, 0, 1)) s.set(v, Value(rnd(rng, 0, 3)));
  return s;
}

inline Heap random_heap(Rng &rng) {
  Heap h;
  for (long a = 1; a <= 3; ++a) {
    long c = rnd(rng, 0, 3);
    if (c == 1) h.m[Value(a)] = std::nullopt;
    if (c == 2) h.m[Value(a)] = Value(rnd(rng, 0, 2));
  }
  return h;
}

inline TaggedState random_state(Rng &rng) {
  long t = rnd(rng, 0, 5);
  if (t == 0) return TaggedState::und();
  if (t <= 2) return TaggedState::er(random_store(rng), random_heap(rng));
  return TaggedState::ok(random_store(rng), random_heap(rng));
}

// Random weighting with defined mass (support <= 4).
inline Weighting random_weighting(Rng &rng, Algebra alg) {
  Weighting m(alg);
  switch (alg) {
  case Algebra::Det:
    if (rnd(rng, 0, 3)) m.w.emplace(random_state(rng), Rat(1));
    return m;
  case Algebra::Nondet: {
    long n = rnd(rng, 0, 4);
    for (long i = 0; i < n; ++i) m.w.emplace(random_state(rng), Rat(1));
    return m;
  }
  case Algebra::Prob: {
    long den = rnd(rng, 2, 12);
    long budget = den;
    long n = rnd(rng, 0, 4);
    for (long i = 0; i < n && budget > 0; ++i) {
      long num = rnd(rng, 1, budget);
      budget -= num;
      Rat q(num, den);
      q.canonicalize();
      TaggedState s = random_state(rng);
      auto it = m.w.find(s);
      if (it == m.w.end())
        m.w.emplace(s, q);
      else
        it->second += q;
    }
    return m;
  }
  }
  return m;
}

} // namespace osl::testing
