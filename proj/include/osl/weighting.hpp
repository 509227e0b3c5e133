#pragma once

#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "osl/algebra.hpp"
#include "osl/state.hpp"

namespace osl {

// Finitely supported weighting function over tagged states. Invariants:
// no zero-weight entries, the total mass is defined in the algebra (which
// for Det bounds the support at one state).
struct Weighting {
  Algebra alg;
  std::map<TaggedState, Rat> w;

  explicit Weighting(Algebra a) : alg(a) {}

  bool empty() const { return w.empty(); }
  size_t support_size() const { return w.size(); }

  Rat at(const TaggedState &s) const {
    auto it = w.find(s);
    return it == w.end() ? Rat(0) : it->second;
  }

  friend bool operator==(const Weighting &a, const Weighting &b) {
    return a.alg == b.alg && a.w == b.w;
  }
};

inline std::optional<Weight> mass(const Weighting &m) {
  Weight total = wzero(m.alg);
  for (auto &[s, q] : m.w) {
    auto t = wadd(total, Weight{m.alg, q});
    if (!t) return std::nullopt;
    total = *t;
  }
  return total;
}

// Adds weight to a state in place; nullopt when the pointwise sum leaves
// the carrier. Zero results are erased to keep the support minimal.
inline bool add_weight(Weighting &m, const TaggedState &s, const Weight &a) {
  assert(m.alg == a.alg);
  if (a.is_zero()) return true;
  auto it = m.w.find(s);
  if (it == m.w.end()) {
    m.w.emplace(s, a.v);
    return true;
  }
  auto sum = wadd(Weight{m.alg, it->second}, a);
  if (!sum) return false;
  if (sum->is_zero())
    m.w.erase(it);
  else
    it->second = sum->v;
  return true;
}

inline Weighting unit_w(Algebra alg, const TaggedState &s) {
  Weighting m(alg);
  m.w.emplace(s, Rat(1));
  return m;
}

inline Weighting empty_w(Algebra alg) { return Weighting(alg); }

// Pointwise lifted addition; undefined when any point or the total mass is.
inline std::optional<Weighting> wsum(const Weighting &m1, const Weighting &m2) {
  assert(m1.alg == m2.alg);
  Weighting r = m1;
  for (auto &[s, q] : m2.w)
    if (!add_weight(r, s, Weight{m2.alg, q})) return std::nullopt;
  if (!mass(r)) return std::nullopt;
  return r;
}

inline Weighting scale(const Weight &a, const Weighting &m) {
  assert(a.alg == m.alg);
  Weighting r(m.alg);
  if (a.is_zero()) return r;
  for (auto &[s, q] : m.w) r.w.emplace(s, a.v * q);
  return r;
}

// Kleisli extension of the error monad: ok states flow through k, er and
// und states pass through unchanged. Total whenever the input and all
// continuations have defined mass.
inline Weighting bind_w(const Weighting &m,
                        const std::function<Weighting(const Store &, const Heap &)> &k) {
  Weighting r(m.alg);
  for (auto &[s, q] : m.w) {
    Weight ws{m.alg, q};
    if (s.tag == Tag::Ok) {
      Weighting out = k(s.store, s.heap);
      assert(out.alg == m.alg);
      for (auto &[t, p] : out.w) {
        bool ok = add_weight(r, t, wmul(ws, Weight{m.alg, p}));
        assert(ok && "bind totality violated");
        (void)ok;
      }
    } else {
      bool ok = add_weight(r, s, ws);
      assert(ok && "bind totality violated");
      (void)ok;
    }
  }
  return r;
}

// Splits m into its mass and a mass-one weighting with the same relative
// weights; scale(mass, normalized) reproduces m exactly.
inline std::pair<Weight, Weighting> normalize(const Weighting &m) {
  if (m.empty()) throw std::invalid_argument("normalize: empty weighting");
  auto total = mass(m);
  assert(total && "normalize: mass undefined");
  if (m.alg != Algebra::Prob) return {*total, m};
  Weighting r(m.alg);
  for (auto &[s, q] : m.w) r.w.emplace(s, q / total->v);
  return {*total, r};
}

inline std::string weighting_str(const Weighting &m) {
  std::ostringstream os;
  for (auto &[s, q] : m.w) os << state_str(s) << " => " << rat_str(q) << "\n";
  if (m.w.empty()) os << "(no outcomes)\n";
  return os.str();
}

} // namespace osl
