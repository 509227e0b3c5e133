#pragma once

#include <algorithm>
#include <functional>
#include <sstream>
#include <vector>

#include "osl/assertions.hpp"
#include "osl/interp.hpp"
#include "osl/prover.hpp"

namespace osl {

// Enumeration bounds for differential checking. The allocator family
// approximates the triple semantics' universal allocator quantifier.
struct Bounds {
  long max_addresses = 6;
  long max_values = 4;
  long witness_bound = 4;
  size_t max_support = 16;
  int fuel = 8;
  size_t max_models = 48;
  int ls_max_len = 2;
  int tru_junk_cells = 1;
  std::vector<std::string> allocator_family = {
      "min_free", "min_free_offset(10)", "seeded_random(1,32)", "seeded_random(7,32)",
      "lvar_keyed(XK)"};

  SatCfg sat_cfg() const { return SatCfg{witness_bound, max_support}; }
};

// ---- bounded model enumeration for symbolic heaps ----------------------

namespace detail {

struct HeapBuild {
  Heap h;
  bool ok = true;

  void put(const Value &addr, const Cell &c, long max_addr) {
    if (!ok) return;
    if (!is_address(addr) || addr > Value(max_addr)) {
      ok = false;
      return;
    }
    if (h.m.count(addr)) {
      ok = false;  // separation violated
      return;
    }
    h.m[addr] = c;
  }
};

} // namespace detail

// Exhaustive-within-bounds enumeration of concrete models (s, h) |= P.
// Valuations range over 0..max(max_addresses, max_values); list segments
// are materialized up to ls_max_len cells; tru contributes junk-cell
// extensions. Every candidate re-verifies through sat_heap.
inline std::vector<std::pair<Store, Heap>> enumerate_models(const SymHeap &p,
                                                            const Bounds &bounds) {
  std::vector<std::pair<Store, Heap>> out;
  std::set<std::string> dedup;

  std::vector<std::string> vars;
  {
    std::set<std::string> fv = fv_heap(p);
    vars.assign(fv.begin(), fv.end());
    for (auto &x : p.exists) vars.push_back(x);
  }
  long pool_max = std::max(bounds.max_addresses, bounds.max_values);

  SymHeap body = p;
  body.exists.clear();  // binder valuations enumerated alongside free vars

  // prune valuations as soon as a pure atom is fully assigned
  std::vector<std::vector<PureAtom>> pure_at(vars.size() + 1);
  for (auto &a : body.pure) {
    std::set<std::string> avs;
    collect_vars(a.l, avs);
    collect_vars(a.r, avs);
    size_t last = 0;
    for (size_t i = 0; i < vars.size(); ++i)
      if (avs.count(vars[i])) last = std::max(last, i + 1);
    pure_at[last].push_back(a);
  }

  std::function<void(size_t, Store)> enum_vals = [&](size_t i, Store s) {
    for (auto &a : pure_at[i]) {
      bool eq = detail::eval_heap_expr(a.l, s) == detail::eval_heap_expr(a.r, s);
      if (a.eq != eq) return;
    }
    if (i < vars.size()) {
      for (long v = 0; v <= pool_max; ++v) enum_vals(i + 1, s.with(vars[i], Value(v)));
      return;
    }
    // materialize spatial atoms
    std::function<void(size_t, detail::HeapBuild, bool)> build =
        [&](size_t ai, detail::HeapBuild hb, bool saw_tru) {
          if (!hb.ok) return;
          if (ai == body.spatial.size()) {
            auto emit = [&](const Heap &h) {
              Store fs;  // store restricted to free variables
              for (auto &x : fv_heap(p)) fs.set(x, s.get(x));
              if (!sat_heap(fs, h, p, bounds.sat_cfg())) return;
              std::string key = store_str(fs) + heap_str(h);
              if (dedup.insert(key).second) out.emplace_back(fs, h);
            };
            if (!saw_tru) {
              emit(hb.h);
              return;
            }
            // junk extensions for tru
            emit(hb.h);
            std::vector<Value> free_addrs;
            for (long a = bounds.max_addresses; a >= 1 && (long)free_addrs.size() <
                                                bounds.tru_junk_cells; --a)
              if (!hb.h.contains(Value(a))) free_addrs.push_back(Value(a));
            for (auto &addr : free_addrs) {
              Heap h2 = hb.h;
              h2.m[addr] = Value(0);
              emit(h2);
              Heap h3 = hb.h;
              h3.m[addr] = std::nullopt;
              emit(h3);
            }
            return;
          }
          const SpatialAtom &a = body.spatial[ai];
          switch (a.kind) {
          case SpatialAtom::Kind::Tru: build(ai + 1, hb, true); return;
          case SpatialAtom::Kind::PointsTo: {
            detail::HeapBuild hb2 = hb;
            hb2.put(detail::eval_heap_expr(a.a, s),
                    Cell(detail::eval_heap_expr(a.b, s)), bounds.max_addresses);
            build(ai + 1, hb2, saw_tru);
            return;
          }
          case SpatialAtom::Kind::Dangling: {
            detail::HeapBuild hb2 = hb;
            hb2.put(detail::eval_heap_expr(a.a, s), Cell(std::nullopt), bounds.max_addresses);
            build(ai + 1, hb2, saw_tru);
            return;
          }
          case SpatialAtom::Kind::Ls: {
            Value head = detail::eval_heap_expr(a.a, s);
            Value tail = detail::eval_heap_expr(a.b, s);
            if (head == tail) build(ai + 1, hb, saw_tru);  // empty segment
            // chains of length 1..ls_max_len
            std::function<void(Value, int, detail::HeapBuild)> chain =
                [&](Value cur, int len, detail::HeapBuild hbc) {
                  if (!hbc.ok || len > bounds.ls_max_len) return;
                  // close the segment with one final cell
                  {
                    detail::HeapBuild hb2 = hbc;
                    hb2.put(cur, Cell(tail), bounds.max_addresses);
                    if (hb2.ok) build(ai + 1, hb2, saw_tru);
                  }
                  // or step through a fresh intermediate address
                  for (long n = 1; n <= bounds.max_addresses; ++n) {
                    Value next(n);
                    if (next == tail) continue;
                    detail::HeapBuild hb2 = hbc;
                    hb2.put(cur, Cell(next), bounds.max_addresses);
                    if (hb2.ok) chain(next, len + 1, hb2);
                  }
                };
            chain(head, 1, hb);
            return;
          }
          }
        };
    build(0, detail::HeapBuild{}, false);
  };
  enum_vals(0, Store{});
  return out;
}

// ---- model generation for outcome assertions ----------------------------

// Weightings m with sat_outcome(m, phi), assembled from the assertion's
// structure and verified; enumeration for det/nondet, rational-grid
// samples for prob.
inline std::vector<Weighting> gen_models(const AssertPtr &phi, Algebra alg,
                                         const Bounds &bounds) {
  std::vector<Weighting> raw;

  std::function<std::vector<Weighting>(const AssertPtr &)> go =
      [&](const AssertPtr &a) -> std::vector<Weighting> {
    std::vector<Weighting> res;
    switch (a->kind) {
    case Assertion::Kind::Top: {
      res.push_back(empty_w(alg));
      res.push_back(unit_w(alg, TaggedState::und()));
      break;
    }
    case Assertion::Kind::Basic: {
      auto states = enumerate_models(a->heap, bounds);
      size_t cap = std::min(states.size(), bounds.max_models);
      for (size_t i = 0; i < cap; ++i) {
        TaggedState t = a->tag == Tag::Ok ? TaggedState::ok(states[i].first, states[i].second)
                                          : TaggedState::er(states[i].first, states[i].second);
        res.push_back(unit_w(alg, t));
      }
      if (alg == Algebra::Nondet && states.size() >= 2) {
        TaggedState t1 = a->tag == Tag::Ok ? TaggedState::ok(states[0].first, states[0].second)
                                           : TaggedState::er(states[0].first, states[0].second);
        TaggedState t2 = a->tag == Tag::Ok ? TaggedState::ok(states[1].first, states[1].second)
                                           : TaggedState::er(states[1].first, states[1].second);
        Weighting two(alg);
        two.w.emplace(t1, Rat(1));
        two.w.emplace(t2, Rat(1));
        res.push_back(two);
      }
      if (alg == Algebra::Prob && states.size() >= 2) {
        for (auto split : {std::pair<long, long>{1, 2}, {1, 4}}) {
          TaggedState t1 = a->tag == Tag::Ok ? TaggedState::ok(states[0].first, states[0].second)
                                             : TaggedState::er(states[0].first, states[0].second);
          TaggedState t2 = a->tag == Tag::Ok ? TaggedState::ok(states[1].first, states[1].second)
                                             : TaggedState::er(states[1].first, states[1].second);
          Weighting m(alg);
          Rat q(split.first, split.second);
          q.canonicalize();
          m.w.emplace(t1, q);
          if (t1 == t2)
            m.w.begin()->second = Rat(1);
          else
            m.w.emplace(t2, Rat(1) - q);
          res.push_back(m);
        }
      }
      break;
    }
    case Assertion::Kind::Or: {
      for (auto &m : go(a->l)) res.push_back(m);
      for (auto &m : go(a->r)) res.push_back(m);
      break;
    }
    case Assertion::Kind::Weighted: {
      if (!carrier_contains(alg, a->weight)) break;
      for (auto &m : go(a->l)) res.push_back(scale(Weight{alg, a->weight}, m));
      break;
    }
    case Assertion::Kind::OPlus: {
      auto ls = go(a->l), rs = go(a->r);
      size_t cap = 8;
      for (size_t i = 0; i < ls.size() && i < cap; ++i)
        for (size_t j = 0; j < rs.size() && j < cap; ++j) {
          auto sum = wsum(ls[i], rs[j]);
          if (sum) res.push_back(*sum);
        }
      break;
    }
    }
    return res;
  };

  raw = go(phi);
  std::vector<Weighting> out;
  std::set<std::string> dedup;
  for (auto &m : raw) {
    if (out.size() >= bounds.max_models) break;
    if (m.support_size() > bounds.max_support) continue;
    if (!mass(m)) continue;
    if (!sat_outcome(m, phi, bounds.sat_cfg())) continue;
    std::string key = weighting_str(m);
    if (dedup.insert(key).second) out.push_back(m);
  }
  return out;
}

// ---- differential triple checking ----------------------------------------

struct Verdict {
  enum class Kind { Pass, VacuousPass, Fail, Error };
  Kind kind = Kind::Pass;
  std::string allocator_id;    // on fail
  std::string detail;          // diagnostics
  std::optional<Weighting> initial;  // replayable counterexample
  std::optional<Weighting> result;

  bool passed() const { return kind == Kind::Pass || kind == Kind::VacuousPass; }
};

// Checks |= <pre> C <post> against the concrete semantics: every generated
// pre-model, run under every allocator in the family, must satisfy the
// postcondition. A pass is evidence (the family approximates the universal
// allocator); a fail is a proof of invalidity with a replayable witness.
inline Verdict check_triple(const AssertPtr &pre, const CmdPtr &c, const AssertPtr &post,
                            Algebra alg, const Bounds &bounds, const Program *prog = nullptr) {
  std::vector<Weighting> models;
  try {
    models = gen_models(pre, alg, bounds);
  } catch (const SatBudgetError &e) {
    return {Verdict::Kind::Error, "", std::string("model generation: ") + e.what(), {}, {}};
  }
  if (models.empty())
    return {Verdict::Kind::VacuousPass, "", "no bounded models of the precondition", {}, {}};
  for (auto &spec : bounds.allocator_family) {
    Allocator af = make_allocator(spec);
    ExecCtx ctx{alg, prog, af, bounds.fuel};
    for (auto &m : models) {
      Weighting result(alg);
      try {
        result = exec_lifted(c, m, ctx);
      } catch (const IllFormedError &e) {
        return {Verdict::Kind::Error, af.id, std::string("ill-formed: ") + e.what(), m, {}};
      } catch (const AllocExhausted &e) {
        return {Verdict::Kind::Error, af.id, e.what(), m, {}};
      }
      bool ok;
      try {
        ok = sat_outcome(result, post, bounds.sat_cfg());
      } catch (const SatBudgetError &e) {
        return {Verdict::Kind::Error, af.id, std::string("budget: ") + e.what(), m, result};
      }
      if (!ok)
        return {Verdict::Kind::Fail, af.id, "postcondition violated", m, result};
    }
  }
  return {Verdict::Kind::Pass, "", std::to_string(models.size()) + " models checked", {}, {}};
}

struct FrameSideConditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thm 4.2 as an executable check: frames F with mod(C) and fv(F) disjoint
// must preserve validity. A side-condition violation is an input error.
inline Verdict check_frame_closure(const AssertPtr &pre, const CmdPtr &c, const AssertPtr &post,
                                   const SymHeap &frame, Algebra alg, const Bounds &bounds,
                                   const Program *prog = nullptr) {
  Program empty;
  const Program &pr = prog ? *prog : empty;
  std::set<std::string> mods = mod_vars(c, pr);
  for (auto &v : fv_heap(frame))
    if (mods.count(v))
      throw FrameSideConditionError("frame mentions modified variable '" + v + "'");
  return check_triple(osep(pre, frame), c, osep(post, frame), alg, bounds, prog);
}

inline std::string verdict_str(const Verdict &v) {
  std::ostringstream os;
  switch (v.kind) {
  case Verdict::Kind::Pass: os << "pass"; break;
  case Verdict::Kind::VacuousPass: os << "pass (vacuous)"; break;
  case Verdict::Kind::Fail: os << "FAIL"; break;
  case Verdict::Kind::Error: os << "ERROR"; break;
  }
  if (!v.detail.empty()) os << ": " << v.detail;
  if (!v.allocator_id.empty()) os << " [allocator " << v.allocator_id << "]";
  if (v.kind == Verdict::Kind::Fail && v.initial) {
    os << "\n  initial weighting:\n";
    std::istringstream in(weighting_str(*v.initial));
    std::string line;
    while (std::getline(in, line)) os << "    " << line << "\n";
    if (v.result) {
      os << "  resulting weighting:\n";
      std::istringstream in2(weighting_str(*v.result));
      while (std::getline(in2, line)) os << "    " << line << "\n";
    }
  }
  return os.str();
}

} // namespace osl
