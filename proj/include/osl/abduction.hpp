#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "osl/prover.hpp"

namespace osl {

struct AbduceCfg {
  size_t max_solutions = 8;
};

namespace detail {

// Dedup key: rewrite every expression to its pure-class representative
// (constants before program variables before logical variables), then
// print the normalized heap.
inline std::string pure_closure_key(const SymHeap &m) {
  SymHeap qf = m;
  qf.exists.clear();
  PureContext ctx = build_pure_context(qf, false);
  auto rank = [](const ExprPtr &e) {
    if (e->kind == Expr::Kind::Const) return 0;
    if (e->kind == Expr::Kind::Var) return is_lvar(e->var) ? 2 : 1;
    return 3;
  };
  auto repr = [&](const ExprPtr &e) -> ExprPtr {
    auto members = ctx.class_members(e);
    ExprPtr best = e;
    for (auto &c : members)
      if (rank(c) < rank(best) || (rank(c) == rank(best) && expr_str(c) < expr_str(best)))
        best = c;
    return best;
  };
  SymHeap r = m;
  for (auto &a : r.pure) {
    a.l = repr(a.l);
    a.r = repr(a.r);
  }
  for (auto &a : r.spatial) {
    if (a.a) a.a = repr(a.a);
    if (a.b) a.b = repr(a.b);
  }
  return heap_str(normalize_heap(r));
}

inline size_t strength(const SymHeap &m) {
  size_t n = 0;
  for (auto &a : m.spatial)
    if (a.kind != SpatialAtom::Kind::Tru) ++n;
  return n;
}

// Deterministic ordering: anti-frames without tru first (they are
// stronger), then more spatial resources first, then by print.
inline void sort_prune_heaps(std::vector<SymHeap> &ms, size_t cap) {
  std::vector<SymHeap> keep;
  std::set<std::string> seen;
  for (auto &m : ms) {
    if (proves_false(m)) continue;
    std::string key = pure_closure_key(m);
    if (seen.insert(key).second) keep.push_back(normalize_heap(m));
  }
  std::stable_sort(keep.begin(), keep.end(), [](const SymHeap &a, const SymHeap &b) {
    if (a.has_tru() != b.has_tru()) return !a.has_tru();
    if (strength(a) != strength(b)) return strength(a) > strength(b);
    return heap_str(a) < heap_str(b);
  });
  if (keep.size() > cap) keep.resize(cap);
  ms = std::move(keep);
}

struct AbduceSearch {
  std::map<std::string, std::vector<SymHeap>> memo;

  // combined pure knowledge of both sides; matching is up to these
  // derivable equalities
  static PureContext combined_ctx(const SymHeap &p, const SymHeap &q) {
    SymHeap both;
    both.pure = p.pure;
    both.pure.insert(both.pure.end(), q.pure.begin(), q.pure.end());
    return build_pure_context(both, false);
  }

  static SymHeap without(const SymHeap &h, size_t idx) {
    SymHeap r = h;
    r.spatial.erase(r.spatial.begin() + static_cast<long>(idx));
    return r;
  }

  static SymHeap with_atom(const SymHeap &h, SpatialAtom a) {
    SymHeap r = h;
    r.spatial.push_back(std::move(a));
    return r;
  }

  static SymHeap with_pure(const SymHeap &h, PureAtom a) {
    SymHeap r = h;
    r.pure.push_back(std::move(a));
    return r;
  }

  // spatial part is exactly tru
  static bool spatial_is_tru(const SymHeap &h) {
    return h.spatial.size() == 1 && h.spatial[0].kind == SpatialAtom::Kind::Tru;
  }

  std::vector<SymHeap> run(const SymHeap &p, const SymHeap &q) {
    std::string key = heap_str(p) + " || " + heap_str(q);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    std::vector<SymHeap> result = compute(p, q);
    memo[key] = result;
    return result;
  }

  std::vector<SymHeap> compute(const SymHeap &p, const SymHeap &q) {
    // quantifier elimination is the only row applicable to bound inputs
    if (!p.exists.empty() || !q.exists.empty()) {
      std::set<std::string> xs(p.exists.begin(), p.exists.end());
      std::set<std::string> ys(q.exists.begin(), q.exists.end());
      SymHeap pb = p, qb = q;
      pb.exists.clear();
      qb.exists.clear();
      std::set<std::string> fvq;
      heap_vars(qb, fvq);
      std::set<std::string> fvp;
      heap_vars(pb, fvp);
      for (auto &x : xs)
        if (fvq.count(x) && !ys.count(x)) return {};
      for (auto &y : ys)
        if (fvp.count(y) && !xs.count(y)) return {};
      std::vector<SymHeap> out;
      for (auto &m : run(pb, qb)) {
        SymHeap wrapped = m;
        std::set<std::string> fvm;
        heap_vars(m, fvm);
        std::vector<std::string> binder;
        for (auto &x : p.exists)
          if (fvm.count(x)) binder.push_back(x);
        for (auto &y : q.exists)
          if (fvm.count(y) &&
              std::find(binder.begin(), binder.end(), y) == binder.end())
            binder.push_back(y);
        binder.insert(binder.end(), wrapped.exists.begin(), wrapped.exists.end());
        wrapped.exists = binder;
        out.push_back(wrapped);
      }
      return out;
    }

    PureContext ctx = combined_ctx(p, q);
    if (ctx.contradiction) return {};

    // base rules
    {
      std::vector<SymHeap> base;
      auto pure_both = [&]() {
        SymHeap m;
        m.pure = p.pure;
        m.pure.insert(m.pure.end(), q.pure.begin(), q.pure.end());
        return m;
      };
      if (p.is_emp_spatial() && q.is_emp_spatial()) {
        SymHeap m = pure_both();
        if (!proves_false(m)) base.push_back(m);
      }
      if (spatial_is_tru(p)) {
        SymHeap m = pure_both();
        m.spatial = q.spatial;
        if (!proves_false(m)) base.push_back(m);
      }
      if (spatial_is_tru(q)) {
        SymHeap m = pure_both();
        m.spatial = p.spatial;
        if (!proves_false(m)) base.push_back(m);
      }
      if (!base.empty()) return base;
    }

    using Row = std::function<std::vector<SymHeap>()>;
    auto eq = [&](const ExprPtr &a, const ExprPtr &b) { return ctx.equal(a, b); };

    Row ls_start = [&]() {
      std::vector<SymHeap> out;
      // Ls-Start-L: P has ls(e1,e2), Q has e1|->e3
      for (size_t i = 0; i < p.spatial.size(); ++i) {
        if (p.spatial[i].kind != SpatialAtom::Kind::Ls) continue;
        for (size_t j = 0; j < q.spatial.size(); ++j) {
          if (q.spatial[j].kind != SpatialAtom::Kind::PointsTo) continue;
          if (!eq(p.spatial[i].a, q.spatial[j].a)) continue;
          ExprPtr e1 = p.spatial[i].a, e2 = p.spatial[i].b, e3 = q.spatial[j].b;
          SymHeap p2 = without(p, i);
          p2.spatial.push_back(sp_ls(e3, e2));
          SymHeap q2 = without(q, j);
          for (auto &m : run(p2, q2)) out.push_back(with_atom(m, sp_pts(e1, e3)));
        }
      }
      // Ls-Start-R: P has e1|->e3, Q has ls(e1,e2)
      for (size_t i = 0; i < p.spatial.size(); ++i) {
        if (p.spatial[i].kind != SpatialAtom::Kind::PointsTo) continue;
        for (size_t j = 0; j < q.spatial.size(); ++j) {
          if (q.spatial[j].kind != SpatialAtom::Kind::Ls) continue;
          if (!eq(p.spatial[i].a, q.spatial[j].a)) continue;
          ExprPtr e1 = p.spatial[i].a, e3 = p.spatial[i].b, e2 = q.spatial[j].b;
          SymHeap p2 = without(p, i);
          SymHeap q2 = without(q, j);
          q2.spatial.push_back(sp_ls(e3, e2));
          for (auto &m : run(p2, q2)) out.push_back(with_atom(m, sp_pts(e1, e3)));
        }
      }
      return out;
    };

    Row match = [&]() {
      std::vector<SymHeap> out;
      for (size_t i = 0; i < p.spatial.size(); ++i) {
        for (size_t j = 0; j < q.spatial.size(); ++j) {
          const SpatialAtom &pa = p.spatial[i], &qa = q.spatial[j];
          // live cells match live cells, dangling match dangling
          if (pa.kind == SpatialAtom::Kind::PointsTo &&
              qa.kind == SpatialAtom::Kind::PointsTo && eq(pa.a, qa.a)) {
            PureAtom link{true, pa.b, qa.b};
            SymHeap p2 = with_pure(without(p, i), link);
            SymHeap q2 = with_pure(without(q, j), link);
            for (auto &m : run(p2, q2)) out.push_back(with_atom(m, sp_pts(pa.a, pa.b)));
          }
          if (pa.kind == SpatialAtom::Kind::Dangling &&
              qa.kind == SpatialAtom::Kind::Dangling && eq(pa.a, qa.a)) {
            SymHeap p2 = without(p, i);
            SymHeap q2 = without(q, j);
            for (auto &m : run(p2, q2)) out.push_back(with_atom(m, sp_dangling(pa.a)));
          }
        }
      }
      return out;
    };

    Row ls_end = [&]() {
      std::vector<SymHeap> out;
      for (size_t i = 0; i < p.spatial.size(); ++i) {
        if (p.spatial[i].kind != SpatialAtom::Kind::Ls) continue;
        for (size_t j = 0; j < q.spatial.size(); ++j) {
          if (q.spatial[j].kind != SpatialAtom::Kind::Ls) continue;
          if (!eq(p.spatial[i].a, q.spatial[j].a)) continue;
          ExprPtr e1 = p.spatial[i].a, e2 = p.spatial[i].b, e3 = q.spatial[j].b;
          // Ls-End-L: Q's segment is a prefix of P's
          {
            SymHeap p2 = without(p, i);
            p2.spatial.push_back(sp_ls(e3, e2));
            SymHeap q2 = without(q, j);
            for (auto &m : run(p2, q2)) out.push_back(with_atom(m, sp_ls(e1, e3)));
          }
          // Ls-End-R: P's segment is a prefix of Q's
          {
            SymHeap p2 = without(p, i);
            SymHeap q2 = without(q, j);
            q2.spatial.push_back(sp_ls(e2, e3));
            for (auto &m : run(p2, q2)) out.push_back(with_atom(m, sp_ls(e1, e2)));
          }
        }
      }
      return out;
    };

    Row missing = [&]() {
      std::vector<SymHeap> out;
      auto is_b = [](const SpatialAtom &a) {
        return a.kind == SpatialAtom::Kind::PointsTo || a.kind == SpatialAtom::Kind::Ls ||
               a.kind == SpatialAtom::Kind::Dangling;
      };
      // Missing-L: move a P resource into M; Q must end in * tru
      if (q.has_tru()) {
        for (size_t i = 0; i < p.spatial.size(); ++i) {
          if (!is_b(p.spatial[i])) continue;
          SymHeap side = q;
          side.spatial.push_back(p.spatial[i]);
          if (proves_false(side)) continue;
          SymHeap p2 = without(p, i);
          for (auto &m : run(p2, q)) out.push_back(with_atom(m, p.spatial[i]));
        }
      }
      // Missing-R: move a Q resource into M; P must end in * tru
      if (p.has_tru()) {
        for (size_t j = 0; j < q.spatial.size(); ++j) {
          if (!is_b(q.spatial[j])) continue;
          SymHeap side = p;
          side.spatial.push_back(q.spatial[j]);
          if (proves_false(side)) continue;
          SymHeap q2 = without(q, j);
          for (auto &m : run(p, q2)) out.push_back(with_atom(m, q.spatial[j]));
        }
      }
      return out;
    };

    Row emp_ls = [&]() {
      std::vector<SymHeap> out;
      for (size_t i = 0; i < p.spatial.size(); ++i) {
        if (p.spatial[i].kind != SpatialAtom::Kind::Ls) continue;
        PureAtom same{true, p.spatial[i].a, p.spatial[i].b};
        SymHeap p2 = with_pure(without(p, i), same);
        SymHeap q2 = with_pure(q, same);
        for (auto &m : run(p2, q2)) out.push_back(m);
      }
      for (size_t j = 0; j < q.spatial.size(); ++j) {
        if (q.spatial[j].kind != SpatialAtom::Kind::Ls) continue;
        PureAtom same{true, q.spatial[j].a, q.spatial[j].b};
        SymHeap p2 = with_pure(p, same);
        SymHeap q2 = with_pure(without(q, j), same);
        for (auto &m : run(p2, q2)) out.push_back(m);
      }
      return out;
    };

    // row priority per the abduction algorithm: first row with any match
    // wins, its matches are unioned
    for (auto &row : {ls_start, match, ls_end, missing, emp_ls}) {
      std::vector<SymHeap> out = row();
      if (!out.empty()) return out;
    }
    return {};
  }
};

} // namespace detail

// Abductive proof search: every returned M derives the judgement
// <P [M] Q>, i.e. M |= P and M |= Q.
inline std::vector<SymHeap> abduce_par(const SymHeap &p, const SymHeap &q,
                                       const AbduceCfg &cfg = {}) {
  // inputs are taken verbatim: the Exists side conditions are meant to see
  // the caller's variable names, so no alpha-renaming happens here
  detail::AbduceSearch search;
  std::vector<SymHeap> ms = search.run(p, q);
  detail::sort_prune_heaps(ms, cfg.max_solutions);
  return ms;
}

// ---- tri-abduction ---------------------------------------------------------

struct TriabSolution {
  SymHeap anti_frame;  // M
  SymHeap frame1;      // F1 with M |= P * F1
  SymHeap frame2;      // F2 with M |= Q * F2
};

// Two-stage tri-abduction: abduce against *tru-extended inputs, then infer
// the leftover frames. Anti-frames are considered both with and without
// the absorbed tru (the tru-free variant is stronger and preferred); only
// solutions passing both frame inferences survive.
inline std::vector<TriabSolution> triab(const SymHeap &p_in, const SymHeap &q_in,
                                        const AbduceCfg &cfg = {}) {
  // the two sides' binders must not collide; the symbolic executor keeps
  // logical variables fresh, and this renaming restores that invariant for
  // direct queries too
  FreshGen gen;
  std::set<std::string> used;
  heap_vars(p_in, used);
  heap_vars(q_in, used);
  gen.reserve(used);
  SymHeap p = p_in, q = q_in;
  {
    std::set<std::string> pb(p_in.exists.begin(), p_in.exists.end());
    bool clash = false;
    for (auto &y : q_in.exists)
      if (pb.count(y)) clash = true;
    if (clash) q = freshen_binders(q_in, gen);
  }
  std::vector<TriabSolution> out;
  std::set<std::string> seen;
  AbduceCfg inner = cfg;
  inner.max_solutions = cfg.max_solutions * 2;
  for (auto &m0 : abduce_par(star(p, tru_heap()), star(q, tru_heap()), inner)) {
    std::vector<SymHeap> variants;
    SymHeap stripped = m0;
    stripped.spatial.erase(
        std::remove_if(stripped.spatial.begin(), stripped.spatial.end(),
                       [](const SpatialAtom &a) { return a.kind == SpatialAtom::Kind::Tru; }),
        stripped.spatial.end());
    variants.push_back(normalize_heap(stripped));
    bool stripped_worked = false;
    if (heap_str(variants[0]) != heap_str(normalize_heap(m0)))
      variants.push_back(normalize_heap(m0));
    for (auto &m : variants) {
      if (stripped_worked) break;  // the absorbed-tru variant is a fallback only
      if (proves_false(m)) continue;
      auto f1s = infer_frame(m, p);
      if (f1s.empty()) continue;
      auto f2s = infer_frame(m, q);
      if (f2s.empty()) continue;
      bool any = false;
      for (auto &f1 : f1s)
        for (auto &f2 : f2s) {
          if (!entails(m, star(p, f1)) || !entails(m, star(q, f2))) continue;
          std::string key = heap_str(m) + "|" + heap_str(f1) + "|" + heap_str(f2);
          if (!seen.insert(key).second) continue;
          out.push_back({m, f1, f2});
          any = true;
          if (out.size() >= cfg.max_solutions * 4) break;
        }
      if (any && !m.has_tru()) stripped_worked = true;
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const TriabSolution &a, const TriabSolution &b) {
    bool ta = a.anti_frame.has_tru(), tb = b.anti_frame.has_tru();
    if (ta != tb) return !ta;
    size_t sa = detail::strength(a.anti_frame), sb = detail::strength(b.anti_frame);
    if (sa != sb) return sa > sb;
    // smaller frames first: they keep composed postconditions tight
    size_t fa = detail::strength(a.frame1) + detail::strength(a.frame2);
    size_t fb = detail::strength(b.frame1) + detail::strength(b.frame2);
    if (fa != fb) return fa < fb;
    return heap_str(a.anti_frame) + heap_str(a.frame1) + heap_str(a.frame2) <
           heap_str(b.anti_frame) + heap_str(b.frame1) + heap_str(b.frame2);
  });
  if (out.size() > cfg.max_solutions) out.resize(cfg.max_solutions);
  return out;
}

// ---- bi-abduction ----------------------------------------------------------

struct BiabSolution {
  SymHeap anti_frame;  // M
  SymHeap frame;       // F with Delta * M |= Q * F
};

namespace detail {

struct BiabState {
  PureContext *ctx;
  std::set<std::string> uvars;
  std::map<std::string, ExprPtr> theta;
  std::vector<SpatialAtom> datoms;
  std::vector<bool> used;
  std::vector<SpatialAtom> missing_spatial;
  std::vector<PureAtom> missing_pure;
  bool q_has_tru = false;
};

} // namespace detail

// Bi-abduction: finds (M, F) with Delta * M |= Q * F. Missing cells and
// pure value equalities flow into M; unmatched Delta resources become F.
// Candidate matches never hypothesize address aliasing. Every emitted
// solution is gated on a proves_false and entails re-check.
inline std::vector<BiabSolution> biab(const SymHeap &delta_in, const SymHeap &q_in,
                                      const AbduceCfg &cfg = {}) {
  SymHeap delta = delta_in;
  delta.exists.clear();  // caller strips quantifiers; stray binders become rigid
  FreshGen gen;
  std::set<std::string> used;
  heap_vars(delta_in, used);
  heap_vars(q_in, used);
  gen.reserve(used);
  SymHeap q = freshen_binders(q_in, gen);  // binders must not capture Delta's names
  PureContext ctx = build_pure_context(delta, true);
  std::vector<BiabSolution> out;
  std::set<std::string> seen;

  std::function<void(detail::BiabState, std::vector<SpatialAtom>, size_t)> go =
      [&](detail::BiabState st, std::vector<SpatialAtom> qatoms, size_t qi) {
        if (out.size() >= cfg.max_solutions * 6) return;
        if (qi == qatoms.size()) {
          // settle Q's pure part: derivable, or added to M, or contradiction
          std::vector<PureAtom> mpure;
          for (auto &a : st.missing_pure)  // re-apply bindings made later on
            mpure.push_back({a.eq, detail::apply_theta(a.l, st.theta),
                             detail::apply_theta(a.r, st.theta)});
          for (auto &a : q.pure) {
            ExprPtr l = detail::apply_theta(a.l, st.theta);
            ExprPtr r = detail::apply_theta(a.r, st.theta);
            if (a.eq) {
              if (st.ctx->equal(l, r)) continue;
              if (st.ctx->distinct(l, r)) return;
              mpure.push_back({true, l, r});
            } else {
              if (st.ctx->distinct(l, r)) continue;
              if (st.ctx->equal(l, r)) return;
              mpure.push_back({false, l, r});
            }
          }
          SymHeap m;
          m.pure = mpure;
          for (auto &a : st.missing_spatial) {
            SpatialAtom at = a;
            if (at.a) at.a = detail::apply_theta(at.a, st.theta);
            if (at.b) at.b = detail::apply_theta(at.b, st.theta);
            m.spatial.push_back(at);
          }
          // unbound unification variables left inside M become binders
          std::set<std::string> fvm;
          heap_vars(m, fvm);
          for (auto &v : st.uvars)
            if (fvm.count(v) && !st.theta.count(v)) m.exists.push_back(v);
          SymHeap f;
          for (size_t i = 0; i < st.datoms.size(); ++i)
            if (!st.used[i]) f.spatial.push_back(st.datoms[i]);
          auto emit = [&](const SymHeap &mm, const SymHeap &ff) {
            SymHeap mn = normalize_heap(mm), fn = normalize_heap(ff);
            if (proves_false(star(delta, mn))) return;
            if (!entails(star(delta, mn), star(q, fn))) return;
            std::string key = heap_str(mn) + "|" + heap_str(fn);
            if (seen.insert(key).second) out.push_back({mn, fn});
          };
          emit(m, f);
          // frames may carry the left side's equalities forward; these are
          // the value links that keep sequential compositions precise
          // (disequalities are left behind to curb variant blowup)
          std::vector<PureAtom> eqs;
          for (auto &a : delta.pure)
            if (a.eq) eqs.push_back(a);
          if (!eqs.empty()) {
            SymHeap fp = f;
            fp.pure.insert(fp.pure.end(), eqs.begin(), eqs.end());
            emit(m, fp);
          }
          if (st.q_has_tru && !f.spatial.empty()) emit(m, emp_heap());
          return;
        }
        SpatialAtom qa = qatoms[qi];
        if (qa.a) qa.a = detail::apply_theta(qa.a, st.theta);
        if (qa.b) qa.b = detail::apply_theta(qa.b, st.theta);
        switch (qa.kind) {
        case SpatialAtom::Kind::Tru: {
          detail::BiabState st2 = st;
          st2.q_has_tru = true;
          go(st2, qatoms, qi + 1);
          return;
        }
        case SpatialAtom::Kind::PointsTo: {
          for (size_t i = 0; i < st.datoms.size(); ++i) {
            if (st.used[i] || st.datoms[i].kind != SpatialAtom::Kind::PointsTo) continue;
            const SpatialAtom &da = st.datoms[i];
            detail::BiabState st2 = st;
            if (detail::is_unbound_uvar(qa.a, st2)) {
              st2.theta[qa.a->var] = da.a;
            } else if (!ctx.equal(qa.a, da.a)) {
              continue;  // no address aliasing hypotheses
            }
            ExprPtr qb = detail::apply_theta(qa.b, st2.theta);
            if (detail::is_unbound_uvar(qb, st2)) {
              st2.theta[qb->var] = da.b;
            } else if (!ctx.equal(qb, da.b)) {
              if (ctx.distinct(qb, da.b)) continue;
              st2.missing_pure.push_back({true, qb, da.b});  // missing value fact
            }
            st2.used[i] = true;
            go(st2, qatoms, qi + 1);
          }
          // or the whole cell is missing
          {
            detail::BiabState st2 = st;
            st2.missing_spatial.push_back(qa);
            go(st2, qatoms, qi + 1);
          }
          return;
        }
        case SpatialAtom::Kind::Dangling: {
          for (size_t i = 0; i < st.datoms.size(); ++i) {
            if (st.used[i] || st.datoms[i].kind != SpatialAtom::Kind::Dangling) continue;
            const SpatialAtom &da = st.datoms[i];
            detail::BiabState st2 = st;
            if (detail::is_unbound_uvar(qa.a, st2)) {
              st2.theta[qa.a->var] = da.a;
            } else if (!ctx.equal(qa.a, da.a)) {
              continue;
            }
            st2.used[i] = true;
            go(st2, qatoms, qi + 1);
          }
          {
            detail::BiabState st2 = st;
            st2.missing_spatial.push_back(qa);
            go(st2, qatoms, qi + 1);
          }
          return;
        }
        case SpatialAtom::Kind::Ls: {
          // empty segment
          {
            detail::BiabState st2 = st;
            bool ok = false;
            if (detail::is_unbound_uvar(qa.b, st2)) {
              st2.theta[qa.b->var] = qa.a;
              ok = true;
            } else if (detail::is_unbound_uvar(qa.a, st2)) {
              st2.theta[qa.a->var] = qa.b;
              ok = true;
            } else if (ctx.equal(qa.a, qa.b)) {
              ok = true;
            }
            if (ok) go(st2, qatoms, qi + 1);
          }
          // consume a Delta segment as prefix (ls-suffix rule)
          for (size_t i = 0; i < st.datoms.size(); ++i) {
            if (st.used[i]) continue;
            const SpatialAtom &da = st.datoms[i];
            if (da.kind != SpatialAtom::Kind::Ls && da.kind != SpatialAtom::Kind::PointsTo)
              continue;
            detail::BiabState st2 = st;
            if (detail::is_unbound_uvar(qa.a, st2)) {
              st2.theta[qa.a->var] = da.a;
            } else if (!ctx.equal(qa.a, da.a)) {
              continue;
            }
            st2.used[i] = true;
            std::vector<SpatialAtom> qs2 = qatoms;
            qs2[qi] = sp_ls(da.b, qa.b);
            go(st2, qs2, qi);
          }
          // or the whole segment is missing
          {
            detail::BiabState st2 = st;
            st2.missing_spatial.push_back(qa);
            go(st2, qatoms, qi + 1);
          }
          return;
        }
        }
      };

  detail::BiabState st;
  st.ctx = &ctx;
  for (auto &x : q.exists) st.uvars.insert(x);
  st.datoms = delta.spatial;
  st.used.assign(st.datoms.size(), false);

  // eager unification from Q's pure equalities
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto &a : q.pure) {
      if (!a.eq) continue;
      ExprPtr l = detail::apply_theta(a.l, st.theta), r = detail::apply_theta(a.r, st.theta);
      auto clean = [&](const ExprPtr &e) {
        for (auto &v : expr_vars(e))
          if (st.uvars.count(v) && !st.theta.count(v)) return false;
        return true;
      };
      if (detail::is_unbound_uvar(l, st) && clean(r)) {
        st.theta[l->var] = r;
        changed = true;
      } else if (detail::is_unbound_uvar(r, st) && clean(l)) {
        st.theta[r->var] = l;
        changed = true;
      }
    }
  }
  go(st, q.spatial, 0);

  std::stable_sort(out.begin(), out.end(), [](const BiabSolution &a, const BiabSolution &b) {
    size_t ma = a.anti_frame.pure.size() + detail::strength(a.anti_frame);
    size_t mb = b.anti_frame.pure.size() + detail::strength(b.anti_frame);
    if (ma != mb) return ma < mb;  // least missing resource first
    size_t fa = detail::strength(a.frame), fb = detail::strength(b.frame);
    if (fa != fb) return fa < fb;
    return heap_str(a.anti_frame) + heap_str(a.frame) <
           heap_str(b.anti_frame) + heap_str(b.frame);
  });
  if (out.size() > cfg.max_solutions) out.resize(cfg.max_solutions);
  return out;
}

} // namespace osl
