#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "osl/assertions.hpp"
#include "osl/symheap.hpp"

namespace osl {

namespace detail {

inline bool expr_ground(const ExprPtr &e) {
  switch (e->kind) {
  case Expr::Kind::Var: return false;
  case Expr::Kind::Const: return true;
  case Expr::Kind::Bin: return expr_ground(e->lhs) && expr_ground(e->rhs);
  case Expr::Kind::Not: return expr_ground(e->lhs);
  }
  return false;
}

} // namespace detail

// Union-find over expressions (keyed by canonical print, ground terms
// folded to constants) with a disequality edge set. Sound equality and
// apartness reasoning; no arithmetic beyond constant folding.
struct PureContext {
  std::map<std::string, std::string> parent;
  std::map<std::string, ExprPtr> exemplar;
  std::map<std::string, std::optional<Rat>> constant;  // per root
  std::vector<std::pair<std::string, std::string>> diseq_edges;  // by key
  bool contradiction = false;

  static std::string key_of(const ExprPtr &e) {
    if (detail::expr_ground(e)) return "#" + rat_str(detail::eval_heap_expr(e, Store{}));
    return expr_str(e);
  }

  std::string intern(const ExprPtr &e) {
    std::string k = key_of(e);
    if (!parent.count(k)) {
      parent[k] = k;
      exemplar[k] = detail::expr_ground(e) ? econst(detail::eval_heap_expr(e, Store{})) : e;
      constant[k] = k.size() && k[0] == '#' ? std::optional<Rat>(detail::eval_heap_expr(e, Store{}))
                                            : std::nullopt;
    }
    return k;
  }

  std::string find(const std::string &k) {
    auto it = parent.find(k);
    if (it == parent.end()) return k;
    if (it->second == k) return k;
    std::string r = find(it->second);
    parent[k] = r;
    return r;
  }

  void unite(const ExprPtr &a, const ExprPtr &b) {
    std::string ra = find(intern(a)), rb = find(intern(b));
    if (ra == rb) return;
    auto ca = constant[ra], cb = constant[rb];
    if (ca && cb && *ca != *cb) {
      contradiction = true;
      return;
    }
    parent[ra] = rb;
    if (ca && !cb) constant[rb] = ca;
  }

  void disequal(const ExprPtr &a, const ExprPtr &b) {
    std::string ka = intern(a), kb = intern(b);
    if (find(ka) == find(kb)) {
      contradiction = true;
      return;
    }
    diseq_edges.emplace_back(ka, kb);
  }

  bool equal(const ExprPtr &a, const ExprPtr &b) {
    if (contradiction) return true;
    if (expr_equal(a, b)) return true;
    std::string ka = key_of(a), kb = key_of(b);
    if (ka == kb) return true;
    if (!parent.count(ka) || !parent.count(kb)) return false;
    return find(ka) == find(kb);
  }

  bool distinct(const ExprPtr &a, const ExprPtr &b) {
    if (contradiction) return true;
    std::string ka = key_of(a), kb = key_of(b);
    std::string ra = parent.count(ka) ? find(ka) : ka;
    std::string rb = parent.count(kb) ? find(kb) : kb;
    if (ra == rb) return false;
    auto cexa = constant.count(ra) ? constant[ra] : std::nullopt;
    auto cexb = constant.count(rb) ? constant[rb] : std::nullopt;
    if (!cexa && ka[0] == '#') cexa = detail::eval_heap_expr(a, Store{});
    if (!cexb && kb[0] == '#') cexb = detail::eval_heap_expr(b, Store{});
    if (cexa && cexb && *cexa != *cexb) return true;
    for (auto &[x, y] : diseq_edges) {
      std::string rx = find(x), ry = find(y);
      if ((rx == ra && ry == rb) || (rx == rb && ry == ra)) return true;
    }
    return false;
  }

  std::optional<Rat> constant_of(const ExprPtr &e) {
    std::string k = key_of(e);
    if (k.size() && k[0] == '#') return detail::eval_heap_expr(e, Store{});
    if (!parent.count(k)) return std::nullopt;
    return constant[find(k)];
  }

  // Members of e's equivalence class, exemplars in deterministic order.
  std::vector<ExprPtr> class_members(const ExprPtr &e) {
    std::vector<ExprPtr> out;
    std::string k = key_of(e);
    if (!parent.count(k)) return {exemplar.count(k) ? exemplar[k] : e};
    std::string r = find(k);
    std::vector<std::string> keys;
    for (auto &[kk, _] : parent)
      if (find(kk) == r) keys.push_back(kk);
    std::sort(keys.begin(), keys.end());
    for (auto &kk : keys) out.push_back(exemplar[kk]);
    return out;
  }
};

// Pure context of a quantifier-free heap. With saturate set, separation
// facts are added: allocated cells are non-null and pairwise distinct,
// and list segments with provably distinct endpoints allocate their head.
inline PureContext build_pure_context(const SymHeap &qf, bool saturate = true) {
  PureContext ctx;
  for (auto &a : qf.pure) {
    if (ctx.contradiction) return ctx;
    if (a.eq)
      ctx.unite(a.l, a.r);
    else
      ctx.disequal(a.l, a.r);
  }
  if (!saturate || ctx.contradiction) return ctx;
  for (int pass = 0; pass < 2 && !ctx.contradiction; ++pass) {
    std::vector<ExprPtr> cells;
    for (auto &a : qf.spatial) {
      switch (a.kind) {
      case SpatialAtom::Kind::PointsTo:
      case SpatialAtom::Kind::Dangling: cells.push_back(a.a); break;
      case SpatialAtom::Kind::Ls:
        if (ctx.distinct(a.a, a.b)) cells.push_back(a.a);
        break;
      case SpatialAtom::Kind::Tru: break;
      }
    }
    for (size_t i = 0; i < cells.size() && !ctx.contradiction; ++i) {
      ctx.disequal(cells[i], econst(Value(0)));
      auto c = ctx.constant_of(cells[i]);
      if (c && (*c <= 0 || !is_integer(*c))) {
        ctx.contradiction = true;  // cell at a non-address
        break;
      }
      for (size_t j = i + 1; j < cells.size(); ++j) ctx.disequal(cells[i], cells[j]);
    }
  }
  return ctx;
}

// Sound inconsistency check for symbolic heaps; binders are skolemized
// to fresh rigid names first.
inline bool proves_false(const SymHeap &delta) {
  SymHeap qf = delta;
  if (!qf.exists.empty()) {
    FreshGen gen;
    std::set<std::string> used;
    heap_vars(delta, used);
    gen.reserve(used);
    qf = skolemize(delta, gen);
  }
  return build_pure_context(qf, true).contradiction;
}

// Canonical form up to the heap's own pure knowledge: every expression is
// rewritten to its class representative (constants before program
// variables before logical variables), binders equated to an outside
// expression are eliminated, then the result is normalized. Semantics
// preserving; used for deduplication and comparisons.
inline SymHeap canon_heap(const SymHeap &h0) {
  SymHeap h = normalize_heap(h0);
  if (!h.pure.empty()) {
    std::set<std::string> bound(h.exists.begin(), h.exists.end());
    SymHeap qf = h;
    qf.exists.clear();
    PureContext ctx = build_pure_context(qf, false);
    auto rank = [&](const ExprPtr &e) {
      if (e->kind == Expr::Kind::Const) return 0;
      if (e->kind == Expr::Kind::Var) {
        if (!is_lvar(e->var)) return 1;
        return bound.count(e->var) ? 3 : 2;  // free logical names win over binders
      }
      return 4;
    };
    auto repr = [&](const ExprPtr &e) -> ExprPtr {
      ExprPtr best = e;
      for (auto &c : ctx.class_members(e))
        if (rank(c) < rank(best) || (rank(c) == rank(best) && expr_str(c) < expr_str(best)))
          best = c;
      return best;
    };
    for (auto &a : h.spatial) {
      if (a.a) a.a = repr(a.a);
      if (a.b) a.b = repr(a.b);
    }
    for (auto &a : h.pure) {
      if (a.eq) continue;  // equalities define the classes; keep them
      a.l = repr(a.l);
      a.r = repr(a.r);
    }
    // a binder pinned by a single equation to an outside expression is
    // redundant: drop the equation and the binder
    bool again = true;
    while (again) {
      again = false;
      for (auto &b : h.exists) {
        int uses = 0;
        int atom_idx = -1;
        for (size_t i = 0; i < h.pure.size(); ++i) {
          auto &a = h.pure[i];
          bool l = a.l->kind == Expr::Kind::Var && a.l->var == b;
          bool r = a.r->kind == Expr::Kind::Var && a.r->var == b;
          if (l || r) {
            uses += (l ? 1 : 0) + (r ? 1 : 0);
            if (a.eq && (l != r)) atom_idx = static_cast<int>(i);
          }
          std::set<std::string> vs;
          collect_vars(a.l, vs);
          collect_vars(a.r, vs);
          if (vs.count(b) && !(l || r)) uses += 2;  // nested occurrence
        }
        for (auto &a : h.spatial) {
          std::set<std::string> vs;
          if (a.a) collect_vars(a.a, vs);
          if (a.b) collect_vars(a.b, vs);
          if (vs.count(b)) uses += 2;
        }
        if (uses == 1 && atom_idx >= 0) {
          h.pure.erase(h.pure.begin() + atom_idx);
          again = true;
          break;
        }
      }
      if (again) {
        // rebuild binder list for dropped uses
        std::set<std::string> fv;
        heap_vars(h, fv);
        std::vector<std::string> ex;
        for (auto &b : h.exists)
          if (fv.count(b)) ex.push_back(b);
        h.exists = ex;
      }
    }
  }
  return normalize_heap(h);
}

inline bool heap_equal_canon(const SymHeap &a, const SymHeap &b) {
  return heap_str(canon_heap(a)) == heap_str(canon_heap(b));
}

// ---- entailment ----------------------------------------------------------

namespace detail {

struct EntailState {
  PureContext *ctx;
  std::set<std::string> uvars;                // Q's binders, unification variables
  std::map<std::string, ExprPtr> theta;       // bindings
  std::vector<SpatialAtom> patoms;            // available P resources
  std::vector<bool> used;
  bool absorb = false;                        // tru seen on the right
};

inline ExprPtr apply_theta(const ExprPtr &e, const std::map<std::string, ExprPtr> &theta) {
  return subst_expr(e, theta);
}

// works for any search state exposing uvars and theta
template <typename State>
inline bool is_unbound_uvar(const ExprPtr &e, const State &st) {
  return e->kind == Expr::Kind::Var && st.uvars.count(e->var) && !st.theta.count(e->var);
}

inline bool entail_spatial(EntailState st, std::vector<SpatialAtom> qatoms, size_t qi,
                           const std::vector<PureAtom> &qpure, bool need_empty_remainder);

// after spatial matching, verify Q's pure part under theta
inline bool entail_pure_final(EntailState st, const std::vector<PureAtom> &qpure) {
  // bind remaining unbound uvars occurring in pure atoms by small enumeration
  std::vector<std::string> unbound;
  std::set<std::string> pure_vars;
  for (auto &a : qpure) {
    collect_vars(apply_theta(a.l, st.theta), pure_vars);
    collect_vars(apply_theta(a.r, st.theta), pure_vars);
  }
  for (auto &v : pure_vars)
    if (st.uvars.count(v) && !st.theta.count(v)) unbound.push_back(v);
  if (!unbound.empty()) {
    std::vector<ExprPtr> candidates;
    for (auto &[k, ex] : st.ctx->exemplar) {
      (void)k;
      candidates.push_back(ex);
    }
    for (long c = 0; c <= 2; ++c) candidates.push_back(econst(Value(c)));
    std::function<bool(size_t)> assign = [&](size_t i) -> bool {
      if (i == unbound.size()) {
        EntailState st2 = st;
        return entail_pure_final(st2, qpure);
      }
      for (auto &cand : candidates) {
        std::set<std::string> cv = expr_vars(cand);
        bool has_uvar = false;
        for (auto &v : cv)
          if (st.uvars.count(v)) has_uvar = true;
        if (has_uvar) continue;
        st.theta[unbound[i]] = cand;
        if (assign(i + 1)) return true;
        st.theta.erase(unbound[i]);
      }
      return false;
    };
    return assign(0);
  }
  for (auto &a : qpure) {
    ExprPtr l = apply_theta(a.l, st.theta), r = apply_theta(a.r, st.theta);
    if (a.eq) {
      if (!st.ctx->equal(l, r)) return false;
    } else {
      if (!st.ctx->distinct(l, r)) return false;
    }
  }
  return true;
}

inline bool entail_spatial(EntailState st, std::vector<SpatialAtom> qatoms, size_t qi,
                           const std::vector<PureAtom> &qpure, bool need_empty_remainder) {
  if (qi == qatoms.size()) {
    if (need_empty_remainder && !st.absorb) {
      for (size_t i = 0; i < st.patoms.size(); ++i)
        if (!st.used[i]) return false;
    }
    return entail_pure_final(st, qpure);
  }
  SpatialAtom q = qatoms[qi];
  if (q.a) q.a = apply_theta(q.a, st.theta);
  if (q.b) q.b = apply_theta(q.b, st.theta);

  switch (q.kind) {
  case SpatialAtom::Kind::Tru: {
    EntailState st2 = st;
    st2.absorb = true;
    return entail_spatial(st2, qatoms, qi + 1, qpure, need_empty_remainder);
  }
  case SpatialAtom::Kind::PointsTo: {
    for (size_t i = 0; i < st.patoms.size(); ++i) {
      if (st.used[i] || st.patoms[i].kind != SpatialAtom::Kind::PointsTo) continue;
      const SpatialAtom &p = st.patoms[i];
      // address match: bind an unbound address uvar or require equality
      EntailState st2 = st;
      if (is_unbound_uvar(q.a, st)) {
        st2.theta[q.a->var] = p.a;
      } else if (!st.ctx->equal(q.a, p.a)) {
        continue;
      }
      ExprPtr qb = apply_theta(q.b, st2.theta);
      if (is_unbound_uvar(qb, st2)) {
        st2.theta[qb->var] = p.b;
      } else if (!st.ctx->equal(qb, p.b)) {
        continue;
      }
      st2.used[i] = true;
      if (entail_spatial(st2, qatoms, qi + 1, qpure, need_empty_remainder)) return true;
    }
    return false;
  }
  case SpatialAtom::Kind::Dangling: {
    for (size_t i = 0; i < st.patoms.size(); ++i) {
      if (st.used[i] || st.patoms[i].kind != SpatialAtom::Kind::Dangling) continue;
      const SpatialAtom &p = st.patoms[i];
      EntailState st2 = st;
      if (is_unbound_uvar(q.a, st)) {
        st2.theta[q.a->var] = p.a;
      } else if (!st.ctx->equal(q.a, p.a)) {
        continue;
      }
      st2.used[i] = true;
      if (entail_spatial(st2, qatoms, qi + 1, qpure, need_empty_remainder)) return true;
    }
    return false;
  }
  case SpatialAtom::Kind::Ls: {
    // empty segment: endpoints equal (or unifiable)
    {
      EntailState st2 = st;
      bool ok = false;
      if (is_unbound_uvar(q.b, st)) {
        st2.theta[q.b->var] = q.a;
        ok = true;
      } else if (is_unbound_uvar(q.a, st)) {
        st2.theta[q.a->var] = q.b;
        ok = true;
      } else if (st.ctx->equal(q.a, q.b)) {
        ok = true;
      }
      if (ok && entail_spatial(st2, qatoms, qi + 1, qpure, need_empty_remainder)) return true;
    }
    // consume a P list segment as a prefix: ls(a,c) * ls(c,b) |= ls(a,b)
    for (size_t i = 0; i < st.patoms.size(); ++i) {
      if (st.used[i] || st.patoms[i].kind != SpatialAtom::Kind::Ls) continue;
      const SpatialAtom &p = st.patoms[i];
      EntailState st2 = st;
      if (is_unbound_uvar(q.a, st)) {
        st2.theta[q.a->var] = p.a;
      } else if (!st.ctx->equal(q.a, p.a)) {
        continue;
      }
      st2.used[i] = true;
      std::vector<SpatialAtom> qs2 = qatoms;
      qs2[qi] = sp_ls(p.b, q.b);
      if (entail_spatial(st2, qs2, qi, qpure, need_empty_remainder)) return true;
    }
    // consume a P cell as the head: a|->v * ls(v,b) |= ls(a,b)
    for (size_t i = 0; i < st.patoms.size(); ++i) {
      if (st.used[i] || st.patoms[i].kind != SpatialAtom::Kind::PointsTo) continue;
      const SpatialAtom &p = st.patoms[i];
      EntailState st2 = st;
      if (is_unbound_uvar(q.a, st)) {
        st2.theta[q.a->var] = p.a;
      } else if (!st.ctx->equal(q.a, p.a)) {
        continue;
      }
      st2.used[i] = true;
      std::vector<SpatialAtom> qs2 = qatoms;
      qs2[qi] = sp_ls(p.b, q.b);
      if (entail_spatial(st2, qs2, qi, qpure, need_empty_remainder)) return true;
    }
    return false;
  }
  }
  return false;
}

} // namespace detail

// Sound subtraction-style entailment check P |= Q for symbolic heaps.
// P's binders are skolemized; Q's binders are instantiated by unification.
// tru on the right absorbs any remainder; an emp right side demands an
// empty remainder. Incomplete by design.
inline bool entails(const SymHeap &p, const SymHeap &q_in) {
  FreshGen gen;
  std::set<std::string> used;
  heap_vars(p, used);
  heap_vars(q_in, used);
  gen.reserve(used);
  SymHeap delta = skolemize(p, gen);
  SymHeap q = freshen_binders(q_in, gen);  // keep Q's binders apart from P's names
  if (proves_false(delta)) return true;
  PureContext ctx = build_pure_context(delta, true);
  detail::EntailState st;
  st.ctx = &ctx;
  for (auto &x : q.exists) st.uvars.insert(x);
  st.patoms = delta.spatial;
  st.used.assign(st.patoms.size(), false);

  // eager unification from Q's pure equalities (X = e with X a binder)
  std::vector<PureAtom> qpure = q.pure;
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto &a : qpure) {
      if (!a.eq) continue;
      ExprPtr l = detail::apply_theta(a.l, st.theta), r = detail::apply_theta(a.r, st.theta);
      auto free_of_uvars = [&](const ExprPtr &e) {
        for (auto &v : expr_vars(e))
          if (st.uvars.count(v) && !st.theta.count(v)) return false;
        return true;
      };
      if (detail::is_unbound_uvar(l, st) && free_of_uvars(r)) {
        st.theta[l->var] = r;
        changed = true;
      } else if (detail::is_unbound_uvar(r, st) && free_of_uvars(l)) {
        st.theta[r->var] = l;
        changed = true;
      }
    }
  }
  return detail::entail_spatial(st, q.spatial, 0, qpure, true);
}

// Frame inference: every returned F satisfies entails(P, Q * F). The
// frames are the unconsumed P resources of successful subtraction runs.
inline std::vector<SymHeap> infer_frame(const SymHeap &p, const SymHeap &q_in) {
  FreshGen gen;
  std::set<std::string> used;
  heap_vars(p, used);
  heap_vars(q_in, used);
  gen.reserve(used);
  SymHeap q = freshen_binders(q_in, gen);
  // skolemize P but remember the introduced names: frames re-bind them
  std::set<std::string> skolems;
  SymHeap delta = p;
  if (!p.exists.empty()) {
    std::map<std::string, ExprPtr> sub;
    for (auto &x : p.exists) {
      std::string nx = gen.fresh(x);
      sub[x] = evar(nx);
      skolems.insert(nx);
    }
    delta.exists.clear();
    delta = subst_heap(delta, sub);
  }
  PureContext ctx = build_pure_context(delta, true);
  if (ctx.contradiction) return {emp_heap()};  // vacuous: P has no models

  std::vector<SymHeap> frames;
  std::set<std::string> seen;

  // collect all successful matchings, not just the first
  std::function<void(detail::EntailState, std::vector<SpatialAtom>, size_t,
                     const std::vector<PureAtom> &)>
      search = [&](detail::EntailState st, std::vector<SpatialAtom> qatoms, size_t qi,
                   const std::vector<PureAtom> &qpure) {
        if (qi == qatoms.size()) {
          detail::EntailState fin = st;
          if (!detail::entail_pure_final(fin, qpure)) return;
          SymHeap f;
          for (size_t i = 0; i < st.patoms.size(); ++i)
            if (!st.used[i]) f.spatial.push_back(st.patoms[i]);
          // P's skolemized binders stay bound inside the frame
          std::set<std::string> fvf;
          heap_vars(f, fvf);
          for (auto &sk : skolems)
            if (fvf.count(sk)) f.exists.push_back(sk);
          SymHeap norm = normalize_heap(f);
          std::string key = heap_str(norm);
          if (seen.insert(key).second) frames.push_back(norm);
          if (q.has_tru() && !f.spatial.empty()) {
            // tru on the right can absorb the remainder instead
            SymHeap e = emp_heap();
            if (seen.insert(heap_str(e)).second) frames.push_back(e);
          }
          return;
        }
        SpatialAtom qa = qatoms[qi];
        if (qa.a) qa.a = detail::apply_theta(qa.a, st.theta);
        if (qa.b) qa.b = detail::apply_theta(qa.b, st.theta);
        switch (qa.kind) {
        case SpatialAtom::Kind::Tru: {
          // tru absorbs any sub-heap of the remainder; for frame inference
          // we keep everything not explicitly matched (weakest frame) and
          // also try absorbing each subset implicitly by just continuing
          detail::EntailState st2 = st;
          search(st2, qatoms, qi + 1, qpure);
          return;
        }
        case SpatialAtom::Kind::PointsTo: {
          for (size_t i = 0; i < st.patoms.size(); ++i) {
            if (st.used[i] || st.patoms[i].kind != SpatialAtom::Kind::PointsTo) continue;
            const SpatialAtom &pa = st.patoms[i];
            detail::EntailState st2 = st;
            if (detail::is_unbound_uvar(qa.a, st)) {
              st2.theta[qa.a->var] = pa.a;
            } else if (!ctx.equal(qa.a, pa.a)) {
              continue;
            }
            ExprPtr qb = detail::apply_theta(qa.b, st2.theta);
            if (detail::is_unbound_uvar(qb, st2)) {
              st2.theta[qb->var] = pa.b;
            } else if (!ctx.equal(qb, pa.b)) {
              continue;
            }
            st2.used[i] = true;
            search(st2, qatoms, qi + 1, qpure);
          }
          return;
        }
        case SpatialAtom::Kind::Dangling: {
          for (size_t i = 0; i < st.patoms.size(); ++i) {
            if (st.used[i] || st.patoms[i].kind != SpatialAtom::Kind::Dangling) continue;
            const SpatialAtom &pa = st.patoms[i];
            detail::EntailState st2 = st;
            if (detail::is_unbound_uvar(qa.a, st)) {
              st2.theta[qa.a->var] = pa.a;
            } else if (!ctx.equal(qa.a, pa.a)) {
              continue;
            }
            st2.used[i] = true;
            search(st2, qatoms, qi + 1, qpure);
          }
          return;
        }
        case SpatialAtom::Kind::Ls: {
          {
            detail::EntailState st2 = st;
            bool ok = false;
            if (detail::is_unbound_uvar(qa.b, st)) {
              st2.theta[qa.b->var] = qa.a;
              ok = true;
            } else if (detail::is_unbound_uvar(qa.a, st)) {
              st2.theta[qa.a->var] = qa.b;
              ok = true;
            } else if (ctx.equal(qa.a, qa.b)) {
              ok = true;
            }
            if (ok) search(st2, qatoms, qi + 1, qpure);
          }
          for (size_t i = 0; i < st.patoms.size(); ++i) {
            if (st.used[i]) continue;
            const SpatialAtom &pa = st.patoms[i];
            if (pa.kind != SpatialAtom::Kind::Ls && pa.kind != SpatialAtom::Kind::PointsTo)
              continue;
            detail::EntailState st2 = st;
            if (detail::is_unbound_uvar(qa.a, st)) {
              st2.theta[qa.a->var] = pa.a;
            } else if (!ctx.equal(qa.a, pa.a)) {
              continue;
            }
            st2.used[i] = true;
            std::vector<SpatialAtom> qs2 = qatoms;
            qs2[qi] = sp_ls(pa.b, qa.b);
            search(st2, qs2, qi, qpure);
          }
          return;
        }
        }
      };

  detail::EntailState st;
  st.ctx = &ctx;
  for (auto &x : q.exists) st.uvars.insert(x);
  st.patoms = delta.spatial;
  st.used.assign(st.patoms.size(), false);
  search(st, q.spatial, 0, q.pure);

  // soundness gate: each frame must re-verify through entails
  std::vector<SymHeap> out;
  for (auto &f : frames)
    if (entails(p, star(q, f))) out.push_back(f);
  std::sort(out.begin(), out.end(),
            [](const SymHeap &a, const SymHeap &b) { return heap_str(a) < heap_str(b); });
  return out;
}

} // namespace osl
