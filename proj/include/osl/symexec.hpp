#pragma once

#include <algorithm>
#include <optional>

#include "osl/abduction.hpp"
#include "osl/assertions.hpp"
#include "osl/desugar.hpp"

namespace osl {

struct AnalyzeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Mode { All, Single, Invariant };

inline std::string mode_name(Mode m) {
  switch (m) {
  case Mode::All: return "all";
  case Mode::Single: return "single";
  case Mode::Invariant: return "invariant";
  }
  return "?";
}

inline std::optional<Mode> parse_mode(const std::string &s) {
  if (s == "all") return Mode::All;
  if (s == "single") return Mode::Single;
  if (s == "invariant") return Mode::Invariant;
  return std::nullopt;
}

struct Summary {
  SymHeap pre;
  AssertPtr post;
  std::vector<std::string> trace;  // provenance: top-level rule applications
};

using SummarySet = std::vector<Summary>;
using SummaryTable = std::map<std::string, SummarySet>;

struct AnalyzeCfg {
  Algebra alg = Algebra::Nondet;
  Mode mode = Mode::All;
  int unroll = 3;
  size_t max_summaries = 32;
  AbduceCfg abduce;
  std::vector<SymHeap> invariants;  // user-supplied candidates for invariant mode
};

struct AnalysisSession {
  FreshGen gen;
  AnalyzeCfg cfg;
  const Program *prog = nullptr;

  explicit AnalysisSession(AnalyzeCfg c = {}, const Program *p = nullptr)
      : cfg(std::move(c)), prog(p) {
    if (p) {
      std::set<std::string> used;
      // reserve any logical-looking names from the program text (there are
      // none in programs by construction, but assertions in cfg may carry some)
      for (auto &inv : cfg.invariants) heap_vars(inv, used);
      gen.reserve(used);
    }
  }
};

// ---- presentation normalization -------------------------------------------

namespace detail {

inline bool has_er_leaf(const AssertPtr &a) {
  switch (a->kind) {
  case Assertion::Kind::Top: return false;
  case Assertion::Kind::Basic: return a->tag == Tag::Er;
  case Assertion::Kind::Weighted: return has_er_leaf(a->l);
  case Assertion::Kind::Or:
  case Assertion::Kind::OPlus: return has_er_leaf(a->l) || has_er_leaf(a->r);
  }
  return false;
}

// drop disjuncts whose basic heap is inconsistent (they hold of nothing)
inline AssertPtr prune_unsat_disjuncts(const AssertPtr &a) {
  if (a->kind == Assertion::Kind::Or) {
    AssertPtr l = prune_unsat_disjuncts(a->l);
    AssertPtr r = prune_unsat_disjuncts(a->r);
    auto dead = [](const AssertPtr &x) {
      return x->kind == Assertion::Kind::Basic && proves_false(x->heap);
    };
    if (dead(l) && !dead(r)) return r;
    if (dead(r) && !dead(l)) return l;
    return aor(l, r);
  }
  if (a->kind == Assertion::Kind::OPlus)
    return aoplus(prune_unsat_disjuncts(a->l), prune_unsat_disjuncts(a->r));
  if (a->kind == Assertion::Kind::Weighted)
    return aweight(prune_unsat_disjuncts(a->l), a->weight);
  return a;
}

} // namespace detail

// Presentation form of a summary: logical variables of the precondition
// that the postcondition does not mention are replaced by their pure-class
// representatives or existentially closed, and both sides are normalized.
inline Summary simplify_summary(const Summary &s0) {
  Summary s = s0;
  std::set<std::string> post_lvars = fv_lvars_assertion(s.post);

  bool changed = true;
  while (changed) {
    changed = false;
    std::set<std::string> binders(s.pre.exists.begin(), s.pre.exists.end());
    PureContext ctx = build_pure_context(s.pre, false);
    for (auto &y : fv_lvars_heap(s.pre)) {
      if (post_lvars.count(y)) continue;
      ExprPtr best;
      int best_rank = 99;
      for (auto &cand : ctx.class_members(evar(y))) {
        if (expr_equal(cand, evar(y))) continue;
        bool dirty = false;
        for (auto &v : expr_vars(cand))
          if (binders.count(v) || v == y) dirty = true;
        if (dirty) continue;
        int rank;
        if (cand->kind == Expr::Kind::Const)
          rank = 0;
        else if (cand->kind == Expr::Kind::Var)
          rank = is_lvar(cand->var) ? 2 : 1;
        else
          rank = 3;
        if (rank < best_rank || (rank == best_rank && expr_str(cand) < expr_str(best))) {
          best = cand;
          best_rank = rank;
        }
      }
      if (best) {
        s.pre = subst_heap(s.pre, {{y, best}});
        changed = true;
        break;
      }
    }
  }
  // remaining pre-only logical variables become existentials
  for (auto &y : fv_lvars_heap(s.pre))
    if (!post_lvars.count(y)) s.pre.exists.push_back(y);
  s.pre = canon_heap(s.pre);
  std::function<AssertPtr(const AssertPtr &)> canon_leaves =
      [&](const AssertPtr &a) -> AssertPtr {
    switch (a->kind) {
    case Assertion::Kind::Top: return a;
    case Assertion::Kind::Basic: return abasic(a->tag, canon_heap(a->heap));
    case Assertion::Kind::Weighted: return aweight(canon_leaves(a->l), a->weight);
    case Assertion::Kind::Or: return aor(canon_leaves(a->l), canon_leaves(a->r));
    case Assertion::Kind::OPlus: return aoplus(canon_leaves(a->l), canon_leaves(a->r));
    }
    return a;
  };
  s.post = normalize_assertion(
      detail::prune_unsat_disjuncts(canon_leaves(normalize_assertion(s.post))));
  return s;
}

// Equality up to renaming of free logical variables (bound ones are
// handled by normalization). Used by fixtures and deduplication.
inline bool summary_alpha_equal(const Summary &a0, const Summary &b0) {
  Summary a = simplify_summary(a0), b = simplify_summary(b0);
  auto print = [](const Summary &s) {
    return heap_str(s.pre) + " >> " + assertion_str(s.post);
  };
  if (print(a) == print(b)) return true;
  std::set<std::string> la_set = fv_lvars_heap(a.pre), lb_set = fv_lvars_heap(b.pre);
  for (auto &v : fv_lvars_assertion(a.post)) la_set.insert(v);
  for (auto &v : fv_lvars_assertion(b.post)) lb_set.insert(v);
  std::vector<std::string> la(la_set.begin(), la_set.end());
  std::vector<std::string> lb(lb_set.begin(), lb_set.end());
  if (la.size() != lb.size() || la.size() > 5) return false;
  std::sort(lb.begin(), lb.end());
  do {
    std::map<std::string, ExprPtr> ren;
    for (size_t i = 0; i < la.size(); ++i) ren[la[i]] = evar(lb[i]);
    Summary a2{subst_heap(a.pre, ren), subst_assertion(a.post, ren), {}};
    a2.pre = normalize_heap(a2.pre);
    a2.post = normalize_assertion(a2.post);
    if (print(a2) == print(b)) return true;
  } while (std::next_permutation(lb.begin(), lb.end()));
  return false;
}

// ---- renaming (adapting inferred anti-frames for the frame rule) ---------

struct NoRenaming {};

namespace detail {

struct RenameResult {
  std::map<std::string, ExprPtr> subst;  // e/Y for the postconditions
  SymHeap m_renamed;                     // M' avoiding the modified variables
  // Variant that additionally pins each purged variable to its class
  // representative (x = E with Delta |= x = E). Conjoining such equations
  // is a pure precondition strengthening, so it is sound despite naming
  // modified variables; it reproduces the classical presentation where the
  // composed precondition is phrased in source variables.
  std::optional<SymHeap> m_linked;
};

// Re-expresses M without the variables in `avoid` (the program variables
// modified by the commands the anti-frame is framed past) and picks, for
// every free logical variable of the consumed assertions, an expression
// that denotes the same value at the composition point. Unconstrained
// summary variables are renamed to fresh ones. Returns nullopt when no
// renaming exists (the summary candidate is dropped).
inline std::optional<RenameResult> rename(const SymHeap &delta, const SymHeap &m,
                                          const std::vector<AssertPtr> &qs_all,
                                          const std::vector<AssertPtr> &posts,
                                          const std::set<std::string> &xs_fresh,
                                          const std::set<std::string> &xs,
                                          const std::set<std::string> &avoid,
                                          AnalysisSession &ss) {
  // skolemize M's binders; they are private and re-bound at the end
  std::set<std::string> privates;
  SymHeap msk = m;
  if (!m.exists.empty()) {
    std::map<std::string, ExprPtr> sub;
    for (auto &x : m.exists) {
      std::string nx = ss.gen.fresh(x);
      sub[x] = evar(nx);
      privates.insert(nx);
    }
    msk.exists.clear();
    msk = subst_heap(msk, sub);
  }

  std::set<std::string> ys;
  for (auto &q : qs_all)
    for (auto &v : fv_lvars_assertion(q)) ys.insert(v);
  std::set<std::string> posts_fv;
  for (auto &q : posts)
    for (auto &v : fv_lvars_assertion(q)) posts_fv.insert(v);

  SymHeap combined;
  combined.pure = delta.pure;
  combined.pure.insert(combined.pure.end(), msk.pure.begin(), msk.pure.end());
  PureContext ctx = build_pure_context(combined, false);

  std::set<std::string> m_fv = fv_heap(msk);
  std::map<std::string, ExprPtr> subst;
  std::set<std::string> escaping;  // fresh names visible in the posts

  for (auto &y : ys) {
    bool in_m = m_fv.count(y) != 0;
    ExprPtr best;
    int best_rank = 99;
    for (auto &cand : ctx.class_members(evar(y))) {
      if (expr_equal(cand, evar(y))) continue;
      bool dirty = false;
      for (auto &v : expr_vars(cand)) {
        if (ys.count(v) || xs_fresh.count(v) || privates.count(v)) dirty = true;
        // expressions substituted into a post must stay constant across C
        if (posts_fv.count(y) && xs.count(v)) dirty = true;
      }
      if (dirty) continue;
      int rank;
      if (cand->kind == Expr::Kind::Const)
        rank = 0;
      else if (cand->kind == Expr::Kind::Var)
        rank = is_lvar(cand->var) ? 2 : 1;
      else {
        rank = 3;
        for (auto &v : expr_vars(cand))
          if (xs.count(v) && posts_fv.count(y)) rank = 99;
      }
      if (rank < best_rank || (best && rank == best_rank && expr_str(cand) < expr_str(best))) {
        best = cand;
        best_rank = rank;
      }
    }
    if (best && best_rank < 99) {
      subst[y] = best;
    } else if (!in_m) {
      // nothing to re-express; the summary variable stays as itself
    } else if (ctx.class_members(evar(y)).size() <= 1) {
      // unconstrained schematic variable: rename it freshly
      std::string w = ss.gen.fresh(y);
      subst[y] = evar(w);
      if (posts_fv.count(y))
        escaping.insert(w);
      else
        privates.insert(w);
    } else {
      return std::nullopt;  // constrained only by unusable expressions
    }
  }

  SymHeap m2 = subst_heap(msk, subst);

  // purge avoided variables (and any leftover forbidden names) from M
  SymHeap combined2;
  combined2.pure = delta.pure;
  combined2.pure.insert(combined2.pure.end(), m2.pure.begin(), m2.pure.end());
  PureContext ctx2 = build_pure_context(combined2, false);
  auto forbidden = [&](const ExprPtr &e) {
    for (auto &v : expr_vars(e))
      if (avoid.count(v) || ys.count(v) || xs_fresh.count(v)) return true;
    return false;
  };
  std::map<std::string, ExprPtr> links;  // purged variable -> representative
  auto purge = [&](const ExprPtr &e) -> std::optional<ExprPtr> {
    if (!forbidden(e)) return e;
    ExprPtr best;
    int best_rank = 99;
    for (auto &cand : ctx2.class_members(e)) {
      if (forbidden(cand)) continue;
      int rank = cand->kind == Expr::Kind::Const ? 0 : 1;
      if (rank < best_rank || (best && rank == best_rank && expr_str(cand) < expr_str(best))) {
        best = cand;
        best_rank = rank;
      }
    }
    if (!best) return std::nullopt;
    if (e->kind == Expr::Kind::Var && !is_lvar(e->var)) links[e->var] = best;
    return best;
  };
  SymHeap mp;
  for (auto &a : m2.pure) {
    auto l = purge(a.l), r = purge(a.r);
    if (!l || !r) return std::nullopt;
    if (a.eq && expr_equal(*l, *r)) continue;  // trivial after rewriting
    mp.pure.push_back({a.eq, *l, *r});
  }
  for (auto &a : m2.spatial) {
    SpatialAtom at = a;
    if (at.a) {
      auto e = purge(at.a);
      if (!e) return std::nullopt;
      at.a = *e;
    }
    if (at.b) {
      auto e = purge(at.b);
      if (!e) return std::nullopt;
      at.b = *e;
    }
    mp.spatial.push_back(at);
  }

  // re-bind surviving private names
  std::set<std::string> fvmp = fv_heap(mp);
  for (auto &w : privates)
    if (fvmp.count(w) && !escaping.count(w)) mp.exists.push_back(w);

  // the contract: Delta * M' entails Delta * M2 (with private binders)
  SymHeap m2_bound = m2;
  std::set<std::string> fv2 = fv_heap(m2);
  for (auto &w : privates)
    if (fv2.count(w) && !escaping.count(w)) m2_bound.exists.push_back(w);
  if (!entails(star(delta, mp), star(delta, m2_bound))) return std::nullopt;

  std::optional<SymHeap> linked;
  if (!links.empty()) {
    SymHeap ml = mp;
    for (auto &[x, e] : links) ml.pure.push_back({true, evar(x), e});
    linked = normalize_heap(ml);
  }
  return RenameResult{std::move(subst), normalize_heap(mp), std::move(linked)};
}

} // namespace detail

// ---- the sequencing procedure (seq / biab' / triab') ----------------------

using SeqResult = std::vector<std::pair<SymHeap, AssertPtr>>;

// biab': strip existentials, bi-abduce, rename, frame the leftover into the
// postcondition and instantiate the summary's logical variables.
inline SeqResult biab_adapt(const SymHeap &p, const SymHeap &q, const AssertPtr &psi,
                            const std::set<std::string> &xs,
                            const std::set<std::string> &behind, AnalysisSession &ss) {
  std::set<std::string> avoid = behind;
  avoid.insert(xs.begin(), xs.end());
  SeqResult out;
  // strip P's binders, remembering them: they re-close over the frame
  std::set<std::string> zs;
  SymHeap delta = p;
  if (!p.exists.empty()) {
    std::map<std::string, ExprPtr> sub;
    for (auto &x : p.exists) {
      std::string nx = ss.gen.fresh(x);
      sub[x] = evar(nx);
      zs.insert(nx);
    }
    delta.exists.clear();
    delta = subst_heap(delta, sub);
  }
  for (auto &sol : biab(delta, q, ss.cfg.abduce)) {
    // F[X/x] with fresh X per modified program variable in F
    SymHeap f = sol.frame;
    std::map<std::string, ExprPtr> xsub;
    std::set<std::string> xs_fresh;
    for (auto &x : xs)
      if (fv_heap(f).count(x)) {
        std::string nx = ss.gen.fresh("X");
        xsub[x] = evar(nx);
        xs_fresh.insert(nx);
      }
    f = subst_heap(f, xsub);
    std::set<std::string> fvf = fv_heap(f);
    for (auto &z : zs)
      if (fvf.count(z)) f.exists.push_back(z);
    for (auto &x : xs_fresh)
      if (fvf.count(x)) f.exists.push_back(x);

    auto ren = detail::rename(delta, sol.anti_frame, {abasic(Tag::Ok, q), psi}, {psi},
                              xs_fresh, xs, avoid, ss);
    if (!ren) continue;
    AssertPtr psi2 = subst_assertion(osep(psi, f), ren->subst);
    if (ren->m_linked) out.emplace_back(*ren->m_linked, psi2);
    out.emplace_back(ren->m_renamed, psi2);
  }
  return out;
}

// triab': tri-abduce the branch anti-frames, rename, frame each side.
inline std::vector<std::tuple<SymHeap, AssertPtr, AssertPtr>> triab_adapt(
    const SymHeap &p1, const SymHeap &p2, const AssertPtr &psi1, const AssertPtr &psi2,
    const std::set<std::string> &xs, const std::set<std::string> &behind,
    AnalysisSession &ss) {
  std::vector<std::tuple<SymHeap, AssertPtr, AssertPtr>> out;
  std::set<std::string> avoid = behind;
  avoid.insert(xs.begin(), xs.end());
  for (auto &sol : triab(p1, p2, ss.cfg.abduce)) {
    std::map<std::string, ExprPtr> xsub;
    std::set<std::string> xs_fresh;
    for (auto &x : xs) {
      if (fv_heap(sol.frame1).count(x) || fv_heap(sol.frame2).count(x)) {
        std::string nx = ss.gen.fresh("X");
        xsub[x] = evar(nx);
        xs_fresh.insert(nx);
      }
    }
    auto close = [&](const SymHeap &f0) {
      SymHeap f = subst_heap(f0, xsub);
      std::set<std::string> fvf = fv_heap(f);
      for (auto &x : xs_fresh)
        if (fvf.count(x)) f.exists.push_back(x);
      return f;
    };
    SymHeap f1 = close(sol.frame1), f2 = close(sol.frame2);
    auto ren = detail::rename(emp_heap(), sol.anti_frame, {psi1, psi2}, {psi1, psi2},
                              xs_fresh, xs, avoid, ss);
    if (!ren) continue;
    AssertPtr a1 = subst_assertion(osep(psi1, f1), ren->subst);
    AssertPtr a2 = subst_assertion(osep(psi2, f2), ren->subst);
    if (ren->m_linked) out.emplace_back(*ren->m_linked, a1, a2);
    out.emplace_back(ren->m_renamed, a1, a2);
  }
  return out;
}

// seq: composes the running outcome assertion with the summaries of the
// next command, returning anti-frame/postcondition pairs.
inline SeqResult seq_op(const AssertPtr &phi, const SummarySet &s,
                        const std::set<std::string> &xs,
                        const std::set<std::string> &behind, AnalysisSession &ss) {
  switch (phi->kind) {
  case Assertion::Kind::Top: return {{emp_heap(), atop()}};
  case Assertion::Kind::Basic:
    if (phi->tag == Tag::Er) return {{emp_heap(), phi}};  // crashed states stay put
    else {
      SeqResult out;
      for (auto &summary : s)
        for (auto &[m, psi2] : biab_adapt(phi->heap, summary.pre, summary.post, xs, behind, ss))
          out.emplace_back(m, psi2);
      return out;
    }
  case Assertion::Kind::Weighted: {
    SeqResult out;
    for (auto &[m, psi] : seq_op(phi->l, s, xs, behind, ss))
      out.emplace_back(m, aweight(psi, phi->weight));
    return out;
  }
  case Assertion::Kind::Or:
  case Assertion::Kind::OPlus: {
    SeqResult out;
    bool oplus = phi->kind == Assertion::Kind::OPlus;
    SeqResult ls = seq_op(phi->l, s, xs, behind, ss);
    SeqResult rs = seq_op(phi->r, s, xs, behind, ss);
    for (auto &[m1, psi1] : ls)
      for (auto &[m2, psi2] : rs)
        for (auto &[m, a1, a2] : triab_adapt(m1, m2, psi1, psi2, xs, behind, ss))
          out.emplace_back(m, oplus ? aoplus(a1, a2) : aor(a1, a2));
    return out;
  }
  }
  return {};
}

// ---- the symbolic executor -------------------------------------------------

namespace detail {

struct TestAtom {
  PureAtom atom;  // the guard as a pure atom
};

// Fig. 6 restricts assume/while guards to simple tests (plus weight
// literals for assume); constants true/false are folded into trivial tests.
inline std::optional<TestAtom> as_test(const ExprPtr &e) {
  if (e->kind == Expr::Kind::Bin && e->op == BinOp::Eq) return TestAtom{{true, e->lhs, e->rhs}};
  if (e->kind == Expr::Kind::Not) {
    auto t = as_test(e->lhs);
    if (!t) return std::nullopt;
    t->atom.eq = !t->atom.eq;
    return t;
  }
  if (e->kind == Expr::Kind::Const) {
    if (e->val == 1) return TestAtom{{true, econst(Value(0)), econst(Value(0))}};
    if (e->val == 0) return TestAtom{{true, econst(Value(0)), econst(Value(1))}};
  }
  return std::nullopt;
}

inline TestAtom negate(const TestAtom &t) {
  TestAtom n = t;
  n.atom.eq = !n.atom.eq;
  return n;
}

inline SymHeap test_heap(const TestAtom &t) {
  SymHeap h;
  h.pure.push_back(t.atom);
  return h;
}

} // namespace detail

inline SummarySet analyze(const CmdPtr &c, const SummaryTable &t, AnalysisSession &ss);

namespace detail {

inline void finish(SummarySet &out, const AnalyzeCfg &cfg, const std::string &tag) {
  SummarySet keep;
  std::set<std::string> seen;
  for (auto &s0 : out) {
    Summary s = simplify_summary(s0);
    if (proves_false(s.pre)) continue;
    std::string key = heap_str(s.pre) + " >> " + assertion_str(s.post);
    if (!seen.insert(key).second) continue;
    if (!tag.empty() && (s.trace.empty() || s.trace.back() != tag)) s.trace.push_back(tag);
    keep.push_back(std::move(s));
  }
  bool er_first = cfg.mode == Mode::Single;
  // plainer summaries first: fewer stray logical variables, pure atoms and
  // tru leftovers survive the cap
  auto junk = [](const Summary &s) {
    size_t j = 2 * fv_lvars_heap(s.pre).size() + 2 * fv_lvars_assertion(s.post).size() +
               s.pre.pure.size();
    if (s.pre.has_tru()) j += 4;
    // leaves quantifying everything away say little to callers
    std::function<void(const AssertPtr &)> binders = [&](const AssertPtr &a) {
      switch (a->kind) {
      case Assertion::Kind::Basic: j += a->heap.exists.size(); return;
      case Assertion::Kind::Weighted: binders(a->l); return;
      case Assertion::Kind::Or:
      case Assertion::Kind::OPlus:
        binders(a->l);
        binders(a->r);
        return;
      case Assertion::Kind::Top: return;
      }
    };
    binders(s.post);
    return j;
  };
  std::stable_sort(keep.begin(), keep.end(), [&](const Summary &a, const Summary &b) {
    bool ea = has_er_leaf(a.post), eb = has_er_leaf(b.post);
    if (ea != eb) return er_first ? ea : !ea;
    size_t ja = junk(a), jb = junk(b);
    if (ja != jb) return ja < jb;
    return heap_str(a.pre) + assertion_str(a.post) <
           heap_str(b.pre) + assertion_str(b.post);
  });
  if (keep.size() > cfg.max_summaries) keep.resize(cfg.max_summaries);
  out = std::move(keep);
}

inline SummarySet analyze_action(const Action &act, const SummaryTable &t,
                                 AnalysisSession &ss) {
  auto fresh = [&](const char *hint) { return evar(ss.gen.fresh(hint)); };
  SummarySet out;
  switch (act.kind) {
  case Action::Kind::Assign: {
    ExprPtr x_old = fresh("X");
    SymHeap pre;
    pre.pure.push_back({true, evar(act.var), x_old});
    ExprPtr rhs = subst_expr(act.e1, {{act.var, x_old}});
    SymHeap post;
    post.pure.push_back({true, evar(act.var), rhs});
    out.push_back({pre, aok(post), {"assign"}});
    return out;
  }
  case Action::Kind::Alloc: {
    ExprPtr x_old = fresh("X");
    SymHeap pre;
    pre.pure.push_back({true, evar(act.var), x_old});
    std::string y = ss.gen.fresh("Y");
    SymHeap post;
    post.exists.push_back(y);
    post.spatial.push_back(sp_pts(evar(act.var), evar(y)));
    out.push_back({pre, aok(post), {"alloc"}});
    return out;
  }
  case Action::Kind::Free: {
    ExprPtr val = fresh("X");
    SymHeap p1;
    p1.spatial.push_back(sp_pts(act.e1, val));
    SymHeap q1;
    q1.spatial.push_back(sp_dangling(act.e1));
    out.push_back({p1, aok(q1), {"free-ok"}});
    SymHeap p2;
    p2.spatial.push_back(sp_dangling(act.e1));
    out.push_back({p2, aer(p2), {"free-dangling"}});
    SymHeap p3;
    p3.pure.push_back({true, act.e1, enull()});
    out.push_back({p3, aer(p3), {"free-null"}});
    return out;
  }
  case Action::Kind::Store: {
    ExprPtr val = fresh("X");
    SymHeap p1;
    p1.spatial.push_back(sp_pts(act.e1, val));
    SymHeap q1;
    q1.spatial.push_back(sp_pts(act.e1, act.e2));
    out.push_back({p1, aok(q1), {"store-ok"}});
    SymHeap p2;
    p2.spatial.push_back(sp_dangling(act.e1));
    out.push_back({p2, aer(p2), {"store-dangling"}});
    SymHeap p3;
    p3.pure.push_back({true, act.e1, enull()});
    out.push_back({p3, aer(p3), {"store-null"}});
    return out;
  }
  case Action::Kind::Load: {
    ExprPtr x_old = fresh("X");
    ExprPtr val = fresh("Y");
    SymHeap p1;
    p1.pure.push_back({true, evar(act.var), x_old});
    p1.spatial.push_back(sp_pts(act.e1, val));
    SymHeap q1;
    q1.pure.push_back({true, evar(act.var), val});
    q1.spatial.push_back(sp_pts(subst_expr(act.e1, {{act.var, x_old}}), val));
    out.push_back({p1, aok(q1), {"load-ok"}});
    SymHeap p2;
    p2.spatial.push_back(sp_dangling(act.e1));
    out.push_back({p2, aer(p2), {"load-dangling"}});
    SymHeap p3;
    p3.pure.push_back({true, act.e1, enull()});
    out.push_back({p3, aer(p3), {"load-null"}});
    return out;
  }
  case Action::Kind::Error: {
    out.push_back({emp_heap(), aer(emp_heap()), {"error"}});
    return out;
  }
  case Action::Kind::Call: {
    auto it = t.find(act.var);
    if (it == t.end())
      throw AnalyzeError("no summaries for procedure '" + act.var + "'");
    if (!ss.prog) throw AnalyzeError("procedure call without program context");
    const Proc &proc = ss.prog->procs.at(act.var);
    std::set<std::string> xs = mod_vars(ccall(act.var, act.args), *ss.prog);
    // initial assertion: parameters equal the argument values at entry
    std::map<std::string, ExprPtr> snap;
    std::vector<ExprPtr> olds;
    for (auto &x : proc.params) {
      ExprPtr xo = fresh("X");
      snap[x] = xo;
      olds.push_back(xo);
    }
    SymHeap init;
    for (size_t i = 0; i < proc.params.size(); ++i)
      init.pure.push_back({true, evar(proc.params[i]), subst_expr(act.args[i], snap)});
    SummarySet callee = it->second;
    if (ss.cfg.mode == Mode::Single) {
      // reuse correctness summaries under-approximately
      SummarySet weakened;
      for (auto &s : callee) {
        AssertPtr n = normalize_assertion(s.post);
        if (n->kind == Assertion::Kind::OPlus) {
          weakened.push_back({s.pre, aoplus(n->l, atop()), s.trace});
          weakened.push_back({s.pre, aoplus(n->r, atop()), s.trace});
        } else {
          weakened.push_back(s);
        }
      }
      callee = std::move(weakened);
    }
    for (auto &[m, psi] : seq_op(aok(init), callee, xs, {}, ss)) {
      SymHeap pre = m;
      for (size_t i = 0; i < proc.params.size(); ++i)
        pre.pure.push_back({true, evar(proc.params[i]), olds[i]});
      out.push_back({pre, psi, {"call:" + act.var}});
    }
    return out;
  }
  case Action::Kind::Malloc: break;
  }
  throw std::logic_error("analyze: command not desugared");
}

inline SummarySet analyze_while(const CmdPtr &c, const SummaryTable &t, AnalysisSession &ss);

} // namespace detail

// Symbolic execution of a desugared command against the summary table.
// Each returned (P, phi) is intended to validate <ok: P> C <phi>.
inline SummarySet analyze(const CmdPtr &c, const SummaryTable &t, AnalysisSession &ss) {
  const AnalyzeCfg &cfg = ss.cfg;
  SummarySet out;
  switch (c->kind) {
  case Command::Kind::Skip:
    out.push_back({emp_heap(), aok(emp_heap()), {"skip"}});
    break;
  case Command::Kind::Seq: {
    SummarySet first = analyze(c->c1, t, ss);
    SummarySet second = analyze(c->c2, t, ss);
    Program none;
    const Program &pr = ss.prog ? *ss.prog : none;
    std::set<std::string> xs = mod_vars(c->c2, pr);
    std::set<std::string> behind = mod_vars(c->c1, pr);
    for (auto &s1 : first)
      for (auto &[m, psi] : seq_op(s1.post, second, xs, behind, ss))
        out.push_back({star(s1.pre, m), psi, {"seq"}});
    detail::finish(out, cfg, "seq");
    break;
  }
  case Command::Kind::Choice: {
    SummarySet left = analyze(c->c1, t, ss);
    SummarySet right = analyze(c->c2, t, ss);
    if (cfg.mode == Mode::Single) {
      for (auto &s : left) out.push_back({s.pre, aoplus(s.post, atop()), {"choice-left"}});
      for (auto &s : right) out.push_back({s.pre, aoplus(s.post, atop()), {"choice-right"}});
    } else {
      std::set<std::string> xs;
      if (ss.prog) {
        xs = mod_vars(c->c1, *ss.prog);
        for (auto &v : mod_vars(c->c2, *ss.prog)) xs.insert(v);
      }
      for (auto &s1 : left)
        for (auto &s2 : right)
          for (auto &[m, a1, a2] : triab_adapt(s1.pre, s2.pre, s1.post, s2.post, xs, xs, ss))
            out.push_back({m, aoplus(a1, a2), {"choice"}});
    }
    detail::finish(out, cfg, "choice");
    break;
  }
  case Command::Kind::Assume: {
    if (c->guard->kind == Expr::Kind::Const && carrier_contains(cfg.alg, c->guard->val)) {
      out.push_back({emp_heap(), aweight(aok(emp_heap()), c->guard->val), {"assume-weight"}});
      break;
    }
    auto test = detail::as_test(c->guard);
    if (!test)
      throw AnalyzeError("assume guard '" + expr_str(c->guard) +
                         "' is neither a simple test nor a weight literal");
    out.push_back({detail::test_heap(*test), aok(detail::test_heap(*test)), {"assume-true"}});
    out.push_back(
        {detail::test_heap(detail::negate(*test)), aweight(atop(), Rat(0)), {"assume-false"}});
    break;
  }
  case Command::Kind::While:
    out = detail::analyze_while(c, t, ss);
    break;
  case Command::Kind::Act:
    out = detail::analyze_action(c->act, t, ss);
    detail::finish(out, cfg, "");
    break;
  case Command::Kind::If:
  case Command::Kind::ProbChoice:
    throw std::logic_error("analyze: command not desugared");
  }
  return out;
}

namespace detail {

inline SummarySet analyze_invariant_loop(const CmdPtr &c, const SummaryTable &t,
                                         AnalysisSession &ss) {
  if (ss.cfg.alg == Algebra::Prob)
    throw AnalyzeError("loop-invariant mode is unavailable for the probabilistic algebra");
  auto test = as_test(c->guard);
  if (!test) throw AnalyzeError("while guard '" + expr_str(c->guard) + "' is not a simple test");
  SymHeap guard_heap = test_heap(*test);
  SymHeap exit_heap = test_heap(negate(*test));
  std::set<std::string> xs = ss.prog ? mod_vars(c->c1, *ss.prog) : std::set<std::string>{};

  SummarySet body = analyze(c->c1, t, ss);

  // candidate invariants: user-supplied plus harvested from body
  // compositions of the shape (I /\ b, ok: I)
  std::vector<SymHeap> candidates = ss.cfg.invariants;
  SeqResult seeded = seq_op(aok(guard_heap), body, xs, {}, ss);
  for (auto &[m, psi] : seeded) {
    AssertPtr n = normalize_assertion(psi);
    if (n->kind == Assertion::Kind::Basic && n->tag == Tag::Ok) candidates.push_back(n->heap);
    (void)m;
  }
  candidates.push_back(emp_heap());

  SummarySet out;
  std::set<std::string> tried;
  for (auto &cand : candidates) {
    SymHeap inv = normalize_heap(cand);
    if (!tried.insert(heap_str(inv)).second) continue;
    if (proves_false(inv)) continue;
    // verify: some body composition from ok(I /\ b) needs nothing extra and
    // lands back inside I
    bool holds = false;
    for (auto &[m, psi] : seq_op(aok(star(inv, guard_heap)), body, xs, {}, ss)) {
      if (!heap_equal_normalized(m, emp_heap())) continue;
      AssertPtr n = normalize_assertion(psi);
      if (n->kind == Assertion::Kind::Basic && n->tag == Tag::Ok && entails(n->heap, inv)) {
        holds = true;
        break;
      }
    }
    if (!holds) continue;
    AssertPtr post = aor(aok(star(inv, exit_heap)), aweight(atop(), Rat(0)));
    out.push_back({inv, post, {"while-invariant"}});
  }
  finish(out, ss.cfg, "");
  return out;
}

inline SummarySet analyze_while(const CmdPtr &c, const SummaryTable &t, AnalysisSession &ss) {
  if (ss.cfg.mode == Mode::Invariant) return analyze_invariant_loop(c, t, ss);
  auto test = as_test(c->guard);
  if (!test) throw AnalyzeError("while guard '" + expr_str(c->guard) + "' is not a simple test");
  SymHeap guard_heap = test_heap(*test);
  SymHeap exit_heap = test_heap(negate(*test));
  std::set<std::string> xs = ss.prog ? mod_vars(c->c1, *ss.prog) : std::set<std::string>{};

  SummarySet body = analyze(c->c1, t, ss);
  SeqResult entry = seq_op(aok(star(guard_heap, emp_heap())), body, xs, {}, ss);

  // Kleene iteration of the loop functional over summary sets, cut at the
  // unroll depth; each pass adds summaries for one more iteration
  SummarySet s;  // f^k(empty)
  for (int k = 0; k <= ss.cfg.unroll; ++k) {
    SummarySet next;
    next.push_back({exit_heap, aok(exit_heap), {"while-exit"}});
    for (auto &[m1, phi] : entry) {
      for (auto &[m2, psi] : seq_op(phi, s, xs, xs, ss)) {
        SymHeap pre = star(star(m1, m2), guard_heap);
        next.push_back({pre, psi, {"while-iter"}});
      }
    }
    finish(next, ss.cfg, "");
    s = std::move(next);
  }
  for (auto &sm : s)
    if (sm.trace.empty() || sm.trace.back() != "while") sm.trace.push_back("while");
  return s;
}

} // namespace detail

// Single-path variant (Pulse-style): choices yield one summary per branch
// with the unexplored side covered by top.
inline SummarySet analyze_single_path(const CmdPtr &c, const SummaryTable &t,
                                      AnalysisSession &ss) {
  Mode saved = ss.cfg.mode;
  ss.cfg.mode = Mode::Single;
  SummarySet out = analyze(c, t, ss);
  ss.cfg.mode = saved;
  return out;
}

// Loop-invariant mode for one while command with explicit candidates.
inline SummarySet analyze_invariant(const CmdPtr &while_cmd, const SummaryTable &t,
                                    const std::vector<SymHeap> &candidates,
                                    AnalysisSession &ss) {
  if (while_cmd->kind != Command::Kind::While)
    throw AnalyzeError("analyze_invariant expects a while command");
  Mode saved = ss.cfg.mode;
  auto saved_inv = ss.cfg.invariants;
  ss.cfg.mode = Mode::Invariant;
  ss.cfg.invariants.insert(ss.cfg.invariants.end(), candidates.begin(), candidates.end());
  SummarySet out = detail::analyze_invariant_loop(while_cmd, t, ss);
  ss.cfg.mode = saved;
  ss.cfg.invariants = std::move(saved_inv);
  return out;
}

// Converts a correctness summary postcondition for single-path reuse:
// psi1 (+) psi2 weakens to the chosen side (+) top.
inline AssertPtr weaken_to_single(const AssertPtr &phi, bool left) {
  if (phi->kind != Assertion::Kind::OPlus)
    throw std::invalid_argument("weaken_to_single expects an outcome conjunction");
  return aoplus(left ? phi->l : phi->r, atop());
}

namespace detail {

// Callee summaries abstract the procedure's scratch variables (assigned
// inside, not parameters): callers should not depend on callee-local
// state, and the table rows stay in caller vocabulary. Per-leaf weakening
// by an existential is always sound.
inline Summary abstract_scratch(const Summary &s, const std::set<std::string> &scratch,
                                AnalysisSession &ss) {
  std::function<AssertPtr(const AssertPtr &)> go = [&](const AssertPtr &a) -> AssertPtr {
    switch (a->kind) {
    case Assertion::Kind::Top: return a;
    case Assertion::Kind::Weighted: return aweight(go(a->l), a->weight);
    case Assertion::Kind::Or: return aor(go(a->l), go(a->r));
    case Assertion::Kind::OPlus: return aoplus(go(a->l), go(a->r));
    case Assertion::Kind::Basic: {
      SymHeap h = a->heap;
      std::map<std::string, ExprPtr> sub;
      std::vector<std::string> fresh;
      for (auto &v : scratch)
        if (fv_heap(h).count(v)) {
          std::string w = ss.gen.fresh("W");
          sub[v] = evar(w);
          fresh.push_back(w);
        }
      if (sub.empty()) return a;
      h = subst_heap(h, sub);
      h.exists.insert(h.exists.end(), fresh.begin(), fresh.end());
      return abasic(a->tag, h);
    }
    }
    return a;
  };
  Summary out = s;
  out.post = go(s.post);
  return simplify_summary(out);
}

} // namespace detail

// Drives the analysis over the call graph in reverse topological order;
// the entry procedure is analyzed last (in single-path mode when asked,
// with the callees' correctness summaries reused under-approximately).
inline SummaryTable analyze_program(const Program &prog_in, const AnalyzeCfg &cfg) {
  Program prog = desugar(prog_in);
  AnalysisSession ss(cfg, &prog);
  SummaryTable table;
  for (auto &name : analysis_order(prog)) {
    AnalyzeCfg local = cfg;
    if (cfg.mode == Mode::Single && name != prog.entry)
      local.mode = Mode::All;  // reusable correctness summaries for callees
    ss.cfg = local;
    SummarySet sums = analyze(prog.procs.at(name).body, table, ss);
    if (name != prog.entry) {
      const Proc &proc = prog.procs.at(name);
      std::set<std::string> scratch = mod_vars(proc.body, prog);
      for (auto &p : proc.params) scratch.erase(p);
      if (!scratch.empty()) {
        SummarySet abstracted;
        std::set<std::string> seen;
        for (auto &s : sums) {
          Summary a = detail::abstract_scratch(s, scratch, ss);
          std::string key = heap_str(a.pre) + ">>" + assertion_str(a.post);
          if (seen.insert(key).second) abstracted.push_back(std::move(a));
        }
        sums = std::move(abstracted);
      }
    }
    table[name] = std::move(sums);
  }
  return table;
}

} // namespace osl
