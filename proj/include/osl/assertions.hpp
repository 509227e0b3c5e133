#pragma once

#include <functional>
#include <memory>

#include "osl/algebra.hpp"
#include "osl/linsolve.hpp"
#include "osl/symheap.hpp"
#include "osl/weighting.hpp"

namespace osl {

// Outcome assertion tree: top | phi \/ psi | phi (+) psi | (phi)_{a} | eps: P
struct Assertion;
using AssertPtr = std::shared_ptr<const Assertion>;

struct Assertion {
  enum class Kind { Top, Or, OPlus, Weighted, Basic };
  Kind kind;
  AssertPtr l, r;   // Or / OPlus; Weighted uses l
  Rat weight;       // Weighted
  Tag tag = Tag::Ok;  // Basic (Ok or Er only)
  SymHeap heap;     // Basic
};

inline AssertPtr atop() {
  auto a = std::make_shared<Assertion>();
  a->kind = Assertion::Kind::Top;
  return a;
}
inline AssertPtr aor(AssertPtr l, AssertPtr r) {
  auto a = std::make_shared<Assertion>();
  a->kind = Assertion::Kind::Or;
  a->l = std::move(l);
  a->r = std::move(r);
  return a;
}
inline AssertPtr aoplus(AssertPtr l, AssertPtr r) {
  auto a = std::make_shared<Assertion>();
  a->kind = Assertion::Kind::OPlus;
  a->l = std::move(l);
  a->r = std::move(r);
  return a;
}
inline AssertPtr aweight(AssertPtr phi, Rat w) {
  auto a = std::make_shared<Assertion>();
  a->kind = Assertion::Kind::Weighted;
  a->l = std::move(phi);
  a->weight = std::move(w);
  return a;
}
inline AssertPtr abasic(Tag t, SymHeap h) {
  assert(t != Tag::Und);
  auto a = std::make_shared<Assertion>();
  a->kind = Assertion::Kind::Basic;
  a->tag = t;
  a->heap = std::move(h);
  return a;
}
inline AssertPtr aok(SymHeap h) { return abasic(Tag::Ok, std::move(h)); }
inline AssertPtr aer(SymHeap h) { return abasic(Tag::Er, std::move(h)); }

// phi (+)_p psi is sugar for (phi)_p (+) (psi)_{1-p}
inline AssertPtr aoplus_p(AssertPtr l, AssertPtr r, const Rat &p) {
  return aoplus(aweight(std::move(l), p), aweight(std::move(r), Rat(1) - p));
}

// ---- traversal helpers ------------------------------------------------

inline void assertion_lvars(const AssertPtr &a, std::set<std::string> &out) {
  switch (a->kind) {
  case Assertion::Kind::Top: return;
  case Assertion::Kind::Or:
  case Assertion::Kind::OPlus:
    assertion_lvars(a->l, out);
    assertion_lvars(a->r, out);
    return;
  case Assertion::Kind::Weighted: assertion_lvars(a->l, out); return;
  case Assertion::Kind::Basic:
    for (auto &v : fv_lvars_heap(a->heap)) out.insert(v);
    return;
  }
}

inline std::set<std::string> fv_lvars_assertion(const AssertPtr &a) {
  std::set<std::string> s;
  assertion_lvars(a, s);
  return s;
}

inline std::set<std::string> fv_assertion(const AssertPtr &a) {
  std::set<std::string> out;
  std::function<void(const AssertPtr &)> go = [&](const AssertPtr &x) {
    switch (x->kind) {
    case Assertion::Kind::Top: return;
    case Assertion::Kind::Or:
    case Assertion::Kind::OPlus:
      go(x->l);
      go(x->r);
      return;
    case Assertion::Kind::Weighted: go(x->l); return;
    case Assertion::Kind::Basic:
      for (auto &v : fv_heap(x->heap)) out.insert(v);
      return;
    }
  };
  go(a);
  return out;
}

inline AssertPtr subst_assertion(const AssertPtr &a, const std::map<std::string, ExprPtr> &sub) {
  if (sub.empty()) return a;
  switch (a->kind) {
  case Assertion::Kind::Top: return a;
  case Assertion::Kind::Or: return aor(subst_assertion(a->l, sub), subst_assertion(a->r, sub));
  case Assertion::Kind::OPlus:
    return aoplus(subst_assertion(a->l, sub), subst_assertion(a->r, sub));
  case Assertion::Kind::Weighted: return aweight(subst_assertion(a->l, sub), a->weight);
  case Assertion::Kind::Basic: return abasic(a->tag, subst_heap(a->heap, sub));
  }
  return a;
}

// The outcome separating conjunction (+*): adds F to every basic leaf,
// leaves top alone, distributes over the connectives.
inline AssertPtr osep(const AssertPtr &a, const SymHeap &f) {
  switch (a->kind) {
  case Assertion::Kind::Top: return a;
  case Assertion::Kind::Or: return aor(osep(a->l, f), osep(a->r, f));
  case Assertion::Kind::OPlus: return aoplus(osep(a->l, f), osep(a->r, f));
  case Assertion::Kind::Weighted: return aweight(osep(a->l, f), a->weight);
  case Assertion::Kind::Basic: return abasic(a->tag, star(a->heap, f));
  }
  return a;
}

// ---- printing / parsing -------------------------------------------------

inline std::string assertion_str(const AssertPtr &a) {
  switch (a->kind) {
  case Assertion::Kind::Top: return "top";
  case Assertion::Kind::Or: return "(" + assertion_str(a->l) + " \\/ " + assertion_str(a->r) + ")";
  case Assertion::Kind::OPlus:
    return "(" + assertion_str(a->l) + " (+) " + assertion_str(a->r) + ")";
  case Assertion::Kind::Weighted:
    return "(" + assertion_str(a->l) + ")_{" + rat_str(a->weight) + "}";
  case Assertion::Kind::Basic: return tag_name(a->tag) + ": " + heap_str(a->heap);
  }
  return "?";
}

// Grammar (loosest to tightest): \/ , (+) and (+)_{p}, then atoms:
// top | ok: H | er: H | ( phi ) | ( phi )_{a}
inline AssertPtr parse_assertion_tokens(Lexer &lx);

namespace detail {

inline AssertPtr parse_assert_atom(Lexer &lx) {
  if (lx.eat_ident("top")) return atop();
  if (lx.at_sym("(")) {
    lx.next();
    AssertPtr inner = parse_assertion_tokens(lx);
    lx.expect_sym(")");
    if (lx.eat_sym("_")) {
      lx.expect_sym("{");
      if (lx.peek().kind != Token::Kind::Number) lx.fail("expected weight literal");
      auto q = parse_rat(lx.next().text);
      if (!q) lx.fail("bad weight literal");
      lx.expect_sym("}");
      return aweight(inner, *q);
    }
    return inner;
  }
  if (lx.at_ident("ok") || lx.at_ident("er")) {
    Tag t = lx.next().text == "ok" ? Tag::Ok : Tag::Er;
    lx.expect_sym(":");
    SymHeap h = parse_heap_tokens(lx);
    return abasic(t, h);
  }
  lx.fail("expected outcome assertion");
}

} // namespace detail

inline AssertPtr parse_assertion_tokens(Lexer &lx) {
  AssertPtr a = detail::parse_assert_atom(lx);
  while (true) {
    if (lx.at_sym("(+)")) {
      lx.next();
      if (lx.eat_sym("_")) {
        lx.expect_sym("{");
        if (lx.peek().kind != Token::Kind::Number) lx.fail("expected probability");
        auto p = parse_rat(lx.next().text);
        if (!p) lx.fail("bad probability");
        lx.expect_sym("}");
        a = aoplus_p(a, detail::parse_assert_atom(lx), *p);
      } else {
        a = aoplus(a, detail::parse_assert_atom(lx));
      }
    } else if (lx.eat_sym("\\/")) {
      a = aor(a, detail::parse_assert_atom(lx));
    } else {
      break;
    }
  }
  return a;
}

inline AssertPtr parse_assertion(const std::string &text) {
  Lexer lx(text);
  AssertPtr a = parse_assertion_tokens(lx);
  if (lx.peek().kind != Token::Kind::End) lx.fail("trailing input after assertion");
  return a;
}

// ---- normalization -------------------------------------------------------

// Canonical form for comparisons and output: weights multiplied through
// and unit weights dropped, (+) chains flattened and sorted with top
// merged and zero-weight parts dropped, \/ chains deduplicated, heaps
// normalized.
inline AssertPtr normalize_assertion(const AssertPtr &a0) {
  std::function<AssertPtr(const AssertPtr &)> go = [&](const AssertPtr &a) -> AssertPtr {
    switch (a->kind) {
    case Assertion::Kind::Top: return a;
    case Assertion::Kind::Basic: return abasic(a->tag, normalize_heap(a->heap));
    case Assertion::Kind::Weighted: {
      AssertPtr inner = go(a->l);
      Rat w = a->weight;
      while (inner->kind == Assertion::Kind::Weighted) {
        w *= inner->weight;
        inner = inner->l;
      }
      if (w == 1) return inner;
      return aweight(inner, w);
    }
    case Assertion::Kind::Or: {
      std::vector<AssertPtr> ds;
      std::function<void(const AssertPtr &)> collect = [&](const AssertPtr &x) {
        if (x->kind == Assertion::Kind::Or) {
          collect(x->l);
          collect(x->r);
        } else {
          ds.push_back(go(x));
        }
      };
      collect(a->l);
      collect(a->r);
      std::stable_sort(ds.begin(), ds.end(), [](const AssertPtr &x, const AssertPtr &y) {
        return assertion_str(x) < assertion_str(y);
      });
      ds.erase(std::unique(ds.begin(), ds.end(),
                           [](const AssertPtr &x, const AssertPtr &y) {
                             return assertion_str(x) == assertion_str(y);
                           }),
               ds.end());
      AssertPtr r = ds.front();
      for (size_t i = 1; i < ds.size(); ++i) r = aor(r, ds[i]);
      return r;
    }
    case Assertion::Kind::OPlus: {
      std::vector<AssertPtr> parts;
      std::function<void(const AssertPtr &)> collect = [&](const AssertPtr &x) {
        if (x->kind == Assertion::Kind::OPlus) {
          collect(x->l);
          collect(x->r);
        } else {
          parts.push_back(go(x));
        }
      };
      collect(a->l);
      collect(a->r);
      // zero-weight parts hold exactly of the empty sub-weighting; in a
      // chain with other parts they contribute nothing
      std::vector<AssertPtr> keep;
      bool saw_top = false;
      for (auto &p : parts) {
        if (p->kind == Assertion::Kind::Weighted && p->weight == 0) continue;
        if (p->kind == Assertion::Kind::Top) {
          if (saw_top) continue;  // top (+) top == top
          saw_top = true;
        }
        keep.push_back(p);
      }
      if (keep.empty()) return aweight(atop(), Rat(0));
      std::stable_sort(keep.begin(), keep.end(), [](const AssertPtr &x, const AssertPtr &y) {
        // basic leaves first for readable output, then weighted, then top
        auto rank = [](const AssertPtr &v) {
          switch (v->kind) {
          case Assertion::Kind::Basic: return 0;
          case Assertion::Kind::Weighted: return 1;
          case Assertion::Kind::Or: return 2;
          case Assertion::Kind::OPlus: return 3;
          case Assertion::Kind::Top: return 4;
          }
          return 5;
        };
        if (rank(x) != rank(y)) return rank(x) < rank(y);
        return assertion_str(x) < assertion_str(y);
      });
      AssertPtr r = keep.front();
      for (size_t i = 1; i < keep.size(); ++i) r = aoplus(r, keep[i]);
      return r;
    }
    }
    return a;
  };
  return go(a0);
}

inline bool assertion_equal_normalized(const AssertPtr &a, const AssertPtr &b) {
  return assertion_str(normalize_assertion(a)) == assertion_str(normalize_assertion(b));
}

// ---- satisfaction: symbolic heaps -------------------------------------

struct SatCfg {
  long witness_bound = 4;    // extra existential witness candidates 0..bound
  size_t support_budget = 16;
};

namespace detail {

// expression evaluation shared with the interpreter but kept heap-free
inline Value eval_heap_expr(const ExprPtr &e, const Store &s) {
  switch (e->kind) {
  case Expr::Kind::Var: return s.get(e->var);
  case Expr::Kind::Const: return e->val;
  case Expr::Kind::Bin: {
    Value l = eval_heap_expr(e->lhs, s), r = eval_heap_expr(e->rhs, s);
    switch (e->op) {
    case BinOp::Add: return l + r;
    case BinOp::Sub: return l - r;
    case BinOp::Eq: return Value(l == r ? 1 : 0);
    case BinOp::Le: return Value(l <= r ? 1 : 0);
    case BinOp::And: return Value(l != 0 && r != 0 ? 1 : 0);
    }
    return Value(0);
  }
  case Expr::Kind::Not: return Value(eval_heap_expr(e->lhs, s) == 0 ? 1 : 0);
  }
  return Value(0);
}

// Spatial matching over an explicit remaining-cells map; ls is unrolled
// against concrete cells so it terminates on every finite heap.
struct SpatialGoal {
  SpatialAtom atom;
  std::optional<Value> head;  // overrides atom.a for partially walked ls
};

inline bool match_spatial(const Store &s, std::map<Value, Cell> cells,
                          std::vector<SpatialGoal> goals, size_t i, bool absorb);

inline bool match_rest(const Store &s, const std::map<Value, Cell> &cells,
                       const std::vector<SpatialGoal> &goals, size_t i, bool absorb) {
  return match_spatial(s, cells, goals, i, absorb);
}

inline bool match_spatial(const Store &s, std::map<Value, Cell> cells,
                          std::vector<SpatialGoal> goals, size_t i, bool absorb) {
  if (i == goals.size()) return absorb || cells.empty();
  const SpatialGoal &g = goals[i];
  switch (g.atom.kind) {
  case SpatialAtom::Kind::Tru:
    return match_rest(s, cells, goals, i + 1, true);
  case SpatialAtom::Kind::PointsTo: {
    Value addr = g.head ? *g.head : eval_heap_expr(g.atom.a, s);
    auto it = cells.find(addr);
    if (it == cells.end() || !it->second) return false;
    if (*it->second != eval_heap_expr(g.atom.b, s)) return false;
    cells.erase(it);
    return match_rest(s, cells, goals, i + 1, absorb);
  }
  case SpatialAtom::Kind::Dangling: {
    Value addr = g.head ? *g.head : eval_heap_expr(g.atom.a, s);
    auto it = cells.find(addr);
    if (it == cells.end() || it->second) return false;
    cells.erase(it);
    return match_rest(s, cells, goals, i + 1, absorb);
  }
  case SpatialAtom::Kind::Ls: {
    Value head = g.head ? *g.head : eval_heap_expr(g.atom.a, s);
    Value tail = eval_heap_expr(g.atom.b, s);
    // empty segment
    if (head == tail && match_rest(s, cells, goals, i + 1, absorb)) return true;
    // one cell step
    auto it = cells.find(head);
    if (it == cells.end() || !it->second) return false;
    Value next = *it->second;
    std::map<Value, Cell> rest = cells;
    rest.erase(head);
    std::vector<SpatialGoal> goals2 = goals;
    goals2[i].head = next;
    return match_spatial(s, rest, goals2, i, absorb);
  }
  }
  return false;
}

inline bool sat_qf(const Store &s, const Heap &h, const SymHeap &p) {
  for (auto &a : p.pure) {
    bool eq = eval_heap_expr(a.l, s) == eval_heap_expr(a.r, s);
    if (a.eq != eq) return false;
  }
  std::vector<SpatialGoal> goals;
  for (auto &a : p.spatial) goals.push_back({a, std::nullopt});
  return match_spatial(s, h.m, std::move(goals), 0, false);
}

} // namespace detail

// Decides (s, h) |= P. Existential witnesses are drawn from the heap's
// domain and values, the store's values, 0 and a small configured range;
// incompleteness beyond that pool is accepted by design.
inline bool sat_heap(const Store &s, const Heap &h, const SymHeap &p, const SatCfg &cfg = {}) {
  if (p.exists.empty()) return detail::sat_qf(s, h, p);
  std::vector<Value> pool;
  std::set<Value> seen;
  auto add = [&](const Value &v) {
    if (seen.insert(v).second) pool.push_back(v);
  };
  for (long i = 0; i <= cfg.witness_bound; ++i) add(Value(i));
  for (auto &[a, c] : h.m) {
    add(a);
    if (c) add(*c);
  }
  for (auto &[x, v] : s.m) add(v);
  // enumerate assignments for the binders
  std::vector<std::string> vars = p.exists;
  SymHeap body = p;
  body.exists.clear();
  std::function<bool(size_t, Store)> go = [&](size_t i, Store cur) -> bool {
    if (i == vars.size()) return detail::sat_qf(cur, h, body);
    for (auto &v : pool) {
      Store next = cur.with(vars[i], v);
      if (go(i + 1, next)) return true;
    }
    return false;
  };
  return go(0, s);
}

// ---- satisfaction: outcome assertions ----------------------------------

struct SatBudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

struct Leaf {
  Rat w;  // cumulative weight along the (+)/weight path
  bool is_top;
  Tag tag;
  SymHeap heap;
};

// hoists \/ to the top; each case is an or-free tree
inline void or_cases(const AssertPtr &a, std::vector<AssertPtr> &out) {
  switch (a->kind) {
  case Assertion::Kind::Top:
  case Assertion::Kind::Basic: out.push_back(a); return;
  case Assertion::Kind::Or: {
    or_cases(a->l, out);
    or_cases(a->r, out);
    return;
  }
  case Assertion::Kind::Weighted: {
    std::vector<AssertPtr> inner;
    or_cases(a->l, inner);
    for (auto &c : inner) out.push_back(aweight(c, a->weight));
    return;
  }
  case Assertion::Kind::OPlus: {
    std::vector<AssertPtr> ls, rs;
    or_cases(a->l, ls);
    or_cases(a->r, rs);
    for (auto &x : ls)
      for (auto &y : rs) out.push_back(aoplus(x, y));
    return;
  }
  }
}

inline void flatten_leaves(const AssertPtr &a, const Rat &w, std::vector<Leaf> &out) {
  switch (a->kind) {
  case Assertion::Kind::Top: out.push_back({w, true, Tag::Ok, {}}); return;
  case Assertion::Kind::Basic: out.push_back({w, false, a->tag, a->heap}); return;
  case Assertion::Kind::Weighted: flatten_leaves(a->l, w * a->weight, out); return;
  case Assertion::Kind::OPlus:
    flatten_leaves(a->l, w, out);
    flatten_leaves(a->r, w, out);
    return;
  case Assertion::Kind::Or: assert(false && "or must be hoisted first"); return;
  }
}

inline bool leaf_accepts(const Leaf &lf, const TaggedState &st, const SatCfg &cfg) {
  if (lf.is_top) return true;
  if (st.tag == Tag::Und) return false;
  if ((st.tag == Tag::Ok) != (lf.tag == Tag::Ok)) return false;
  return sat_heap(st.store, st.heap, lf.heap, cfg);
}

// det: at most one state; it must land on exactly one weight-one leaf and
// no other basic leaf may remain unfilled.
inline bool sat_split_det(const Weighting &m, const std::vector<Leaf> &leaves,
                          const SatCfg &cfg) {
  std::vector<size_t> live;
  for (size_t j = 0; j < leaves.size(); ++j)
    if (leaves[j].w != 0) live.push_back(j);
  if (m.empty()) {
    for (size_t j : live)
      if (!leaves[j].is_top) return false;
    return true;
  }
  const TaggedState &st = m.w.begin()->first;
  for (size_t j : live) {
    if (!leaf_accepts(leaves[j], st, cfg)) continue;
    bool ok = true;
    for (size_t k : live)
      if (k != j && !leaves[k].is_top) ok = false;  // other basics would need mass one
    if (ok) return true;
  }
  return false;
}

// nondet: boolean covering problem; the maximal assignment is canonical.
inline bool sat_split_nondet(const Weighting &m, const std::vector<Leaf> &leaves,
                             const SatCfg &cfg) {
  for (auto &[st, q] : m.w) {
    (void)q;
    bool covered = false;
    for (auto &lf : leaves)
      if (lf.w != 0 && leaf_accepts(lf, st, cfg)) covered = true;
    if (!covered) return false;
  }
  for (auto &lf : leaves) {
    if (lf.w == 0 || lf.is_top) continue;
    bool filled = false;
    for (auto &[st, q] : m.w) {
      (void)q;
      if (leaf_accepts(lf, st, cfg)) filled = true;
    }
    if (!filled) return false;
  }
  return true;
}

// prob: exact linear feasibility over per-(leaf,state) mass variables.
inline bool sat_split_prob(const Weighting &m, const std::vector<Leaf> &leaves,
                           const SatCfg &cfg) {
  std::vector<size_t> live;
  for (size_t j = 0; j < leaves.size(); ++j)
    if (leaves[j].w != 0) live.push_back(j);
  std::vector<TaggedState> states;
  for (auto &[st, q] : m.w) {
    (void)q;
    states.push_back(st);
  }
  // var index per accepted (leaf, state) pair
  std::map<std::pair<size_t, size_t>, int> var;
  int nvars = 0;
  for (size_t a = 0; a < live.size(); ++a)
    for (size_t i = 0; i < states.size(); ++i)
      if (leaf_accepts(leaves[live[a]], states[i], cfg)) var[{a, i}] = nvars++;
  std::vector<LinConstraint> cons;
  for (size_t i = 0; i < states.size(); ++i) {
    LinConstraint c{{}, LinConstraint::Rel::Eq, m.w.at(states[i])};
    for (size_t a = 0; a < live.size(); ++a) {
      auto it = var.find({a, i});
      if (it != var.end()) c.coeff[it->second] += leaves[live[a]].w;
    }
    if (c.coeff.empty() && c.rhs != 0) return false;
    cons.push_back(std::move(c));
  }
  for (size_t a = 0; a < live.size(); ++a) {
    LinConstraint c{{},
                    leaves[live[a]].is_top ? LinConstraint::Rel::Le : LinConstraint::Rel::Eq,
                    Rat(1)};
    for (size_t i = 0; i < states.size(); ++i) {
      auto it = var.find({a, i});
      if (it != var.end()) c.coeff[it->second] += 1;
    }
    if (c.coeff.empty()) {
      if (!leaves[live[a]].is_top) return false;  // basic leaf with no acceptable state
      continue;
    }
    cons.push_back(std::move(c));
  }
  return lp_feasible(nvars, cons);
}

inline bool sat_orfree(const Weighting &m, const AssertPtr &a, const SatCfg &cfg) {
  if (a->kind == Assertion::Kind::Top) return true;
  std::vector<Leaf> leaves;
  flatten_leaves(a, Rat(1), leaves);
  bool all_zero = true;
  for (auto &lf : leaves)
    if (lf.w != 0) all_zero = false;
  if (all_zero) return m.empty();
  switch (m.alg) {
  case Algebra::Det: return sat_split_det(m, leaves, cfg);
  case Algebra::Nondet: return sat_split_nondet(m, leaves, cfg);
  case Algebra::Prob: return sat_split_prob(m, leaves, cfg);
  }
  return false;
}

} // namespace detail

// Decides m |= phi by exact search: disjunction cases are hoisted, the
// remaining (+)/weight tree is flattened to weighted leaves and the split
// is solved combinatorially (det/nondet) or as an exact LP (prob).
inline bool sat_outcome(const Weighting &m, const AssertPtr &a, const SatCfg &cfg = {}) {
  if (m.support_size() > cfg.support_budget)
    throw SatBudgetError("support size " + std::to_string(m.support_size()) +
                         " exceeds budget " + std::to_string(cfg.support_budget));
  std::vector<AssertPtr> cases;
  detail::or_cases(a, cases);
  for (auto &c : cases)
    if (detail::sat_orfree(m, c, cfg)) return true;
  return false;
}

} // namespace osl
