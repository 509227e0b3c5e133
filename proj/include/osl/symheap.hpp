#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "osl/ast.hpp"
#include "osl/parse.hpp"

namespace osl {

// e1 = e2 or e1 != e2 over program variables, logical variables, constants.
struct PureAtom {
  bool eq;
  ExprPtr l, r;
};

// PointsTo with no value is the negative assertion e !|-> (e maps to _|_).
struct SpatialAtom {
  enum class Kind { PointsTo, Dangling, Ls, Tru };
  Kind kind;
  ExprPtr a;  // address / segment head
  ExprPtr b;  // pointed-to value / segment end
};

inline SpatialAtom sp_pts(ExprPtr a, ExprPtr b) {
  return {SpatialAtom::Kind::PointsTo, std::move(a), std::move(b)};
}
inline SpatialAtom sp_dangling(ExprPtr a) {
  return {SpatialAtom::Kind::Dangling, std::move(a), nullptr};
}
inline SpatialAtom sp_ls(ExprPtr a, ExprPtr b) {
  return {SpatialAtom::Kind::Ls, std::move(a), std::move(b)};
}
inline SpatialAtom sp_tru() { return {SpatialAtom::Kind::Tru, nullptr, nullptr}; }

// Symbolic heap: existentially bound logical variables over a pure
// conjunction and a *-joined spatial part. An empty spatial vector is emp.
struct SymHeap {
  std::vector<std::string> exists;
  std::vector<PureAtom> pure;
  std::vector<SpatialAtom> spatial;

  bool is_emp_spatial() const { return spatial.empty(); }
  bool has_tru() const {
    for (auto &a : spatial)
      if (a.kind == SpatialAtom::Kind::Tru) return true;
    return false;
  }
};

inline SymHeap emp_heap() { return {}; }

inline SymHeap tru_heap() {
  SymHeap h;
  h.spatial.push_back(sp_tru());
  return h;
}

// ---- free variables ----------------------------------------------------

inline void heap_vars(const SymHeap &p, std::set<std::string> &out) {
  for (auto &a : p.pure) {
    collect_vars(a.l, out);
    collect_vars(a.r, out);
  }
  for (auto &a : p.spatial) {
    if (a.a) collect_vars(a.a, out);
    if (a.b) collect_vars(a.b, out);
  }
}

inline std::set<std::string> fv_heap(const SymHeap &p) {
  std::set<std::string> all;
  heap_vars(p, all);
  for (auto &x : p.exists) all.erase(x);
  return all;
}

inline std::set<std::string> fv_lvars_heap(const SymHeap &p) {
  std::set<std::string> out;
  for (auto &v : fv_heap(p))
    if (is_lvar(v)) out.insert(v);
  return out;
}

inline std::set<std::string> fv_progvars_heap(const SymHeap &p) {
  std::set<std::string> out;
  for (auto &v : fv_heap(p))
    if (!is_lvar(v)) out.insert(v);
  return out;
}

// ---- fresh logical variables -------------------------------------------

// Monotone fresh-name source for one analysis session; skips names already
// used by parsed input.
struct FreshGen {
  std::set<std::string> reserved;
  long next = 0;

  std::string fresh(const std::string &hint = "X") {
    std::string base = hint.empty() || !is_lvar(hint) ? std::string("X") : hint;
    // strip digits so hints like "X3" regenerate as X<n>
    while (base.size() > 1 && isdigit(static_cast<unsigned char>(base.back()))) base.pop_back();
    while (true) {
      std::string cand = base + std::to_string(next++);
      if (!reserved.count(cand)) {
        reserved.insert(cand);
        return cand;
      }
    }
  }
  void reserve(const std::set<std::string> &names) {
    reserved.insert(names.begin(), names.end());
  }
};

// ---- substitution ------------------------------------------------------

inline SymHeap subst_heap(const SymHeap &p, const std::map<std::string, ExprPtr> &sub);

namespace detail {

// Alpha-renames bound variables that collide with the substitution's
// domain or range.
inline SymHeap avoid_capture(const SymHeap &p, const std::map<std::string, ExprPtr> &sub) {
  std::set<std::string> range_vars;
  for (auto &[k, e] : sub) {
    (void)k;
    collect_vars(e, range_vars);
  }
  SymHeap out = p;
  std::map<std::string, ExprPtr> renames;
  std::set<std::string> used;
  heap_vars(p, used);
  used.insert(range_vars.begin(), range_vars.end());
  for (auto &x : out.exists) {
    if (sub.count(x) || range_vars.count(x)) {
      std::string nx = x;
      int i = 0;
      while (used.count(nx)) nx = x + "_" + std::to_string(i++);
      used.insert(nx);
      renames[x] = evar(nx);
      x = nx;
    }
  }
  if (renames.empty()) return out;
  for (auto &a : out.pure) {
    a.l = subst_expr(a.l, renames);
    a.r = subst_expr(a.r, renames);
  }
  for (auto &a : out.spatial) {
    if (a.a) a.a = subst_expr(a.a, renames);
    if (a.b) a.b = subst_expr(a.b, renames);
  }
  return out;
}

} // namespace detail

inline SymHeap subst_heap(const SymHeap &p, const std::map<std::string, ExprPtr> &sub) {
  if (sub.empty()) return p;
  SymHeap out = detail::avoid_capture(p, sub);
  std::map<std::string, ExprPtr> eff = sub;
  for (auto &x : out.exists) eff.erase(x);  // bound names are untouched
  if (eff.empty()) return out;
  for (auto &a : out.pure) {
    a.l = subst_expr(a.l, eff);
    a.r = subst_expr(a.r, eff);
  }
  for (auto &a : out.spatial) {
    if (a.a) a.a = subst_expr(a.a, eff);
    if (a.b) a.b = subst_expr(a.b, eff);
  }
  return out;
}

// Strips the quantifier prefix, renaming each bound variable to a fresh
// logical variable. Returns the quantifier-free body.
inline SymHeap skolemize(const SymHeap &p, FreshGen &gen) {
  if (p.exists.empty()) return p;
  std::map<std::string, ExprPtr> sub;
  for (auto &x : p.exists) sub[x] = evar(gen.fresh(x));
  SymHeap body = p;
  body.exists.clear();
  return subst_heap(body, sub);
}

// Alpha-renames the binders to fresh names (keeping them bound); used to
// keep distinct formulas' binders apart before joint searches.
inline SymHeap freshen_binders(const SymHeap &p, FreshGen &gen) {
  if (p.exists.empty()) return p;
  std::map<std::string, ExprPtr> sub;
  std::vector<std::string> names;
  for (auto &x : p.exists) {
    std::string nx = gen.fresh(x);
    sub[x] = evar(nx);
    names.push_back(nx);
  }
  SymHeap body = p;
  body.exists.clear();
  body = subst_heap(body, sub);
  body.exists = names;
  return body;
}

// ---- star & conjunction -------------------------------------------------

// P * Q: merges quantifier prefixes (alpha-renaming Q's to avoid capture),
// pure parts and spatial parts.
inline SymHeap star(const SymHeap &p, const SymHeap &q) {
  SymHeap out = p;
  SymHeap q2 = q;
  if (!q.exists.empty()) {
    std::set<std::string> clash;
    heap_vars(p, clash);
    for (auto &x : p.exists) clash.insert(x);
    std::map<std::string, ExprPtr> ren;
    std::set<std::string> used = clash;
    heap_vars(q, used);
    for (auto &x : q2.exists) {
      if (clash.count(x)) {
        std::string nx = x;
        int i = 0;
        while (used.count(nx)) nx = x + "_" + std::to_string(i++);
        used.insert(nx);
        ren[x] = evar(nx);
        x = nx;
      }
    }
    if (!ren.empty()) {
      for (auto &a : q2.pure) {
        a.l = subst_expr(a.l, ren);
        a.r = subst_expr(a.r, ren);
      }
      for (auto &a : q2.spatial) {
        if (a.a) a.a = subst_expr(a.a, ren);
        if (a.b) a.b = subst_expr(a.b, ren);
      }
    }
  }
  out.exists.insert(out.exists.end(), q2.exists.begin(), q2.exists.end());
  out.pure.insert(out.pure.end(), q2.pure.begin(), q2.pure.end());
  out.spatial.insert(out.spatial.end(), q2.spatial.begin(), q2.spatial.end());
  return out;
}

// P /\ Pi, implemented as P * (Pi /\ emp).
inline SymHeap heap_with_pure(const SymHeap &p, std::vector<PureAtom> atoms) {
  SymHeap q;
  q.pure = std::move(atoms);
  return star(p, q);
}

// ---- printing ------------------------------------------------------------

inline std::string pure_atom_str(const PureAtom &a) {
  return expr_str(a.l) + (a.eq ? " = " : " != ") + expr_str(a.r);
}

inline std::string spatial_atom_str(const SpatialAtom &a) {
  switch (a.kind) {
  case SpatialAtom::Kind::PointsTo: return expr_str(a.a) + " |-> " + expr_str(a.b);
  case SpatialAtom::Kind::Dangling: return expr_str(a.a) + " !|->";
  case SpatialAtom::Kind::Ls: return "ls(" + expr_str(a.a) + ", " + expr_str(a.b) + ")";
  case SpatialAtom::Kind::Tru: return "tru";
  }
  return "?";
}

inline std::string heap_str(const SymHeap &p) {
  std::ostringstream os;
  if (!p.exists.empty()) {
    os << "exists";
    for (auto &x : p.exists) os << " " << x;
    os << ". ";
  }
  bool first = true;
  for (auto &a : p.pure) {
    if (!first) os << " /\\ ";
    first = false;
    os << pure_atom_str(a);
  }
  if (p.spatial.empty()) {
    if (!first) os << " /\\ ";
    os << "emp";
  } else {
    for (auto &a : p.spatial) {
      if (!first) os << " * ";
      first = false;
      os << spatial_atom_str(a);
    }
  }
  return os.str();
}

// ---- normalization --------------------------------------------------------

// Canonical form used for deduplication and comparison: trivial pure atoms
// dropped, duplicate pure atoms and extra tru collapsed, atoms sorted,
// unused binders removed, bound variables renamed in occurrence order.
inline SymHeap normalize_heap(const SymHeap &p0) {
  SymHeap p = p0;
  // drop e = e, dedupe pure atoms (by print), orient equalities
  std::vector<PureAtom> pure;
  std::set<std::string> seen;
  for (auto &a : p.pure) {
    PureAtom at = a;
    if (expr_str(at.l) > expr_str(at.r)) std::swap(at.l, at.r);
    if (at.eq && expr_equal(at.l, at.r)) continue;
    std::string key = pure_atom_str(at);
    if (seen.insert(key).second) pure.push_back(at);
  }
  p.pure = std::move(pure);
  // collapse tru * tru
  std::vector<SpatialAtom> spatial;
  bool saw_tru = false;
  for (auto &a : p.spatial) {
    if (a.kind == SpatialAtom::Kind::Tru) {
      if (saw_tru) continue;
      saw_tru = true;
    }
    spatial.push_back(a);
  }
  p.spatial = std::move(spatial);
  // drop unused binders
  std::set<std::string> used;
  heap_vars(p, used);
  std::vector<std::string> ex;
  for (auto &x : p.exists)
    if (used.count(x) && std::find(ex.begin(), ex.end(), x) == ex.end()) ex.push_back(x);
  p.exists = ex;

  // canonical bound-variable names: sort atoms with binders blanked, then
  // rename by first occurrence and sort again
  std::set<std::string> bound(p.exists.begin(), p.exists.end());
  std::map<std::string, ExprPtr> blanks;
  for (auto &x : bound) blanks[x] = evar("_B");
  auto sort_key_pure = [&](const PureAtom &a) {
    PureAtom t = a;
    t.l = subst_expr(t.l, blanks);
    t.r = subst_expr(t.r, blanks);
    return pure_atom_str(t);
  };
  auto sort_key_spatial = [&](const SpatialAtom &a) {
    SpatialAtom t = a;
    if (t.a) t.a = subst_expr(t.a, blanks);
    if (t.b) t.b = subst_expr(t.b, blanks);
    return std::string(t.kind == SpatialAtom::Kind::Tru ? "zz" : "") + spatial_atom_str(t);
  };
  std::stable_sort(p.pure.begin(), p.pure.end(),
                   [&](auto &a, auto &b) { return sort_key_pure(a) < sort_key_pure(b); });
  std::stable_sort(p.spatial.begin(), p.spatial.end(), [&](auto &a, auto &b) {
    return sort_key_spatial(a) < sort_key_spatial(b);
  });
  if (!p.exists.empty()) {
    // rename binders in first-occurrence order over the sorted atoms
    std::vector<std::string> order;
    auto note = [&](const ExprPtr &e) {
      if (!e) return;
      std::set<std::string> vs = expr_vars(e);
      for (auto &v : vs)
        if (bound.count(v) && std::find(order.begin(), order.end(), v) == order.end())
          order.push_back(v);
    };
    for (auto &a : p.pure) {
      note(a.l);
      note(a.r);
    }
    for (auto &a : p.spatial) {
      note(a.a);
      note(a.b);
    }
    std::map<std::string, ExprPtr> ren;
    std::vector<std::string> newex;
    std::set<std::string> freevs = fv_heap(p);
    for (size_t i = 0; i < order.size(); ++i) {
      std::string nx = "B" + std::to_string(i);
      while (freevs.count(nx)) nx += "_";
      ren[order[i]] = evar(nx);
      newex.push_back(nx);
    }
    for (auto &a : p.pure) {
      a.l = subst_expr(a.l, ren);
      a.r = subst_expr(a.r, ren);
    }
    for (auto &a : p.spatial) {
      if (a.a) a.a = subst_expr(a.a, ren);
      if (a.b) a.b = subst_expr(a.b, ren);
    }
    p.exists = newex;
    std::stable_sort(p.pure.begin(), p.pure.end(),
                     [](auto &a, auto &b) { return pure_atom_str(a) < pure_atom_str(b); });
    std::stable_sort(p.spatial.begin(), p.spatial.end(), [](auto &a, auto &b) {
      return (std::string(a.kind == SpatialAtom::Kind::Tru ? "zz" : "") + spatial_atom_str(a)) <
             (std::string(b.kind == SpatialAtom::Kind::Tru ? "zz" : "") + spatial_atom_str(b));
    });
  }
  return p;
}

inline bool heap_equal_normalized(const SymHeap &a, const SymHeap &b) {
  return heap_str(normalize_heap(a)) == heap_str(normalize_heap(b));
}

// ---- parsing ---------------------------------------------------------------

// Grammar: [exists X Y.] atom (('*' | '/\') atom)* where atom is a pure
// equality/disequality, emp, tru, e |-> e, e |-> _, e !|-> or ls(e, e).
inline SymHeap parse_heap_tokens(Lexer &lx) {
  SymHeap out;
  detail::ProgParser ep{lx, true};
  long anon = 0;
  if (lx.eat_ident("exists")) {
    while (lx.peek().kind == Token::Kind::Ident && !lx.at_ident("emp") && !lx.at_ident("tru")) {
      out.exists.push_back(lx.next().text);
      if (lx.at_sym(".")) break;
    }
    lx.expect_sym(".");
  }
  while (true) {
    if (lx.eat_ident("emp")) {
      // contributes nothing
    } else if (lx.eat_ident("tru")) {
      out.spatial.push_back(sp_tru());
    } else if (lx.eat_ident("ls")) {
      lx.expect_sym("(");
      ExprPtr a = ep.parse_add();
      lx.expect_sym(",");
      ExprPtr b = ep.parse_add();
      lx.expect_sym(")");
      out.spatial.push_back(sp_ls(a, b));
    } else {
      ExprPtr a = ep.parse_add();
      if (lx.eat_sym("|->")) {
        if (lx.eat_sym("_")) {
          std::string v = "W" + std::to_string(anon++) + "_anon";
          out.exists.push_back(v);
          out.spatial.push_back(sp_pts(a, evar(v)));
        } else {
          out.spatial.push_back(sp_pts(a, ep.parse_add()));
        }
      } else if (lx.eat_sym("!|->")) {
        out.spatial.push_back(sp_dangling(a));
      } else if (lx.eat_sym("=")) {
        out.pure.push_back({true, a, ep.parse_add()});
      } else if (lx.eat_sym("!=")) {
        out.pure.push_back({false, a, ep.parse_add()});
      } else {
        lx.fail("expected heap atom");
      }
    }
    if (lx.eat_sym("*") || lx.eat_sym("/\\")) continue;
    break;
  }
  return out;
}

inline SymHeap parse_heap(const std::string &text) {
  Lexer lx(text);
  SymHeap h = parse_heap_tokens(lx);
  if (lx.peek().kind != Token::Kind::End) lx.fail("trailing input after symbolic heap");
  return h;
}

} // namespace osl
