#pragma once

#include <cassert>
#include <map>
#include <vector>

#include "osl/rational.hpp"

namespace osl {

// A constraint over nonnegative rational variables x_0..x_{n-1}:
// sum(coeff_i * x_i) rel rhs, with rel one of = or <=.
struct LinConstraint {
  enum class Rel { Eq, Le };
  std::map<int, Rat> coeff;
  Rel rel;
  Rat rhs;
};

// Exact feasibility check for { x >= 0 : constraints } via a phase-one
// simplex with Bland's rule.
inline bool lp_feasible(int nvars, const std::vector<LinConstraint> &cons) {
  int m = static_cast<int>(cons.size());
  if (m == 0) return true;
  // columns: nvars originals, then one slack per Le row, then one
  // artificial per row; final column is the rhs
  int nslack = 0;
  for (auto &c : cons)
    if (c.rel == LinConstraint::Rel::Le) ++nslack;
  int total = nvars + nslack + m;
  std::vector<std::vector<Rat>> tab(m, std::vector<Rat>(total + 1, Rat(0)));
  std::vector<int> basis(m);
  int slack_at = nvars;
  for (int i = 0; i < m; ++i) {
    for (auto &[j, q] : cons[i].coeff) {
      assert(j >= 0 && j < nvars);
      tab[i][j] = q;
    }
    Rat rhs = cons[i].rhs;
    int slack_col = -1;
    if (cons[i].rel == LinConstraint::Rel::Le) {
      slack_col = slack_at++;
      tab[i][slack_col] = 1;
    }
    if (rhs < 0) {
      for (int j = 0; j < total; ++j) tab[i][j] = -tab[i][j];
      rhs = -rhs;
    }
    tab[i][total] = rhs;
    int art = nvars + nslack + i;
    tab[i][art] = 1;
    basis[i] = art;
  }
  // objective: minimize sum of artificials == maximize -(sum of artificial rows)
  std::vector<Rat> obj(total + 1, Rat(0));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= total; ++j) obj[j] += tab[i][j];
  // basic artificial columns already have cost 1 folded in via the row sums;
  // reduced costs are obj[j] for non-basic j
  while (true) {
    int pivot_col = -1;
    for (int j = 0; j < total; ++j) {
      bool is_basic = false;
      for (int i = 0; i < m; ++i)
        if (basis[i] == j) is_basic = true;
      if (!is_basic && obj[j] > 0) {
        pivot_col = j;  // Bland: first improving column
        break;
      }
    }
    if (pivot_col < 0) break;
    int pivot_row = -1;
    Rat best;
    for (int i = 0; i < m; ++i) {
      if (tab[i][pivot_col] > 0) {
        Rat ratio = tab[i][total] / tab[i][pivot_col];
        if (pivot_row < 0 || ratio < best ||
            (ratio == best && basis[i] < basis[pivot_row])) {
          pivot_row = i;
          best = ratio;
        }
      }
    }
    if (pivot_row < 0) return false;  // unbounded phase-one: cannot happen, bail out
    Rat pv = tab[pivot_row][pivot_col];
    for (int j = 0; j <= total; ++j) tab[pivot_row][j] /= pv;
    for (int i = 0; i < m; ++i) {
      if (i == pivot_row) continue;
      Rat f = tab[i][pivot_col];
      if (f == 0) continue;
      for (int j = 0; j <= total; ++j) tab[i][j] -= f * tab[pivot_row][j];
    }
    Rat fo = obj[pivot_col];
    if (fo != 0)
      for (int j = 0; j <= total; ++j) obj[j] -= fo * tab[pivot_row][j];
    basis[pivot_row] = pivot_col;
  }
  return obj[total] == 0;  // all artificial mass driven to zero
}

} // namespace osl
