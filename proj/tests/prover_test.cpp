#include <gtest/gtest.h>

#include "helpers.hpp"
#include "osl/prover.hpp"
#include "osl/validation.hpp"

using namespace osl;
using osl::testing::Rng;

namespace {

TEST(ProvesFalse, SpecExamples) {
  EXPECT_TRUE(proves_false(parse_heap("x |-> 1 * x |-> 2")));
  EXPECT_TRUE(proves_false(parse_heap("x = 1 /\\ x != 1 /\\ emp")));
  EXPECT_FALSE(proves_false(parse_heap("ls(x, y)")));  // empty-segment model
}

TEST(ProvesFalse, MoreCases) {
  EXPECT_FALSE(proves_false(parse_heap("x |-> 1 * y |-> 2")));
  EXPECT_TRUE(proves_false(parse_heap("x = y /\\ x |-> 1 * y |-> 2")));
  EXPECT_TRUE(proves_false(parse_heap("x = null /\\ x |-> 1")));
  EXPECT_TRUE(proves_false(parse_heap("x |-> 1 * x !|->")));
  EXPECT_TRUE(proves_false(parse_heap("x = 1 /\\ y = 2 /\\ x = y /\\ emp")));
  EXPECT_FALSE(proves_false(parse_heap("x = y /\\ ls(x, y)")));
  // nonempty segment head conflicts with a cell at the same address
  EXPECT_TRUE(proves_false(parse_heap("x != y /\\ ls(x, y) * x |-> 3")));
  EXPECT_FALSE(proves_false(parse_heap("ls(x, y) * x |-> 3")));
  EXPECT_TRUE(proves_false(parse_heap("x != x /\\ emp")));
  // bound names do not capture free ones
  EXPECT_FALSE(proves_false(parse_heap("exists X. x = 1 /\\ X = 2 /\\ emp")));
  EXPECT_FALSE(proves_false(parse_heap("x = 5 /\\ emp")));
}

TEST(Entails, SpecExamples) {
  // e1=e2 /\ emp |= ls(e1,e2)
  EXPECT_TRUE(entails(parse_heap("x = y /\\ emp"), parse_heap("ls(x, y)")));
  // x|->1 |= exists X. x|->X
  EXPECT_TRUE(entails(parse_heap("x |-> 1"), parse_heap("exists X. x |-> X")));
  // tru absorbs
  EXPECT_TRUE(entails(parse_heap("x |-> 1 * y |-> 2"), parse_heap("x |-> 1 * tru")));
}

TEST(Entails, PositiveCases) {
  EXPECT_TRUE(entails(parse_heap("emp"), parse_heap("emp")));
  EXPECT_TRUE(entails(parse_heap("x |-> 1"), parse_heap("x |-> 1")));
  EXPECT_TRUE(entails(parse_heap("x |-> 1 * y |-> 2"), parse_heap("y |-> 2 * x |-> 1")));
  EXPECT_TRUE(entails(parse_heap("x |-> y"), parse_heap("ls(x, y)")));
  EXPECT_TRUE(entails(parse_heap("x |-> y * y |-> z"), parse_heap("ls(x, z)")));
  EXPECT_TRUE(entails(parse_heap("x |-> y * ls(y, 0)"), parse_heap("ls(x, 0)")));
  EXPECT_TRUE(entails(parse_heap("ls(x, y) * ls(y, null)"), parse_heap("ls(x, null)")));
  EXPECT_TRUE(entails(parse_heap("x = z /\\ x |-> 1"), parse_heap("z |-> 1")));
  EXPECT_TRUE(entails(parse_heap("x |-> 1"), parse_heap("tru")));
  EXPECT_TRUE(entails(parse_heap("emp"), parse_heap("tru")));
  EXPECT_TRUE(entails(parse_heap("x !|->"), parse_heap("exists A. A !|->")));
  // pure consequences
  EXPECT_TRUE(entails(parse_heap("x = 1 /\\ y = 1 /\\ emp"), parse_heap("x = y /\\ emp")));
  EXPECT_TRUE(entails(parse_heap("x |-> 1 * y |-> 2"), parse_heap("x != y /\\ tru")));
  EXPECT_TRUE(entails(parse_heap("x |-> 1"), parse_heap("x != null /\\ x |-> 1")));
  // inconsistent left side entails anything
  EXPECT_TRUE(entails(parse_heap("x = 1 /\\ x = 2 /\\ emp"), parse_heap("y |-> 9")));
  // existential instantiation via pure atoms
  EXPECT_TRUE(entails(parse_heap("x = 3 /\\ emp"), parse_heap("exists X. x = X /\\ emp")));
}

TEST(Entails, NegativeCases) {
  EXPECT_FALSE(entails(parse_heap("emp"), parse_heap("x |-> 1")));
  EXPECT_FALSE(entails(parse_heap("x |-> 1"), parse_heap("emp")));
  EXPECT_FALSE(entails(parse_heap("tru"), parse_heap("emp")));
  EXPECT_FALSE(entails(parse_heap("x |-> 1"), parse_heap("x |-> 2")));
  EXPECT_FALSE(entails(parse_heap("x |-> 1 * y |-> 2"), parse_heap("x |-> 1")));
  EXPECT_FALSE(entails(parse_heap("ls(x, y)"), parse_heap("x |-> y")));
  EXPECT_FALSE(entails(parse_heap("ls(x, y)"), parse_heap("emp")));
  EXPECT_FALSE(entails(parse_heap("emp"), parse_heap("x = 1 /\\ emp")));
  EXPECT_FALSE(entails(parse_heap("x !|->"), parse_heap("x |-> 0")));
  // a dangling cell is not a live cell
  EXPECT_FALSE(entails(parse_heap("x !|->"), parse_heap("exists A. x |-> A")));
}

TEST(InferFrame, SpecExamples) {
  auto contains = [](const std::vector<SymHeap> &fs, const char *want) {
    for (auto &f : fs)
      if (heap_equal_normalized(f, parse_heap(want))) return true;
    return false;
  };
  auto f1 = infer_frame(parse_heap("x |-> 1 * y |-> 2"), parse_heap("x |-> 1"));
  EXPECT_TRUE(contains(f1, "y |-> 2"));
  auto f2 = infer_frame(parse_heap("x |-> 1"), parse_heap("x |-> 1"));
  EXPECT_TRUE(contains(f2, "emp"));
  auto f3 = infer_frame(parse_heap("x |-> y * ls(y, 0)"), parse_heap("ls(x, 0)"));
  EXPECT_TRUE(contains(f3, "emp"));
  auto f4 = infer_frame(parse_heap("emp"), parse_heap("x |-> 1"));
  EXPECT_TRUE(f4.empty());  // no proof
}

TEST(InferFrame, ResultsReverify) {
  const char *ps[] = {"x |-> 1 * y |-> 2 * z !|->", "ls(x, y) * y |-> 0",
                      "x |-> y * y |-> z * tru"};
  const char *qs[] = {"x |-> 1", "ls(x, 0)", "exists A. x |-> A", "tru", "emp"};
  for (auto *pt : ps)
    for (auto *qt : qs) {
      SymHeap p = parse_heap(pt), q = parse_heap(qt);
      for (auto &f : infer_frame(p, q))
        EXPECT_TRUE(entails(p, star(q, f)))
            << pt << " |= " << qt << " * " << heap_str(f);
    }
}

// ---- randomized soundness against the bounded-model oracle -------------

SymHeap random_heap_formula(Rng &rng, int max_atoms, bool allow_tru) {
  static const char *vars[] = {"x", "y", "z", "w"};
  static const char *lvars[] = {"A", "B"};
  auto rnd_expr = [&](bool allow_const) -> ExprPtr {
    long k = osl::testing::rnd(rng, 0, allow_const ? 7 : 5);
    if (k < 4) return evar(vars[k]);
    if (k < 6) return evar(lvars[k - 4]);
    return econst(Value(osl::testing::rnd(rng, 0, 4)));
  };
  SymHeap h;
  int n = static_cast<int>(osl::testing::rnd(rng, 0, max_atoms));
  for (int i = 0; i < n; ++i) {
    switch (osl::testing::rnd(rng, 0, 5)) {
    case 0: h.pure.push_back({true, rnd_expr(true), rnd_expr(true)}); break;
    case 1: h.pure.push_back({false, rnd_expr(true), rnd_expr(true)}); break;
    case 2: h.spatial.push_back(sp_pts(rnd_expr(false), rnd_expr(true))); break;
    case 3: h.spatial.push_back(sp_dangling(rnd_expr(false))); break;
    case 4: h.spatial.push_back(sp_ls(rnd_expr(false), rnd_expr(true))); break;
    case 5:
      if (allow_tru)
        h.spatial.push_back(sp_tru());
      else
        h.spatial.push_back(sp_pts(rnd_expr(false), rnd_expr(true)));
      break;
    }
  }
  // occasionally bind one of the lvars
  if (osl::testing::rnd(rng, 0, 3) == 0) {
    auto fv = fv_heap(h);
    if (fv.count("A")) h.exists.push_back("A");
  }
  return h;
}

TEST(ProverSoundness, EntailsAgainstEnumeration) {
  Rng rng(101);
  Bounds bounds;
  bounds.max_addresses = 5;
  bounds.max_values = 3;
  bounds.ls_max_len = 2;
  int positives = 0;
  for (int i = 0; i < 400; ++i) {
    SymHeap p = random_heap_formula(rng, 3, false);
    SymHeap q = random_heap_formula(rng, 2, true);
    if (!entails(p, q)) continue;
    ++positives;
    for (auto &[s, h] : enumerate_models(p, bounds)) {
      EXPECT_TRUE(sat_heap(s, h, q, bounds.sat_cfg()))
          << heap_str(p) << " |= " << heap_str(q) << " but countermodel " << store_str(s)
          << " " << osl::heap_str(h);
    }
  }
  EXPECT_GT(positives, 20);  // the generator should produce some provable pairs
}

TEST(ProverSoundness, ProvesFalseMeansNoModels) {
  Rng rng(202);
  Bounds bounds;
  bounds.max_addresses = 5;
  bounds.max_values = 3;
  int flagged = 0;
  for (int i = 0; i < 300; ++i) {
    SymHeap p = random_heap_formula(rng, 3, false);
    if (!proves_false(p)) continue;
    ++flagged;
    EXPECT_TRUE(enumerate_models(p, bounds).empty()) << heap_str(p);
  }
  EXPECT_GT(flagged, 5);
}

TEST(EnumerateModels, BasicShapes) {
  Bounds bounds;
  bounds.max_addresses = 4;
  bounds.max_values = 2;
  auto ms = enumerate_models(parse_heap("emp"), bounds);
  ASSERT_EQ(ms.size(), 1u);
  EXPECT_TRUE(ms[0].second.m.empty());

  auto pts = enumerate_models(parse_heap("x |-> 1"), bounds);
  EXPECT_FALSE(pts.empty());
  for (auto &[s, h] : pts) {
    EXPECT_EQ(h.m.size(), 1u);
    EXPECT_TRUE(sat_heap(s, h, parse_heap("x |-> 1")));
  }

  auto segs = enumerate_models(parse_heap("x != y /\\ ls(x, y)"), bounds);
  EXPECT_FALSE(segs.empty());
  bool has_len2 = false;
  for (auto &[s, h] : segs) has_len2 |= h.m.size() == 2;
  EXPECT_TRUE(has_len2);

  EXPECT_TRUE(enumerate_models(parse_heap("x = 1 /\\ x = 2 /\\ emp"), bounds).empty());
}

} // namespace
