#include <gtest/gtest.h>

#include "helpers.hpp"
#include "osl/assertions.hpp"

using namespace osl;
using osl::testing::Rng;

namespace {

Store mkstore(std::initializer_list<std::pair<const char *, long>> kvs) {
  Store s;
  for (auto &[k, v] : kvs) s.set(k, Value(v));
  return s;
}

Heap mkheap(std::initializer_list<std::pair<long, std::optional<long>>> cells) {
  Heap h;
  for (auto &[a, c] : cells) h.m[Value(a)] = c ? Cell(Value(*c)) : Cell(std::nullopt);
  return h;
}

TEST(SymHeap, ParsePrintRoundTrip) {
  const char *texts[] = {
      "emp",
      "tru",
      "x |-> 1",
      "x !|->",
      "ls(x, y)",
      "x |-> 1 * y |-> 2",
      "x = null /\\ emp",
      "exists A. v |-> A * A |-> 3",
      "x = Y /\\ v |-> Y",
      "x != y /\\ x |-> 1 * tru",
  };
  for (auto *t : texts) {
    SymHeap h = parse_heap(t);
    SymHeap h2 = parse_heap(heap_str(h));
    EXPECT_EQ(heap_str(h), heap_str(h2)) << t;
  }
}

TEST(SymHeap, WildcardValueBecomesExistential) {
  SymHeap h = parse_heap("v |-> A * A |-> _");
  ASSERT_EQ(h.exists.size(), 1u);
  EXPECT_EQ(h.spatial.size(), 2u);
}

TEST(SymHeap, SubstitutionAvoidsCapture) {
  // substitute X := 1 under a binder X: bound occurrence untouched
  SymHeap h = parse_heap("exists X. x |-> X");
  SymHeap g = subst_heap(h, {{"X", econst(Value(1))}});
  EXPECT_EQ(heap_str(normalize_heap(g)), heap_str(normalize_heap(h)));

  // substituting x := X under binder X alpha-renames the binder
  SymHeap k = subst_heap(h, {{"x", evar("X")}});
  ASSERT_EQ(k.exists.size(), 1u);
  EXPECT_NE(k.exists[0], "X");
  auto fv = fv_heap(k);
  EXPECT_TRUE(fv.count("X"));
}

TEST(SymHeap, StarMergesAndAvoidsClash) {
  SymHeap a = parse_heap("exists B. x |-> B");
  SymHeap b = parse_heap("exists B. y |-> B * B |-> 2");
  SymHeap c = star(a, b);
  EXPECT_EQ(c.exists.size(), 2u);
  EXPECT_NE(c.exists[0], c.exists[1]);
  EXPECT_EQ(c.spatial.size(), 3u);
}

TEST(SymHeap, NormalizeCanonicalizes) {
  SymHeap a = parse_heap("exists A B. v |-> A * A |-> B /\\ x = 1 /\\ x = 1");
  SymHeap b = parse_heap("exists Q Z. x = 1 /\\ v |-> Q * Q |-> Z");
  EXPECT_TRUE(heap_equal_normalized(a, b));
  SymHeap c = parse_heap("tru * tru * x |-> 1");
  SymHeap d = parse_heap("x |-> 1 * tru");
  EXPECT_TRUE(heap_equal_normalized(c, d));
  EXPECT_FALSE(heap_equal_normalized(parse_heap("x |-> 1"), parse_heap("x |-> 1 * x |-> 1")));
}

TEST(SatHeap, SpecExamples) {
  // (s, emptyheap) |= emp
  EXPECT_TRUE(sat_heap(mkstore({{"x", 7}}), Heap{}, parse_heap("emp")));
  // negative heap assertion
  EXPECT_TRUE(sat_heap(mkstore({{"x", 1}}), mkheap({{1, std::nullopt}}), parse_heap("x !|->")));
  EXPECT_FALSE(sat_heap(mkstore({{"x", 1}}), mkheap({{1, 5}}), parse_heap("x !|->")));
  // two unfoldings of ls
  EXPECT_TRUE(sat_heap(mkstore({{"x", 1}, {"y", 3}}), mkheap({{1, 2}, {2, 3}}),
                       parse_heap("ls(x, y)")));
}

TEST(SatHeap, MoreCases) {
  EXPECT_FALSE(sat_heap(Store{}, mkheap({{1, 5}}), parse_heap("emp")));
  EXPECT_TRUE(sat_heap(Store{}, mkheap({{1, 5}}), parse_heap("tru")));
  EXPECT_TRUE(sat_heap(Store{}, Heap{}, parse_heap("tru")));
  EXPECT_TRUE(sat_heap(mkstore({{"x", 2}}), mkheap({{2, 9}}), parse_heap("exists A. x |-> A")));
  EXPECT_FALSE(sat_heap(mkstore({{"x", 2}}), mkheap({{2, 9}, {3, 0}}),
                        parse_heap("exists A. x |-> A")));
  EXPECT_TRUE(sat_heap(mkstore({{"x", 2}}), mkheap({{2, 9}, {3, 0}}),
                       parse_heap("exists A. x |-> A * tru")));
  // empty segment needs x = y
  EXPECT_TRUE(sat_heap(mkstore({{"x", 4}, {"y", 4}}), Heap{}, parse_heap("ls(x, y)")));
  EXPECT_FALSE(sat_heap(mkstore({{"x", 4}, {"y", 5}}), Heap{}, parse_heap("ls(x, y)")));
  // cyclic list is not a segment to y unless consumed exactly
  EXPECT_FALSE(sat_heap(mkstore({{"x", 1}, {"y", 9}}), mkheap({{1, 1}}), parse_heap("ls(x, y)")));
  // pure atoms
  EXPECT_TRUE(sat_heap(mkstore({}), Heap{}, parse_heap("x = null /\\ emp")));
  EXPECT_FALSE(sat_heap(mkstore({{"x", 1}}), Heap{}, parse_heap("x = null /\\ emp")));
  // P /\ Pi via star with pure-only heap
  SymHeap conj = star(parse_heap("x |-> 1"), parse_heap("x != y /\\ emp"));
  EXPECT_TRUE(sat_heap(mkstore({{"x", 1}, {"y", 2}}), mkheap({{1, 1}}), conj));
  EXPECT_FALSE(sat_heap(mkstore({{"x", 1}, {"y", 1}}), mkheap({{1, 1}}), conj));
}

TEST(Assertion, ParsePrintRoundTrip) {
  const char *texts[] = {
      "top",
      "ok: emp",
      "er: x !|->",
      "(ok: x |-> 1) (+) (er: x = null /\\ emp)",
      "(ok: emp) (+)_{99/100} (er: emp)",
      "((ok: emp))_{1/2}",
      "(ok: x = 1 /\\ emp) \\/ (top)_{0}",
  };
  for (auto *t : texts) {
    AssertPtr a = parse_assertion(t);
    AssertPtr b = parse_assertion(assertion_str(a));
    EXPECT_EQ(assertion_str(a), assertion_str(b)) << t;
  }
}

TEST(Assertion, OPlusSugarExpands) {
  AssertPtr a = parse_assertion("(ok: emp) (+)_{99/100} (er: emp)");
  ASSERT_EQ(a->kind, Assertion::Kind::OPlus);
  EXPECT_EQ(a->l->kind, Assertion::Kind::Weighted);
  EXPECT_EQ(a->l->weight, rat(99, 100));
  EXPECT_EQ(a->r->weight, rat(1, 100));
}

Weighting w_of(Algebra alg,
               std::initializer_list<std::pair<TaggedState, Rat>> entries) {
  Weighting m(alg);
  for (auto &[s, q] : entries) m.w.emplace(s, q);
  return m;
}

TEST(SatOutcome, BasicClause) {
  Store s;
  Heap h;
  auto m = unit_w(Algebra::Det, TaggedState::ok(s, h));
  EXPECT_TRUE(sat_outcome(m, parse_assertion("ok: emp")));
  EXPECT_FALSE(sat_outcome(m, parse_assertion("er: emp")));
  EXPECT_FALSE(sat_outcome(m, parse_assertion("ok: x |-> 1")));
  // und fails every basic assertion, even ok: tru
  auto u = w_of(Algebra::Nondet, {{TaggedState::ok(s, h), Rat(1)}, {TaggedState::und(), Rat(1)}});
  EXPECT_FALSE(sat_outcome(u, parse_assertion("ok: tru")));
  EXPECT_TRUE(sat_outcome(u, parse_assertion("top")));
  // mass must be one: half a state does not satisfy a basic assertion
  auto half = w_of(Algebra::Prob, {{TaggedState::ok(s, h), rat(1, 2)}});
  EXPECT_FALSE(sat_outcome(half, parse_assertion("ok: emp")));
  EXPECT_TRUE(sat_outcome(half, parse_assertion("(ok: emp)_{1/2}")));
}

TEST(SatOutcome, NondetOPlusSpecExample) {
  // the overview triple: malloc succeeded or crashed on null
  Store sok = mkstore({{"x", 1}});
  Heap hok = mkheap({{1, 1}});
  Store ser;  // x = 0 erased
  auto m = w_of(Algebra::Nondet,
                {{TaggedState::ok(sok, hok), Rat(1)}, {TaggedState::er(ser, Heap{}), Rat(1)}});
  AssertPtr phi = parse_assertion("(ok: x |-> 1) (+) (er: x = null /\\ emp)");
  EXPECT_TRUE(sat_outcome(m, phi));
  // drop-to-top weakening
  EXPECT_TRUE(sat_outcome(m, parse_assertion("(ok: x |-> 1) (+) top")));
  EXPECT_TRUE(sat_outcome(m, parse_assertion("(er: x = null /\\ emp) (+) top")));
  // but both states cannot be ok
  EXPECT_FALSE(sat_outcome(m, parse_assertion("(ok: tru) (+) (ok: tru)")));
}

TEST(SatOutcome, ProbWeightedSplit) {
  Store s0, s1;
  s1.set("x", Value(1));
  auto m = w_of(Algebra::Prob, {{TaggedState::ok(s0, Heap{}), rat(99, 100)},
                                {TaggedState::er(s1, Heap{}), rat(1, 100)}});
  EXPECT_TRUE(sat_outcome(m, parse_assertion("(ok: x = 0 /\\ emp) (+)_{99/100} (er: x = 1 /\\ emp)")));
  EXPECT_FALSE(sat_outcome(m, parse_assertion("(ok: x = 0 /\\ emp) (+)_{1/2} (er: x = 1 /\\ emp)")));
  // each unweighted basic conjunct demands mass one, so the plain (+) of
  // two basics cannot be met by a mass-one weighting
  EXPECT_FALSE(sat_outcome(m, parse_assertion("(ok: x = 0 /\\ emp) (+) (er: x = 1 /\\ emp)")));
  EXPECT_TRUE(sat_outcome(m, parse_assertion("((ok: x = 0 /\\ emp))_{99/100} (+) top")));
}

TEST(SatOutcome, FractionalSplitNeedsLp) {
  // one state must be split fractionally across two weighted copies
  Store s;
  auto m = w_of(Algebra::Prob, {{TaggedState::ok(s, Heap{}), Rat(1)}});
  EXPECT_TRUE(sat_outcome(m, parse_assertion("(ok: emp) (+)_{1/2} (ok: emp)")));
  EXPECT_TRUE(sat_outcome(m, parse_assertion("((ok: emp))_{1/3} (+) ((ok: emp))_{2/3}")));
  EXPECT_FALSE(sat_outcome(m, parse_assertion("((ok: emp))_{1/3} (+) ((ok: emp))_{1/3}")));
}

TEST(SatOutcome, WeightedZeroAndEmpty) {
  Weighting empty = empty_w(Algebra::Prob);
  EXPECT_TRUE(sat_outcome(empty, parse_assertion("(top)_{0}")));
  EXPECT_TRUE(sat_outcome(empty, parse_assertion("(ok: emp)_{0}")));
  EXPECT_TRUE(sat_outcome(empty, parse_assertion("top")));
  EXPECT_FALSE(sat_outcome(empty, parse_assertion("ok: emp")));
  Store s;
  auto m = w_of(Algebra::Prob, {{TaggedState::ok(s, Heap{}), rat(1, 2)}});
  EXPECT_FALSE(sat_outcome(m, parse_assertion("(top)_{0}")));
  // partial correctness shape: terminated or no outcomes
  EXPECT_TRUE(sat_outcome(empty, parse_assertion("(ok: emp) \\/ (top)_{0}")));
}

TEST(SatOutcome, OPlusCommutesAndAssociates) {
  Rng rng(23);
  const char *shapes[] = {
      "ok: emp",
      "er: tru",
      "top",
      "(ok: x |-> 1)",
      "((er: emp))_{1/2}",
  };
  SatCfg cfg;
  for (Algebra alg : {Algebra::Det, Algebra::Nondet, Algebra::Prob}) {
    int nshapes = alg == Algebra::Prob ? 5 : 4;
    for (int i = 0; i < 60; ++i) {
      Weighting m = osl::testing::random_weighting(rng, alg);
      AssertPtr a = parse_assertion(shapes[rng() % nshapes]);
      AssertPtr b = parse_assertion(shapes[rng() % nshapes]);
      AssertPtr c = parse_assertion(shapes[rng() % nshapes]);
      EXPECT_EQ(sat_outcome(m, aoplus(a, b), cfg), sat_outcome(m, aoplus(b, a), cfg));
      EXPECT_EQ(sat_outcome(m, aoplus(aoplus(a, b), c), cfg),
                sat_outcome(m, aoplus(a, aoplus(b, c)), cfg));
      // drop to top
      if (sat_outcome(m, aoplus(a, b), cfg)) EXPECT_TRUE(sat_outcome(m, aoplus(a, atop()), cfg));
    }
  }
}

TEST(Osep, SpecExamples) {
  SymHeap f = parse_heap("y |-> 2");
  EXPECT_EQ(assertion_str(osep(atop(), f)), "top");
  AssertPtr a = osep(parse_assertion("ok: x |-> 1"), f);
  EXPECT_TRUE(assertion_equal_normalized(a, parse_assertion("ok: x |-> 1 * y |-> 2")));
  AssertPtr b = osep(parse_assertion("((ok: emp))_{1/2} (+) (er: emp)"), f);
  EXPECT_TRUE(assertion_equal_normalized(
      b, parse_assertion("((ok: y |-> 2))_{1/2} (+) (er: y |-> 2)")));
}

TEST(Osep, SemanticSoundnessLemma) {
  // if m |= phi and m' extends every defined state with h' |= F (same
  // cells per store), then m' |= phi (+* F)
  Rng rng(5);
  SymHeap f = parse_heap("y |-> 2");
  for (Algebra alg : {Algebra::Nondet, Algebra::Prob}) {
    for (int i = 0; i < 40; ++i) {
      Weighting m = osl::testing::random_weighting(rng, alg);
      Weighting m2(alg);
      for (auto &[st, q] : m.w) {
        if (st.tag == Tag::Und) {
          m2.w.emplace(st, q);
          continue;
        }
        TaggedState t = st;
        t.store.set("y", Value(9));
        t.heap.m[Value(9)] = Value(2);
        m2.w.emplace(t, q);
      }
      const char *phis[] = {"top", "ok: tru", "(ok: tru) (+) top", "er: tru"};
      for (auto *pt : phis) {
        AssertPtr phi = parse_assertion(pt);
        // the y-update must not affect satisfaction of phi on m (no store
        // atoms mention y), so framing preserves it
        Weighting base(alg);
        for (auto &[st, q] : m.w) {
          if (st.tag == Tag::Und) {
            base.w.emplace(st, q);
            continue;
          }
          TaggedState t = st;
          t.store.set("y", Value(9));
          base.w.emplace(t, q);
        }
        if (sat_outcome(base, phi)) {
          EXPECT_TRUE(sat_outcome(m2, osep(phi, f))) << pt << " framed with y|->2 failed";
        }
      }
    }
  }
}

TEST(Normalize, AssertionCanonicalForms) {
  // nested weights multiply
  AssertPtr a = aweight(aweight(parse_assertion("ok: emp"), rat(99, 100)), rat(99, 100));
  EXPECT_EQ(assertion_str(normalize_assertion(a)), "(ok: emp)_{9801/10000}");
  // top (+) top collapses
  EXPECT_EQ(assertion_str(normalize_assertion(parse_assertion("top (+) top"))), "top");
  // zero-weight parts drop out of chains
  AssertPtr b = parse_assertion("(ok: emp) (+) (top)_{0}");
  EXPECT_EQ(assertion_str(normalize_assertion(b)), "ok: emp");
  // oplus order is canonical
  AssertPtr c1 = normalize_assertion(parse_assertion("(ok: x |-> 1) (+) (er: emp)"));
  AssertPtr c2 = normalize_assertion(parse_assertion("(er: emp) (+) (ok: x |-> 1)"));
  EXPECT_EQ(assertion_str(c1), assertion_str(c2));
}

TEST(FreshGen, MonotoneAndCollisionFree) {
  FreshGen g;
  g.reserve({"X0", "X2"});
  std::string a = g.fresh();
  std::string b = g.fresh();
  std::string c = g.fresh("X");
  EXPECT_NE(a, "X0");
  EXPECT_NE(b, a);
  EXPECT_NE(c, b);
  EXPECT_TRUE(is_lvar(a));
}

TEST(Substitute, SpecExamples) {
  // substitute(x=e, {x |-> X}) -> X=e
  SymHeap h = parse_heap("x = 3 /\\ emp");
  SymHeap g = subst_heap(h, {{"x", evar("X")}});
  EXPECT_EQ(heap_str(g), "X = 3 /\\ emp");
}

} // namespace
