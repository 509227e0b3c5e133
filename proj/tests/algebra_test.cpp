#include <gtest/gtest.h>

#include "helpers.hpp"
#include "osl/weighting.hpp"

using namespace osl;
using osl::testing::Rng;

namespace {

Weight det(long v) { return make_weight(Algebra::Det, Rat(v)); }
Weight nd(long v) { return make_weight(Algebra::Nondet, Rat(v)); }
Weight pr(long n, long d) { return make_weight(Algebra::Prob, rat(n, d)); }

TEST(Weight, PartialAdd) {
  EXPECT_FALSE(wadd(det(1), det(1)).has_value());
  EXPECT_EQ(wadd(det(1), det(0))->v, 1);
  EXPECT_EQ(wadd(nd(1), nd(1))->v, 1);
  EXPECT_EQ(wadd(nd(0), nd(0))->v, 0);
  EXPECT_FALSE(wadd(pr(3, 4), pr(1, 2)).has_value());
  EXPECT_EQ(wadd(pr(1, 2), pr(1, 3))->v, rat(5, 6));
}

TEST(Weight, Mul) {
  EXPECT_EQ(wmul(det(1), det(1)).v, 1);
  EXPECT_EQ(wmul(pr(99, 100), pr(99, 100)).v, rat(9801, 10000));
  EXPECT_EQ(wmul(pr(1, 2), pr(0, 1)).v, 0);
  EXPECT_EQ(wmul(nd(1), nd(0)).v, 0);
}

TEST(Weight, SemiringLawsRandomized) {
  Rng rng(7);
  for (Algebra alg : {Algebra::Det, Algebra::Nondet, Algebra::Prob}) {
    for (int i = 0; i < 500; ++i) {
      Weight a = make_weight(alg, osl::testing::random_weight_value(rng, alg));
      Weight b = make_weight(alg, osl::testing::random_weight_value(rng, alg));
      Weight c = make_weight(alg, osl::testing::random_weight_value(rng, alg));
      // commutativity
      auto ab = wadd(a, b), ba = wadd(b, a);
      ASSERT_EQ(ab.has_value(), ba.has_value());
      if (ab) EXPECT_EQ(ab->v, ba->v);
      // associativity where defined
      auto bc = wadd(b, c);
      if (ab && bc) {
        auto l = wadd(*ab, c), r = wadd(a, *bc);
        ASSERT_EQ(l.has_value(), r.has_value());
        if (l) EXPECT_EQ(l->v, r->v);
      }
      // distributivity where the sum is defined
      if (bc) {
        auto lhs = wmul(a, *bc);
        auto rhs = wadd(wmul(a, b), wmul(a, c));
        ASSERT_TRUE(rhs.has_value());
        EXPECT_EQ(lhs.v, rhs->v);
      }
      // identities and annihilator
      EXPECT_EQ(wadd(a, wzero(alg))->v, a.v);
      EXPECT_EQ(wmul(a, wone(alg)).v, a.v);
      EXPECT_EQ(wmul(a, wzero(alg)).v, 0);
    }
  }
}

TEST(Weighting, UnitAndMass) {
  Store s;
  TaggedState ok = TaggedState::ok(s, Heap{});
  for (Algebra alg : {Algebra::Det, Algebra::Nondet, Algebra::Prob}) {
    Weighting m = unit_w(alg, ok);
    EXPECT_EQ(m.support_size(), 1u);
    EXPECT_EQ(m.at(ok), 1);
    EXPECT_EQ(mass(m)->v, 1);
    Weighting u = unit_w(alg, TaggedState::und());
    EXPECT_EQ(u.at(TaggedState::und()), 1);
    EXPECT_EQ(mass(empty_w(alg))->v, 0);
  }
}

TEST(Weighting, BindLeftIdentityAndPassthrough) {
  Store s0, s1;
  s1.set("x", Value(1));
  Heap h;
  auto k = [&](const Store &, const Heap &) {
    return unit_w(Algebra::Nondet, TaggedState::ok(s1, h));
  };
  Weighting left = bind_w(unit_w(Algebra::Nondet, TaggedState::ok(s0, h)), k);
  EXPECT_EQ(left, k(s0, h));

  Weighting er = unit_w(Algebra::Nondet, TaggedState::er(s0, h));
  EXPECT_EQ(bind_w(er, k), er);
  Weighting und = unit_w(Algebra::Nondet, TaggedState::und());
  EXPECT_EQ(bind_w(und, k), und);
}

TEST(Weighting, BindMergesProbMass) {
  Store s1, s2, t;
  s1.set("x", Value(1));
  s2.set("x", Value(2));
  t.set("y", Value(7));
  Heap h;
  Weighting m(Algebra::Prob);
  m.w.emplace(TaggedState::ok(s1, h), rat(1, 2));
  m.w.emplace(TaggedState::ok(s2, h), rat(1, 2));
  auto k = [&](const Store &, const Heap &) {
    return unit_w(Algebra::Prob, TaggedState::ok(t, h));
  };
  Weighting r = bind_w(m, k);
  EXPECT_EQ(r.support_size(), 1u);
  EXPECT_EQ(r.at(TaggedState::ok(t, h)), 1);
}

TEST(Weighting, SumScaleMass) {
  Store s1, s2;
  s1.set("x", Value(1));
  s2.set("x", Value(2));
  Heap h;
  Weighting a = unit_w(Algebra::Nondet, TaggedState::ok(s1, h));
  Weighting b = unit_w(Algebra::Nondet, TaggedState::ok(s2, h));
  auto un = wsum(a, b);
  ASSERT_TRUE(un.has_value());
  EXPECT_EQ(un->support_size(), 2u);  // union of supports
  auto idem = wsum(a, a);
  ASSERT_TRUE(idem.has_value());
  EXPECT_EQ(*idem, a);  // 1 v 1 = 1

  EXPECT_TRUE(scale(wzero(Algebra::Prob), *un).empty());

  Weighting d1 = unit_w(Algebra::Det, TaggedState::ok(s1, h));
  Weighting d2 = unit_w(Algebra::Det, TaggedState::ok(s2, h));
  EXPECT_FALSE(wsum(d1, d2).has_value());  // 1+1 undefined in det
}

TEST(Weighting, NormalizeExamples) {
  Store s1, s2;
  s1.set("x", Value(1));
  s2.set("x", Value(2));
  Heap h;
  Weighting m(Algebra::Prob);
  m.w.emplace(TaggedState::ok(s1, h), rat(1, 4));
  m.w.emplace(TaggedState::ok(s2, h), rat(1, 4));
  auto [total, normed] = normalize(m);
  EXPECT_EQ(total.v, rat(1, 2));
  EXPECT_EQ(normed.at(TaggedState::ok(s1, h)), rat(1, 2));
  EXPECT_EQ(normed.at(TaggedState::ok(s2, h)), rat(1, 2));
  EXPECT_EQ(scale(total, normed), m);

  Weighting n = unit_w(Algebra::Nondet, TaggedState::ok(s1, h));
  auto [tn, nn] = normalize(n);
  EXPECT_EQ(tn.v, 1);
  EXPECT_EQ(nn, n);

  Weighting d = unit_w(Algebra::Det, TaggedState::ok(s1, h));
  auto [td, nd2] = normalize(d);
  EXPECT_EQ(td.v, 1);
  EXPECT_EQ(nd2, d);

  EXPECT_THROW(normalize(empty_w(Algebra::Prob)), std::invalid_argument);
}

TEST(Weighting, MonadLawsRandomized) {
  Rng rng(11);
  for (Algebra alg : {Algebra::Det, Algebra::Nondet, Algebra::Prob}) {
    for (int i = 0; i < 300; ++i) {
      Weighting m = osl::testing::random_weighting(rng, alg);
      ASSERT_TRUE(mass(m).has_value());

      // right identity
      auto unit_k = [&](const Store &s, const Heap &h) {
        return unit_w(alg, TaggedState::ok(s, h));
      };
      EXPECT_EQ(bind_w(m, unit_k), m);

      // associativity: k returns a unit on a mangled state, g collapses
      auto k = [&](const Store &s, const Heap &h) {
        return unit_w(alg, TaggedState::ok(s.with("k", Value(1)), h));
      };
      auto g = [&](const Store &s, const Heap &h) {
        return unit_w(alg, TaggedState::ok(s.with("g", s.get("k") + 1), h));
      };
      Weighting lhs = bind_w(bind_w(m, k), g);
      Weighting rhs = bind_w(m, [&](const Store &s, const Heap &h) {
        return bind_w(k(s, h), g);
      });
      EXPECT_EQ(lhs, rhs);

      // bind totality (Appendix A shape): defined input mass and defined
      // continuation masses imply defined output mass
      EXPECT_TRUE(mass(bind_w(m, k)).has_value());

      // normalization round trip
      if (!m.empty()) {
        auto [total, normed] = normalize(m);
        EXPECT_EQ(mass(normed)->v, 1);
        EXPECT_EQ(scale(total, normed), m);
      }
    }
  }
}

} // namespace
