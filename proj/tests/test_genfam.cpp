#include "sttmin/genfam.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "sttmin/graph.hpp"

namespace sttmin {
namespace {

TEST(Fig1, FrozenCounts) {
  Scenario a = gen_fig1(3, 4);
  EXPECT_EQ(a.ks.num_states, 13u);
  EXPECT_EQ(a.ks.num_transitions(), 18u);
  Scenario b = gen_fig1(1, 1);
  EXPECT_EQ(b.ks.num_states, 6u);
  EXPECT_EQ(b.ks.num_transitions(), 6u);
}

TEST(Fig1, ClosedFormCounts) {
  for (std::uint32_t k = 1; k <= 4; ++k)
    for (std::uint32_t d = 1; d <= 4; ++d) {
      Scenario sc = gen_fig1(k, d);
      EXPECT_EQ(sc.ks.num_states, 2 * k + d + 3) << k << " " << d;
      EXPECT_EQ(sc.ks.num_transitions(), 3 * k + 2 * d + 1) << k << " " << d;
    }
}

TEST(Fig1, HubOutDegree) {
  // One state fans out to the whole chain and fan plus one goal state.
  for (std::uint32_t k = 1; k <= 3; ++k)
    for (std::uint32_t d = 1; d <= 3; ++d) {
      Scenario sc = gen_fig1(k, d);
      std::vector<std::uint32_t> outdeg(sc.ks.num_states, 0);
      for (const auto& t : sc.ks.transitions) outdeg[t.first] += 1;
      const std::uint32_t want = k + d + 1;
      EXPECT_NE(std::count(outdeg.begin(), outdeg.end(), want), 0)
          << "no hub with out-degree " << want;
    }
}

TEST(Fig2, FrozenCounts) {
  Scenario a = gen_fig2(4);
  EXPECT_EQ(a.ks.num_states, 11u);
  EXPECT_EQ(a.ks.num_transitions(), 23u);
  Scenario b = gen_fig2(1);
  EXPECT_EQ(b.ks.num_states, 5u);
  EXPECT_EQ(b.ks.num_transitions(), 5u);
}

TEST(Fig2, ClosedFormCounts) {
  for (std::uint32_t p = 1; p <= 8; ++p) {
    Scenario sc = gen_fig2(p);
    EXPECT_EQ(sc.ks.num_states, 2 * p + 3) << p;
    EXPECT_EQ(sc.ks.num_transitions(), 1 + 3 * p + p * (p + 1) / 2) << p;
  }
}

TEST(Fig3, FrozenCounts) {
  Scenario a = gen_fig3(1);
  EXPECT_EQ(a.ks.num_states, 7u);
  EXPECT_EQ(a.ks.num_transitions(), 9u);
  Scenario b = gen_fig3(2);
  EXPECT_EQ(b.ks.num_states, 14u);
  EXPECT_EQ(b.ks.num_transitions(), 31u);
}

TEST(Fig3, ClosedFormCounts) {
  for (std::uint32_t r = 1; r <= 6; ++r) {
    Scenario sc = gen_fig3(r);
    EXPECT_EQ(sc.ks.num_states, 1 + (r + 1) + 1 + r + r * (r + 1) / 2 + r * r) << r;
  }
}

TEST(Families, ScenariosValidate) {
  for (std::uint32_t k = 1; k <= 3; ++k)
    for (std::uint32_t d = 1; d <= 3; ++d)
      EXPECT_NO_THROW(validate_scenario(gen_fig1(k, d)));
  for (std::uint32_t p = 1; p <= 6; ++p)
    EXPECT_NO_THROW(validate_scenario(gen_fig2(p)));
  for (std::uint32_t r = 1; r <= 4; ++r)
    EXPECT_NO_THROW(validate_scenario(gen_fig3(r)));
}

TEST(Families, SplitterIsAtMostHalfItsGroup) {
  for (const Scenario& sc : {gen_fig1(3, 3), gen_fig2(5), gen_fig3(3)}) {
    std::size_t splitter_states = sc.blocks[sc.splitter].size();
    std::size_t group_states = 0;
    for (const auto& group : sc.constellations) {
      bool holds = false;
      for (std::uint32_t b : group) holds |= (b == sc.splitter);
      if (!holds) continue;
      for (std::uint32_t b : group) group_states += sc.blocks[b].size();
    }
    EXPECT_LE(2 * splitter_states, group_states);
  }
}

TEST(Families, RejectZeroParameters) {
  EXPECT_THROW(gen_fig1(0, 1), std::invalid_argument);
  EXPECT_THROW(gen_fig1(1, 0), std::invalid_argument);
  EXPECT_THROW(gen_fig2(0), std::invalid_argument);
  EXPECT_THROW(gen_fig3(0), std::invalid_argument);
}

TEST(Ksx, RoundTrip) {
  for (const Scenario& sc : {gen_fig1(2, 3), gen_fig2(3), gen_fig3(2)}) {
    std::ostringstream os;
    write_ksx(os, sc);
    std::istringstream is(os.str());
    Scenario back = parse_ksx(is);
    EXPECT_EQ(back.ks.num_states, sc.ks.num_states);
    EXPECT_EQ(back.ks.transitions, sc.ks.transitions);
    EXPECT_EQ(back.blocks, sc.blocks);
    EXPECT_EQ(back.constellations, sc.constellations);
    EXPECT_EQ(back.splitter, sc.splitter);
    std::ostringstream os2;
    write_ksx(os2, back);
    EXPECT_EQ(os.str(), os2.str());
  }
}

TEST(Random, Deterministic) {
  KripkeStructure a = gen_random(30, 90, 3, 42);
  KripkeStructure b = gen_random(30, 90, 3, 42);
  EXPECT_EQ(a.label_of, b.label_of);
  EXPECT_EQ(a.transitions, b.transitions);
  KripkeStructure c = gen_random(30, 90, 3, 43);
  EXPECT_NE(a.transitions, c.transitions);
}

TEST(Random, ShapeContract) {
  KripkeStructure ks = gen_random(25, 120, 4, 7);
  EXPECT_EQ(ks.num_states, 25u);
  EXPECT_EQ(ks.num_transitions(), 120u);
  EXPECT_LE(ks.label_names.size(), 4u);
  std::set<std::pair<State, State>> seen;
  for (const auto& t : ks.transitions) {
    EXPECT_LT(t.first, 25u);
    EXPECT_LT(t.second, 25u);
    EXPECT_TRUE(seen.insert(t).second) << "duplicate edge";
  }
}

TEST(Random, SingleStateNoEdges) {
  KripkeStructure ks = gen_random(1, 0, 1, 0);
  EXPECT_EQ(ks.num_states, 1u);
  EXPECT_EQ(ks.num_transitions(), 0u);
}

TEST(SplitMix, KnownSequenceIsStable) {
  SplitMix64 rng{12345};
  const std::uint64_t a = rng.next();
  const std::uint64_t b = rng.next();
  SplitMix64 rng2{12345};
  EXPECT_EQ(rng2.next(), a);
  EXPECT_EQ(rng2.next(), b);
  EXPECT_NE(a, b);
}

}  // namespace
}  // namespace sttmin
