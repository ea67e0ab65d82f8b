#include "sttmin/graph.hpp"

#include <gtest/gtest.h>

#include <sstream>
#include <string>

namespace sttmin {
namespace {

KripkeStructure small_ks() {
  KripkeStructure ks;
  ks.num_states = 4;
  const auto a = ks.intern_label("a");
  const auto b = ks.intern_label("b");
  ks.label_of = {a, a, b, a};
  ks.transitions = {{0, 1}, {1, 2}, {2, 3}, {3, 3}, {0, 2}};
  return ks;
}

TEST(KsFormat, RoundTripPreservesOrder) {
  KripkeStructure ks = small_ks();
  std::ostringstream os;
  write_ks(os, ks);
  std::istringstream is(os.str());
  KripkeStructure back = parse_ks(is);
  EXPECT_EQ(back.num_states, ks.num_states);
  EXPECT_EQ(back.label_of, ks.label_of);
  EXPECT_EQ(back.transitions, ks.transitions);
  std::ostringstream os2;
  write_ks(os2, back);
  EXPECT_EQ(os.str(), os2.str());
}

TEST(KsFormat, HeaderShape) {
  KripkeStructure ks = small_ks();
  std::ostringstream os;
  write_ks(os, ks);
  EXPECT_EQ(os.str().substr(0, 7), "ks 4 5\n");
  EXPECT_EQ(os.str().back(), '\n');
}

TEST(KsFormat, CommentsAndBlankLines) {
  std::istringstream is("ks 2 1\nl 0 x\n\n# note\nl 1 y\nt 0 1\n");
  KripkeStructure ks = parse_ks(is);
  EXPECT_EQ(ks.num_states, 2u);
  ASSERT_EQ(ks.transitions.size(), 1u);
  EXPECT_EQ(ks.transitions[0].first, 0u);
}

TEST(KsFormat, RejectsBadInput) {
  const char* cases[] = {
      "graph 2 1\nl 0 x\nl 1 y\nt 0 1\n",  // wrong magic
      "ks 2 1\nl 0 x\nl 1 y\nt 0 2\n",     // target out of range
      "ks 2 1\nl 0 x\nl 1 y\n",            // missing transition
      "ks 2 1\nl 1 x\nl 0 y\nt 0 1\n",     // labels out of order
  };
  for (const char* text : cases) {
    std::istringstream is(text);
    EXPECT_THROW(parse_ks(is), ParseError) << text;
  }
  std::istringstream is("ks 2 1\nl 0 x\nl 1 y\nt 0 2\n");
  try {
    parse_ks(is);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_GT(e.line(), 0);
    EXPECT_NE(std::string(e.what()).find("line"), std::string::npos);
  }
}

TEST(AutFormat, RoundTrip) {
  Lts lts;
  lts.num_states = 3;
  lts.initial = 0;
  const auto tau = lts.intern_action("tau");
  const auto send = lts.intern_action("send");
  lts.transitions = {{0, tau, 1}, {1, send, 2}, {2, tau, 2}};
  std::ostringstream os;
  write_aut(os, lts);
  std::istringstream is(os.str());
  Lts back = parse_aut(is);
  EXPECT_EQ(back.num_states, 3u);
  EXPECT_EQ(back.initial, 0u);
  ASSERT_EQ(back.transitions.size(), 3u);
  EXPECT_TRUE(back.is_tau(back.transitions[0].action));
  EXPECT_FALSE(back.is_tau(back.transitions[1].action));
  EXPECT_EQ(back.action_names[back.transitions[1].action], "send");
  std::ostringstream os2;
  write_aut(os2, back);
  EXPECT_EQ(os.str(), os2.str());
}

TEST(AutFormat, ParsesHeaderAndRejectsGarbage) {
  std::istringstream ok(R"(des (1,2,3)
(0,"a",1)
(1,"tau",2)
)");
  Lts lts = parse_aut(ok);
  EXPECT_EQ(lts.initial, 1u);
  EXPECT_EQ(lts.num_states, 3u);
  ASSERT_EQ(lts.transitions.size(), 2u);

  std::istringstream bad1("des (0,1,2)\n(0,\"a\",5)\n");
  EXPECT_THROW(parse_aut(bad1), ParseError);
  std::istringstream bad2("res (0,1,2)\n(0,\"a\",1)\n");
  EXPECT_THROW(parse_aut(bad2), ParseError);
}

TEST(Embedding, SharesAuxPerActionTargetPair) {
  Lts lts;
  lts.num_states = 3;
  const auto a = lts.intern_action("a");
  const auto tau = lts.intern_action("tau");
  // Two a-transitions into state 2 share one auxiliary state; the tau
  // transition stays direct.
  lts.transitions = {{0, a, 2}, {1, a, 2}, {0, tau, 1}, {1, a, 0}};
  LtsEmbedding emb = lts_to_kripke(lts);
  EXPECT_EQ(emb.num_original, 3u);
  EXPECT_EQ(emb.ks.num_states, 5u);  // 3 originals + aux(a,2) + aux(a,0)
  // One src->aux edge per visible transition, one aux->dst per fresh pair,
  // one direct edge for tau.
  EXPECT_EQ(emb.ks.num_transitions(), 3u + 2u + 1u);
  for (State s = 0; s < 3; ++s)
    EXPECT_EQ(emb.ks.label_names[emb.ks.label_of[s]], "@");
  for (State s = 3; s < 5; ++s)
    EXPECT_EQ(emb.ks.label_names[emb.ks.label_of[s]], "a");
}

TEST(Embedding, ReservedLabelRejected) {
  Lts lts;
  lts.num_states = 1;
  const auto at = lts.intern_action("@");
  lts.transitions = {{0, at, 0}};
  EXPECT_THROW(lts_to_kripke(lts), std::runtime_error);
}

TEST(Partitions, CanonicalAndEqual) {
  Partition p;
  p.num_blocks = 3;
  p.block_of = {2, 2, 0, 1, 0};
  Partition c = canonical_partition(p);
  EXPECT_EQ(c.num_blocks, 3u);
  EXPECT_EQ(c.block_of, (std::vector<std::uint32_t>{0, 0, 1, 2, 1}));
  // Canonicalization is idempotent.
  EXPECT_EQ(canonical_partition(c).block_of, c.block_of);

  Partition q;
  q.num_blocks = 3;
  q.block_of = {1, 1, 0, 2, 0};
  EXPECT_TRUE(partitions_equal(canonical_partition(p), canonical_partition(q)));
  q.block_of = {1, 0, 0, 2, 0};
  EXPECT_FALSE(partitions_equal(canonical_partition(p), canonical_partition(q)));
}

TEST(Partitions, LabelPartition) {
  KripkeStructure ks = small_ks();
  Partition p = label_partition(ks);
  EXPECT_EQ(p.num_blocks, 2u);
  EXPECT_EQ(p.block_of, (std::vector<std::uint32_t>{0, 0, 1, 0}));
}

TEST(Quotient, DeduplicatesTransitions) {
  KripkeStructure ks = small_ks();
  Partition p;
  p.num_blocks = 2;
  p.block_of = {0, 0, 1, 0};
  KripkeStructure q = quotient(ks, p);
  EXPECT_EQ(q.num_states, 2u);
  EXPECT_EQ(q.label_names[q.label_of[0]], "a");
  EXPECT_EQ(q.label_names[q.label_of[1]], "b");
  // Images: 0->0 (0->1), 0->1 (1->2 and 0->2 merge), 1->0 (2->3), 0->0 (3->3 dup).
  EXPECT_EQ(q.num_transitions(), 3u);
}

TEST(Quotient, LtsQuotientKeepsActions) {
  Lts lts;
  lts.num_states = 3;
  const auto a = lts.intern_action("a");
  lts.transitions = {{0, a, 1}, {0, a, 2}};
  Partition p;
  p.num_blocks = 2;
  p.block_of = {0, 1, 1};
  Lts q = quotient_lts(lts, p);
  EXPECT_EQ(q.num_states, 2u);
  ASSERT_EQ(q.transitions.size(), 1u);
  EXPECT_EQ(q.action_names[q.transitions[0].action], "a");
}

TEST(MapFormat, Shape) {
  Partition p;
  p.num_blocks = 2;
  p.block_of = {0, 1, 0};
  std::ostringstream os;
  write_map(os, p);
  EXPECT_EQ(os.str(), "map 3 2\n0\n1\n0\n");
}

}  // namespace
}  // namespace sttmin
