#include "sttmin/refine.hpp"

#include <gtest/gtest.h>

#include <stdexcept>
#include <vector>

#include "sttmin/genfam.hpp"
#include "sttmin/graph.hpp"
#include "sttmin/ledger.hpp"
#include "sttmin/oracle.hpp"

namespace sttmin {
namespace {

MinimizeOptions audited() {
  MinimizeOptions o;
  o.audit = true;
  return o;
}

void expect_clean(const MinimizeResult& r, const std::string& tag) {
  EXPECT_TRUE(r.stats.check_failures.empty())
      << tag << ": " << (r.stats.check_failures.empty() ? "" : r.stats.check_failures[0]);
  EXPECT_LE(r.stats.max_balance_gap, 1) << tag;
}

TEST(Minimize, EmptyStructure) {
  KripkeStructure ks;
  MinimizeResult r = minimize(ks, audited());
  EXPECT_EQ(r.partition.num_blocks, 0u);
}

TEST(Minimize, SingleStateSelfLoop) {
  KripkeStructure ks;
  ks.num_states = 1;
  ks.label_of = {ks.intern_label("a")};
  ks.transitions = {{0, 0}};
  MinimizeResult r = minimize(ks, audited());
  EXPECT_EQ(r.partition.num_blocks, 1u);
  // Cycle collapse, pre-stabilization, and construction on one state.
  EXPECT_EQ(r.ledger.total(), 6u);
  EXPECT_EQ(r.ledger.global_budget(), 128u);
  EXPECT_TRUE(r.ledger.global_ok());
  EXPECT_TRUE(r.ledger.violations().empty());
}

TEST(Minimize, MatchesOracleOnRandomCorpus) {
  std::uint64_t checks = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    SplitMix64 rng{seed * 977};
    const std::uint32_t n = 2 + static_cast<std::uint32_t>(rng.next() % 23);
    const std::uint64_t cap = static_cast<std::uint64_t>(n) * n;
    const std::uint64_t m = rng.next() % (std::min<std::uint64_t>(cap, 4 * n) + 1);
    const std::uint32_t labels = 1 + static_cast<std::uint32_t>(rng.next() % 4);
    KripkeStructure ks = gen_random(n, m, labels, seed);
    MinimizeResult r = minimize(ks, audited());
    Partition want = naive_minimize(ks);
    EXPECT_TRUE(partitions_equal(r.partition, want))
        << "seed " << seed << " n " << n << " m " << m;
    expect_clean(r, "seed " + std::to_string(seed));
    checks += r.stats.checks_performed;
  }
  EXPECT_GT(checks, 0u);
}

TEST(Minimize, MatchesOracleOnFamilies) {
  std::vector<KripkeStructure> corpus;
  for (std::uint32_t k = 1; k <= 2; ++k)
    for (std::uint32_t d = 1; d <= 2; ++d) corpus.push_back(gen_fig1(k, d).ks);
  for (std::uint32_t p = 1; p <= 4; ++p) corpus.push_back(gen_fig2(p).ks);
  for (std::uint32_t r = 1; r <= 3; ++r) corpus.push_back(gen_fig3(r).ks);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    MinimizeResult r = minimize(corpus[i], audited());
    EXPECT_TRUE(partitions_equal(r.partition, naive_minimize(corpus[i]))) << i;
    expect_clean(r, "family structure " + std::to_string(i));
  }
}

TEST(Minimize, MatchesOracleOnLtsEmbedding) {
  Lts lts;
  lts.num_states = 4;
  const auto tau = lts.intern_action("tau");
  const auto a = lts.intern_action("a");
  lts.transitions = {{0, tau, 1}, {1, a, 2}, {0, a, 3}, {2, tau, 2}, {3, tau, 3}};
  LtsEmbedding emb = lts_to_kripke(lts);
  MinimizeResult r = minimize(emb.ks, audited());
  EXPECT_TRUE(partitions_equal(r.partition, naive_minimize(emb.ks)));
  // 2 and 3 are silent sinks; 0 can do everything 1 can plus reach 3's class
  // directly, but both reach a via at most silent steps. The embedding keeps
  // them comparable through shared auxiliary states.
  EXPECT_EQ(r.partition.block_of[2], r.partition.block_of[3]);
}

TEST(Minimize, VariantsAgreeOnResults) {
  const Variant variants[] = {Variant::kCorrected, Variant::kSlowTrySplit,
                              Variant::kSlowPostprocess, Variant::kSlowNewBottom};
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    KripkeStructure ks = gen_random(20, 60, 3, seed);
    Partition base;
    for (std::size_t i = 0; i < 4; ++i) {
      MinimizeOptions o = audited();
      o.variant = variants[i];
      MinimizeResult r = minimize(ks, o);
      expect_clean(r, variant_name(variants[i]));
      if (i == 0)
        base = r.partition;
      else
        EXPECT_TRUE(partitions_equal(base, r.partition))
            << "seed " << seed << " variant " << variant_name(variants[i]);
    }
  }
}

TEST(Minimize, DeterministicLedger) {
  KripkeStructure ks = gen_random(50, 200, 3, 11);
  MinimizeResult a = minimize(ks, audited());
  MinimizeResult b = minimize(ks, audited());
  EXPECT_TRUE(partitions_equal(a.partition, b.partition));
  for (int c = 0; c < kNumCategories; ++c)
    EXPECT_EQ(a.ledger.units(static_cast<WorkCategory>(c)),
              b.ledger.units(static_cast<WorkCategory>(c)));
}

TEST(Minimize, MoveCountWithinBudget) {
  KripkeStructure ks = gen_random(300, 1200, 2, 3);
  MinimizeResult r = minimize(ks, audited());
  expect_clean(r, "move budget");
  EXPECT_LE(r.stats.max_move_count, floor_log2(300) + 1);
}

TEST(Minimize, HistoryOffByDefault) {
  MinimizeResult r = minimize(gen_fig2(3).ks, audited());
  EXPECT_TRUE(r.stats.history.empty());
}

TEST(Seeded, Fig3SplitNarrative) {
  // One step on the r=2 tower: the helper block falls out first, then the
  // first-level states in order, then the second level children newest
  // branch first.
  MinimizeOptions o = audited();
  o.record_history = true;
  MinimizeResult r = run_seeded(gen_fig3(2), o);
  expect_clean(r, "fig3(2)");
  const std::vector<std::vector<State>> want = {{4}, {5}, {7}, {6}, {9}, {8}};
  EXPECT_EQ(r.stats.history, want);
  EXPECT_EQ(r.stats.new_bottom_count, 9u);
}

TEST(Seeded, Fig2SmallestCaseWinnerIsTheLoneSource) {
  MinimizeOptions o = audited();
  o.record_history = true;
  MinimizeResult r = run_seeded(gen_fig2(1), o);
  expect_clean(r, "fig2(1)");
  const std::vector<std::vector<State>> want = {{3}};
  EXPECT_EQ(r.stats.history, want);
}

TEST(Seeded, Fig2NewBottomCountEqualsParameter) {
  for (std::uint32_t p = 1; p <= 6; ++p) {
    MinimizeResult r = run_seeded(gen_fig2(p), audited());
    expect_clean(r, "fig2(" + std::to_string(p) + ")");
    EXPECT_EQ(r.stats.new_bottom_count, p) << p;
  }
}

TEST(Seeded, RefusesTrivialSplitterConstellation) {
  Scenario sc;
  sc.ks.num_states = 2;
  sc.ks.label_of = {sc.ks.intern_label("a"), sc.ks.intern_label("a")};
  sc.blocks = {{0}, {1}};
  sc.constellations = {{0}, {1}};
  sc.splitter = 0;
  EXPECT_THROW(run_seeded(sc, audited()), std::invalid_argument);
}

TEST(Seeded, StepRefinesAgainstCarvedPart) {
  // After the single seeded step on fig1 the mid block has separated the
  // states that can reach the carved goal silently from those that cannot.
  MinimizeResult r = run_seeded(gen_fig1(2, 2), audited());
  expect_clean(r, "fig1(2,2)");
  EXPECT_GT(r.stats.splits, 0u);
  EXPECT_GT(r.partition.num_blocks, 5u);
}

TEST(VariantNames, RoundTrip) {
  for (Variant v : {Variant::kCorrected, Variant::kSlowTrySplit, Variant::kSlowPostprocess,
                    Variant::kSlowNewBottom}) {
    Variant back;
    ASSERT_TRUE(parse_variant(variant_name(v), &back));
    EXPECT_EQ(back, v);
  }
  Variant out;
  EXPECT_FALSE(parse_variant("fast", &out));
}

}  // namespace
}  // namespace sttmin
