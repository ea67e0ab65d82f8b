#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <string>

#include "sttmin/genfam.hpp"
#include "sttmin/graph.hpp"
#include "sttmin/ledger.hpp"
#include "sttmin/oracle.hpp"
#include "sttmin/refine.hpp"

namespace sttmin {
namespace {

using Clock = std::chrono::steady_clock;

double secs(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string strf(const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return buf;
}

MinimizeOptions audited(Variant v = Variant::kCorrected) {
  MinimizeOptions o;
  o.audit = true;
  o.variant = v;
  return o;
}

int failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion, detail.c_str());
  if (!ok) ++failures;
}

// Bookkeeping from every audited corrected-variant run, judged as a whole
// by criteria 5 and 6.
struct CorrectedAggregate {
  std::uint64_t runs = 0;
  std::uint64_t event_violations = 0;
  std::uint64_t global_breaks = 0;
  std::uint64_t check_failures = 0;
  std::uint64_t checks = 0;
  std::uint64_t balance_breaks = 0;
  std::uint64_t move_breaks = 0;
  std::string first_offender;

  void add(const std::string& name, std::uint64_t n, const MinimizeResult& r) {
    ++runs;
    const bool before = bad();
    event_violations += r.ledger.violations().size();
    if (!r.ledger.global_ok()) ++global_breaks;
    check_failures += r.stats.check_failures.size();
    checks += r.stats.checks_performed;
    if (r.stats.max_balance_gap > 1) ++balance_breaks;
    if (n > 0 && r.stats.max_move_count > floor_log2(n) + 1) ++move_breaks;
    if (!before && bad() && first_offender.empty()) first_offender = name;
  }
  bool bad() const {
    return event_violations || global_breaks || check_failures || balance_breaks ||
           move_breaks;
  }
};

void criterion1(CorrectedAggregate& agg) {
  const auto t0 = Clock::now();
  std::uint64_t mismatches = 0, total = 0;
  auto run_one = [&](const std::string& name, const KripkeStructure& ks) {
    MinimizeResult r = minimize(ks, audited());
    if (!partitions_equal(r.partition, naive_minimize(ks))) ++mismatches;
    agg.add(name, ks.num_states, r);
    ++total;
  };
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    SplitMix64 rng(seed * 977);
    const std::uint32_t n = 2 + static_cast<std::uint32_t>(rng.next() % 39);
    const std::uint64_t cap = std::min<std::uint64_t>(160, std::uint64_t(n) * n);
    const std::uint64_t m = rng.next() % (cap + 1);
    const std::uint32_t labels = 1 + static_cast<std::uint32_t>(rng.next() % 4);
    run_one("random seed " + std::to_string(seed), gen_random(n, m, labels, seed));
  }
  for (std::uint32_t k = 1; k <= 3; ++k)
    for (std::uint32_t d = 1; d <= 3; ++d)
      run_one(strf("fig1 k=%u d=%u", k, d), gen_fig1(k, d).ks);
  for (std::uint32_t p = 1; p <= 6; ++p) run_one(strf("fig2 p=%u", p), gen_fig2(p).ks);
  for (std::uint32_t r = 1; r <= 4; ++r) run_one(strf("fig3 r=%u", r), gen_fig3(r).ks);
  const double t = secs(t0);
  report(1, mismatches == 0 && t < 30.0,
         strf("quotient matches the reference on %llu/%llu structures in %.2fs (limit 30s)",
              static_cast<unsigned long long>(total - mismatches),
              static_cast<unsigned long long>(total), t));
}

void criterion2(CorrectedAggregate& agg) {
  const auto t0 = Clock::now();
  const std::uint32_t sizes[] = {128, 256, 512};
  const auto sig = [](const MinimizeResult& r) {
    return r.ledger.total() - r.ledger.units(WorkCategory::kInit);
  };
  std::uint64_t fast_sig[3], slow_sig[3];
  for (int i = 0; i < 3; ++i) {
    Scenario sc = gen_fig1(sizes[i], sizes[i]);
    MinimizeResult c = run_seeded(sc, audited());
    agg.add(strf("fig1 seeded s=%u", sizes[i]), sc.ks.num_states, c);
    fast_sig[i] = sig(c);
    slow_sig[i] = sig(run_seeded(sc, audited(Variant::kSlowTrySplit)));
  }
  double fast[2], slow[2];
  bool ok = true;
  for (int i = 0; i < 2; ++i) {
    fast[i] = double(fast_sig[i + 1]) / double(fast_sig[i]);
    slow[i] = double(slow_sig[i + 1]) / double(slow_sig[i]);
    ok = ok && fast[i] <= 2.6 && slow[i] >= 3.4;
  }
  const double t = secs(t0);
  ok = ok && t < 10.0;
  report(2, ok,
         strf("per-doubling work growth on fig1: corrected %.2f, %.2f (need <= 2.6); "
              "slow-trysplit %.2f, %.2f (need >= 3.4); %.2fs (limit 10s)",
              fast[0], fast[1], slow[0], slow[1], t));
}

void criterion3(CorrectedAggregate& agg) {
  const auto t0 = Clock::now();
  const std::uint32_t sizes[] = {64, 128, 256};
  const auto ppd = [](const MinimizeResult& r) {
    return r.ledger.units(WorkCategory::kPostprocessDistribute);
  };
  std::uint64_t fast_sig[3], slow_sig[3];
  bool slow_top_breaks_global = false;
  for (int i = 0; i < 3; ++i) {
    Scenario sc = gen_fig2(sizes[i]);
    MinimizeResult c = run_seeded(sc, audited());
    agg.add(strf("fig2 seeded p=%u", sizes[i]), sc.ks.num_states, c);
    fast_sig[i] = ppd(c);
    MinimizeResult s = run_seeded(sc, audited(Variant::kSlowPostprocess));
    slow_sig[i] = ppd(s);
    if (i == 2) slow_top_breaks_global = !s.ledger.global_ok();
  }
  double fast[2], slow[2];
  bool ok = true;
  for (int i = 0; i < 2; ++i) {
    fast[i] = double(fast_sig[i + 1]) / double(fast_sig[i]);
    slow[i] = double(slow_sig[i + 1]) / double(slow_sig[i]);
    ok = ok && fast[i] <= 4.8 && slow[i] >= 6.8;
  }
  const double t = secs(t0);
  ok = ok && slow_top_breaks_global && t < 20.0;
  report(3, ok,
         strf("redistribution growth on fig2: corrected %.2f, %.2f (need <= 4.8); "
              "slow-postprocess %.2f, %.2f (need >= 6.8); slow p=256 breaks the "
              "whole-run bound: %s; %.2fs (limit 20s)",
              fast[0], fast[1], slow[0], slow[1], slow_top_breaks_global ? "yes" : "no",
              t));
}

void criterion4(CorrectedAggregate& agg) {
  const auto t0 = Clock::now();
  const std::uint32_t sizes[] = {16, 32};
  const auto cb = [](const MinimizeResult& r) {
    return r.ledger.units(WorkCategory::kCoroutineBlue);
  };
  std::uint64_t fast_sig[2], slow_sig[2];
  for (int i = 0; i < 2; ++i) {
    Scenario sc = gen_fig3(sizes[i]);
    MinimizeResult c = run_seeded(sc, audited());
    agg.add(strf("fig3 seeded n=%u", sizes[i]), sc.ks.num_states, c);
    fast_sig[i] = cb(c);
    slow_sig[i] = cb(run_seeded(sc, audited(Variant::kSlowNewBottom)));
  }
  const double fast = double(fast_sig[1]) / double(fast_sig[0]);
  const double slow = double(slow_sig[1]) / double(slow_sig[0]);
  const double t = secs(t0);
  const bool ok = fast <= 9.0 && slow >= 12.0 && t < 30.0;
  report(4, ok,
         strf("bottom-rescan growth on fig3: corrected %.2f (need <= 9); "
              "slow-newbottom %.2f (need >= 12); %.2fs (limit 30s)",
              fast, slow, t));
}

void criterion5(CorrectedAggregate& agg) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    KripkeStructure ks = gen_random(10000, 50000, 4, seed);
    MinimizeResult r = minimize(ks, audited());
    agg.add("random 10k seed " + std::to_string(seed), ks.num_states, r);
  }
  const bool ok = agg.event_violations == 0 && agg.global_breaks == 0;
  report(5, ok,
         strf("corrected variant stays within every budget: %llu event violations, "
              "%llu whole-run breaks over %llu audited runs%s%s",
              static_cast<unsigned long long>(agg.event_violations),
              static_cast<unsigned long long>(agg.global_breaks),
              static_cast<unsigned long long>(agg.runs),
              agg.first_offender.empty() ? "" : "; first offender: ",
              agg.first_offender.c_str()));
}

void criterion6(const CorrectedAggregate& agg) {
  const bool ok = agg.balance_breaks == 0 && agg.move_breaks == 0 &&
                  agg.check_failures == 0 && agg.checks > 0;
  report(6, ok,
         strf("structural invariants hold: %llu internal checks, %llu failures, "
              "%llu balance gaps > 1, %llu move-count breaches",
              static_cast<unsigned long long>(agg.checks),
              static_cast<unsigned long long>(agg.check_failures),
              static_cast<unsigned long long>(agg.balance_breaks),
              static_cast<unsigned long long>(agg.move_breaks)));
}

void criterion7() {
  KripkeStructure ks = gen_random(100000, 500000, 4, 1);
  const auto t0 = Clock::now();
  MinimizeResult r = minimize(ks);
  const double t = secs(t0);
  report(7, t < 10.0 && r.partition.num_blocks > 0,
         strf("minimized 100000 states / 500000 transitions to %u classes in %.2fs "
              "(limit 10s, audit off)",
              r.partition.num_blocks, t));
}

int run_all() {
  CorrectedAggregate agg;
  criterion1(agg);
  criterion2(agg);
  criterion3(agg);
  criterion4(agg);
  criterion5(agg);
  criterion6(agg);
  criterion7();
  return failures == 0 ? 0 : 1;
}

}  // namespace
}  // namespace sttmin

int main() { return sttmin::run_all(); }
