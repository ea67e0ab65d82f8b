#include <benchmark/benchmark.h>

#include "sttmin/genfam.hpp"
#include "sttmin/refine.hpp"

namespace {

using namespace sttmin;

void BM_minimize_random(benchmark::State& state) {
  const auto n = static_cast<std::uint32_t>(state.range(0));
  KripkeStructure ks = gen_random(n, 5ull * n, 4, 1);
  for (auto _ : state) {
    MinimizeResult r = minimize(ks);
    benchmark::DoNotOptimize(r.partition.num_blocks);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * (n + 5ull * n));
}
BENCHMARK(BM_minimize_random)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_minimize_random_audit(benchmark::State& state) {
  const auto n = static_cast<std::uint32_t>(state.range(0));
  KripkeStructure ks = gen_random(n, 5ull * n, 4, 1);
  MinimizeOptions opts;
  opts.audit = true;
  for (auto _ : state) {
    MinimizeResult r = minimize(ks, opts);
    benchmark::DoNotOptimize(r.ledger.total());
  }
}
BENCHMARK(BM_minimize_random_audit)->Arg(1000)->Arg(10000);

void BM_seeded_fig1(benchmark::State& state) {
  const auto s = static_cast<std::uint32_t>(state.range(0));
  Scenario sc = gen_fig1(s, s);
  MinimizeOptions opts;
  opts.audit = true;
  for (auto _ : state) {
    MinimizeResult r = run_seeded(sc, opts);
    benchmark::DoNotOptimize(r.ledger.total());
  }
}
BENCHMARK(BM_seeded_fig1)->Arg(128)->Arg(512);

void BM_seeded_fig2(benchmark::State& state) {
  const auto p = static_cast<std::uint32_t>(state.range(0));
  Scenario sc = gen_fig2(p);
  MinimizeOptions opts;
  opts.audit = true;
  for (auto _ : state) {
    MinimizeResult r = run_seeded(sc, opts);
    benchmark::DoNotOptimize(r.ledger.total());
  }
}
BENCHMARK(BM_seeded_fig2)->Arg(64)->Arg(256);

void BM_seeded_fig3(benchmark::State& state) {
  const auto n = static_cast<std::uint32_t>(state.range(0));
  Scenario sc = gen_fig3(n);
  MinimizeOptions opts;
  opts.audit = true;
  for (auto _ : state) {
    MinimizeResult r = run_seeded(sc, opts);
    benchmark::DoNotOptimize(r.ledger.total());
  }
}
BENCHMARK(BM_seeded_fig3)->Arg(16)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
