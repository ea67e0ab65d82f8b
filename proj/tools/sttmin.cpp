#include <cstdint>
#include <fstream>
#include <iostream>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sttmin/genfam.hpp"
#include "sttmin/graph.hpp"
#include "sttmin/ledger.hpp"
#include "sttmin/oracle.hpp"
#include "sttmin/refine.hpp"

namespace {

using namespace sttmin;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitBudget = 2;
constexpr int kExitGuard = 3;

void write_ledger_csv(std::ostream& out, const std::string& family, const std::string& param,
                      const WorkLedger& led, const std::string& variant, bool header) {
  if (header) {
    out << "# sttmin-audit-v1\n";
    out << "family,param,n,m,variant,category,units\n";
  }
  const std::string prefix = family + "," + param + "," + std::to_string(led.input_states()) +
                             "," + std::to_string(led.input_transitions()) + "," + variant + ",";
  for (int c = 0; c < kNumCategories; ++c)
    out << prefix << category_name(static_cast<WorkCategory>(c)) << ","
        << led.units(static_cast<WorkCategory>(c)) << "\n";
  out << prefix << "TOTAL," << led.total() << "\n";
  out << prefix << "TOTAL_EXCL_INIT," << led.total() - led.units(WorkCategory::kInit) << "\n";
  out << prefix << "GLOBAL_BOUND," << led.global_budget() << "\n";
  out << prefix << "EVENT_VIOLATIONS," << led.violations().size() << "\n";
  out << prefix << "GLOBAL_OK," << (led.global_ok() ? 1 : 0) << "\n";
}

int report_budget(const WorkLedger& led) {
  bool bad = false;
  for (const BudgetViolation& v : led.violations()) {
    bad = true;
    std::cerr << "budget violation: event " << v.event << " category "
              << category_name(v.category) << " charged " << v.charged << " allowed "
              << v.allowed << "\n";
  }
  if (!led.global_ok()) {
    bad = true;
    std::cerr << "budget violation: global total " << led.total() << " exceeds "
              << led.global_budget() << "\n";
  }
  return bad ? kExitBudget : kExitOk;
}

Partition restrict_to_original(const Partition& p, State num_original) {
  Partition sub;
  sub.num_blocks = p.num_blocks;
  sub.block_of.assign(p.block_of.begin(), p.block_of.begin() + num_original);
  return canonical_partition(sub);
}

struct MinimizeArgs {
  std::string input;
  std::string format = "ks";
  std::string equiv = "dbse";
  std::string variant = "corrected";
  bool audit = false;
  std::string out_path, map_path, csv_path;
};

int cmd_minimize(const MinimizeArgs& a) {
  if (a.equiv == "branching" && a.format != "aut") {
    std::cerr << "error: --equiv branching requires --format aut\n";
    return kExitFailure;
  }
  if (a.equiv == "dbse" && a.format == "aut") {
    std::cerr << "error: --format aut requires --equiv branching\n";
    return kExitFailure;
  }
  MinimizeOptions opts;
  if (!parse_variant(a.variant, &opts.variant)) {
    std::cerr << "error: unknown variant " << a.variant << "\n";
    return kExitFailure;
  }
  opts.audit = a.audit;
  if (opts.variant != Variant::kCorrected && !opts.audit) {
    std::cerr << "error: slow variants only run under --audit\n";
    return kExitFailure;
  }

  std::string map_path = a.map_path;
  if (map_path.empty() && !a.out_path.empty()) map_path = a.out_path + ".map";
  auto emit = [&](auto&& write_quotient, const Partition& map_part) -> int {
    if (!a.out_path.empty()) {
      std::ofstream os(a.out_path);
      if (!os) {
        std::cerr << "error: cannot write " << a.out_path << "\n";
        return kExitFailure;
      }
      write_quotient(os);
    } else {
      write_quotient(std::cout);
    }
    if (!map_path.empty()) {
      std::ofstream ms(map_path);
      if (!ms) {
        std::cerr << "error: cannot write " << map_path << "\n";
        return kExitFailure;
      }
      write_map(ms, map_part);
    }
    return kExitOk;
  };

  MinimizeResult res;
  int rc;
  if (a.format == "aut") {
    Lts lts = parse_aut_file(a.input);
    LtsEmbedding emb = lts_to_kripke(lts);
    res = minimize(emb.ks, opts);
    Partition on_lts = restrict_to_original(res.partition, emb.num_original);
    Lts q = quotient_lts(lts, on_lts);
    std::cerr << "states " << lts.num_states << " -> " << q.num_states << ", transitions "
              << lts.transitions.size() << " -> " << q.transitions.size() << "\n";
    rc = emit([&](std::ostream& os) { write_aut(os, q); }, on_lts);
  } else {
    KripkeStructure ks = parse_ks_file(a.input);
    res = minimize(ks, opts);
    KripkeStructure q = quotient(ks, res.partition);
    std::cerr << "states " << ks.num_states << " -> " << q.num_states << ", transitions "
              << ks.num_transitions() << " -> " << q.num_transitions() << "\n";
    rc = emit([&](std::ostream& os) { write_ks(os, q); }, res.partition);
  }
  if (rc != kExitOk) return rc;

  if (a.audit) {
    if (!a.csv_path.empty()) {
      std::ofstream cs(a.csv_path);
      if (!cs) {
        std::cerr << "error: cannot write " << a.csv_path << "\n";
        return kExitFailure;
      }
      write_ledger_csv(cs, "file", a.input, res.ledger, a.variant, true);
    }
    const int budget_rc = report_budget(res.ledger);
    for (const std::string& f : res.stats.check_failures)
      std::cerr << "audit check failed: " << f << "\n";
    if (!res.stats.check_failures.empty()) return kExitFailure;
    return budget_rc;
  }
  return kExitOk;
}

struct CheckArgs {
  std::string input;
  std::string format = "ks";
  std::uint32_t limit = 2000;
};

int cmd_check(const CheckArgs& a) {
  KripkeStructure ks;
  if (a.format == "aut")
    ks = lts_to_kripke(parse_aut_file(a.input)).ks;
  else
    ks = parse_ks_file(a.input);
  if (ks.num_states > a.limit) {
    std::cerr << "refusing " << ks.num_states << " states; the reference engine is bounded by "
              << a.limit << " (raise with --limit)\n";
    return kExitGuard;
  }
  MinimizeOptions opts;
  opts.audit = true;
  Partition fast = minimize(ks, opts).partition;
  Partition slow = naive_minimize(ks);
  if (partitions_equal(fast, slow)) {
    std::cout << "match: " << ks.num_states << " states, " << fast.num_blocks << " classes\n";
    return kExitOk;
  }
  for (State s = 0; s < ks.num_states; ++s)
    for (State t = s + 1; t < ks.num_states; ++t) {
      const bool f = fast.block_of[s] == fast.block_of[t];
      const bool g = slow.block_of[s] == slow.block_of[t];
      if (f != g) {
        std::cout << "mismatch: states " << s << " and " << t << " are "
                  << (f ? "merged" : "separated") << " but the reference "
                  << (g ? "merges" : "separates") << " them\n";
        return kExitFailure;
      }
    }
  std::cout << "mismatch: class counts " << fast.num_blocks << " vs " << slow.num_blocks << "\n";
  return kExitFailure;
}

struct GenArgs {
  std::string family;
  std::uint32_t k = 1, d = 1, n = 0;
  std::uint64_t m = 0;
  std::uint32_t labels = 2;
  std::uint64_t seed = 1;
  std::string out_path;
};

int cmd_gen(const GenArgs& a) {
  std::ostream* out = &std::cout;
  std::ofstream os;
  if (!a.out_path.empty()) {
    os.open(a.out_path);
    if (!os) {
      std::cerr << "error: cannot write " << a.out_path << "\n";
      return kExitFailure;
    }
    out = &os;
  }
  if (a.family == "random") {
    if (a.n == 0 || a.m > static_cast<std::uint64_t>(a.n) * a.n || a.labels == 0) {
      std::cerr << "error: need n >= 1, labels >= 1, m <= n*n\n";
      return kExitFailure;
    }
    write_ks(*out, gen_random(a.n, a.m, a.labels, a.seed));
    return kExitOk;
  }
  Scenario sc;
  if (a.family == "fig1") {
    if (a.k == 0 || a.d == 0) {
      std::cerr << "error: fig1 needs k >= 1 and d >= 1\n";
      return kExitFailure;
    }
    sc = gen_fig1(a.k, a.d);
  } else if (a.family == "fig2") {
    if (a.n == 0) {
      std::cerr << "error: fig2 needs --n >= 1\n";
      return kExitFailure;
    }
    sc = gen_fig2(a.n);
  } else {
    if (a.n == 0) {
      std::cerr << "error: fig3 needs --n >= 1\n";
      return kExitFailure;
    }
    sc = gen_fig3(a.n);
  }
  write_ksx(*out, sc);
  return kExitOk;
}

struct BenchArgs {
  std::string family;
  std::vector<std::uint32_t> sizes;
  std::string variant = "corrected";
  std::uint64_t seed = 1;
  std::string csv_path;
};

int cmd_bench(const BenchArgs& a) {
  MinimizeOptions opts;
  opts.audit = true;
  if (!parse_variant(a.variant, &opts.variant)) {
    std::cerr << "error: unknown variant " << a.variant << "\n";
    return kExitFailure;
  }
  std::ostream* out = &std::cout;
  std::ofstream os;
  if (!a.csv_path.empty()) {
    os.open(a.csv_path);
    if (!os) {
      std::cerr << "error: cannot write " << a.csv_path << "\n";
      return kExitFailure;
    }
    out = &os;
  }

  // The growth signal each family was built to expose.
  auto measure = [&](const WorkLedger& led) -> std::uint64_t {
    if (a.family == "fig2") return led.units(WorkCategory::kPostprocessDistribute);
    if (a.family == "fig3") return led.units(WorkCategory::kCoroutineBlue);
    return led.total() - led.units(WorkCategory::kInit);
  };

  std::vector<std::uint64_t> signal;
  bool header = true;
  for (std::uint32_t s : a.sizes) {
    if (s == 0) {
      std::cerr << "error: sizes must be >= 1\n";
      return kExitFailure;
    }
    MinimizeResult res;
    if (a.family == "random") {
      res = minimize(gen_random(s, 5ull * s, 4, a.seed), opts);
    } else {
      Scenario sc = a.family == "fig1"   ? gen_fig1(s, s)
                    : a.family == "fig2" ? gen_fig2(s)
                                         : gen_fig3(s);
      res = run_seeded(sc, opts);
    }
    write_ledger_csv(*out, a.family, std::to_string(s), res.ledger, a.variant, header);
    header = false;
    signal.push_back(measure(res.ledger));
  }
  for (std::size_t i = 1; i < signal.size(); ++i) {
    const double ratio =
        signal[i - 1] == 0 ? 0.0 : static_cast<double>(signal[i]) / signal[i - 1];
    *out << a.family << "," << a.sizes[i] << "/" << a.sizes[i - 1] << ",,," << a.variant
         << ",RATIO," << ratio << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kripke structure minimizer for divergence-blind stuttering equivalence"};
  app.require_subcommand(1);

  MinimizeArgs ma;
  CLI::App* mins = app.add_subcommand("minimize", "Minimize a structure and write its quotient");
  mins->add_option("input", ma.input, "input file")->required();
  mins->add_option("--format", ma.format, "input format")
      ->check(CLI::IsMember({"ks", "aut"}));
  mins->add_option("--equiv", ma.equiv, "equivalence to compute")
      ->check(CLI::IsMember({"dbse", "branching"}));
  mins->add_option("--variant", ma.variant, "refinement variant")
      ->check(CLI::IsMember({"corrected", "slow-trysplit", "slow-postprocess", "slow-newbottom"}));
  mins->add_flag("--audit", ma.audit, "track and enforce work budgets");
  mins->add_option("--out", ma.out_path, "quotient output path (default stdout)");
  mins->add_option("--map", ma.map_path, "state to class map path");
  mins->add_option("--csv", ma.csv_path, "ledger CSV path (audit mode)");

  CheckArgs ca;
  CLI::App* chk = app.add_subcommand("check", "Cross-check against the reference engine");
  chk->add_option("input", ca.input, "input file")->required();
  chk->add_option("--format", ca.format, "input format")->check(CLI::IsMember({"ks", "aut"}));
  chk->add_option("--limit", ca.limit, "largest state count the reference engine accepts");

  GenArgs ga;
  CLI::App* gen = app.add_subcommand("gen", "Generate a benchmark family instance");
  gen->add_option("family", ga.family, "family name")
      ->required()
      ->check(CLI::IsMember({"fig1", "fig2", "fig3", "random"}));
  gen->add_option("--k", ga.k, "fig1 chain length");
  gen->add_option("--d", ga.d, "fig1 fan width");
  gen->add_option("--n", ga.n, "family size parameter / random state count");
  gen->add_option("--m", ga.m, "random transition count");
  gen->add_option("--labels", ga.labels, "random label count");
  gen->add_option("--seed", ga.seed, "random seed");
  gen->add_option("--out", ga.out_path, "output path (default stdout)");

  BenchArgs ba;
  CLI::App* ben = app.add_subcommand("bench", "Measure ledger growth across sizes");
  ben->add_option("family", ba.family, "family name")
      ->required()
      ->check(CLI::IsMember({"fig1", "fig2", "fig3", "random"}));
  ben->add_option("--sizes", ba.sizes, "comma separated size list")
      ->required()
      ->delimiter(',');
  ben->add_option("--variant", ba.variant, "refinement variant")
      ->check(CLI::IsMember({"corrected", "slow-trysplit", "slow-postprocess", "slow-newbottom"}));
  ben->add_option("--seed", ba.seed, "seed for the random family");
  ben->add_option("--csv", ba.csv_path, "CSV output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (mins->parsed()) return cmd_minimize(ma);
    if (chk->parsed()) return cmd_check(ca);
    if (gen->parsed()) return cmd_gen(ga);
    return cmd_bench(ba);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
