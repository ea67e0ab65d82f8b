#ifndef STTMIN_REFINE_HPP
#define STTMIN_REFINE_HPP

#include <string>

#include "sttmin/genfam.hpp"
#include "sttmin/graph.hpp"
#include "sttmin/ledger.hpp"
#include "sttmin/partition.hpp"

namespace sttmin {

// Execution variants. All compute the same partition; each slow variant
// genuinely performs the naive version of one phase so that its cost lands in
// the ledger.
enum class Variant : std::uint8_t {
  kCorrected = 0,
  kSlowTrySplit,     // re-derives eligibility by scanning all out-transitions
  kSlowPostprocess,  // rebuilds pending stability sets after every split
  kSlowNewBottom,    // pending pops rescan the whole new-bottom list, oldest first
};

const char* variant_name(Variant v);
bool parse_variant(const std::string& text, Variant* out);

struct MinimizeOptions {
  bool audit = false;
  Variant variant = Variant::kCorrected;
  bool record_history = false;
};

struct MinimizeResult {
  Partition partition;
  WorkLedger ledger;
  RunStats stats;
};

// Coarsest divergence-blind stuttering-equivalence partition of the states.
MinimizeResult minimize(const KripkeStructure& ks, const MinimizeOptions& opts = {});

// One refine step from the scenario's prepared position: splitter carve,
// predecessor marking, both refinement passes per touched block, and full
// new-bottom postprocessing. No preprocessing, no outer loop.
MinimizeResult run_seeded(const Scenario& scenario, const MinimizeOptions& opts = {});

}  // namespace sttmin

#endif
