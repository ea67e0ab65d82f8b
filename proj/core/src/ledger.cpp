#include "sttmin/ledger.hpp"

#include <bit>
#include <numeric>

namespace sttmin {

const char* category_name(WorkCategory c) {
  switch (c) {
    case WorkCategory::kInit: return "INIT";
    case WorkCategory::kSplitterSelect: return "SPLITTER_SELECT";
    case WorkCategory::kMarkPred: return "MARK_PRED";
    case WorkCategory::kPrepareOut: return "PREPARE_OUT";
    case WorkCategory::kCoroutineBlue: return "COROUTINE_BLUE";
    case WorkCategory::kCoroutineRed: return "COROUTINE_RED";
    case WorkCategory::kMoveBlock: return "MOVE_BLOCK";
    case WorkCategory::kNewBottomScan: return "NEWBOTTOM_SCAN";
    case WorkCategory::kSlowTest: return "SLOW_TEST";
    case WorkCategory::kPostprocessPair: return "POSTPROCESS_PAIR";
    case WorkCategory::kPostprocessDistribute: return "POSTPROCESS_DISTRIBUTE";
    case WorkCategory::kTempDestroy: return "TEMP_DESTROY";
    case WorkCategory::kCount: break;
  }
  return "?";
}

std::uint64_t floor_log2(std::uint64_t n) {
  if (n == 0) return 0;
  return static_cast<std::uint64_t>(std::bit_width(n)) - 1;
}

void WorkLedger::reset(std::uint64_t n, std::uint64_t m, bool audit) {
  units_.fill(0);
  violations_.clear();
  n_ = n;
  m_ = m;
  audit_ = audit;
}

void WorkLedger::note_event(WorkCategory c, const char* label,
                            std::uint64_t charged, std::uint64_t expr) {
  if (!audit_) return;
  std::uint64_t allowed = kEventFactor * (expr + 1);
  if (charged > allowed) {
    violations_.push_back({label, c, expr, allowed, charged});
  }
}

std::uint64_t WorkLedger::total() const {
  return std::accumulate(units_.begin(), units_.end(), std::uint64_t{0});
}

std::uint64_t WorkLedger::global_budget() const {
  return kGlobalFactor * (m_ + n_) * (floor_log2(n_) + 1);
}

}  // namespace sttmin
