#ifndef STTMIN_LEDGER_HPP
#define STTMIN_LEDGER_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace sttmin {

// Work accounting. One unit is one entry into a loop body (or one O(1)
// bookkeeping action counted as such). Units are grouped into categories and,
// in audit mode, into per-event scopes checked against local budgets.
enum class WorkCategory : int {
  kInit = 0,
  kSplitterSelect,
  kMarkPred,
  kPrepareOut,
  kCoroutineBlue,
  kCoroutineRed,
  kMoveBlock,
  kNewBottomScan,
  kSlowTest,
  kPostprocessPair,
  kPostprocessDistribute,
  kTempDestroy,
  kCount
};

inline constexpr int kNumCategories = static_cast<int>(WorkCategory::kCount);

const char* category_name(WorkCategory c);

// One audit failure: an event charged more than factor*(expr+1) units.
struct BudgetViolation {
  std::string event;
  WorkCategory category;
  std::uint64_t expr;
  std::uint64_t allowed;
  std::uint64_t charged;
};

// floor(log2(n)) for n >= 1; 0 for n == 0.
std::uint64_t floor_log2(std::uint64_t n);

class WorkLedger {
 public:
  // Per-event budget: charged <= kEventFactor * (expr + 1).
  static constexpr std::uint64_t kEventFactor = 8;
  // Whole run: total <= kGlobalFactor * (m + n) * (floor_log2(n) + 1),
  // n and m taken from the input before any preprocessing.
  static constexpr std::uint64_t kGlobalFactor = 64;

  void reset(std::uint64_t n, std::uint64_t m, bool audit);

  void charge(WorkCategory c, std::uint64_t units = 1) {
    units_[static_cast<int>(c)] += units;
  }

  // Audit check for one event; charged units are accounted separately via
  // charge(). No-op when audit is off.
  void note_event(WorkCategory c, const char* label, std::uint64_t charged,
                  std::uint64_t expr);

  std::uint64_t units(WorkCategory c) const {
    return units_[static_cast<int>(c)];
  }
  std::uint64_t total() const;
  std::uint64_t global_budget() const;
  bool global_ok() const { return total() <= global_budget(); }

  bool audit() const { return audit_; }
  std::uint64_t input_states() const { return n_; }
  std::uint64_t input_transitions() const { return m_; }

  const std::vector<BudgetViolation>& violations() const { return violations_; }

 private:
  std::array<std::uint64_t, kNumCategories> units_{};
  std::vector<BudgetViolation> violations_;
  std::uint64_t n_ = 0;
  std::uint64_t m_ = 0;
  bool audit_ = false;
};

}  // namespace sttmin

#endif
