#include "sttmin/refine.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <utility>
#include <vector>

namespace sttmin {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kCorrected: return "corrected";
    case Variant::kSlowTrySplit: return "slow-trysplit";
    case Variant::kSlowPostprocess: return "slow-postprocess";
    case Variant::kSlowNewBottom: return "slow-newbottom";
  }
  return "corrected";
}

bool parse_variant(const std::string& text, Variant* out) {
  if (text == "corrected") *out = Variant::kCorrected;
  else if (text == "slow-trysplit") *out = Variant::kSlowTrySplit;
  else if (text == "slow-postprocess") *out = Variant::kSlowPostprocess;
  else if (text == "slow-newbottom") *out = Variant::kSlowNewBottom;
  else return false;
  return true;
}

namespace {

// Candidate source for one refinement side: up to two perm ranges, then a
// bucket list of one entry, then a vector of states. Pulls are destructive.
struct SeedStream {
  std::uint32_t a_begin = 0, a_end = 0;
  std::uint32_t b_begin = 0, b_end = 0;
  std::uint32_t bucket_cursor = kNone;
  const std::vector<State>* vec = nullptr;
  std::size_t vec_pos = 0;
  std::uint64_t pulled = 0;
};

struct Side {
  SeedStream stream;
  std::vector<State> members;  // accepted states, acceptance order; also the worklist
  std::size_t expand_pos = 0;
  std::uint32_t edge_cursor = 0;
  bool edge_cursor_valid = false;
  bool finished = false;
  bool aborted = false;
};

struct CoroutineSpec {
  std::uint32_t block = kNone;
  bool candidate_constln_test = false;  // candidates must be bottoms without a direct edge
  std::uint32_t test_constln = kNone;   // target of the no-direct-edge tests
  bool zero_test_marked = false;        // true: reject marked states; false: constellation test
};

struct CatSnap {
  std::array<std::uint64_t, kNumCategories> u{};
};

struct CommitInfo {
  std::uint32_t new_block = kNone;
  std::uint64_t winner_count = 0;
  std::uint64_t w_in_tau = 0;     // inert predecessor weight of the moved half, pre-split
  std::uint64_t w_out = 0;        // outgoing weight of the moved half
  std::uint64_t w_fresh_out = 0;  // outgoing weight of this split's fresh bottoms
  std::uint64_t blue_pulled = 0;
  std::uint64_t red_pulled = 0;
};

class Refiner {
 public:
  Refiner(RefinablePartition& part, WorkLedger& ledger, RunStats& stats, Variant variant)
      : p_(part), led_(ledger), stats_(stats), variant_(variant) {}

  void run();
  void seeded_step(std::uint32_t splitter);

 private:
  RefinablePartition& p_;
  WorkLedger& led_;
  RunStats& stats_;
  Variant variant_;
  // --- accounting helpers ---
  CatSnap take_snap() const {
    CatSnap s;
    for (int i = 0; i < kNumCategories; ++i)
      s.u[i] = led_.units(static_cast<WorkCategory>(i));
    return s;
  }
  std::uint64_t delta(const CatSnap& s, WorkCategory c) const {
    return led_.units(c) - s.u[static_cast<int>(c)];
  }
  void note_delta(const CatSnap& s, WorkCategory c, const char* label, std::uint64_t expr) {
    led_.note_event(c, label, delta(s, c), expr);
  }

  // --- seed streams ---
  bool stream_exhausted(const SeedStream& st) const {
    return st.a_begin >= st.a_end && st.b_begin >= st.b_end && st.bucket_cursor == kNone &&
           (st.vec == nullptr || st.vec_pos >= st.vec->size());
  }
  State stream_next(SeedStream& st) {
    st.pulled += 1;
    if (st.a_begin < st.a_end) return p_.perm_[st.a_begin++];
    if (st.b_begin < st.b_end) return p_.perm_[st.b_begin++];
    if (st.bucket_cursor != kNone) {
      const State s = p_.buckets_[st.bucket_cursor].src;
      st.bucket_cursor = p_.buckets_[st.bucket_cursor].next_in_entry;
      return s;
    }
    return (*st.vec)[st.vec_pos++];
  }

  // --- coroutine engine ---
  void normalize(Side& sd) {
    for (;;) {
      if (sd.expand_pos >= sd.members.size()) return;
      const State v = sd.members[sd.expand_pos];
      if (!sd.edge_cursor_valid) {
        sd.edge_cursor = p_.in_begin_[v];
        sd.edge_cursor_valid = true;
      }
      if (sd.edge_cursor < p_.in_inert_end_[v]) return;
      sd.expand_pos += 1;
      sd.edge_cursor_valid = false;
    }
  }
  bool side_complete(Side& sd) {
    normalize(sd);
    return stream_exhausted(sd.stream) && sd.expand_pos >= sd.members.size();
  }

  void blue_accept(State s, Side& blue, bool bounded, std::uint32_t half) {
    p_.blue_flag_[s] = 1;
    blue.members.push_back(s);
    if (blue.members.size() > half) {
      if (bounded) blue.aborted = true;
      else p_.check(false, "finishing side exceeded half its block");
    }
  }
  void red_accept(State s, Side& red, bool bounded, std::uint32_t half) {
    p_.red_flag_[s] = 1;
    red.members.push_back(s);
    if (red.members.size() > half) {
      if (bounded) red.aborted = true;
      else p_.check(false, "finishing side exceeded half its block");
    }
  }

  void blue_unit(const CoroutineSpec& spec, Side& blue, std::vector<State>& touched,
                 bool bounded, std::uint32_t half) {
    led_.charge(WorkCategory::kCoroutineBlue);
    if (!stream_exhausted(blue.stream)) {
      const State cand = stream_next(blue.stream);
      if (p_.blue_flag_[cand]) return;
      if (spec.candidate_constln_test) {
        if (!p_.is_bottom(cand)) return;
        led_.charge(WorkCategory::kSlowTest);
        if (p_.has_noninert_to(cand, spec.test_constln)) return;
      }
      p_.check(!p_.red_flag_[cand], "state claimed by both refinement sides");
      blue_accept(cand, blue, bounded, half);
      return;
    }
    const std::uint32_t ip = blue.edge_cursor++;
    const State u = p_.in_edges_[ip].src;
    if (p_.blue_flag_[u] || p_.red_flag_[u]) return;
    if (p_.notblue_[u] == kNotBlueUnset) {
      p_.notblue_[u] = p_.inert_out_width(u);
      touched.push_back(u);
    }
    if (variant_ == Variant::kSlowTrySplit) {
      // Naive eligibility bookkeeping: inspect every outgoing transition.
      std::uint64_t same = 0;
      for (std::uint32_t q = p_.out_begin_[u]; q < p_.out_begin_[u + 1]; ++q) {
        led_.charge(WorkCategory::kSlowTest);
        same += p_.block_of_[p_.out_edges_[q].dst] == p_.block_of_[u];
      }
      (void)same;
    }
    p_.notblue_[u] -= 1;
    if (p_.notblue_[u] != 0) return;
    bool eligible;
    if (spec.zero_test_marked) {
      eligible = !p_.is_marked(u);
    } else {
      led_.charge(WorkCategory::kSlowTest);
      eligible = !p_.has_noninert_to(u, spec.test_constln);
    }
    if (eligible) blue_accept(u, blue, bounded, half);
  }

  void red_unit(const CoroutineSpec& spec, Side& red, bool bounded, std::uint32_t half) {
    (void)spec;
    led_.charge(WorkCategory::kCoroutineRed);
    if (!stream_exhausted(red.stream)) {
      const State cand = stream_next(red.stream);
      if (p_.red_flag_[cand]) return;
      p_.check(!p_.blue_flag_[cand], "state claimed by both refinement sides");
      red_accept(cand, red, bounded, half);
      return;
    }
    const std::uint32_t ip = red.edge_cursor++;
    const State u = p_.in_edges_[ip].src;
    if (p_.red_flag_[u]) return;
    p_.check(!p_.blue_flag_[u], "state claimed by both refinement sides");
    red_accept(u, red, bounded, half);
  }

  // Strict unit-by-unit alternation, one side pulling candidates and sweeping
  // inert predecessors per unit. A side whose state count passes half the
  // block aborts; the survivor then runs to completion unbounded.
  bool run_coroutines(const CoroutineSpec& spec, Side& blue, Side& red,
                      std::vector<State>& touched) {
    const std::uint32_t half = p_.blocks_[spec.block].size() / 2;
    std::uint64_t live_blue = 0, live_red = 0;
    auto bump_gap = [&]() {
      const std::int64_t gap = static_cast<std::int64_t>(live_blue) -
                               static_cast<std::int64_t>(live_red);
      const std::int64_t a = gap < 0 ? -gap : gap;
      if (a > stats_.max_balance_gap) stats_.max_balance_gap = a;
      p_.check(a <= 1, "coroutine balance gap above one");
    };
    for (;;) {
      if (side_complete(blue)) {
        blue.finished = true;
        break;
      }
      blue_unit(spec, blue, touched, true, half);
      live_blue += 1;
      bump_gap();
      if (blue.aborted) {
        p_.check(red.members.size() <= half, "both refinement sides over half");
        break;
      }
      if (side_complete(red)) {
        red.finished = true;
        break;
      }
      red_unit(spec, red, true, half);
      live_red += 1;
      bump_gap();
      if (red.aborted) {
        p_.check(blue.members.size() <= half, "both refinement sides over half");
        break;
      }
    }
    if (blue.finished) return true;
    if (red.finished) return false;
    if (blue.aborted) {
      while (!side_complete(red)) red_unit(spec, red, false, half);
      red.finished = true;
      return false;
    }
    while (!side_complete(blue)) blue_unit(spec, blue, touched, false, half);
    blue.finished = true;
    return true;
  }

  // Shared split commit: loser rollback, extraction, entry reattribution,
  // boundary rescan, temporary-state teardown, constellation reactivation.
  CommitInfo commit_split(std::uint32_t B, Side& blue, Side& red, bool blue_won,
                          const std::vector<State>& touched, std::vector<State>& fresh) {
    Side& win = blue_won ? blue : red;
    Side& lose = blue_won ? red : blue;
    std::vector<std::uint8_t>& win_flag = blue_won ? p_.blue_flag_ : p_.red_flag_;
    std::vector<std::uint8_t>& lose_flag = blue_won ? p_.red_flag_ : p_.blue_flag_;
    const WorkCategory lose_cat =
        blue_won ? WorkCategory::kCoroutineRed : WorkCategory::kCoroutineBlue;

    for (State s : lose.members) {
      lose_flag[s] = 0;
      led_.charge(lose_cat);
    }

    if (stats_.record_history) {
      std::vector<State> w = win.members;
      std::sort(w.begin(), w.end());
      stats_.history.push_back(std::move(w));
    }
    stats_.splits += 1;

    CommitInfo ci;
    ci.blue_pulled = blue.stream.pulled;
    ci.red_pulled = red.stream.pulled;
    ci.winner_count = win.members.size();
    ci.new_block = p_.extract_block(B, win.members, win_flag);
    p_.reattribute(ci.new_block, B, win.members, p_.postprocess_active_);
    ci.w_in_tau = p_.inert_in_weight_of(win.members);
    ci.w_out = p_.out_weight_of(win.members);
    const std::size_t fresh0 = fresh.size();
    p_.make_noninert_after_move(ci.new_block, B, win.members, fresh);
    {
      std::vector<State> batch(fresh.begin() + static_cast<std::ptrdiff_t>(fresh0), fresh.end());
      ci.w_fresh_out = batch.empty() ? 0 : p_.out_weight_of(batch);
    }

    for (State s : win.members) {
      win_flag[s] = 0;
      led_.charge(WorkCategory::kTempDestroy);
    }
    for (State s : touched) {
      if (p_.notblue_[s] != kNotBlueUnset) {
        p_.notblue_[s] = kNotBlueUnset;
        led_.charge(WorkCategory::kTempDestroy);
      }
    }

    const std::uint32_t cn = p_.blocks_[B].constln;
    if (!p_.constellations_[cn].on_stack) {
      p_.constellations_[cn].on_stack = true;
      p_.nontrivial_stack_.push_back(cn);
    }
    return ci;
  }

  void note_split_events(const CatSnap& snap, bool blue_won, std::uint64_t blue_len,
                         std::uint64_t red_len, const CommitInfo& ci, bool pair_split) {
    std::uint64_t expr_blue, expr_red;
    if (blue_won) {
      expr_blue = blue_len + ci.w_in_tau + ci.w_out + ci.w_fresh_out + 1;
      expr_red = expr_blue + 1;
    } else {
      expr_red = red_len + ci.w_in_tau + 1;
      expr_blue = expr_red + 1;
    }
    led_.note_event(WorkCategory::kCoroutineBlue, "refine-blue", delta(snap, WorkCategory::kCoroutineBlue), expr_blue);
    led_.note_event(WorkCategory::kCoroutineRed, "refine-red", delta(snap, WorkCategory::kCoroutineRed), expr_red);
    led_.note_event(WorkCategory::kMoveBlock, "block-move", delta(snap, WorkCategory::kMoveBlock),
                    ci.winner_count + ci.w_out + 1);
    led_.note_event(WorkCategory::kNewBottomScan, "boundary-rescan",
                    delta(snap, WorkCategory::kNewBottomScan), ci.w_in_tau + ci.w_out + 1);
    const std::uint64_t st = delta(snap, WorkCategory::kSlowTest);
    if (blue_won && st > 0)
      led_.note_event(WorkCategory::kSlowTest, "eligibility-tests", st,
                      ci.blue_pulled + ci.w_out + ci.w_fresh_out + 1);
    led_.note_event(WorkCategory::kTempDestroy, "refine-temp-clears",
                    delta(snap, WorkCategory::kTempDestroy),
                    ci.blue_pulled + ci.red_pulled + ci.w_in_tau + ci.w_out + 1);
    if (pair_split)
      led_.note_event(WorkCategory::kPostprocessDistribute, "relocation",
                      delta(snap, WorkCategory::kPostprocessDistribute), ci.w_out + 1);
  }

  // Refinement of B against the carved-away part: unmarked bottoms seed one
  // side, marked states the other. Returns the moved half's block id.
  std::uint32_t try_split_marked(std::uint32_t B, std::vector<State>& fresh, bool* blue_won_out) {
    CatSnap snap = take_snap();
    Side blue, red;
    std::uint64_t blue_len, red_len;
    {
      const Block& b0 = p_.blocks_[B];
      blue.stream.a_begin = b0.mb;
      blue.stream.a_end = b0.bottom_end;
      red.stream.a_begin = b0.begin;
      red.stream.a_end = b0.mb;
      red.stream.b_begin = b0.bottom_end;
      red.stream.b_end = b0.mn;
      blue_len = b0.bottom_end - b0.mb;
      red_len = (b0.mb - b0.begin) + (b0.mn - b0.bottom_end);
    }
    CoroutineSpec spec{B, false, kNone, true};
    std::vector<State> touched;
    const bool blue_won = run_coroutines(spec, blue, red, touched);
    p_.clear_marks(B);
    CommitInfo ci = commit_split(B, blue, red, blue_won, touched, fresh);
    note_split_events(snap, blue_won, blue_len, red_len, ci, false);
    *blue_won_out = blue_won;
    return ci.new_block;
  }

  // Refinement of the reachable half against the splitter's old constellation.
  // Candidates for the no-edge side: sources with transitions into the carved
  // part, plus the fresh bottoms of the preceding split.
  void try_split_remainder(std::uint32_t R, std::uint32_t c_rem, std::uint32_t newc,
                           const std::vector<State>& prior_fresh) {
    const std::uint32_t e_rc = p_.find_entry(R, c_rem);
    if (e_rc == kNone) return;
    const std::uint32_t e_rnew = p_.find_entry(R, newc);

    // A run is only worthwhile if some candidate is eligible.
    CatSnap scan_snap = take_snap();
    bool any = false;
    auto test_cand = [&](State s) {
      led_.charge(WorkCategory::kCoroutineBlue);
      if (!p_.is_bottom(s)) return false;
      led_.charge(WorkCategory::kSlowTest);
      return !p_.has_noninert_to(s, c_rem);
    };
    if (e_rnew != kNone)
      for (std::uint32_t bk = p_.entries_[e_rnew].buckets_head; bk != kNone && !any;
           bk = p_.buckets_[bk].next_in_entry)
        any = test_cand(p_.buckets_[bk].src);
    for (std::size_t i = 0; i < prior_fresh.size() && !any; ++i)
      if (p_.block_of_[prior_fresh[i]] == R) any = test_cand(prior_fresh[i]);
    const std::uint64_t blue_len =
        (e_rnew != kNone ? p_.entries_[e_rnew].bucket_count : 0) + prior_fresh.size();
    if (!any) {
      led_.note_event(WorkCategory::kCoroutineBlue, "stability-scan",
                      delta(scan_snap, WorkCategory::kCoroutineBlue), blue_len + 1);
      return;
    }

    CatSnap snap = take_snap();
    Side blue, red;
    blue.stream.bucket_cursor = e_rnew != kNone ? p_.entries_[e_rnew].buckets_head : kNone;
    blue.stream.vec = &prior_fresh;
    red.stream.bucket_cursor = p_.entries_[e_rc].buckets_head;
    const std::uint64_t red_len = p_.entries_[e_rc].bucket_count;
    CoroutineSpec spec{R, true, c_rem, false};
    std::vector<State> touched;
    const bool blue_won = run_coroutines(spec, blue, red, touched);
    std::vector<State> fresh;
    CommitInfo ci = commit_split(R, blue, red, blue_won, touched, fresh);
    note_split_events(snap, blue_won, blue_len, red_len, ci, false);
  }

  // The carved splitter can itself lose stability against the remainder of
  // its old constellation: a state may keep a transition there while some
  // bottom cannot reach it. Bottoms without a direct transition seed the
  // no-reach side; sources of the remaining transitions seed the other.
  void try_split_splitter(std::uint32_t spb, std::uint32_t c_rem) {
    const std::uint32_t e_rc = p_.find_entry(spb, c_rem);
    if (e_rc == kNone) return;
    CatSnap scan_snap = take_snap();
    std::vector<State> blues;
    {
      const Block& b0 = p_.blocks_[spb];
      for (std::uint32_t q = b0.begin; q < b0.bottom_end; ++q) {
        const State u = p_.perm_[q];
        led_.charge(WorkCategory::kSlowTest);
        if (!p_.has_noninert_to(u, c_rem)) blues.push_back(u);
      }
    }
    if (blues.empty()) {
      note_delta(scan_snap, WorkCategory::kSlowTest, "splitter-stability",
                 p_.out_weight_of_block(spb) + 1);
      return;
    }
    CatSnap snap = take_snap();
    Side blue, red;
    blue.stream.vec = &blues;
    red.stream.bucket_cursor = p_.entries_[e_rc].buckets_head;
    const std::uint64_t red_len = p_.entries_[e_rc].bucket_count;
    CoroutineSpec spec{spb, false, c_rem, false};
    std::vector<State> touched;
    const bool blue_won = run_coroutines(spec, blue, red, touched);
    std::vector<State> fresh;
    CommitInfo ci = commit_split(spb, blue, red, blue_won, touched, fresh);
    note_split_events(snap, blue_won, blues.size(), red_len, ci, false);
  }

  void process_block(std::uint32_t B, std::uint32_t c_rem, std::uint32_t newc) {
    std::uint32_t rblock = B;
    std::vector<State> fresh;
    if (p_.blocks_[B].mb < p_.blocks_[B].bottom_end) {
      bool blue_won = false;
      const std::uint32_t moved = try_split_marked(B, fresh, &blue_won);
      rblock = blue_won ? B : moved;
    } else {
      p_.clear_marks(B);
    }
    try_split_remainder(rblock, c_rem, newc, fresh);
  }

  // --- new-bottom postprocessing ---

  void slow_rebuild_pending() {
    for (std::uint32_t pid : p_.pending_) {
      if (p_.pairs_[pid].phase != PairPhase::kPending) continue;
      const std::uint32_t B = p_.pairs_[pid].block;
      for (std::uint32_t u = p_.blocks_[B].nb_head; u != kNone; u = p_.nb_next_[u])
        for (std::uint32_t bk = p_.state_buckets_[u]; bk != kNone;
             bk = p_.buckets_[bk].next_in_state)
          led_.charge(WorkCategory::kPostprocessDistribute);
    }
  }

  std::uint64_t nb_out_weight(std::uint32_t B) const {
    std::uint64_t w = 0;
    for (std::uint32_t u = p_.blocks_[B].nb_head; u != kNone; u = p_.nb_next_[u]) {
      const std::uint64_t d = p_.out_begin_[u + 1] - p_.out_begin_[u];
      w += d > 0 ? d : 1;
    }
    return w;
  }

  void register_block_obligations(std::uint32_t B) {
    if (p_.blocks_[B].nb_size == 0) return;
    CatSnap s0 = take_snap();
    for (std::uint32_t e = p_.blocks_[B].entries_head; e != kNone;
         e = p_.entries_[e].next_in_block) {
      led_.charge(WorkCategory::kPostprocessPair);
      if (p_.entries_[e].pair == kNone) p_.pair_create(e, PairPhase::kPending);
    }
    note_delta(s0, WorkCategory::kPostprocessPair, "obligation-registration",
               p_.blocks_[B].entry_count + 1);
    CatSnap s1 = take_snap();
    for (std::uint32_t u = p_.blocks_[B].nb_head; u != kNone; u = p_.nb_next_[u])
      p_.fresh_bottom_bucket_walk(u);
    note_delta(s1, WorkCategory::kPostprocessDistribute, "stability-sets", nb_out_weight(B) + 1);
  }

  void process_fresh_bottom(State f) {
    CatSnap s = take_snap();
    p_.fresh_bottom_bucket_walk(f);
    p_.rearm_processed(f);
    const std::uint64_t d = p_.out_begin_[f + 1] - p_.out_begin_[f];
    note_delta(s, WorkCategory::kPostprocessDistribute, "fresh-bottom",
               (d > 0 ? d : 1) + p_.blocks_[p_.block_of_[f]].entry_count + 1);
  }

  void postprocess() {
    if (p_.nb_blocks_.empty()) return;
    p_.postprocess_active_ = true;
    std::vector<std::uint32_t> cleanup = std::move(p_.nb_blocks_);
    p_.nb_blocks_.clear();
    for (std::uint32_t B : cleanup) register_block_obligations(B);

    while (!p_.pending_.empty()) {
      const std::uint32_t pid = p_.pending_.front();
      p_.pending_.pop_front();
      if (p_.pairs_[pid].phase == PairPhase::kDead) {
        led_.charge(WorkCategory::kPostprocessPair);
        led_.note_event(WorkCategory::kPostprocessPair, "dead-pop", 1, 1);
        p_.pair_free_.push_back(pid);
        continue;
      }
      p_.check(p_.pairs_[pid].phase == PairPhase::kPending, "popped obligation not pending");
      const std::uint32_t B = p_.pairs_[pid].block;
      const std::uint32_t D = p_.pairs_[pid].constln;
      const std::uint32_t s_count = p_.pairs_[pid].s_count;
      const std::uint32_t target = p_.blocks_[B].nb_size - s_count;

      // Classify new bottoms: members already in S stay put (their stamp is at
      // or below the watermark); the rest seed the no-edge side.
      std::vector<State> blues;
      std::uint64_t scanned = 0;
      if (variant_ == Variant::kSlowNewBottom) {
        for (std::uint32_t u = p_.blocks_[B].nb_head; u != kNone; u = p_.nb_next_[u]) {
          led_.charge(WorkCategory::kCoroutineBlue);
          scanned += 1;
          const std::uint32_t bk = p_.find_bucket(u, D);
          const bool in_s = bk != kNone && p_.buckets_[bk].s_entry != kNone;
          if (!in_s) {
            p_.check(p_.nb_seq_[u] > p_.pairs_[pid].seen_nb,
                     "stale new bottom outside the stability set");
            blues.push_back(u);
          }
        }
      } else {
        std::uint32_t u = p_.blocks_[B].nb_tail;
        while (blues.size() < target && u != kNone) {
          led_.charge(WorkCategory::kCoroutineBlue);
          scanned += 1;
          const std::uint32_t bk = p_.find_bucket(u, D);
          const bool in_s = bk != kNone && p_.buckets_[bk].s_entry != kNone;
          if (!in_s) {
            p_.check(p_.nb_seq_[u] > p_.pairs_[pid].seen_nb,
                     "stale new bottom outside the stability set");
            blues.push_back(u);
          }
          u = p_.nb_prev_[u];
        }
      }
      p_.check(blues.size() == target, "stability-set count disagrees with the scan");
      led_.charge(WorkCategory::kPostprocessPair, 2);
      led_.note_event(WorkCategory::kPostprocessPair, "obligation-pop", 2 + scanned,
                      s_count + scanned + 2);

      if (blues.empty()) {
        p_.pair_mark_processed(pid);
        continue;
      }

      p_.pairs_[pid].phase = PairPhase::kInFlight;
      CatSnap snap = take_snap();
      Side blue, red;
      blue.stream.vec = &blues;
      red.stream.bucket_cursor = p_.entries_[p_.pairs_[pid].entry].buckets_head;
      const std::uint64_t red_len = p_.entries_[p_.pairs_[pid].entry].bucket_count;
      CoroutineSpec spec{B, false, D, false};
      std::vector<State> touched;
      const bool blue_won = run_coroutines(spec, blue, red, touched);
      std::vector<State> fresh;
      p_.charge_distribute_on_move_ = true;
      CommitInfo ci = commit_split(B, blue, red, blue_won, touched, fresh);
      p_.charge_distribute_on_move_ = false;
      note_split_events(snap, blue_won, scanned, red_len, ci, true);
      cleanup.push_back(ci.new_block);

      if (p_.pairs_[pid].phase == PairPhase::kInFlight) {
        p_.pair_mark_processed(pid);
      } else {
        p_.check(p_.pairs_[pid].phase == PairPhase::kDead, "in-flight obligation corrupted");
        p_.pair_free_.push_back(pid);
      }
      for (State f : fresh) process_fresh_bottom(f);
      if (variant_ == Variant::kSlowPostprocess) slow_rebuild_pending();
    }

    for (std::uint32_t B : cleanup) {
      if (p_.blocks_[B].proc_head == kNone && p_.blocks_[B].nb_head == kNone) continue;
      CatSnap s = take_snap();
      const std::uint64_t items = p_.postprocess_cleanup_block(B);
      note_delta(s, WorkCategory::kTempDestroy, "postprocess-teardown", items + 1);
    }
    p_.postprocess_active_ = false;
  }

  // --- steps ---

  void step_on(std::uint32_t spb, std::uint32_t c_rem) {
    stats_.refine_steps += 1;
    led_.charge(WorkCategory::kSplitterSelect);
    led_.note_event(WorkCategory::kSplitterSelect, "splitter-select", 1, 1);

    const std::uint64_t spb_inw = p_.in_weight_of_block(spb);
    CatSnap s0 = take_snap();
    const std::uint32_t newc = p_.carve_to_new_constellation(spb);
    note_delta(s0, WorkCategory::kPrepareOut, "splitter-carve", spb_inw + 1);
    note_delta(s0, WorkCategory::kTempDestroy, "carve-transients", spb_inw + 1);

    CatSnap s1 = take_snap();
    std::vector<std::uint32_t> touched_blocks;
    {
      const std::uint32_t q0 = p_.blocks_[spb].begin, q1 = p_.blocks_[spb].end;
      for (std::uint32_t q = q0; q < q1; ++q) {
        const State t = p_.perm_[q];
        led_.charge(WorkCategory::kMarkPred);
        for (std::uint32_t ip = p_.in_inert_end_[t]; ip < p_.in_begin_[t + 1]; ++ip) {
          led_.charge(WorkCategory::kMarkPred);
          const State u = p_.in_edges_[ip].src;
          const std::uint32_t ub = p_.block_of_[u];
          if (!p_.blocks_[ub].touched) {
            p_.blocks_[ub].touched = true;
            touched_blocks.push_back(ub);
          }
          p_.mark_state(u);
        }
      }
    }
    note_delta(s1, WorkCategory::kMarkPred, "mark-predecessors", spb_inw + 1);

    try_split_splitter(spb, c_rem);
    for (std::uint32_t B : touched_blocks) {
      p_.blocks_[B].touched = false;
      process_block(B, c_rem, newc);
    }
    postprocess();
  }
};

void Refiner::run() {
  while (!p_.nontrivial_stack_.empty()) {
    const std::uint32_t c = p_.nontrivial_stack_.back();
    if (p_.constellations_[c].num_blocks < 2) {
      p_.constellations_[c].on_stack = false;
      p_.nontrivial_stack_.pop_back();
      continue;
    }
    const std::uint32_t spb = p_.select_splitter(c);
    step_on(spb, c);
  }
}

void Refiner::seeded_step(std::uint32_t splitter) {
  const std::uint32_t c = p_.blocks_[splitter].constln;
  if (p_.constellations_[c].num_blocks < 2)
    throw std::invalid_argument("splitter constellation holds no other block");
  step_on(splitter, c);
}

// --- preprocessing ---

struct Condensed {
  KripkeStructure ks;
  std::vector<State> comp_of;
};

// Strongly connected components of the equal-label subgraph collapse to one
// state each; their internal transitions disappear. Components sharing a
// label class are exactly the cycles a stutter can hide.
Condensed collapse_label_cycles(const KripkeStructure& ks) {
  const State n = ks.num_states;
  std::vector<std::uint32_t> deg(n + 1, 0);
  for (const auto& t : ks.transitions)
    if (ks.label_of[t.first] == ks.label_of[t.second]) deg[t.first + 1] += 1;
  for (State s = 0; s < n; ++s) deg[s + 1] += deg[s];
  std::vector<State> adj(deg[n]);
  {
    std::vector<std::uint32_t> cur(deg.begin(), deg.end() - 1);
    for (const auto& t : ks.transitions)
      if (ks.label_of[t.first] == ks.label_of[t.second]) adj[cur[t.first]++] = t.second;
  }

  std::vector<std::uint32_t> index(n, 0), low(n, 0);
  std::vector<std::uint8_t> on_stack(n, 0);
  std::vector<State> stack;
  std::vector<State> comp_of(n, 0);
  std::vector<std::pair<State, std::uint32_t>> call;
  std::uint32_t next_index = 1;
  State num_comps = 0;
  for (State root = 0; root < n; ++root) {
    if (index[root] != 0) continue;
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = 1;
    call.emplace_back(root, deg[root]);
    while (!call.empty()) {
      const State v = call.back().first;
      if (call.back().second < deg[v + 1]) {
        const State w = adj[call.back().second];
        call.back().second += 1;
        if (index[w] == 0) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.emplace_back(w, deg[w]);
        } else if (on_stack[w] && index[w] < low[v]) {
          low[v] = index[w];
        }
      } else {
        if (low[v] == index[v]) {
          for (;;) {
            const State w = stack.back();
            stack.pop_back();
            on_stack[w] = 0;
            comp_of[w] = num_comps;
            if (w == v) break;
          }
          num_comps += 1;
        }
        call.pop_back();
        if (!call.empty()) {
          const State parent = call.back().first;
          if (low[v] < low[parent]) low[parent] = low[v];
        }
      }
    }
  }

  Condensed cd;
  cd.comp_of = std::move(comp_of);
  cd.ks.num_states = num_comps;
  cd.ks.label_names = ks.label_names;
  cd.ks.label_of.resize(num_comps);
  for (State s = 0; s < n; ++s) cd.ks.label_of[cd.comp_of[s]] = ks.label_of[s];
  cd.ks.transitions.reserve(ks.transitions.size());
  for (const auto& t : ks.transitions) {
    const State cu = cd.comp_of[t.first], cv = cd.comp_of[t.second];
    if (cu != cv) cd.ks.transitions.emplace_back(cu, cv);
  }
  return cd;
}

// Initial blocks: per label class, states that can reach a visible transition
// through equal-label steps are separated from states that never can. The
// separation makes every initial block stable against the whole state space
// acting as one constellation.
std::vector<std::vector<State>> initial_stable_blocks(const KripkeStructure& ks) {
  const State n = ks.num_states;
  const std::size_t nl = ks.label_names.size();
  std::vector<std::vector<State>> by_label(nl);
  for (State s = 0; s < n; ++s) by_label[ks.label_of[s]].push_back(s);

  std::vector<std::uint8_t> reach(n, 0);
  std::vector<std::uint32_t> rdeg(n + 1, 0);
  for (const auto& t : ks.transitions) {
    if (ks.label_of[t.first] == ks.label_of[t.second]) rdeg[t.second + 1] += 1;
    else reach[t.first] = 1;
  }
  for (State s = 0; s < n; ++s) rdeg[s + 1] += rdeg[s];
  std::vector<State> radj(rdeg[n]);
  {
    std::vector<std::uint32_t> cur(rdeg.begin(), rdeg.end() - 1);
    for (const auto& t : ks.transitions)
      if (ks.label_of[t.first] == ks.label_of[t.second]) radj[cur[t.second]++] = t.first;
  }
  std::vector<State> work;
  for (State s = 0; s < n; ++s)
    if (reach[s]) work.push_back(s);
  while (!work.empty()) {
    const State v = work.back();
    work.pop_back();
    for (std::uint32_t q = rdeg[v]; q < rdeg[v + 1]; ++q) {
      const State u = radj[q];
      if (!reach[u]) {
        reach[u] = 1;
        work.push_back(u);
      }
    }
  }

  std::vector<std::vector<State>> blocks;
  for (std::size_t l = 0; l < nl; ++l) {
    if (by_label[l].empty()) continue;
    std::vector<State> r, t;
    for (State s : by_label[l]) (reach[s] ? r : t).push_back(s);
    if (!r.empty()) blocks.push_back(std::move(r));
    if (!t.empty()) blocks.push_back(std::move(t));
  }
  return blocks;
}

}  // namespace

MinimizeResult minimize(const KripkeStructure& ks, const MinimizeOptions& opts) {
  MinimizeResult r;
  r.stats.record_history = opts.record_history;
  r.ledger.reset(ks.num_states, ks.num_transitions(), opts.audit);
  if (ks.num_states == 0) {
    r.partition.num_blocks = 0;
    return r;
  }

  Condensed cd = collapse_label_cycles(ks);
  {
    const std::uint64_t w = static_cast<std::uint64_t>(ks.num_states) + ks.num_transitions();
    r.ledger.charge(WorkCategory::kInit, w);
    r.ledger.note_event(WorkCategory::kInit, "cycle-collapse", w, w);
  }
  std::vector<std::vector<State>> blocks0 = initial_stable_blocks(cd.ks);
  {
    const std::uint64_t w =
        static_cast<std::uint64_t>(cd.ks.num_states) + cd.ks.num_transitions();
    r.ledger.charge(WorkCategory::kInit, w);
    r.ledger.note_event(WorkCategory::kInit, "initial-stabilization", w, w);
  }

  std::vector<std::uint32_t> universe(blocks0.size());
  for (std::uint32_t b = 0; b < universe.size(); ++b) universe[b] = b;
  RefinablePartition part(cd.ks, blocks0, {universe}, r.ledger, r.stats);
  if (blocks0.size() >= 2) {
    part.constellations_[0].on_stack = true;
    part.nontrivial_stack_.push_back(0);
  }
  Refiner ref(part, r.ledger, r.stats, opts.variant);
  ref.run();
  if (opts.audit) part.validate_deep();

  Partition on_comps = part.result_partition();
  Partition full;
  full.num_blocks = on_comps.num_blocks;
  full.block_of.resize(ks.num_states);
  for (State s = 0; s < ks.num_states; ++s)
    full.block_of[s] = on_comps.block_of[cd.comp_of[s]];
  r.partition = canonical_partition(full);
  return r;
}

MinimizeResult run_seeded(const Scenario& scenario, const MinimizeOptions& opts) {
  MinimizeResult r;
  r.stats.record_history = opts.record_history;
  r.ledger.reset(scenario.ks.num_states, scenario.ks.num_transitions(), opts.audit);
  RefinablePartition part(scenario.ks, scenario.blocks, scenario.constellations, r.ledger,
                          r.stats);
  Refiner ref(part, r.ledger, r.stats, opts.variant);
  ref.seeded_step(scenario.splitter);
  if (opts.audit) part.validate_deep();
  r.partition = canonical_partition(part.result_partition());
  return r;
}

}  // namespace sttmin
