#ifndef STTMIN_PARTITION_HPP
#define STTMIN_PARTITION_HPP

#include <cstdint>
#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "sttmin/graph.hpp"
#include "sttmin/ledger.hpp"

namespace sttmin {

inline constexpr std::uint32_t kNone = 0xFFFFFFFFu;
inline constexpr std::uint32_t kNotBlueUnset = 0xFFFFFFFFu;

// Counters and failure log shared by a single minimization run.
struct RunStats {
  std::uint64_t checks_performed = 0;
  std::vector<std::string> check_failures;
  std::uint32_t max_move_count = 0;
  std::uint64_t new_bottom_count = 0;
  std::int64_t max_balance_gap = 0;
  std::uint64_t splits = 0;
  std::uint64_t refine_steps = 0;
  bool record_history = false;
  std::vector<std::vector<State>> history;
};

struct OutEdge {
  State dst;
  std::uint32_t in_pos;
};

struct InEdge {
  State src;
  std::uint32_t out_pos;
};

// Contiguous group of one state's outgoing transitions whose targets share a
// constellation. [begin,inert_end) lead to the state's own block.
struct Bucket {
  std::uint32_t begin = 0, end = 0, inert_end = 0;
  State src = 0;
  std::uint32_t constln = kNone;
  std::uint32_t entry = kNone;  // kNone while the bucket is all inert
  std::uint32_t next_in_state = kNone, prev_in_state = kNone;
  std::uint32_t next_in_entry = kNone, prev_in_entry = kNone;
  std::uint32_t s_entry = kNone;  // membership handle in one pair's S list
  std::uint32_t carve_child = kNone;  // transient during a constellation carve
  std::uint32_t noninert() const { return end - inert_end; }
  bool empty() const { return begin == end; }
};

// Per (block, constellation): count of non-inert transitions from the block
// into the constellation, plus the list of buckets carrying them.
struct ToConstlnEntry {
  std::uint32_t block = kNone, constln = kNone;
  std::uint32_t count = 0;
  std::uint32_t buckets_head = kNone;
  std::uint32_t bucket_count = 0;
  std::uint32_t next_in_block = kNone, prev_in_block = kNone;
  std::uint32_t pair = kNone;
};

// Slice of perm: [begin,bottom_end) bottom states, rest non-bottom.
// While a splitter's predecessors are marked, [begin,mb) are the marked
// bottoms and [bottom_end,mn) the marked non-bottom states.
struct Block {
  std::uint32_t begin = 0, mb = 0, bottom_end = 0, mn = 0, end = 0;
  std::uint32_t constln = kNone;
  std::uint32_t next_in_constln = kNone, prev_in_constln = kNone;
  std::uint32_t entries_head = kNone, entries_tail = kNone;
  std::uint32_t entry_count = 0;
  std::uint32_t nb_head = kNone, nb_tail = kNone, nb_size = 0;
  std::uint32_t proc_head = kNone;  // processed pairs, re-armable
  bool touched = false;             // has marked states this refine step
  std::uint32_t size() const { return end - begin; }
  std::uint32_t num_bottoms() const { return bottom_end - begin; }
  std::uint32_t marked_bottoms() const { return mb - begin; }
  std::uint32_t marked_nonbottoms() const { return mn - bottom_end; }
};

struct Constellation {
  std::uint32_t first_block = kNone;
  std::uint32_t num_blocks = 0;
  std::uint32_t num_states = 0;
  bool on_stack = false;
};

struct SEntry {
  State state = 0;
  std::uint32_t bucket = kNone, pair = kNone;
  std::uint32_t next = kNone, prev = kNone;
};

enum class PairPhase : std::uint8_t { kPending, kProcessed, kInFlight, kDead };

// Stability obligation (block, constellation) during new-bottom
// postprocessing. S lists the block's new bottom states that have a direct
// non-inert transition into the constellation.
struct Pair {
  std::uint32_t block = kNone, constln = kNone, entry = kNone;
  PairPhase phase = PairPhase::kPending;
  std::uint32_t s_head = kNone, s_tail = kNone, s_count = 0;
  // Registration stamp watermark: every new-bottom state of the block with a
  // stamp at or below this is known to sit in S. Non-members are newer.
  std::uint32_t seen_nb = 0;
  std::uint32_t proc_next = kNone, proc_prev = kNone;
};

// Refinable partition of a Kripke structure with grouped transition buckets,
// constellation bookkeeping, and the new-bottom machinery. All mutators
// charge the ledger for the work they do.
class RefinablePartition {
 public:
  RefinablePartition(const KripkeStructure& ks,
                     const std::vector<std::vector<State>>& initial_blocks,
                     const std::vector<std::vector<std::uint32_t>>& constln_groups,
                     WorkLedger& ledger, RunStats& stats);

  // --- state and block geometry ---
  std::uint32_t num_states() const { return n_; }
  Block& block(std::uint32_t b) { return blocks_[b]; }
  const Block& block(std::uint32_t b) const { return blocks_[b]; }
  std::uint32_t block_of(State s) const { return block_of_[s]; }
  bool is_bottom(State s) const {
    const Block& b = blocks_[block_of_[s]];
    return pos_[s] < b.bottom_end;
  }
  bool is_marked(State s) const {
    const Block& b = blocks_[block_of_[s]];
    return pos_[s] < b.mb || (pos_[s] >= b.bottom_end && pos_[s] < b.mn);
  }
  void mark_state(State s);
  void clear_marks(std::uint32_t b) {
    blocks_[b].mb = blocks_[b].begin;
    blocks_[b].mn = blocks_[b].bottom_end;
  }

  // --- buckets and entries ---
  std::uint32_t find_bucket(State s, std::uint32_t constln) const {
    auto it = bucket_hash_.find(key(s, constln));
    return it == bucket_hash_.end() ? kNone : it->second;
  }
  bool has_noninert_to(State s, std::uint32_t constln) const {
    std::uint32_t b = find_bucket(s, constln);
    return b != kNone && buckets_[b].noninert() > 0;
  }
  std::uint32_t inert_out_width(State s) const {
    std::uint32_t b = find_bucket(s, blocks_[block_of_[s]].constln);
    return b == kNone ? 0 : buckets_[b].inert_end - buckets_[b].begin;
  }
  std::uint32_t find_entry(std::uint32_t blk, std::uint32_t constln) const {
    auto it = entry_hash_.find(key(blk, constln));
    return it == entry_hash_.end() ? kNone : it->second;
  }

  // --- constellations ---
  // Any block no larger than half its constellation; O(1).
  std::uint32_t select_splitter(std::uint32_t constln) const;
  // Moves blk into a fresh singleton constellation and re-buckets every
  // transition into blk. Returns the new constellation id.
  std::uint32_t carve_to_new_constellation(std::uint32_t blk);

  // --- splitting ---
  // Moves the states of winner (flagged via in_winner) out of blk into a new
  // block in the same constellation, inserted before blk. Keeps bottom
  // sections of both halves valid, relinks moved new-bottom states in
  // discovery order, and bumps move counters.
  std::uint32_t extract_block(std::uint32_t blk, const std::vector<State>& winner,
                              const std::vector<std::uint8_t>& in_winner);
  // Re-points the moved states' buckets from old_blk's entries to new_blk's.
  // Inherits pairs onto fresh entries and relocates S membership of moved
  // states unless relocate_s is false.
  void reattribute(std::uint32_t new_blk, std::uint32_t old_blk,
                   const std::vector<State>& winner, bool relocate_s);
  // Turns inert transitions crossing the new boundary non-inert, updating
  // bucket and predecessor dividers, and registers states that lost their
  // last inert transition as new bottoms. Appends them to fresh.
  void make_noninert_after_move(std::uint32_t new_blk, std::uint32_t old_blk,
                                const std::vector<State>& winner,
                                std::vector<State>& fresh);

  void register_new_bottom(State s);

  // --- pairs ---
  std::uint32_t pair_create(std::uint32_t entry_id, PairPhase phase);
  void pair_mark_processed(std::uint32_t pair_id);
  void pair_repend_front(std::uint32_t pair_id);
  void pair_kill(std::uint32_t pair_id);
  void s_append(std::uint32_t pair_id, State s, std::uint32_t bucket_id);
  void s_unlink(std::uint32_t s_entry_id);

  // Walks s's buckets: appends s to the S list of every existing pair it
  // reaches, and creates an instantly satisfied pair for entries that gained
  // their first non-inert transition during postprocessing.
  void fresh_bottom_bucket_walk(State s);
  // Moves processed pairs of s's block that s cannot reach back to the front
  // of the pending queue.
  void rearm_processed(State s);
  // Frees the block's processed pairs with their S lists and clears its
  // new-bottom list. Returns the number of items released.
  std::uint64_t postprocess_cleanup_block(std::uint32_t blk);

  // --- result and checking ---
  Partition result_partition() const;
  void validate_deep() const;  // throws std::logic_error on inconsistency

  // --- audit helpers (no ledger charges) ---
  std::uint64_t in_weight_of_block(std::uint32_t blk) const;   // sum max(1,|in|)
  std::uint64_t out_weight_of_block(std::uint32_t blk) const;  // sum max(1,|out|)
  std::uint64_t out_weight_of(const std::vector<State>& ss) const;
  std::uint64_t inert_in_weight_of(const std::vector<State>& ss) const;
  void check(bool ok, const char* what);

  std::uint32_t num_blocks() const { return static_cast<std::uint32_t>(blocks_.size()); }

  // Everything below is open to the refinement driver.
  std::uint32_t n_ = 0;
  std::vector<State> perm_;
  std::vector<std::uint32_t> pos_;
  std::vector<std::uint32_t> block_of_;
  std::vector<Block> blocks_;
  std::vector<Constellation> constellations_;
  std::vector<std::uint32_t> nontrivial_stack_;

  std::vector<OutEdge> out_edges_;
  std::vector<std::uint32_t> out_begin_;   // n+1
  std::vector<std::uint32_t> edge_bucket_; // per out position
  std::vector<InEdge> in_edges_;
  std::vector<std::uint32_t> in_begin_;    // n+1
  std::vector<std::uint32_t> in_inert_end_;

  std::vector<Bucket> buckets_;
  std::vector<std::uint32_t> bucket_free_;
  std::vector<std::uint32_t> state_buckets_;  // head of each state's bucket list
  std::unordered_map<std::uint64_t, std::uint32_t> bucket_hash_;
  std::vector<ToConstlnEntry> entries_;
  std::vector<std::uint32_t> entry_free_;
  std::unordered_map<std::uint64_t, std::uint32_t> entry_hash_;

  std::vector<std::uint32_t> notblue_;
  std::vector<std::uint8_t> blue_flag_, red_flag_;
  std::vector<std::uint8_t> was_new_bottom_, in_nb_;
  std::vector<std::uint32_t> nb_next_, nb_prev_;
  std::vector<std::uint64_t> nb_seq_;
  std::uint64_t nb_seq_counter_ = 0;
  std::vector<std::uint32_t> move_count_;
  std::vector<std::uint64_t> test_stamp_;
  std::uint64_t current_stamp_ = 0;

  std::vector<SEntry> s_entries_;
  std::vector<std::uint32_t> s_free_;
  std::vector<Pair> pairs_;
  std::vector<std::uint32_t> pair_free_;
  std::deque<std::uint32_t> pending_;
  // Blocks whose new-bottom list turned nonempty outside postprocessing;
  // consumed by the batch registration at the end of the refine step.
  std::vector<std::uint32_t> nb_blocks_;
  bool postprocess_active_ = false;
  bool charge_distribute_on_move_ = false;

  WorkLedger* ledger_ = nullptr;
  RunStats* stats_ = nullptr;

 private:
  static std::uint64_t key(std::uint64_t a, std::uint64_t b) { return (a << 32) | b; }
  std::uint32_t alloc_bucket();
  void free_bucket(std::uint32_t id);
  std::uint32_t alloc_entry();
  void free_entry(std::uint32_t id);
  std::uint32_t alloc_s_entry();
  void free_s_entry(std::uint32_t id);
  std::uint32_t alloc_pair();
  void entry_attach_bucket(std::uint32_t entry_id, std::uint32_t bucket_id);
  void entry_detach_bucket(std::uint32_t entry_id, std::uint32_t bucket_id);
  std::uint32_t entry_get_or_create(std::uint32_t blk, std::uint32_t constln,
                                    bool* created = nullptr);
  void entry_release_if_dead(std::uint32_t entry_id);
  void block_attach_entry(std::uint32_t blk, std::uint32_t entry_id);
  void block_detach_entry(std::uint32_t blk, std::uint32_t entry_id);
  void swap_out_edges(std::uint32_t a, std::uint32_t b);
  void swap_in_edges(std::uint32_t a, std::uint32_t b);
  void swap_perm(std::uint32_t a, std::uint32_t b);
  // Returns true when the source just lost its last inert transition.
  bool make_edge_noninert(std::uint32_t out_pos);
  void proc_list_detach(std::uint32_t pair_id);
};

}  // namespace sttmin

#endif
