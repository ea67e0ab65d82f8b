#include "sttmin/partition.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>

namespace sttmin {

// ---------------------------------------------------------------------------
// Pools.

std::uint32_t RefinablePartition::alloc_bucket() {
  std::uint32_t id;
  if (!bucket_free_.empty()) {
    id = bucket_free_.back();
    bucket_free_.pop_back();
  } else {
    id = static_cast<std::uint32_t>(buckets_.size());
    buckets_.emplace_back();
  }
  buckets_[id] = Bucket{};
  return id;
}

void RefinablePartition::free_bucket(std::uint32_t id) {
  buckets_[id] = Bucket{};
  bucket_free_.push_back(id);
}

std::uint32_t RefinablePartition::alloc_entry() {
  std::uint32_t id;
  if (!entry_free_.empty()) {
    id = entry_free_.back();
    entry_free_.pop_back();
  } else {
    id = static_cast<std::uint32_t>(entries_.size());
    entries_.emplace_back();
  }
  entries_[id] = ToConstlnEntry{};
  return id;
}

void RefinablePartition::free_entry(std::uint32_t id) {
  entries_[id] = ToConstlnEntry{};
  entry_free_.push_back(id);
}

std::uint32_t RefinablePartition::alloc_s_entry() {
  std::uint32_t id;
  if (!s_free_.empty()) {
    id = s_free_.back();
    s_free_.pop_back();
  } else {
    id = static_cast<std::uint32_t>(s_entries_.size());
    s_entries_.emplace_back();
  }
  s_entries_[id] = SEntry{};
  return id;
}

void RefinablePartition::free_s_entry(std::uint32_t id) {
  s_entries_[id] = SEntry{};
  s_free_.push_back(id);
}

std::uint32_t RefinablePartition::alloc_pair() {
  std::uint32_t id;
  if (!pair_free_.empty()) {
    id = pair_free_.back();
    pair_free_.pop_back();
  } else {
    id = static_cast<std::uint32_t>(pairs_.size());
    pairs_.emplace_back();
  }
  pairs_[id] = Pair{};
  return id;
}

// ---------------------------------------------------------------------------
// Low-level swaps. Cross pointers stay valid through every swap.

void RefinablePartition::swap_out_edges(std::uint32_t a, std::uint32_t b) {
  if (a == b) return;
  std::swap(out_edges_[a], out_edges_[b]);
  std::swap(edge_bucket_[a], edge_bucket_[b]);
  in_edges_[out_edges_[a].in_pos].out_pos = a;
  in_edges_[out_edges_[b].in_pos].out_pos = b;
}

void RefinablePartition::swap_in_edges(std::uint32_t a, std::uint32_t b) {
  if (a == b) return;
  std::swap(in_edges_[a], in_edges_[b]);
  out_edges_[in_edges_[a].out_pos].in_pos = a;
  out_edges_[in_edges_[b].out_pos].in_pos = b;
}

void RefinablePartition::swap_perm(std::uint32_t a, std::uint32_t b) {
  if (a == b) return;
  const State sa = perm_[a], sb = perm_[b];
  perm_[a] = sb;
  perm_[b] = sa;
  pos_[sa] = b;
  pos_[sb] = a;
}

// ---------------------------------------------------------------------------
// Entry and bucket list maintenance.

void RefinablePartition::entry_attach_bucket(std::uint32_t entry_id, std::uint32_t bucket_id) {
  ToConstlnEntry& e = entries_[entry_id];
  Bucket& b = buckets_[bucket_id];
  b.entry = entry_id;
  b.prev_in_entry = kNone;
  b.next_in_entry = e.buckets_head;
  if (e.buckets_head != kNone) buckets_[e.buckets_head].prev_in_entry = bucket_id;
  e.buckets_head = bucket_id;
  e.bucket_count += 1;
}

void RefinablePartition::entry_detach_bucket(std::uint32_t entry_id, std::uint32_t bucket_id) {
  ToConstlnEntry& e = entries_[entry_id];
  Bucket& b = buckets_[bucket_id];
  if (b.prev_in_entry != kNone) buckets_[b.prev_in_entry].next_in_entry = b.next_in_entry;
  else e.buckets_head = b.next_in_entry;
  if (b.next_in_entry != kNone) buckets_[b.next_in_entry].prev_in_entry = b.prev_in_entry;
  b.prev_in_entry = b.next_in_entry = kNone;
  b.entry = kNone;
  e.bucket_count -= 1;
}

void RefinablePartition::block_attach_entry(std::uint32_t blk, std::uint32_t entry_id) {
  Block& b = blocks_[blk];
  ToConstlnEntry& e = entries_[entry_id];
  e.prev_in_block = b.entries_tail;
  e.next_in_block = kNone;
  if (b.entries_tail != kNone) entries_[b.entries_tail].next_in_block = entry_id;
  else b.entries_head = entry_id;
  b.entries_tail = entry_id;
  b.entry_count += 1;
}

void RefinablePartition::block_detach_entry(std::uint32_t blk, std::uint32_t entry_id) {
  Block& b = blocks_[blk];
  ToConstlnEntry& e = entries_[entry_id];
  if (e.prev_in_block != kNone) entries_[e.prev_in_block].next_in_block = e.next_in_block;
  else b.entries_head = e.next_in_block;
  if (e.next_in_block != kNone) entries_[e.next_in_block].prev_in_block = e.prev_in_block;
  else b.entries_tail = e.prev_in_block;
  e.prev_in_block = e.next_in_block = kNone;
  b.entry_count -= 1;
}

std::uint32_t RefinablePartition::entry_get_or_create(std::uint32_t blk, std::uint32_t constln,
                                                      bool* created) {
  const std::uint64_t k = key(blk, constln);
  auto it = entry_hash_.find(k);
  if (it != entry_hash_.end()) {
    if (created) *created = false;
    return it->second;
  }
  const std::uint32_t id = alloc_entry();
  entries_[id].block = blk;
  entries_[id].constln = constln;
  entry_hash_.emplace(k, id);
  block_attach_entry(blk, id);
  if (created) *created = true;
  return id;
}

void RefinablePartition::entry_release_if_dead(std::uint32_t entry_id) {
  ToConstlnEntry& e = entries_[entry_id];
  if (e.count > 0) return;
  // count 0 implies every bucket was detached already
  if (e.pair != kNone) pair_kill(e.pair);
  block_detach_entry(e.block, entry_id);
  entry_hash_.erase(key(e.block, e.constln));
  free_entry(entry_id);
}

// ---------------------------------------------------------------------------
// Construction.

RefinablePartition::RefinablePartition(const KripkeStructure& ks,
                                       const std::vector<std::vector<State>>& initial_blocks,
                                       const std::vector<std::vector<std::uint32_t>>& constln_groups,
                                       WorkLedger& ledger, RunStats& stats)
    : n_(ks.num_states), ledger_(&ledger), stats_(&stats) {
  const std::uint32_t m = static_cast<std::uint32_t>(ks.num_transitions());

  perm_.resize(n_);
  pos_.resize(n_);
  block_of_.assign(n_, kNone);
  blocks_.assign(initial_blocks.size(), Block{});
  constellations_.assign(constln_groups.size(), Constellation{});

  for (std::uint32_t b = 0; b < blocks_.size(); ++b)
    for (State s : initial_blocks[b]) {
      if (s >= n_ || block_of_[s] != kNone)
        throw std::logic_error("initial blocks do not partition the state space");
      block_of_[s] = b;
    }
  for (std::uint32_t s = 0; s < n_; ++s)
    if (block_of_[s] == kNone)
      throw std::logic_error("initial blocks do not partition the state space");

  for (std::uint32_t c = 0; c < constellations_.size(); ++c) {
    Constellation& cn = constellations_[c];
    std::uint32_t prev = kNone;
    for (std::uint32_t b : constln_groups[c]) {
      Block& blk = blocks_[b];
      if (blk.constln != kNone)
        throw std::logic_error("constellation groups do not partition the blocks");
      blk.constln = c;
      blk.prev_in_constln = prev;
      blk.next_in_constln = kNone;
      if (prev == kNone) cn.first_block = b;
      else blocks_[prev].next_in_constln = b;
      prev = b;
      cn.num_blocks += 1;
      cn.num_states += static_cast<std::uint32_t>(initial_blocks[b].size());
    }
  }
  for (std::uint32_t b = 0; b < blocks_.size(); ++b)
    if (blocks_[b].constln == kNone)
      throw std::logic_error("constellation groups do not partition the blocks");

  // Outgoing transitions, grouped per state in emission order.
  out_begin_.assign(n_ + 1, 0);
  for (const auto& t : ks.transitions) out_begin_[t.first + 1] += 1;
  for (std::uint32_t s = 0; s < n_; ++s) out_begin_[s + 1] += out_begin_[s];

  std::vector<std::pair<State, std::uint32_t>> em(m);  // (dst, transition index)
  {
    std::vector<std::uint32_t> cur(out_begin_.begin(), out_begin_.end() - 1);
    for (std::uint32_t e = 0; e < m; ++e)
      em[cur[ks.transitions[e].first]++] = {ks.transitions[e].second, e};
  }

  out_edges_.assign(m, OutEdge{});
  edge_bucket_.assign(m, kNone);
  state_buckets_.assign(n_, kNone);
  std::vector<std::uint32_t> out_slot(m, 0);

  for (std::uint32_t s = 0; s < n_; ++s) {
    const std::uint32_t o0 = out_begin_[s], o1 = out_begin_[s + 1];
    if (o0 == o1) continue;
    // Pass 1: one bucket per target constellation, in first-occurrence order.
    // end and inert_end double as size counters until ranges are assigned.
    std::uint32_t tail = kNone;
    for (std::uint32_t i = o0; i < o1; ++i) {
      const State dst = em[i].first;
      const std::uint32_t c = blocks_[block_of_[dst]].constln;
      std::uint32_t b = find_bucket(s, c);
      if (b == kNone) {
        b = alloc_bucket();
        Bucket& bk = buckets_[b];
        bk.src = s;
        bk.constln = c;
        bucket_hash_.emplace(key(s, c), b);
        bk.prev_in_state = tail;
        if (tail == kNone) state_buckets_[s] = b;
        else buckets_[tail].next_in_state = b;
        tail = b;
      }
      buckets_[b].end += 1;
      if (block_of_[dst] == block_of_[s]) buckets_[b].inert_end += 1;
    }
    // Pass 2: carve the slice into ranges following the list order.
    std::uint32_t base = o0;
    for (std::uint32_t b = state_buckets_[s]; b != kNone; b = buckets_[b].next_in_state) {
      Bucket& bk = buckets_[b];
      const std::uint32_t size = bk.end, inert = bk.inert_end;
      bk.begin = base;
      bk.inert_end = base + inert;
      bk.end = base + size;
      base = bk.end;
    }
    // Pass 3: place edges, inert before non-inert, emission order within each
    // part. carve_child and s_entry serve as placement cursors here and are
    // cleared right after.
    for (std::uint32_t b = state_buckets_[s]; b != kNone; b = buckets_[b].next_in_state) {
      buckets_[b].carve_child = buckets_[b].begin;
      buckets_[b].s_entry = buckets_[b].inert_end;
    }
    for (std::uint32_t i = o0; i < o1; ++i) {
      const State dst = em[i].first;
      const std::uint32_t c = blocks_[block_of_[dst]].constln;
      const std::uint32_t b = find_bucket(s, c);
      const std::uint32_t p = (block_of_[dst] == block_of_[s]) ? buckets_[b].carve_child++
                                                               : buckets_[b].s_entry++;
      out_edges_[p].dst = dst;
      edge_bucket_[p] = b;
      out_slot[em[i].second] = p;
    }
    for (std::uint32_t b = state_buckets_[s]; b != kNone; b = buckets_[b].next_in_state) {
      buckets_[b].carve_child = kNone;
      buckets_[b].s_entry = kNone;
    }
  }

  // Incoming transitions in emission order, inert prefix first.
  in_begin_.assign(n_ + 1, 0);
  for (const auto& t : ks.transitions) in_begin_[t.second + 1] += 1;
  for (std::uint32_t s = 0; s < n_; ++s) in_begin_[s + 1] += in_begin_[s];
  in_inert_end_.assign(n_, 0);
  in_edges_.assign(m, InEdge{});
  {
    std::vector<std::uint32_t> inert_cnt(n_, 0);
    for (const auto& t : ks.transitions)
      if (block_of_[t.first] == block_of_[t.second]) inert_cnt[t.second] += 1;
    std::vector<std::uint32_t> ci(n_), cn2(n_);
    for (std::uint32_t s = 0; s < n_; ++s) {
      ci[s] = in_begin_[s];
      in_inert_end_[s] = in_begin_[s] + inert_cnt[s];
      cn2[s] = in_inert_end_[s];
    }
    for (std::uint32_t e = 0; e < m; ++e) {
      const State src = ks.transitions[e].first, dst = ks.transitions[e].second;
      const std::uint32_t ip =
          (block_of_[src] == block_of_[dst]) ? ci[dst]++ : cn2[dst]++;
      in_edges_[ip].src = src;
      in_edges_[ip].out_pos = out_slot[e];
      out_edges_[out_slot[e]].in_pos = ip;
    }
  }

  // State layout: per block, bottom states first, member order preserved.
  {
    std::uint32_t off = 0;
    for (std::uint32_t b = 0; b < blocks_.size(); ++b) {
      Block& blk = blocks_[b];
      blk.begin = off;
      for (State s : initial_blocks[b])
        if (inert_out_width(s) == 0) {
          perm_[off] = s;
          pos_[s] = off;
          ++off;
        }
      blk.bottom_end = off;
      for (State s : initial_blocks[b])
        if (inert_out_width(s) != 0) {
          perm_[off] = s;
          pos_[s] = off;
          ++off;
        }
      blk.end = off;
      blk.mb = blk.begin;
      blk.mn = blk.bottom_end;
    }
    if (off != n_) throw std::logic_error("initial blocks cover the state space unevenly");
  }

  // Per (block, constellation) transition counts, created in block-member and
  // bucket-list order. Later code relies on this creation order.
  for (std::uint32_t b = 0; b < blocks_.size(); ++b)
    for (State s : initial_blocks[b])
      for (std::uint32_t bk = state_buckets_[s]; bk != kNone; bk = buckets_[bk].next_in_state)
        if (buckets_[bk].noninert() > 0) {
          const std::uint32_t e = entry_get_or_create(b, buckets_[bk].constln);
          entry_attach_bucket(e, bk);
          entries_[e].count += buckets_[bk].noninert();
        }

  notblue_.assign(n_, kNotBlueUnset);
  blue_flag_.assign(n_, 0);
  red_flag_.assign(n_, 0);
  was_new_bottom_.assign(n_, 0);
  in_nb_.assign(n_, 0);
  nb_next_.assign(n_, kNone);
  nb_prev_.assign(n_, kNone);
  nb_seq_.assign(n_, 0);
  move_count_.assign(n_, 0);
  test_stamp_.assign(n_, 0);

  const std::uint64_t init_units = 3ull * n_ + 6ull * m;
  ledger_->charge(WorkCategory::kInit, init_units);
  ledger_->note_event(WorkCategory::kInit, "structure-build", init_units,
                      static_cast<std::uint64_t>(n_) + m);
}

// ---------------------------------------------------------------------------
// Marking.

void RefinablePartition::mark_state(State s) {
  if (is_marked(s)) return;
  Block& b = blocks_[block_of_[s]];
  if (pos_[s] < b.bottom_end) {
    swap_perm(pos_[s], b.mb);
    b.mb += 1;
  } else {
    swap_perm(pos_[s], b.mn);
    b.mn += 1;
  }
}

// ---------------------------------------------------------------------------
// Constellations.

std::uint32_t RefinablePartition::select_splitter(std::uint32_t constln) const {
  const Constellation& cn = constellations_[constln];
  const std::uint32_t head = cn.first_block;
  if (2ull * blocks_[head].size() <= cn.num_states) return head;
  return blocks_[head].next_in_constln;
}

std::uint32_t RefinablePartition::carve_to_new_constellation(std::uint32_t blk) {
  const std::uint32_t oldc = blocks_[blk].constln;
  {
    Block& b = blocks_[blk];
    Constellation& oc = constellations_[oldc];
    if (b.prev_in_constln != kNone) blocks_[b.prev_in_constln].next_in_constln = b.next_in_constln;
    else oc.first_block = b.next_in_constln;
    if (b.next_in_constln != kNone) blocks_[b.next_in_constln].prev_in_constln = b.prev_in_constln;
    oc.num_blocks -= 1;
    oc.num_states -= b.size();
  }
  const std::uint32_t newc = static_cast<std::uint32_t>(constellations_.size());
  constellations_.push_back(Constellation{blk, 1, blocks_[blk].size(), false});
  blocks_[blk].constln = newc;
  blocks_[blk].next_in_constln = kNone;
  blocks_[blk].prev_in_constln = kNone;

  // Members: the inert part of the old own-constellation bucket moves to the
  // new key wholesale.
  for (std::uint32_t p = blocks_[blk].begin; p < blocks_[blk].end; ++p) {
    const State u = perm_[p];
    ledger_->charge(WorkCategory::kPrepareOut);
    const std::uint32_t ob = find_bucket(u, oldc);
    if (ob == kNone) continue;
    if (buckets_[ob].inert_end == buckets_[ob].begin) continue;  // stays with the remainder
    if (buckets_[ob].noninert() == 0) {
      bucket_hash_.erase(key(u, oldc));
      bucket_hash_.emplace(key(u, newc), ob);
      buckets_[ob].constln = newc;
      continue;
    }
    const std::uint32_t ch = alloc_bucket();
    Bucket& cb = buckets_[ch];
    Bucket& pb = buckets_[ob];
    cb.src = u;
    cb.constln = newc;
    cb.begin = pb.begin;
    cb.inert_end = pb.inert_end;
    cb.end = pb.inert_end;
    pb.begin = pb.inert_end;  // remainder keeps only the non-inert part
    cb.prev_in_state = ob;
    cb.next_in_state = pb.next_in_state;
    if (pb.next_in_state != kNone) buckets_[pb.next_in_state].prev_in_state = ch;
    pb.next_in_state = ch;
    bucket_hash_.emplace(key(u, newc), ch);
    for (std::uint32_t q = cb.begin; q < cb.end; ++q) {
      edge_bucket_[q] = ch;
      ledger_->charge(WorkCategory::kPrepareOut);
    }
  }

  // Incoming non-inert transitions from outside move into fresh buckets keyed
  // by the new constellation, carved off the back of their old bucket.
  std::vector<std::uint32_t> touched_parents;
  for (std::uint32_t p = blocks_[blk].begin; p < blocks_[blk].end; ++p) {
    const State t = perm_[p];
    for (std::uint32_t ip = in_inert_end_[t]; ip < in_begin_[t + 1]; ++ip) {
      ledger_->charge(WorkCategory::kPrepareOut);
      const State u = in_edges_[ip].src;
      const std::uint32_t op = in_edges_[ip].out_pos;
      const std::uint32_t pbid = edge_bucket_[op];
      std::uint32_t ch = buckets_[pbid].carve_child;
      if (ch == kNone) {
        ch = alloc_bucket();
        Bucket& cb = buckets_[ch];
        Bucket& pb = buckets_[pbid];
        cb.src = u;
        cb.constln = newc;
        cb.begin = cb.inert_end = cb.end = pb.end;
        cb.prev_in_state = pbid;
        cb.next_in_state = pb.next_in_state;
        if (pb.next_in_state != kNone) buckets_[pb.next_in_state].prev_in_state = ch;
        pb.next_in_state = ch;
        bucket_hash_.emplace(key(u, newc), ch);
        pb.carve_child = ch;
        touched_parents.push_back(pbid);
      }
      const std::uint32_t e_old = buckets_[pbid].entry;
      const std::uint32_t last = buckets_[pbid].end - 1;
      swap_out_edges(op, last);
      buckets_[pbid].end = last;
      buckets_[ch].begin = last;
      buckets_[ch].inert_end = last;
      edge_bucket_[last] = ch;

      entries_[e_old].count -= 1;
      const std::uint32_t e_new = entry_get_or_create(block_of_[u], newc);
      if (buckets_[ch].entry == kNone) entry_attach_bucket(e_new, ch);
      entries_[e_new].count += 1;
      if (buckets_[pbid].noninert() == 0) {
        entry_detach_bucket(e_old, pbid);
        if (buckets_[pbid].begin == buckets_[pbid].end) {
          Bucket& pb = buckets_[pbid];
          if (pb.prev_in_state != kNone) buckets_[pb.prev_in_state].next_in_state = pb.next_in_state;
          else state_buckets_[u] = pb.next_in_state;
          if (pb.next_in_state != kNone) buckets_[pb.next_in_state].prev_in_state = pb.prev_in_state;
          bucket_hash_.erase(key(u, oldc));
          free_bucket(pbid);
        }
      }
      entry_release_if_dead(e_old);
    }
  }
  for (std::uint32_t pb : touched_parents) {
    buckets_[pb].carve_child = kNone;
    ledger_->charge(WorkCategory::kTempDestroy);
  }
  return newc;
}

// ---------------------------------------------------------------------------
// Splitting.

std::uint32_t RefinablePartition::extract_block(std::uint32_t blk,
                                                const std::vector<State>& winner,
                                                const std::vector<std::uint8_t>& in_winner) {
  const std::uint32_t old_size = blocks_[blk].size();
  const std::uint32_t wsz = static_cast<std::uint32_t>(winner.size());
  check(wsz > 0 && wsz < old_size, "split side must be a proper nonempty part");
  check(2ull * wsz <= old_size, "moved side larger than half its block");
  check(blocks_[blk].mb == blocks_[blk].begin && blocks_[blk].mn == blocks_[blk].bottom_end,
        "marks not cleared before the split");

  std::uint32_t wb = 0;
  ledger_->charge(WorkCategory::kMoveBlock, wsz);
  for (State s : winner)
    if (pos_[s] < blocks_[blk].bottom_end) ++wb;

  const std::uint32_t cut = blocks_[blk].end - wsz;
  const std::uint32_t be_old = blocks_[blk].bottom_end;
  const std::uint32_t be_target = be_old - wb;

  // Move the winner into [cut, end). Non-winner states displaced below record
  // where they landed so the bottom boundary can be repaired afterwards.
  std::vector<std::uint32_t> list_a;  // bottoms sitting at or above be_target
  std::vector<std::uint32_t> list_b;  // non-bottoms sitting below be_target
  {
    std::uint32_t t = blocks_[blk].end;
    for (State s : winner) {
      ledger_->charge(WorkCategory::kMoveBlock);
      const std::uint32_t p = pos_[s];
      if (p >= cut) continue;
      do {
        --t;
      } while (in_winner[perm_[t]]);
      const bool displaced_bottom = t < be_old;
      swap_perm(p, t);
      if (displaced_bottom && p >= be_old) list_a.push_back(p);
      if (!displaced_bottom && p < be_target) list_b.push_back(p);
    }
  }
  // Positions at cut and above already hold winner states; the kept block's
  // boundary window never extends into them.
  for (std::uint32_t q = be_target; q < be_old && q < cut; ++q) {
    ledger_->charge(WorkCategory::kMoveBlock);
    if (inert_out_width(perm_[q]) == 0) list_a.push_back(q);
  }
  check(list_a.size() == list_b.size(), "bottom boundary repair lists differ in size");
  for (std::size_t i = 0; i < list_a.size() && i < list_b.size(); ++i) {
    ledger_->charge(WorkCategory::kMoveBlock);
    swap_perm(list_a[i], list_b[i]);
  }

  // Bottoms first inside the extracted range.
  {
    std::uint32_t i = cut;
    for (std::uint32_t q = cut; q < blocks_[blk].end; ++q) {
      ledger_->charge(WorkCategory::kMoveBlock);
      if (inert_out_width(perm_[q]) == 0) {
        swap_perm(q, i);
        ++i;
      }
    }
    check(i == cut + wb, "extracted bottom count mismatch");
  }

  const std::uint32_t nb2 = static_cast<std::uint32_t>(blocks_.size());
  const std::uint32_t bend = blocks_[blk].end;
  blocks_.push_back(Block{});
  Block& nbk = blocks_[nb2];
  Block& ob = blocks_[blk];
  nbk.begin = cut;
  nbk.bottom_end = cut + wb;
  nbk.end = bend;
  nbk.mb = nbk.begin;
  nbk.mn = nbk.bottom_end;
  nbk.constln = ob.constln;
  nbk.prev_in_constln = ob.prev_in_constln;
  nbk.next_in_constln = blk;
  if (ob.prev_in_constln != kNone) blocks_[ob.prev_in_constln].next_in_constln = nb2;
  else constellations_[ob.constln].first_block = nb2;
  ob.prev_in_constln = nb2;
  constellations_[ob.constln].num_blocks += 1;
  ob.end = cut;
  ob.bottom_end = be_target;
  ob.mb = ob.begin;
  ob.mn = be_target;

  const std::uint64_t move_budget = floor_log2(ledger_->input_states()) + 1;
  for (std::uint32_t q = cut; q < bend; ++q) {
    ledger_->charge(WorkCategory::kMoveBlock);
    const State s = perm_[q];
    block_of_[s] = nb2;
    move_count_[s] += 1;
    if (move_count_[s] > stats_->max_move_count) stats_->max_move_count = move_count_[s];
    check(move_count_[s] <= move_budget, "state moved more often than its budget");
  }

  // Relocate moved new-bottom states, keeping registration order.
  std::vector<State> moved_nb;
  for (State s : winner)
    if (in_nb_[s]) moved_nb.push_back(s);
  if (!moved_nb.empty()) {
    std::sort(moved_nb.begin(), moved_nb.end(),
              [this](State a, State b) { return nb_seq_[a] < nb_seq_[b]; });
    ledger_->charge(WorkCategory::kMoveBlock, moved_nb.size());
    for (State s : moved_nb) {
      if (nb_prev_[s] != kNone) nb_next_[nb_prev_[s]] = nb_next_[s];
      else ob.nb_head = nb_next_[s];
      if (nb_next_[s] != kNone) nb_prev_[nb_next_[s]] = nb_prev_[s];
      else ob.nb_tail = nb_prev_[s];
      ob.nb_size -= 1;
      nb_prev_[s] = nbk.nb_tail;
      nb_next_[s] = kNone;
      if (nbk.nb_tail != kNone) nb_next_[nbk.nb_tail] = s;
      else nbk.nb_head = s;
      nbk.nb_tail = s;
      nbk.nb_size += 1;
    }
    if (!postprocess_active_) nb_blocks_.push_back(nb2);
  }
  return nb2;
}

void RefinablePartition::reattribute(std::uint32_t new_blk, std::uint32_t old_blk,
                                     const std::vector<State>& winner, bool relocate_s) {
  (void)old_blk;
  for (State u : winner) {
    ledger_->charge(WorkCategory::kMoveBlock);
    if (charge_distribute_on_move_) ledger_->charge(WorkCategory::kPostprocessDistribute);
    for (std::uint32_t bk = state_buckets_[u]; bk != kNone; bk = buckets_[bk].next_in_state) {
      ledger_->charge(WorkCategory::kMoveBlock);
      if (charge_distribute_on_move_) ledger_->charge(WorkCategory::kPostprocessDistribute);
      if (buckets_[bk].noninert() == 0) continue;
      const std::uint32_t e_old = buckets_[bk].entry;
      entry_detach_bucket(e_old, bk);
      entries_[e_old].count -= buckets_[bk].noninert();
      bool created = false;
      const std::uint32_t e_new = entry_get_or_create(new_blk, buckets_[bk].constln, &created);
      if (created && postprocess_active_ && entries_[e_old].pair != kNone) {
        const PairPhase parent = pairs_[entries_[e_old].pair].phase;
        pair_create(e_new, parent == PairPhase::kPending ? PairPhase::kPending
                                                         : PairPhase::kProcessed);
      }
      entry_attach_bucket(e_new, bk);
      entries_[e_new].count += buckets_[bk].noninert();
      if (buckets_[bk].s_entry != kNone) {
        s_unlink(buckets_[bk].s_entry);
        const std::uint32_t p_new = entries_[e_new].pair;
        if (relocate_s && p_new != kNone) s_append(p_new, u, bk);
      }
      entry_release_if_dead(e_old);
    }
  }
}

bool RefinablePartition::make_edge_noninert(std::uint32_t out_pos) {
  const std::uint32_t bkid = edge_bucket_[out_pos];
  {
    Bucket& bk = buckets_[bkid];
    const std::uint32_t last = bk.inert_end - 1;
    swap_out_edges(out_pos, last);
    bk.inert_end = last;
    const State dst = out_edges_[last].dst;
    const std::uint32_t ip = out_edges_[last].in_pos;
    const std::uint32_t lastin = in_inert_end_[dst] - 1;
    swap_in_edges(ip, lastin);
    in_inert_end_[dst] = lastin;
  }
  const State src = buckets_[bkid].src;
  if (buckets_[bkid].entry == kNone) {
    bool created = false;
    const std::uint32_t e = entry_get_or_create(block_of_[src], buckets_[bkid].constln, &created);
    entry_attach_bucket(e, bkid);
    // A first own-constellation transition appearing during postprocessing
    // starts satisfied: every listed new bottom of the block already has one.
    if (created && postprocess_active_) pair_create(e, PairPhase::kProcessed);
  }
  entries_[buckets_[bkid].entry].count += 1;
  ledger_->charge(WorkCategory::kNewBottomScan);
  return buckets_[bkid].inert_end == buckets_[bkid].begin;
}

void RefinablePartition::make_noninert_after_move(std::uint32_t new_blk, std::uint32_t old_blk,
                                                  const std::vector<State>& winner,
                                                  std::vector<State>& fresh) {
  (void)old_blk;
  // Moved states' own transitions into the stay-behind half.
  for (State u : winner) {
    ledger_->charge(WorkCategory::kNewBottomScan);
    const std::uint32_t bk = find_bucket(u, blocks_[new_blk].constln);
    if (bk == kNone) continue;
    const bool had_inert = buckets_[bk].inert_end > buckets_[bk].begin;
    std::uint32_t q = buckets_[bk].begin;
    while (q < buckets_[bk].inert_end) {
      ledger_->charge(WorkCategory::kNewBottomScan);
      if (block_of_[out_edges_[q].dst] != new_blk) make_edge_noninert(q);
      else ++q;
    }
    if (had_inert && buckets_[bk].inert_end == buckets_[bk].begin) {
      register_new_bottom(u);
      fresh.push_back(u);
    }
  }
  // Stay-behind predecessors' transitions into moved states.
  for (State u : winner) {
    ledger_->charge(WorkCategory::kNewBottomScan);
    std::uint32_t ip = in_begin_[u];
    while (ip < in_inert_end_[u]) {
      ledger_->charge(WorkCategory::kNewBottomScan);
      const State v = in_edges_[ip].src;
      if (block_of_[v] != new_blk) {
        if (make_edge_noninert(in_edges_[ip].out_pos)) {
          register_new_bottom(v);
          fresh.push_back(v);
        }
      } else {
        ++ip;
      }
    }
  }
}

void RefinablePartition::register_new_bottom(State s) {
  check(!was_new_bottom_[s], "state registered as new bottom twice");
  check(!in_nb_[s], "new-bottom list double insert");
  Block& b = blocks_[block_of_[s]];
  check(b.mb == b.begin && b.mn == b.bottom_end, "marks present at new-bottom registration");
  was_new_bottom_[s] = 1;
  swap_perm(pos_[s], b.bottom_end);
  b.bottom_end += 1;
  b.mn = b.bottom_end;
  in_nb_[s] = 1;
  nb_seq_counter_ += 1;
  nb_seq_[s] = nb_seq_counter_;
  nb_prev_[s] = b.nb_tail;
  nb_next_[s] = kNone;
  if (b.nb_tail != kNone) nb_next_[b.nb_tail] = s;
  else b.nb_head = s;
  b.nb_tail = s;
  b.nb_size += 1;
  stats_->new_bottom_count += 1;
  ledger_->charge(WorkCategory::kNewBottomScan);
  if (!postprocess_active_ && b.nb_size == 1) nb_blocks_.push_back(block_of_[s]);
}

// ---------------------------------------------------------------------------
// Stability obligations.

std::uint32_t RefinablePartition::pair_create(std::uint32_t entry_id, PairPhase phase) {
  const std::uint32_t p = alloc_pair();
  Pair& pr = pairs_[p];
  pr.block = entries_[entry_id].block;
  pr.constln = entries_[entry_id].constln;
  pr.entry = entry_id;
  pr.phase = phase;
  pr.seen_nb = phase == PairPhase::kProcessed ? static_cast<std::uint32_t>(nb_seq_counter_) : 0;
  entries_[entry_id].pair = p;
  if (phase == PairPhase::kPending) {
    pending_.push_back(p);
  } else {
    Block& b = blocks_[pr.block];
    pr.proc_next = b.proc_head;
    if (b.proc_head != kNone) pairs_[b.proc_head].proc_prev = p;
    b.proc_head = p;
  }
  ledger_->charge(WorkCategory::kPostprocessPair);
  return p;
}

void RefinablePartition::proc_list_detach(std::uint32_t pair_id) {
  Pair& pr = pairs_[pair_id];
  if (pr.proc_prev != kNone) pairs_[pr.proc_prev].proc_next = pr.proc_next;
  else blocks_[pr.block].proc_head = pr.proc_next;
  if (pr.proc_next != kNone) pairs_[pr.proc_next].proc_prev = pr.proc_prev;
  pr.proc_prev = pr.proc_next = kNone;
}

void RefinablePartition::pair_mark_processed(std::uint32_t pair_id) {
  Pair& pr = pairs_[pair_id];
  pr.phase = PairPhase::kProcessed;
  pr.seen_nb = static_cast<std::uint32_t>(nb_seq_counter_);
  Block& b = blocks_[pr.block];
  pr.proc_prev = kNone;
  pr.proc_next = b.proc_head;
  if (b.proc_head != kNone) pairs_[b.proc_head].proc_prev = pair_id;
  b.proc_head = pair_id;
  ledger_->charge(WorkCategory::kPostprocessPair);
}

void RefinablePartition::pair_repend_front(std::uint32_t pair_id) {
  proc_list_detach(pair_id);
  pairs_[pair_id].phase = PairPhase::kPending;
  pending_.push_front(pair_id);
  ledger_->charge(WorkCategory::kPostprocessPair);
}

void RefinablePartition::pair_kill(std::uint32_t pair_id) {
  Pair& pr = pairs_[pair_id];
  if (pr.phase == PairPhase::kDead) return;
  if (pr.phase == PairPhase::kProcessed) proc_list_detach(pair_id);
  std::uint32_t h = pr.s_head;
  while (h != kNone) {
    const std::uint32_t nx = s_entries_[h].next;
    buckets_[s_entries_[h].bucket].s_entry = kNone;
    free_s_entry(h);
    ledger_->charge(WorkCategory::kPostprocessPair);
    h = nx;
  }
  pr.s_head = pr.s_tail = kNone;
  pr.s_count = 0;
  if (pr.entry != kNone && entries_[pr.entry].pair == pair_id) entries_[pr.entry].pair = kNone;
  const PairPhase old = pr.phase;
  pr.phase = PairPhase::kDead;
  // Pending ids are recycled when their queue slot is popped; the in-flight
  // one is released by the driver after its split commits.
  if (old == PairPhase::kProcessed) pair_free_.push_back(pair_id);
  ledger_->charge(WorkCategory::kPostprocessPair);
}

void RefinablePartition::s_append(std::uint32_t pair_id, State s, std::uint32_t bucket_id) {
  const std::uint32_t h = alloc_s_entry();
  SEntry& se = s_entries_[h];
  Pair& pr = pairs_[pair_id];
  se.state = s;
  se.bucket = bucket_id;
  se.pair = pair_id;
  se.prev = pr.s_tail;
  se.next = kNone;
  if (pr.s_tail != kNone) s_entries_[pr.s_tail].next = h;
  else pr.s_head = h;
  pr.s_tail = h;
  pr.s_count += 1;
  buckets_[bucket_id].s_entry = h;
}

void RefinablePartition::s_unlink(std::uint32_t s_entry_id) {
  SEntry& se = s_entries_[s_entry_id];
  Pair& pr = pairs_[se.pair];
  if (se.prev != kNone) s_entries_[se.prev].next = se.next;
  else pr.s_head = se.next;
  if (se.next != kNone) s_entries_[se.next].prev = se.prev;
  else pr.s_tail = se.prev;
  pr.s_count -= 1;
  buckets_[se.bucket].s_entry = kNone;
  free_s_entry(s_entry_id);
}

void RefinablePartition::fresh_bottom_bucket_walk(State s) {
  for (std::uint32_t bk = state_buckets_[s]; bk != kNone; bk = buckets_[bk].next_in_state) {
    ledger_->charge(WorkCategory::kPostprocessDistribute);
    if (buckets_[bk].noninert() == 0 || buckets_[bk].entry == kNone) continue;
    const std::uint32_t p = entries_[buckets_[bk].entry].pair;
    if (p == kNone) {
      check(false, "postprocess entry without an obligation pair");
      continue;
    }
    if (buckets_[bk].s_entry == kNone) s_append(p, s, bk);
  }
}

void RefinablePartition::rearm_processed(State s) {
  std::uint32_t p = blocks_[block_of_[s]].proc_head;
  while (p != kNone) {
    const std::uint32_t nx = pairs_[p].proc_next;
    ledger_->charge(WorkCategory::kPostprocessDistribute);
    if (!has_noninert_to(s, pairs_[p].constln)) pair_repend_front(p);
    p = nx;
  }
}

std::uint64_t RefinablePartition::postprocess_cleanup_block(std::uint32_t blk) {
  std::uint64_t items = 0;
  std::uint32_t pid = blocks_[blk].proc_head;
  while (pid != kNone) {
    const std::uint32_t nx = pairs_[pid].proc_next;
    std::uint32_t h = pairs_[pid].s_head;
    while (h != kNone) {
      const std::uint32_t hn = s_entries_[h].next;
      buckets_[s_entries_[h].bucket].s_entry = kNone;
      free_s_entry(h);
      ledger_->charge(WorkCategory::kTempDestroy);
      items += 1;
      h = hn;
    }
    if (pairs_[pid].entry != kNone && entries_[pairs_[pid].entry].pair == pid)
      entries_[pairs_[pid].entry].pair = kNone;
    pairs_[pid] = Pair{};
    pairs_[pid].phase = PairPhase::kDead;
    pair_free_.push_back(pid);
    ledger_->charge(WorkCategory::kTempDestroy);
    items += 1;
    pid = nx;
  }
  blocks_[blk].proc_head = kNone;
  std::uint32_t u = blocks_[blk].nb_head;
  while (u != kNone) {
    const std::uint32_t un = nb_next_[u];
    in_nb_[u] = 0;
    nb_next_[u] = nb_prev_[u] = kNone;
    nb_seq_[u] = 0;
    ledger_->charge(WorkCategory::kTempDestroy);
    items += 1;
    u = un;
  }
  blocks_[blk].nb_head = blocks_[blk].nb_tail = kNone;
  blocks_[blk].nb_size = 0;
  return items;
}

// ---------------------------------------------------------------------------
// Results and checking.

Partition RefinablePartition::result_partition() const {
  Partition p;
  p.num_blocks = static_cast<std::uint32_t>(blocks_.size());
  p.block_of = block_of_;
  return p;
}

std::uint64_t RefinablePartition::in_weight_of_block(std::uint32_t blk) const {
  const Block& b = blocks_[blk];
  std::uint64_t w = 0;
  for (std::uint32_t p = b.begin; p < b.end; ++p) {
    const State s = perm_[p];
    const std::uint64_t d = in_begin_[s + 1] - in_begin_[s];
    w += d > 0 ? d : 1;
  }
  return w;
}

std::uint64_t RefinablePartition::out_weight_of_block(std::uint32_t blk) const {
  const Block& b = blocks_[blk];
  std::uint64_t w = 0;
  for (std::uint32_t p = b.begin; p < b.end; ++p) {
    const State s = perm_[p];
    const std::uint64_t d = out_begin_[s + 1] - out_begin_[s];
    w += d > 0 ? d : 1;
  }
  return w;
}

std::uint64_t RefinablePartition::out_weight_of(const std::vector<State>& ss) const {
  std::uint64_t w = 0;
  for (State s : ss) {
    const std::uint64_t d = out_begin_[s + 1] - out_begin_[s];
    w += d > 0 ? d : 1;
  }
  return w;
}

std::uint64_t RefinablePartition::inert_in_weight_of(const std::vector<State>& ss) const {
  std::uint64_t w = 0;
  for (State s : ss) {
    const std::uint64_t d = in_inert_end_[s] - in_begin_[s];
    w += d > 0 ? d : 1;
  }
  return w;
}

void RefinablePartition::check(bool ok, const char* what) {
  if (!ledger_->audit()) return;
  stats_->checks_performed += 1;
  if (!ok) stats_->check_failures.emplace_back(what);
}

void RefinablePartition::validate_deep() const {
  auto fail = [](const std::string& msg) {
    throw std::logic_error("partition invariant: " + msg);
  };

  if (perm_.size() != n_ || pos_.size() != n_ || block_of_.size() != n_) fail("array sizes");
  for (std::uint32_t p = 0; p < n_; ++p)
    if (pos_[perm_[p]] != p) fail("perm and pos are not inverse");

  std::vector<std::uint8_t> seen_state(n_, 0);
  for (std::uint32_t bid = 0; bid < blocks_.size(); ++bid) {
    const Block& b = blocks_[bid];
    if (!(b.begin <= b.mb && b.mb <= b.bottom_end && b.bottom_end <= b.mn && b.mn <= b.end))
      fail("block section order");
    if (b.begin == b.end) fail("empty block");
    if (b.constln >= constellations_.size()) fail("block constellation id");
    for (std::uint32_t p = b.begin; p < b.end; ++p) {
      const State s = perm_[p];
      if (block_of_[s] != bid) fail("block_of disagrees with block range");
      if (seen_state[s]) fail("state in two blocks");
      seen_state[s] = 1;
      if ((inert_out_width(s) == 0) != (p < b.bottom_end)) fail("bottom section wrong");
    }
  }
  for (std::uint32_t s = 0; s < n_; ++s)
    if (!seen_state[s]) fail("state in no block");

  for (std::uint32_t c = 0; c < constellations_.size(); ++c) {
    const Constellation& cn = constellations_[c];
    std::uint32_t nblocks = 0, nstates = 0, prev = kNone;
    for (std::uint32_t b = cn.first_block; b != kNone; b = blocks_[b].next_in_constln) {
      if (blocks_[b].constln != c) fail("constellation member constellation");
      if (blocks_[b].prev_in_constln != prev) fail("constellation back link");
      prev = b;
      nblocks += 1;
      nstates += blocks_[b].size();
      if (nblocks > blocks_.size()) fail("constellation list cycle");
    }
    if (nblocks == 0) fail("empty constellation");
    if (nblocks != cn.num_blocks || nstates != cn.num_states) fail("constellation counts");
  }

  std::vector<std::uint8_t> pos_covered(out_edges_.size(), 0);
  for (std::uint32_t s = 0; s < n_; ++s) {
    std::uint32_t covered = 0, prevb = kNone;
    for (std::uint32_t bk = state_buckets_[s]; bk != kNone; bk = buckets_[bk].next_in_state) {
      const Bucket& b = buckets_[bk];
      if (b.src != s) fail("bucket source");
      if (b.prev_in_state != prevb) fail("bucket state-list back link");
      prevb = bk;
      if (!(out_begin_[s] <= b.begin && b.begin <= b.inert_end && b.inert_end <= b.end &&
            b.end <= out_begin_[s + 1]))
        fail("bucket range");
      if (b.begin == b.end) fail("empty bucket kept alive");
      if (b.carve_child != kNone) fail("carve transient not cleared");
      covered += b.end - b.begin;
      auto it = bucket_hash_.find(key(s, b.constln));
      if (it == bucket_hash_.end() || it->second != bk) fail("bucket hash lookup");
      for (std::uint32_t q = b.begin; q < b.end; ++q) {
        if (pos_covered[q]) fail("bucket ranges overlap");
        pos_covered[q] = 1;
        if (edge_bucket_[q] != bk) fail("edge bucket pointer");
        const State dst = out_edges_[q].dst;
        if (blocks_[block_of_[dst]].constln != b.constln) fail("bucket constellation");
        const bool same_block = block_of_[dst] == block_of_[s];
        if ((q < b.inert_end) != same_block) fail("bucket inert divider");
        const std::uint32_t ip = out_edges_[q].in_pos;
        if (ip >= in_edges_.size() || in_edges_[ip].out_pos != q || in_edges_[ip].src != s)
          fail("out and in cross pointers");
        if (!(in_begin_[dst] <= ip && ip < in_begin_[dst + 1])) fail("in position owner");
        if ((ip < in_inert_end_[dst]) != same_block) fail("incoming inert divider");
      }
      if (b.noninert() > 0) {
        if (b.entry == kNone) fail("non-inert bucket without entry");
        if (entries_[b.entry].block != block_of_[s] || entries_[b.entry].constln != b.constln)
          fail("bucket entry keys");
      } else if (b.entry != kNone) {
        fail("all-inert bucket with entry");
      }
    }
    if (covered != out_begin_[s + 1] - out_begin_[s]) fail("bucket coverage");
  }
  if (bucket_hash_.size() + bucket_free_.size() != buckets_.size()) fail("bucket pool accounting");

  std::uint64_t entry_total = 0;
  for (std::uint32_t bid = 0; bid < blocks_.size(); ++bid) {
    const Block& b = blocks_[bid];
    std::uint32_t cnt = 0, prev = kNone;
    for (std::uint32_t e = b.entries_head; e != kNone; e = entries_[e].next_in_block) {
      const ToConstlnEntry& en = entries_[e];
      if (en.block != bid) fail("entry block");
      if (en.prev_in_block != prev) fail("entry back link");
      prev = e;
      if (en.count == 0) fail("dead entry on a block list");
      auto it = entry_hash_.find(key(bid, en.constln));
      if (it == entry_hash_.end() || it->second != e) fail("entry hash lookup");
      std::uint32_t sum = 0, bcnt = 0, prevbk = kNone;
      for (std::uint32_t bk = en.buckets_head; bk != kNone; bk = buckets_[bk].next_in_entry) {
        if (buckets_[bk].entry != e) fail("entry bucket back pointer");
        if (buckets_[bk].prev_in_entry != prevbk) fail("entry bucket back link");
        prevbk = bk;
        sum += buckets_[bk].noninert();
        bcnt += 1;
        if (bcnt > buckets_.size()) fail("entry bucket cycle");
      }
      if (sum != en.count || bcnt != en.bucket_count) fail("entry counts");
      if (en.next_in_block == kNone && b.entries_tail != e) fail("entry tail");
      cnt += 1;
      entry_total += 1;
      if (cnt > entries_.size()) fail("entry list cycle");
    }
    if (cnt != b.entry_count) fail("entry count");
    if (cnt == 0 && b.entries_tail != kNone) fail("entry tail on empty list");
  }
  if (entry_hash_.size() != entry_total) fail("entry hash size");
  if (entry_total + entry_free_.size() != entries_.size()) fail("entry pool accounting");

  std::uint64_t nb_total = 0;
  for (std::uint32_t bid = 0; bid < blocks_.size(); ++bid) {
    const Block& b = blocks_[bid];
    std::uint32_t cnt = 0, prev = kNone;
    std::uint64_t lastseq = 0;
    for (std::uint32_t s = b.nb_head; s != kNone; s = nb_next_[s]) {
      if (!in_nb_[s]) fail("new-bottom member flag");
      if (block_of_[s] != bid) fail("new-bottom member block");
      if (inert_out_width(s) != 0) fail("new-bottom member is not a bottom state");
      if (nb_prev_[s] != prev) fail("new-bottom back link");
      if (nb_seq_[s] <= lastseq) fail("new-bottom registration order");
      lastseq = nb_seq_[s];
      prev = s;
      cnt += 1;
      if (cnt > n_) fail("new-bottom list cycle");
    }
    if (cnt != b.nb_size) fail("new-bottom size");
    if ((b.nb_tail == kNone) != (cnt == 0)) fail("new-bottom tail emptiness");
    if (cnt != 0 && b.nb_tail != prev) fail("new-bottom tail member");
    nb_total += cnt;
  }
  std::uint64_t nb_flags = 0;
  for (std::uint32_t s = 0; s < n_; ++s) nb_flags += in_nb_[s];
  if (nb_flags != nb_total) fail("new-bottom flag accounting");

  for (std::uint32_t s = 0; s < n_; ++s) {
    if (notblue_[s] != kNotBlueUnset) fail("notblue counter not reset");
    if (blue_flag_[s] || red_flag_[s]) fail("coroutine flag not reset");
  }
  if (!postprocess_active_) {
    if (!pending_.empty()) fail("pending obligations outside postprocessing");
    for (const auto& kv : entry_hash_)
      if (entries_[kv.second].pair != kNone) fail("entry pair outside postprocessing");
  }
}

}  // namespace sttmin
