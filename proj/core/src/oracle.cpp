#include "sttmin/oracle.hpp"

#include <vector>

namespace sttmin {

namespace {

struct Adj {
  std::vector<std::vector<State>> out;
  std::vector<std::vector<State>> in;
};

Adj build_adj(const KripkeStructure& ks) {
  Adj a;
  a.out.resize(ks.num_states);
  a.in.resize(ks.num_states);
  for (const auto& [src, dst] : ks.transitions) {
    a.out[src].push_back(dst);
    a.in[dst].push_back(src);
  }
  return a;
}

// States of block b with a path inside b to a direct edge into block c.
// mark[] must be all-false on entry and is restored before returning.
std::vector<State> pos_set(const std::vector<State>& members,
                           const std::vector<std::uint32_t>& block_of,
                           std::uint32_t b, std::uint32_t c, const Adj& adj,
                           std::vector<char>& mark) {
  std::vector<State> found;
  for (State s : members) {
    if (mark[s]) continue;
    for (State t : adj.out[s]) {
      if (block_of[t] == c) {
        mark[s] = 1;
        found.push_back(s);
        break;
      }
    }
  }
  for (std::size_t i = 0; i < found.size(); ++i) {
    State u = found[i];
    for (State p : adj.in[u]) {
      if (block_of[p] == b && !mark[p]) {
        mark[p] = 1;
        found.push_back(p);
      }
    }
  }
  for (State s : found) mark[s] = 0;
  return found;
}

}  // namespace

Partition naive_minimize(const KripkeStructure& ks, const Partition& initial) {
  Partition p = canonical_partition(initial);
  Adj adj = build_adj(ks);
  std::vector<char> mark(ks.num_states, 0);
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<std::vector<State>> members(p.num_blocks);
    for (State s = 0; s < ks.num_states; ++s) {
      members[p.block_of[s]].push_back(s);
    }
    for (std::uint32_t b = 0; b < p.num_blocks && !changed; ++b) {
      for (std::uint32_t c = 0; c < p.num_blocks && !changed; ++c) {
        if (b == c) continue;
        auto pos = pos_set(members[b], p.block_of, b, c, adj, mark);
        if (!pos.empty() && pos.size() < members[b].size()) {
          for (State s : pos) p.block_of[s] = p.num_blocks;
          ++p.num_blocks;
          changed = true;
        }
      }
    }
  }
  return canonical_partition(p);
}

Partition naive_minimize(const KripkeStructure& ks) {
  return naive_minimize(ks, label_partition(ks));
}

bool is_stable(const KripkeStructure& ks, const Partition& p) {
  Partition q = canonical_partition(p);
  Adj adj = build_adj(ks);
  std::vector<char> mark(ks.num_states, 0);
  std::vector<std::vector<State>> members(q.num_blocks);
  for (State s = 0; s < ks.num_states; ++s) {
    members[q.block_of[s]].push_back(s);
  }
  for (std::uint32_t b = 0; b < q.num_blocks; ++b) {
    for (std::uint32_t c = 0; c < q.num_blocks; ++c) {
      if (b == c) continue;
      auto pos = pos_set(members[b], q.block_of, b, c, adj, mark);
      if (!pos.empty() && pos.size() < members[b].size()) return false;
    }
  }
  return true;
}

}  // namespace sttmin
