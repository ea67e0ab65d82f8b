#ifndef STTMIN_GENFAM_HPP
#define STTMIN_GENFAM_HPP

#include <cstdint>
#include <iosfwd>

#include "sttmin/graph.hpp"

namespace sttmin {

// A structure plus a prepared refinement position: a partition into blocks,
// a grouping of blocks into constellations, and the block to split off next.
struct Scenario {
  KripkeStructure ks;
  std::vector<std::vector<State>> blocks;
  std::vector<std::vector<std::uint32_t>> constellations;
  std::uint32_t splitter = 0;
};

// Text format: the ks sections followed by
//   partition <#blocks>
//   b <id> <states...>      one line per block, ascending id
//   c <id> <blocks...>      one line per constellation, ascending id
//   splitter <block-id>
Scenario parse_ksx(std::istream& in);
Scenario parse_ksx_file(const std::string& path);
void write_ksx(std::ostream& out, const Scenario& sc);

// Throws std::invalid_argument unless blocks partition the states and
// constellations partition the blocks.
void validate_scenario(const Scenario& sc);

// Chain family: k chain states reaching one goal, k direct states reaching
// the other, and a hub pointing at d extra sinks, every chain state, and
// (last in its edge list) the second goal. Stresses the eligibility test for
// non-bottom states during the backward sweep.
Scenario gen_fig1(std::uint32_t k, std::uint32_t d);

// Fan family: a hub reaching one goal and p sinks, and p states b_i, each
// reaching the hub, the other goal, and sinks e_i..e_p. Splitting off the hub
// makes every b_i a fresh bottom state at once; the b_i then peel off one by
// one. Stresses how pending per-constellation work moves across block splits.
Scenario gen_fig2(std::uint32_t p);

// Cascade family: a two-level tower over a shared bottom s_b with r^2 heavy
// states t_k that carry every goal. Splitting off s_b floods the block with
// new bottom states whose eligibility scans must start from the newest ones
// to stay cheap. Parameter r gives r goals, r tower states, r(r+1)/2 second
// level states, and r^2 heavy states.
Scenario gen_fig3(std::uint32_t r);

// splitmix64; reference output fixed by the tests.
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
};

// Random structure: labels drawn per state in id order, then m distinct
// directed edges by rejection. Requires m <= n*n.
KripkeStructure gen_random(std::uint32_t n, std::uint64_t m,
                           std::uint32_t labels, std::uint64_t seed);

}  // namespace sttmin

#endif
