#include "sttmin/genfam.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace sttmin {

namespace {

std::string label_seq(const char* stem, std::uint32_t i) {
  return std::string(stem) + std::to_string(i);
}

}  // namespace

void validate_scenario(const Scenario& sc) {
  const std::uint32_t n = sc.ks.num_states;
  std::vector<char> seen_state(n, 0);
  for (const auto& blk : sc.blocks) {
    if (blk.empty()) throw std::invalid_argument("scenario: empty block");
    for (State s : blk) {
      if (s >= n || seen_state[s])
        throw std::invalid_argument("scenario: blocks do not partition states");
      seen_state[s] = 1;
    }
  }
  for (std::uint32_t s = 0; s < n; ++s)
    if (!seen_state[s])
      throw std::invalid_argument("scenario: state missing from blocks");
  const std::uint32_t nb = static_cast<std::uint32_t>(sc.blocks.size());
  std::vector<char> seen_block(nb, 0);
  for (const auto& con : sc.constellations) {
    if (con.empty()) throw std::invalid_argument("scenario: empty constellation");
    for (std::uint32_t b : con) {
      if (b >= nb || seen_block[b])
        throw std::invalid_argument(
            "scenario: constellations do not partition blocks");
      seen_block[b] = 1;
    }
  }
  for (std::uint32_t b = 0; b < nb; ++b)
    if (!seen_block[b])
      throw std::invalid_argument("scenario: block missing from constellations");
  if (sc.splitter >= nb)
    throw std::invalid_argument("scenario: splitter block out of range");
}

Scenario gen_fig1(std::uint32_t k, std::uint32_t d) {
  if (k == 0 || d == 0) throw std::invalid_argument("gen_fig1: need k,d >= 1");
  Scenario sc;
  KripkeStructure& g = sc.ks;
  g.num_states = 2 * k + d + 3;
  g.label_of.resize(g.num_states);

  const State g0 = 0;
  const State g1 = 1;
  const auto b = [&](std::uint32_t i) { return State(1 + i); };      // i in 1..k
  const auto r = [&](std::uint32_t i) { return State(k + 1 + i); };  // i in 1..k
  const State hub = 2 * k + 2;
  const auto e = [&](std::uint32_t j) { return State(2 * k + 2 + j); };  // 1..d

  g.label_of[g0] = g.intern_label("g0");
  g.label_of[g1] = g.intern_label("g1");
  const std::uint32_t q = g.intern_label("q");
  for (std::uint32_t i = 1; i <= k; ++i) g.label_of[b(i)] = q;
  for (std::uint32_t i = 1; i <= k; ++i) g.label_of[r(i)] = q;
  g.label_of[hub] = q;
  for (std::uint32_t j = 1; j <= d; ++j)
    g.label_of[e(j)] = g.intern_label(label_seq("e", j));

  g.transitions.emplace_back(b(1), g0);
  for (std::uint32_t i = 2; i <= k; ++i) g.transitions.emplace_back(b(i), b(i - 1));
  for (std::uint32_t i = 1; i <= k; ++i) g.transitions.emplace_back(r(i), g1);
  // The hub's edge list keeps its one non-inert goal edge last so a raw
  // forward scan for it must pass everything else first.
  for (std::uint32_t j = 1; j <= d; ++j) g.transitions.emplace_back(hub, e(j));
  for (std::uint32_t i = 1; i <= k; ++i) g.transitions.emplace_back(hub, b(i));
  g.transitions.emplace_back(hub, g1);
  for (std::uint32_t j = 1; j <= d; ++j) g.transitions.emplace_back(e(j), g1);

  sc.blocks.push_back({g0});
  sc.blocks.push_back({g1});
  std::vector<State> mid;
  for (std::uint32_t i = 1; i <= k; ++i) mid.push_back(b(i));
  for (std::uint32_t i = 1; i <= k; ++i) mid.push_back(r(i));
  mid.push_back(hub);
  sc.blocks.push_back(std::move(mid));
  for (std::uint32_t j = 1; j <= d; ++j) sc.blocks.push_back({e(j)});

  sc.constellations.push_back({0, 1});
  sc.constellations.push_back({2});
  for (std::uint32_t j = 1; j <= d; ++j) sc.constellations.push_back({2 + j});
  sc.splitter = 1;
  validate_scenario(sc);
  return sc;
}

Scenario gen_fig2(std::uint32_t p) {
  if (p == 0) throw std::invalid_argument("gen_fig2: need p >= 1");
  Scenario sc;
  KripkeStructure& g = sc.ks;
  g.num_states = 2 * p + 3;
  g.label_of.resize(g.num_states);

  const State g0 = 0;
  const State g1 = 1;
  const State hub = 2;
  const auto b = [&](std::uint32_t i) { return State(2 + i); };      // 1..p
  const auto e = [&](std::uint32_t j) { return State(p + 2 + j); };  // 1..p

  g.label_of[g0] = g.intern_label("g0");
  g.label_of[g1] = g.intern_label("g1");
  const std::uint32_t q = g.intern_label("q");
  g.label_of[hub] = q;
  for (std::uint32_t i = 1; i <= p; ++i) g.label_of[b(i)] = q;
  for (std::uint32_t j = 1; j <= p; ++j)
    g.label_of[e(j)] = g.intern_label(label_seq("e", j));

  g.transitions.emplace_back(hub, g0);
  for (std::uint32_t j = 1; j <= p; ++j) g.transitions.emplace_back(hub, e(j));
  for (std::uint32_t i = 1; i <= p; ++i) {
    g.transitions.emplace_back(b(i), hub);
    g.transitions.emplace_back(b(i), g1);
    // b_i reaches the sink tail e_i..e_p, so sink e_j collects b_1..b_j.
    for (std::uint32_t j = i; j <= p; ++j) g.transitions.emplace_back(b(i), e(j));
  }

  sc.blocks.push_back({g0});
  sc.blocks.push_back({g1});
  std::vector<State> mid;
  mid.push_back(hub);
  for (std::uint32_t i = 1; i <= p; ++i) mid.push_back(b(i));
  sc.blocks.push_back(std::move(mid));
  for (std::uint32_t j = 1; j <= p; ++j) sc.blocks.push_back({e(j)});

  sc.constellations.push_back({0, 1});
  sc.constellations.push_back({2});
  for (std::uint32_t j = 1; j <= p; ++j) sc.constellations.push_back({2 + j});
  sc.splitter = 0;
  validate_scenario(sc);
  return sc;
}

Scenario gen_fig3(std::uint32_t r) {
  if (r == 0) throw std::invalid_argument("gen_fig3: need r >= 1");
  Scenario sc;
  KripkeStructure& g = sc.ks;
  const std::uint32_t n_second = r * (r + 1) / 2;
  g.num_states = 1 + (r + 1) + 1 + r + n_second + r * r;
  g.label_of.resize(g.num_states);

  const State spb = 0;
  const auto goal = [&](std::uint32_t l) { return State(1 + l); };  // 0..r
  const State sb = r + 2;
  const auto s1 = [&](std::uint32_t i) { return State(r + 2 + i); };  // 1..r
  // Second level, i in 1..r, j in 0..i-1, laid out i-major.
  const auto s2 = [&](std::uint32_t i, std::uint32_t j) {
    return State(2 * r + 3 + i * (i - 1) / 2 + j);
  };
  const State t0 = 2 * r + 3 + n_second;  // t_k = t0 + (k-1), k in 1..r*r

  g.label_of[spb] = g.intern_label("spb");
  for (std::uint32_t l = 0; l <= r; ++l)
    g.label_of[goal(l)] = g.intern_label(label_seq("c", l));
  const std::uint32_t q = g.intern_label("q");
  g.label_of[sb] = q;
  for (State s = sb + 1; s < g.num_states; ++s) g.label_of[s] = q;

  // Emission order fixes the order of each state's predecessor list, which
  // the backward sweeps walk: the heavy t states precede the tower states in
  // in(sb), and in(s_i) lists the level-two spawns of s_i in ascending j.
  g.transitions.emplace_back(sb, spb);
  for (std::uint32_t l = 1; l <= r; ++l) g.transitions.emplace_back(sb, goal(l));
  for (std::uint32_t kk = 1; kk <= r * r; ++kk) {
    const State t = t0 + (kk - 1);
    g.transitions.emplace_back(t, sb);
    for (std::uint32_t l = 0; l <= r; ++l) g.transitions.emplace_back(t, goal(l));
  }
  for (std::uint32_t i = 1; i <= r; ++i) {
    g.transitions.emplace_back(s1(i), sb);
    for (std::uint32_t l = 0; l < i; ++l) g.transitions.emplace_back(s1(i), goal(l));
  }
  for (std::uint32_t i = 1; i <= r; ++i) {
    for (std::uint32_t j = 0; j < i; ++j) {
      const State s = s2(i, j);
      g.transitions.emplace_back(s, s1(i));
      g.transitions.emplace_back(s, goal(i));
      for (std::uint32_t l = 0; l + j + 2 <= i; ++l)
        g.transitions.emplace_back(s, goal(l));
    }
  }

  sc.blocks.push_back({spb});
  for (std::uint32_t l = 0; l <= r; ++l) sc.blocks.push_back({goal(l)});
  std::vector<State> rest;
  for (State s = sb; s < g.num_states; ++s) rest.push_back(s);
  sc.blocks.push_back(std::move(rest));
  const std::uint32_t rest_block = static_cast<std::uint32_t>(sc.blocks.size()) - 1;

  // goal_0 shares the splitter's constellation, so peeling off the splitter
  // leaves constellation 0 nontrivial and goal_0 still unseparated.
  sc.constellations.push_back({0, 1});
  for (std::uint32_t l = 1; l <= r; ++l) sc.constellations.push_back({1 + l});
  sc.constellations.push_back({rest_block});
  sc.splitter = 0;
  validate_scenario(sc);
  return sc;
}

KripkeStructure gen_random(std::uint32_t n, std::uint64_t m,
                           std::uint32_t labels, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("gen_random: need n >= 1");
  if (labels == 0) throw std::invalid_argument("gen_random: need labels >= 1");
  if (m > static_cast<std::uint64_t>(n) * n)
    throw std::invalid_argument("gen_random: more edges than distinct pairs");
  KripkeStructure g;
  g.num_states = n;
  g.label_of.resize(n);
  for (std::uint32_t l = 0; l < labels; ++l) g.intern_label(label_seq("L", l));
  SplitMix64 rng(seed);
  for (std::uint32_t s = 0; s < n; ++s)
    g.label_of[s] = static_cast<std::uint32_t>(rng.next() % labels);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(static_cast<std::size_t>(m) * 2);
  while (g.transitions.size() < m) {
    const State src = static_cast<State>(rng.next() % n);
    const State dst = static_cast<State>(rng.next() % n);
    const std::uint64_t key = (static_cast<std::uint64_t>(src) << 32) | dst;
    if (!seen.insert(key).second) continue;
    g.transitions.emplace_back(src, dst);
  }
  return g;
}

namespace {

// Line reader shared with the ks body: skips blanks and # comments.
bool next_line(std::istream& in, std::string& line, std::uint64_t& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t i = line.find_first_not_of(" \t");
    if (i == std::string::npos) continue;
    if (line[i] == '#') continue;
    return true;
  }
  return false;
}

std::uint32_t parse_u32(const std::string& tok, std::uint64_t lineno,
                        const char* what) {
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
    throw ParseError(static_cast<int>(lineno), "expected " + std::string(what) + ", got '" + tok + "'");
  unsigned long long v = std::stoull(tok);
  if (v > 0xFFFFFFFFull)
    throw ParseError(static_cast<int>(lineno),
                     std::string(what) + " out of range");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

Scenario parse_ksx(std::istream& in) {
  // Re-parse the ks prefix by buffering lines up to the partition header.
  std::string buffered;
  std::string line;
  std::uint64_t lineno = 0;
  bool found_partition = false;
  std::uint32_t num_blocks = 0;
  std::uint64_t partition_lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string stripped = line;
    if (!stripped.empty() && stripped.back() == '\r') stripped.pop_back();
    std::istringstream probe(stripped);
    std::string head;
    probe >> head;
    if (head == "partition") {
      std::string count, extra;
      probe >> count;
      if (probe >> extra)
        throw ParseError(static_cast<int>(lineno), "trailing tokens after partition header");
      num_blocks = parse_u32(count, lineno, "block count");
      found_partition = true;
      partition_lineno = lineno;
      break;
    }
    buffered += stripped;
    buffered += '\n';
  }
  if (!found_partition) throw ParseError(static_cast<int>(lineno), "missing partition section");
  std::istringstream ks_in(buffered);
  Scenario sc;
  sc.ks = parse_ks(ks_in);
  if (num_blocks == 0)
    throw ParseError(static_cast<int>(partition_lineno), "partition needs at least one block");

  sc.blocks.resize(num_blocks);
  std::uint64_t body_lineno = partition_lineno;
  for (std::uint32_t bi = 0; bi < num_blocks; ++bi) {
    if (!next_line(in, line, body_lineno))
      throw ParseError(static_cast<int>(body_lineno), "unexpected end of input in block list");
    std::istringstream ls(line);
    std::string head, tok;
    ls >> head >> tok;
    if (head != "b")
      throw ParseError(static_cast<int>(body_lineno), "expected 'b' line, got '" + head + "'");
    if (parse_u32(tok, body_lineno, "block id") != bi)
      throw ParseError(static_cast<int>(body_lineno), "block ids must be ascending from 0");
    while (ls >> tok)
      sc.blocks[bi].push_back(parse_u32(tok, body_lineno, "state id"));
  }
  while (true) {
    if (!next_line(in, line, body_lineno))
      throw ParseError(static_cast<int>(body_lineno), "unexpected end of input in constellation list");
    std::istringstream ls(line);
    std::string head, tok;
    ls >> head;
    if (head == "splitter") {
      std::string extra;
      ls >> tok;
      if (ls >> extra)
        throw ParseError(static_cast<int>(body_lineno), "trailing tokens after splitter");
      sc.splitter = parse_u32(tok, body_lineno, "splitter block");
      break;
    }
    if (head != "c")
      throw ParseError(static_cast<int>(body_lineno), "expected 'c' or 'splitter' line, got '" + head + "'");
    ls >> tok;
    if (parse_u32(tok, body_lineno, "constellation id") !=
        static_cast<std::uint32_t>(sc.constellations.size()))
      throw ParseError(static_cast<int>(body_lineno), "constellation ids must be ascending from 0");
    std::vector<std::uint32_t> con;
    while (ls >> tok) con.push_back(parse_u32(tok, body_lineno, "block id"));
    sc.constellations.push_back(std::move(con));
  }
  if (next_line(in, line, body_lineno))
    throw ParseError(static_cast<int>(body_lineno), "trailing content after splitter");
  try {
    validate_scenario(sc);
  } catch (const std::invalid_argument& e) {
    throw ParseError(static_cast<int>(body_lineno), e.what());
  }
  return sc;
}

Scenario parse_ksx_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path);
  return parse_ksx(in);
}

void write_ksx(std::ostream& out, const Scenario& sc) {
  validate_scenario(sc);
  write_ks(out, sc.ks);
  out << "partition " << sc.blocks.size() << "\n";
  for (std::size_t bi = 0; bi < sc.blocks.size(); ++bi) {
    out << "b " << bi;
    for (State s : sc.blocks[bi]) out << ' ' << s;
    out << "\n";
  }
  for (std::size_t ci = 0; ci < sc.constellations.size(); ++ci) {
    out << "c " << ci;
    for (std::uint32_t b : sc.constellations[ci]) out << ' ' << b;
    out << "\n";
  }
  out << "splitter " << sc.splitter << "\n";
}

}  // namespace sttmin
