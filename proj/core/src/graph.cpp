#include "sttmin/graph.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <tuple>
#include <unordered_map>

namespace sttmin {

namespace {

constexpr std::uint32_t kNone32 = std::numeric_limits<std::uint32_t>::max();

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

// Next non-blank, non-comment line; false at end of input.
bool next_content_line(std::istream& in, std::string& line, int& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    std::size_t i = line.find_first_not_of(" \t");
    if (i == std::string::npos) continue;
    if (line[i] == '#') continue;
    return true;
  }
  return false;
}

std::uint64_t parse_uint(const std::string& tok, int line_no,
                         const char* what) {
  if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](unsigned char c) {
        return std::isdigit(c);
      })) {
    throw ParseError(line_no, std::string("expected number for ") + what +
                                  ", got '" + tok + "'");
  }
  std::uint64_t v = 0;
  for (char c : tok) {
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
    if (v > std::numeric_limits<std::uint32_t>::max()) {
      throw ParseError(line_no, std::string(what) + " out of range");
    }
  }
  return v;
}

}  // namespace

std::uint32_t KripkeStructure::intern_label(const std::string& name) {
  for (std::uint32_t i = 0; i < label_names.size(); ++i) {
    if (label_names[i] == name) return i;
  }
  label_names.push_back(name);
  return static_cast<std::uint32_t>(label_names.size() - 1);
}

std::uint32_t Lts::intern_action(const std::string& name) {
  for (std::uint32_t i = 0; i < action_names.size(); ++i) {
    if (action_names[i] == name) return i;
  }
  action_names.push_back(name);
  return static_cast<std::uint32_t>(action_names.size() - 1);
}

KripkeStructure parse_ks(std::istream& in) {
  KripkeStructure ks;
  int line_no = 0;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty input");
  ++line_no;
  strip_cr(line);
  std::istringstream hdr(line);
  std::string tag, extra;
  std::string ntok, mtok;
  if (!(hdr >> tag >> ntok >> mtok) || tag != "ks" || (hdr >> extra)) {
    throw ParseError(1, "expected header 'ks <n> <m>'");
  }
  std::uint64_t n = parse_uint(ntok, 1, "state count");
  std::uint64_t m = parse_uint(mtok, 1, "transition count");
  ks.num_states = static_cast<State>(n);
  ks.label_of.reserve(n);
  ks.transitions.reserve(m);

  std::unordered_map<std::string, std::uint32_t> interned;
  for (std::uint64_t i = 0; i < n; ++i) {
    if (!next_content_line(in, line, line_no)) {
      throw ParseError(line_no + 1, "expected 'l' line, got end of input");
    }
    std::istringstream ls(line);
    std::string idtok, name;
    if (!(ls >> tag >> idtok >> name) || tag != "l" || (ls >> extra)) {
      throw ParseError(line_no, "expected 'l <id> <label>'");
    }
    if (parse_uint(idtok, line_no, "state id") != i) {
      throw ParseError(line_no, "label lines must be in ascending id order");
    }
    auto [it, fresh] = interned.try_emplace(
        name, static_cast<std::uint32_t>(ks.label_names.size()));
    if (fresh) ks.label_names.push_back(name);
    ks.label_of.push_back(it->second);
  }
  for (std::uint64_t i = 0; i < m; ++i) {
    if (!next_content_line(in, line, line_no)) {
      throw ParseError(line_no + 1, "expected 't' line, got end of input");
    }
    std::istringstream ts(line);
    std::string stok, dtok;
    if (!(ts >> tag >> stok >> dtok) || tag != "t" || (ts >> extra)) {
      throw ParseError(line_no, "expected 't <src> <dst>'");
    }
    std::uint64_t src = parse_uint(stok, line_no, "source state");
    std::uint64_t dst = parse_uint(dtok, line_no, "target state");
    if (src >= n || dst >= n) {
      throw ParseError(line_no, "transition endpoint out of range");
    }
    ks.transitions.emplace_back(static_cast<State>(src),
                                static_cast<State>(dst));
  }
  if (next_content_line(in, line, line_no)) {
    throw ParseError(line_no, "unexpected content after last transition");
  }
  return ks;
}

KripkeStructure parse_ks_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_ks(in);
}

void write_ks(std::ostream& out, const KripkeStructure& ks) {
  out << "ks " << ks.num_states << ' ' << ks.transitions.size() << '\n';
  for (State s = 0; s < ks.num_states; ++s) {
    out << "l " << s << ' ' << ks.label_names[ks.label_of[s]] << '\n';
  }
  // Transition order is kept as stored: predecessor lists are built in file
  // order and several inputs rely on a specific sweep order staying cheap.
  for (const auto& [src, dst] : ks.transitions) {
    out << "t " << src << ' ' << dst << '\n';
  }
}

namespace {

// Parses "(<src>,<action>,<dst>)" with the action optionally double-quoted.
void parse_aut_edge(const std::string& line, int line_no, std::uint64_t n,
                    Lts& lts) {
  std::size_t i = line.find_first_not_of(" \t");
  std::size_t end = line.find_last_not_of(" \t");
  if (i == std::string::npos || line[i] != '(' || line[end] != ')') {
    throw ParseError(line_no, "expected '(<src>,\"<action>\",<dst>)'");
  }
  std::size_t c1 = line.find(',', i + 1);
  if (c1 == std::string::npos) throw ParseError(line_no, "missing ',' after source");
  std::uint64_t src = parse_uint(line.substr(i + 1, c1 - i - 1), line_no, "source state");

  std::size_t p = line.find_first_not_of(" \t", c1 + 1);
  if (p == std::string::npos) throw ParseError(line_no, "missing action");
  std::string action;
  std::size_t after;
  if (line[p] == '"') {
    std::size_t q = line.find('"', p + 1);
    if (q == std::string::npos) throw ParseError(line_no, "unterminated action quote");
    action = line.substr(p + 1, q - p - 1);
    after = line.find(',', q + 1);
  } else {
    after = line.find(',', p);
    if (after == std::string::npos) throw ParseError(line_no, "missing ',' after action");
    std::size_t e = line.find_last_not_of(" \t", after - 1);
    action = line.substr(p, e - p + 1);
  }
  if (after == std::string::npos) throw ParseError(line_no, "missing ',' after action");
  std::uint64_t dst = parse_uint(line.substr(after + 1, end - after - 1), line_no,
                                 "target state");
  if (src >= n || dst >= n) {
    throw ParseError(line_no, "transition endpoint out of range");
  }
  lts.transitions.push_back({static_cast<State>(src),
                             lts.intern_action(action),
                             static_cast<State>(dst)});
}

}  // namespace

Lts parse_aut(std::istream& in) {
  Lts lts;
  int line_no = 0;
  std::string line;
  if (!next_content_line(in, line, line_no)) {
    throw ParseError(1, "empty input");
  }
  std::size_t open = line.find('(');
  std::size_t close = line.find(')');
  if (line.compare(0, 3, "des") != 0 || open == std::string::npos ||
      close == std::string::npos || close < open) {
    throw ParseError(line_no, "expected header 'des (<init>,<m>,<n>)'");
  }
  std::string body = line.substr(open + 1, close - open - 1);
  std::array<std::uint64_t, 3> hdr{};
  std::size_t pos = 0;
  for (int k = 0; k < 3; ++k) {
    std::size_t c = (k < 2) ? body.find(',', pos) : body.size();
    if (c == std::string::npos) {
      throw ParseError(line_no, "expected three header fields");
    }
    std::string tok = body.substr(pos, c - pos);
    tok.erase(std::remove_if(tok.begin(), tok.end(),
                             [](unsigned char ch) { return std::isspace(ch); }),
              tok.end());
    hdr[k] = parse_uint(tok, line_no, "header field");
    pos = c + 1;
  }
  auto [init, m, n] = hdr;
  if (init >= n && n > 0) throw ParseError(line_no, "initial state out of range");
  lts.num_states = static_cast<State>(n);
  lts.initial = static_cast<State>(init);
  lts.transitions.reserve(m);
  for (std::uint64_t i = 0; i < m; ++i) {
    if (!next_content_line(in, line, line_no)) {
      throw ParseError(line_no + 1, "expected transition, got end of input");
    }
    parse_aut_edge(line, line_no, n, lts);
  }
  if (next_content_line(in, line, line_no)) {
    throw ParseError(line_no, "unexpected content after last transition");
  }
  return lts;
}

Lts parse_aut_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_aut(in);
}

void write_aut(std::ostream& out, const Lts& lts) {
  out << "des (" << lts.initial << ',' << lts.transitions.size() << ','
      << lts.num_states << ")\n";
  for (const auto& t : lts.transitions) {
    out << '(' << t.src << ",\"" << lts.action_names[t.action] << "\"," << t.dst
        << ")\n";
  }
}

LtsEmbedding lts_to_kripke(const Lts& lts) {
  for (const auto& a : lts.action_names) {
    if (a == "@") {
      throw std::runtime_error("action name '@' is reserved for the embedding");
    }
  }
  LtsEmbedding r;
  KripkeStructure& ks = r.ks;
  r.num_original = lts.num_states;
  ks.num_states = lts.num_states;
  ks.label_of.assign(lts.num_states, ks.intern_label("@"));
  std::vector<std::uint32_t> action_label(lts.action_names.size(), kNone32);
  std::unordered_map<std::uint64_t, State> aux;
  for (const auto& t : lts.transitions) {
    if (lts.is_tau(t.action)) {
      ks.transitions.emplace_back(t.src, t.dst);
      continue;
    }
    std::uint64_t key = (std::uint64_t{t.action} << 32) | t.dst;
    auto [it, fresh] = aux.try_emplace(key, ks.num_states);
    if (fresh) {
      if (action_label[t.action] == kNone32) {
        action_label[t.action] = ks.intern_label(lts.action_names[t.action]);
      }
      ks.label_of.push_back(action_label[t.action]);
      ++ks.num_states;
      ks.transitions.emplace_back(it->second, t.dst);
    }
    ks.transitions.emplace_back(t.src, it->second);
  }
  return r;
}

Partition label_partition(const KripkeStructure& ks) {
  Partition p;
  p.num_blocks = static_cast<std::uint32_t>(ks.label_names.size());
  p.block_of = ks.label_of;
  return canonical_partition(p);
}

Partition canonical_partition(const Partition& p) {
  Partition q;
  q.block_of.resize(p.block_of.size());
  std::vector<std::uint32_t> renum(p.num_blocks, kNone32);
  std::uint32_t next = 0;
  for (std::size_t s = 0; s < p.block_of.size(); ++s) {
    std::uint32_t b = p.block_of[s];
    if (renum[b] == kNone32) renum[b] = next++;
    q.block_of[s] = renum[b];
  }
  q.num_blocks = next;
  return q;
}

bool partitions_equal(const Partition& a, const Partition& b) {
  if (a.block_of.size() != b.block_of.size()) return false;
  return canonical_partition(a).block_of == canonical_partition(b).block_of;
}

KripkeStructure quotient(const KripkeStructure& ks, const Partition& p) {
  Partition c = canonical_partition(p);
  KripkeStructure q;
  q.num_states = c.num_blocks;
  q.label_names = ks.label_names;
  q.label_of.assign(c.num_blocks, kNone32);
  for (State s = 0; s < ks.num_states; ++s) {
    std::uint32_t b = c.block_of[s];
    if (q.label_of[b] == kNone32) q.label_of[b] = ks.label_of[s];
  }
  q.transitions.reserve(ks.transitions.size());
  for (const auto& [src, dst] : ks.transitions) {
    q.transitions.emplace_back(c.block_of[src], c.block_of[dst]);
  }
  std::sort(q.transitions.begin(), q.transitions.end());
  q.transitions.erase(std::unique(q.transitions.begin(), q.transitions.end()),
                      q.transitions.end());
  return q;
}

Lts quotient_lts(const Lts& lts, const Partition& p) {
  Partition c = canonical_partition(p);
  Lts q;
  q.num_states = c.num_blocks;
  q.initial = c.block_of[lts.initial];
  q.action_names = lts.action_names;
  std::vector<std::tuple<State, std::uint32_t, State>> edges;
  edges.reserve(lts.transitions.size());
  for (const auto& t : lts.transitions) {
    edges.emplace_back(c.block_of[t.src], t.action, c.block_of[t.dst]);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  q.transitions.reserve(edges.size());
  for (const auto& [src, a, dst] : edges) q.transitions.push_back({src, a, dst});
  return q;
}

void write_map(std::ostream& out, const Partition& p) {
  Partition c = canonical_partition(p);
  out << "map " << c.block_of.size() << ' ' << c.num_blocks << '\n';
  for (std::uint32_t b : c.block_of) out << b << '\n';
}

}  // namespace sttmin
