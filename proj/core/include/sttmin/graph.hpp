#ifndef STTMIN_GRAPH_HPP
#define STTMIN_GRAPH_HPP

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sttmin {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

using State = std::uint32_t;

// State-labelled directed graph. Labels are interned; label_of[s] indexes
// label_names. The transition relation need not be total.
struct KripkeStructure {
  State num_states = 0;
  std::vector<std::uint32_t> label_of;
  std::vector<std::string> label_names;
  std::vector<std::pair<State, State>> transitions;

  std::size_t num_transitions() const { return transitions.size(); }
  std::uint32_t intern_label(const std::string& name);
};

struct LtsTransition {
  State src;
  std::uint32_t action;
  State dst;
};

// Action-labelled transition system; action "tau" is silent.
struct Lts {
  State num_states = 0;
  State initial = 0;
  std::vector<std::string> action_names;
  std::vector<LtsTransition> transitions;

  std::uint32_t intern_action(const std::string& name);
  bool is_tau(std::uint32_t action) const {
    return action_names[action] == "tau";
  }
};

// Text format:
//   ks <n> <m>
//   l <id> <label>      n lines, ascending id
//   t <src> <dst>       m lines
// Full-line # comments and blank lines are skipped after the header.
KripkeStructure parse_ks(std::istream& in);
KripkeStructure parse_ks_file(const std::string& path);

// Header, labels by id, transitions in stored order. Keeping the stored
// order matters: predecessor sweeps run in file order and some inputs are
// built so that a specific sweep order stays cheap.
void write_ks(std::ostream& out, const KripkeStructure& ks);

// Aldebaran format: des (<init>,<m>,<n>) then (<src>,"<action>",<dst>).
Lts parse_aut(std::istream& in);
Lts parse_aut_file(const std::string& path);
void write_aut(std::ostream& out, const Lts& lts);

// Branching bisimilarity on an LTS coincides with the state-label problem on
// this embedding: each visible transition s -a-> t is routed through an
// auxiliary state labelled a, shared per (a, t) pair; tau transitions become
// direct edges. Original states share one fresh label.
struct LtsEmbedding {
  KripkeStructure ks;
  State num_original;
};
LtsEmbedding lts_to_kripke(const Lts& lts);

struct Partition {
  std::uint32_t num_blocks = 0;
  std::vector<std::uint32_t> block_of;
};

// Coarsest partition separating distinct state labels.
Partition label_partition(const KripkeStructure& ks);

// Renumbers blocks in order of first occurrence over state ids, so equal
// partitions have equal representations.
Partition canonical_partition(const Partition& p);
bool partitions_equal(const Partition& a, const Partition& b);

// Quotient graph: one state per block (numbered canonically), transition
// image deduplicated, block label taken from any member.
KripkeStructure quotient(const KripkeStructure& ks, const Partition& p);
Lts quotient_lts(const Lts& lts, const Partition& p);

// Text format: map <n> <#classes> then one class id per state line.
void write_map(std::ostream& out, const Partition& p);

}  // namespace sttmin

#endif
