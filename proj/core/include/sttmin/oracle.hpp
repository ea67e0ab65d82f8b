#ifndef STTMIN_ORACLE_HPP
#define STTMIN_ORACLE_HPP

#include "sttmin/graph.hpp"

namespace sttmin {

// Reference minimizer, quadratic and obviously correct: repeatedly pick an
// ordered pair of distinct blocks (B, C); the states of B that can reach a
// direct edge into C through a path inside B either take all of B or split
// it. The fixpoint is the coarsest stable refinement of the initial
// partition. For cross-checking only.
Partition naive_minimize(const KripkeStructure& ks, const Partition& initial);
Partition naive_minimize(const KripkeStructure& ks);

// True iff no distinct ordered block pair of p splits under the rule above.
bool is_stable(const KripkeStructure& ks, const Partition& p);

}  // namespace sttmin

#endif
