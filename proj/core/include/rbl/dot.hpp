#pragma once

#include <iosfwd>

#include "rbl/explore.hpp"

namespace rbl {

// Graphviz rendering of a transition graph: one node per canonical
// configuration labeled with its id and digest, one directed edge per move
// record labeled with the move kind. Output is deterministic.
void write_dot(const TransitionGraph& g, std::ostream& out);

}  // namespace rbl
