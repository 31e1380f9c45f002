#include "rbl/dot.hpp"

#include <cstdio>
#include <ostream>

namespace rbl {

void write_dot(const TransitionGraph& g, std::ostream& out) {
  out << "digraph rbl {\n";
  out << "  rankdir=LR;\n";
  out << "  node [shape=box, fontname=\"monospace\", fontsize=9];\n";
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    char digest[17];
    std::snprintf(digest, sizeof digest, "%016llx",
                  static_cast<unsigned long long>(g.nodes[i].canon.digest));
    out << "  n" << i << " [label=\"#" << i << "\\n" << digest << '"';
    if (i == g.initial) out << ", peripheries=2";
    out << "];\n";
  }
  for (const GraphEdge& e : g.edges) {
    out << "  n" << e.from << " -> n" << e.to << " [label=\""
        << move_kind_name(e.kind) << '"';
    if (e.multiplicity > 1) out << ", taillabel=\"x" << e.multiplicity << '"';
    out << "];\n";
  }
  out << "}\n";
}

}  // namespace rbl
