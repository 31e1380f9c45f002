#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rbl/canonical.hpp"
#include "rbl/moves.hpp"
#include "rbl/text_format.hpp"

namespace rbl {

struct ExplorationLimits {
  std::size_t max_nodes = 200000;
  std::size_t max_depth = 0;  // 0 = unlimited
};

struct ExploreOptions {
  ExplorationLimits limits{};
  unsigned jobs = 1;
};

struct GraphNode {
  SystemConfiguration config;  // representative; instance names come from the
                               // first discovery, deterministically
  CanonicalForm canon;
  uint32_t depth = 0;
};

struct GraphEdge {
  uint32_t from = 0;
  uint32_t to = 0;
  MoveKind kind = MoveKind::Form;
  int32_t pool = -1;  // pool entry index for Draw/Return edges
  std::string label;  // move described in the from-node's instance names
  uint32_t multiplicity = 1;

  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

// Reachable configuration space modulo isomorphism. Edges are directed move
// records; adjacency symmetry makes them come in inverse pairs, which
// check_reversibility verifies rather than assumes.
struct TransitionGraph {
  std::vector<GraphNode> nodes;  // index is the node id; nodes[initial] first
  std::vector<GraphEdge> edges;  // sorted by (from, to, kind, label)
  uint32_t initial = 0;
  bool truncated = false;

  // Distinct undirected neighbors per node, self-edges excluded.
  std::vector<uint32_t> undirected_degree() const;
  // Number of unordered node pairs connected by at least one edge.
  std::size_t undirected_pair_count() const;
  // Degree-1 nodes other than the initial node.
  std::vector<uint32_t> terminals() const;

  int find(const CanonicalForm& form) const;  // node id, or -1
};

// Breadth-first closure of legal_moves modulo canonicalization. Infinite
// pools are treated as always drawable regardless of concentration
// (reachability does not depend on rates); finite-count pools deplete, and
// their remaining counts distinguish states. Node ids are assigned layer by
// layer in canonical-buffer order, so the result is identical for any job
// count. `truncated` is set iff a limit actually cut expansion off; edges
// between retained nodes are still complete for the retained set.
// Throws MalformedInput when the initial configuration is invalid.
TransitionGraph explore(const SystemConfiguration& init,
                        const ExploreOptions& opts = {});

enum class Verdict : uint8_t { Holds, Fails, Inconclusive };
std::string_view verdict_name(Verdict v);

struct PropertyReport {
  std::string property;
  Verdict verdict = Verdict::Holds;
  std::string detail;
  std::vector<uint64_t> witness;  // canonical digests
};

// Every edge has an inverse-kind edge back.
PropertyReport check_reversibility(const TransitionGraph& g);

// Every node outside the declared branch/parallel regions has at most two
// distinct neighbors: reversible progress admits one way back and one way
// forward. A node is declared when any of `declared` matches it.
PropertyReport check_corridor(const TransitionGraph& g,
                              std::span<const ParallelDecl> declared);

// Every terminal node leaves all instances of the catalyst type completely
// unbonded, so the catalyst is reusable. The initial node must itself
// contain a free catalyst instance.
PropertyReport check_catalysis(const TransitionGraph& g, AtomTypeId catalyst);

// Net pool deltas along `path` (node ids, consecutive nodes joined by an
// edge): the draw species must net -k and the return species +k for the
// same k >= 0. expected_k >= 0 additionally pins k; expected_deltas, when
// given, pins every pool's net delta exactly (index-parallel to pools).
PropertyReport check_fuel_conservation(
    const TransitionGraph& g, std::span<const uint32_t> path,
    uint32_t draw_pool, uint32_t return_pool, int64_t expected_k = -1,
    const std::vector<int64_t>* expected_deltas = nullptr);

// Net pool deltas along a path: deltas[i] counts returns minus draws of
// pool entry i. Throws MalformedInput if consecutive nodes are not joined
// by an edge.
std::vector<int64_t> path_pool_deltas(const TransitionGraph& g,
                                      std::span<const uint32_t> path);

// Node ids from `from` to `to` inclusive, minimizing edge count; empty when
// unreachable.
std::vector<uint32_t> shortest_path(const TransitionGraph& g, uint32_t from,
                                    uint32_t to);

// True when the graph has terminal nodes and every node can still reach one
// (no garbage states off every initial-to-terminal path).
bool all_on_terminal_paths(const TransitionGraph& g);

// One JSON object per report: property, verdict, detail, witness digests as
// 16-digit hex strings.
std::string report_json_line(const PropertyReport& r);

}  // namespace rbl
