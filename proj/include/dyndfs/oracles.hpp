#pragma once

#include <optional>
#include <set>
#include <vector>

#include "dyndfs/dfs_tree.hpp"
#include "dyndfs/graph.hpp"
#include "dyndfs/structure_d.hpp"
#include "dyndfs/types.hpp"

namespace dyndfs {

// Ground-truth checks, deliberately independent of the engine's index
// machinery: ancestor tests here walk parent chains.

// True iff t spans the augmented graph, every parent link is a graph edge,
// and every non-tree edge joins ancestor-related endpoints.
bool oracle_validity(const DynamicGraph& g, const DfsTree& t);

// Plain recursive DFS in ascending neighbor order; reference for static_dfs.
// Returns the parent map indexed by vertex id (root maps to itself).
std::vector<VertexId> oracle_ref_dfs(const DynamicGraph& g, VertexId root);

// Every DFS tree of the augmented graph from `root`, as parent maps, obtained
// by enumerating traversal orders with deduplication. Refuses instances with
// more than 9 live vertices.
std::set<std::vector<VertexId>> oracle_enum_dfs(const DynamicGraph& g, VertexId root);

// Reference semantics for query_one: filter every edge of the view by the
// membership and direction tests, then extremize by segment precedence,
// distance to the segment end, and smallest descendant-side post rank. Shares
// the tie-break rule with the implementation by specification, not by code.
QueryAnswer oracle_bf_edge_scan(const DView& view, const EdgeQuery& q);

}  // namespace dyndfs
