#pragma once

#include <string>
#include <vector>

#include "dyndfs/dfs_tree.hpp"
#include "dyndfs/structure_d.hpp"
#include "dyndfs/types.hpp"

namespace dyndfs {

struct Update {
    enum class Kind { InsertEdge, DeleteEdge, InsertVertex, DeleteVertex };
    Kind kind = Kind::InsertEdge;
    VertexId u = kNoVertex, v = kNoVertex;
    std::vector<VertexId> neighbors;  // InsertVertex

    static Update insert_edge(VertexId u, VertexId v) { return {Kind::InsertEdge, u, v, {}}; }
    static Update delete_edge(VertexId u, VertexId v) { return {Kind::DeleteEdge, u, v, {}}; }
    static Update insert_vertex(VertexId u, std::vector<VertexId> nbrs) {
        return {Kind::InsertVertex, u, kNoVertex, std::move(nbrs)};
    }
    static Update delete_vertex(VertexId u) { return {Kind::DeleteVertex, u, kNoVertex, {}}; }

    std::string str() const;
};

// A (subtree, new root, attach edge) work item of the reduction: reroot
// T(subtree_root) at new_root and hang the result from attach_parent by
// attach_edge. Tasks of one update have pairwise disjoint subtrees.
struct RerootTask {
    VertexId subtree_root = kNoVertex;
    VertexId new_root = kNoVertex;
    VertexId attach_parent = kNoVertex;
    Edge attach_edge;
};

struct UpdatePlan {
    std::vector<RerootTask> tasks;
    long batches = 0;  // independent query sets used while planning
};

// Translates one update into reroot tasks. The graph must already reflect
// the update; the view exposes the pre-update structure with the update's
// adjacency delta applied. Issues at most one set of independent queries.
UpdatePlan plan_update(const Update& u, const DView& view, QueryBackend& backend);

}  // namespace dyndfs
