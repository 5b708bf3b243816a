#pragma once

#include <optional>
#include <vector>

#include "dyndfs/graph.hpp"
#include "dyndfs/types.hpp"

namespace dyndfs {

// Ancestor-descendant path of a DfsTree: top is an ancestor (not necessarily
// proper) of bottom. An empty path has both ends at kNoVertex.
struct TreePath {
    VertexId top = kNoVertex;
    VertexId bottom = kNoVertex;

    bool empty() const { return top == kNoVertex; }
    friend bool operator==(const TreePath&, const TreePath&) = default;
};

// Rooted spanning tree of the pseudo-root-augmented graph, plus the derived
// indices: post-order rank (1..N, 0 for dead vertices), level (root = 0),
// subtree size, and an Euler-tour/sparse-table LCA index. Indices are
// immutable between rebuild_indices() calls.
class DfsTree {
  public:
    DfsTree() = default;

    // Classical DFS from `root`, visiting neighbors in ascending id order.
    static DfsTree static_dfs(const DynamicGraph& g, VertexId root = kPseudoRoot);

    // Recomputes post/level/size and the LCA index from parent/children.
    // Throws InternalError on structural corruption (cycle, unreachable vertex).
    void rebuild_indices(int live_count);

    VertexId root() const { return root_; }
    int vertex_count() const { return count_; }
    // One past the largest addressable vertex id.
    VertexId capacity() const { return VertexId(parent_.size()); }
    bool in_tree(VertexId v) const {
        return v >= 0 && v < VertexId(post_.size()) && post_[v] != 0;
    }

    VertexId parent(VertexId v) const { return parent_[v]; }
    const std::vector<VertexId>& children(VertexId v) const { return children_[v]; }
    int post(VertexId v) const { return post_[v]; }
    int low_post(VertexId v) const { return low_[v]; }
    int level(VertexId v) const { return level_[v]; }
    int size(VertexId v) const { return size_[v]; }
    // Vertex with post-order rank r (1..N).
    VertexId by_post(int r) const { return order_[r]; }

    VertexId lca(VertexId x, VertexId y) const;

    // a is an ancestor of d (not necessarily proper).
    bool is_ancestor(VertexId a, VertexId d) const {
        return low_[a] <= post_[d] && post_[d] <= post_[a];
    }
    // Non-tree pairs included: true iff the endpoints are ancestor-related.
    bool is_back_edge(VertexId x, VertexId y) const {
        return is_ancestor(x, y) || is_ancestor(y, x);
    }
    bool on_path(VertexId x, const TreePath& p) const;
    // Child y' of y with x in T(y'); kNoVertex if x == y or x not below y.
    VertexId child_containing(VertexId y, VertexId x) const;
    // Roots of subtrees hanging from p: root's parent is on p, root is not.
    std::vector<VertexId> subtrees_hanging_from(const TreePath& p) const;
    // Number of vertices on p.
    int path_length(const TreePath& p) const;
    // Endpoint of p maximizing vertex distance from `from` (ties to the top).
    VertexId farther_end(const TreePath& p, VertexId from) const;

    TreePath make_path(VertexId a, VertexId b) const;
    void validate_path(const TreePath& p, const char* what) const;

    // Vertices of p listed top to bottom.
    std::vector<VertexId> path_vertices(const TreePath& p) const;

    // Raw structure access for splicing; caller must rebuild_indices afterwards.
    std::vector<VertexId>& mutable_parent() { return parent_; }
    std::vector<std::vector<VertexId>>& mutable_children() { return children_; }
    void set_root(VertexId r) { root_ = r; }
    void ensure_capacity(VertexId max_id);

  private:
    VertexId root_ = kPseudoRoot;
    int count_ = 0;
    std::vector<VertexId> parent_;
    std::vector<std::vector<VertexId>> children_;
    std::vector<int> post_, low_, level_, size_;
    std::vector<VertexId> order_;  // post rank -> vertex

    // Euler tour + sparse table over levels for LCA.
    std::vector<int> first_seen_;
    std::vector<VertexId> euler_;
    std::vector<std::vector<int>> table_;  // argmin-level positions
    std::vector<int> log2_;
};

}  // namespace dyndfs
