#pragma once

#include <set>
#include <vector>

#include "dyndfs/types.hpp"

namespace dyndfs {

// Mutable undirected simple graph augmented with a pseudo root (vertex 0)
// adjacent to every live vertex. The pseudo-root edges are real edges of the
// augmented graph; n and m count only the underlying graph (no pseudo root,
// no pseudo edges). Deleted ids are retired, never reused.
class DynamicGraph {
  public:
    DynamicGraph();

    static DynamicGraph from_edge_list(int n, const std::vector<Edge>& edges);

    void insert_edge(VertexId u, VertexId v);
    void delete_edge(VertexId u, VertexId v);
    // Returns the id assigned to the new vertex (next unused id).
    VertexId insert_vertex(const std::vector<VertexId>& neighbors);
    // Inserts with a caller-chosen id (must be the next unused id).
    void insert_vertex_with_id(VertexId u, const std::vector<VertexId>& neighbors);
    void delete_vertex(VertexId u);

    bool is_live(VertexId u) const { return u >= 0 && u < VertexId(live_.size()) && live_[u]; }
    bool has_edge(VertexId u, VertexId v) const;

    int n() const { return n_; }
    int m() const { return m_; }
    // Number of live vertices including the pseudo root.
    int live_count() const { return n_ + 1; }
    VertexId max_id() const { return VertexId(live_.size()) - 1; }

    // Sorted ascending; includes pseudo-root edges.
    const std::set<VertexId>& neighbors(VertexId u) const;

    std::vector<VertexId> live_vertices(bool include_pseudo_root = true) const;
    // All edges of the augmented graph with u < v, sorted. Pseudo edges included
    // unless include_pseudo_edges is false.
    std::vector<Edge> edges(bool include_pseudo_edges = true) const;

  private:
    void check_live(VertexId u, const char* op) const;
    void link(VertexId u, VertexId v);
    void unlink(VertexId u, VertexId v);

    std::vector<std::set<VertexId>> adj_;
    std::vector<char> live_;
    int n_ = 0;
    int m_ = 0;
};

}  // namespace dyndfs
