#include "dyndfs/graph.hpp"

#include <string>

namespace dyndfs {

DynamicGraph::DynamicGraph() {
    adj_.resize(1);
    live_.assign(1, 1);  // pseudo root
}

DynamicGraph DynamicGraph::from_edge_list(int n, const std::vector<Edge>& edges) {
    if (n < 0) throw PreconditionError("from_edge_list: negative vertex count");
    DynamicGraph g;
    g.adj_.resize(size_t(n) + 1);
    g.live_.assign(size_t(n) + 1, 1);
    g.n_ = n;
    for (VertexId v = 1; v <= n; ++v) g.link(kPseudoRoot, v);
    size_t line = 0;
    for (const Edge& e : edges) {
        ++line;
        if (e.u == e.v)
            throw PreconditionError("from_edge_list: self-loop at edge " + std::to_string(line));
        if (e.u < 1 || e.v > n)
            throw PreconditionError("from_edge_list: endpoint out of range at edge " +
                                    std::to_string(line));
        if (g.has_edge(e.u, e.v))
            throw PreconditionError("from_edge_list: duplicate edge at edge " +
                                    std::to_string(line));
        g.link(e.u, e.v);
        ++g.m_;
    }
    return g;
}

void DynamicGraph::check_live(VertexId u, const char* op) const {
    if (!is_live(u))
        throw PreconditionError(std::string(op) + ": vertex " + std::to_string(u) +
                                " is not live");
}

void DynamicGraph::link(VertexId u, VertexId v) {
    adj_[u].insert(v);
    adj_[v].insert(u);
}

void DynamicGraph::unlink(VertexId u, VertexId v) {
    adj_[u].erase(v);
    adj_[v].erase(u);
}

bool DynamicGraph::has_edge(VertexId u, VertexId v) const {
    if (!is_live(u) || !is_live(v)) return false;
    return adj_[u].count(v) > 0;
}

void DynamicGraph::insert_edge(VertexId u, VertexId v) {
    check_live(u, "insert_edge");
    check_live(v, "insert_edge");
    if (u == kPseudoRoot || v == kPseudoRoot)
        throw PreconditionError("insert_edge: pseudo root is not updatable");
    if (u == v) throw PreconditionError("insert_edge: self-loop");
    if (has_edge(u, v)) throw PreconditionError("insert_edge: edge already present");
    link(u, v);
    ++m_;
}

void DynamicGraph::delete_edge(VertexId u, VertexId v) {
    check_live(u, "delete_edge");
    check_live(v, "delete_edge");
    if (u == kPseudoRoot || v == kPseudoRoot)
        throw PreconditionError("delete_edge: pseudo root is not updatable");
    if (!has_edge(u, v)) throw PreconditionError("delete_edge: edge not present");
    unlink(u, v);
    --m_;
}

VertexId DynamicGraph::insert_vertex(const std::vector<VertexId>& neighbors) {
    VertexId u = VertexId(adj_.size());
    insert_vertex_with_id(u, neighbors);
    return u;
}

void DynamicGraph::insert_vertex_with_id(VertexId u, const std::vector<VertexId>& neighbors) {
    if (u != VertexId(adj_.size()))
        throw PreconditionError("insert_vertex: id " + std::to_string(u) +
                                " is not the next unused id");
    for (VertexId w : neighbors) {
        check_live(w, "insert_vertex");
        if (w == kPseudoRoot)
            throw PreconditionError("insert_vertex: pseudo root cannot be a named neighbor");
    }
    std::set<VertexId> uniq(neighbors.begin(), neighbors.end());
    if (uniq.size() != neighbors.size())
        throw PreconditionError("insert_vertex: duplicate neighbor");
    adj_.resize(size_t(u) + 1);
    live_.push_back(1);
    ++n_;
    link(kPseudoRoot, u);
    for (VertexId w : uniq) {
        link(u, w);
        ++m_;
    }
}

void DynamicGraph::delete_vertex(VertexId u) {
    check_live(u, "delete_vertex");
    if (u == kPseudoRoot) throw PreconditionError("delete_vertex: pseudo root is not deletable");
    for (VertexId w : adj_[u]) {
        adj_[w].erase(u);
        if (w != kPseudoRoot) --m_;
    }
    adj_[u].clear();
    live_[u] = 0;
    --n_;
}

const std::set<VertexId>& DynamicGraph::neighbors(VertexId u) const {
    if (!is_live(u)) throw PreconditionError("neighbors: vertex not live");
    return adj_[u];
}

std::vector<VertexId> DynamicGraph::live_vertices(bool include_pseudo_root) const {
    std::vector<VertexId> out;
    out.reserve(size_t(n_) + 1);
    for (VertexId v = include_pseudo_root ? 0 : 1; v < VertexId(live_.size()); ++v)
        if (live_[v]) out.push_back(v);
    return out;
}

std::vector<Edge> DynamicGraph::edges(bool include_pseudo_edges) const {
    std::vector<Edge> out;
    out.reserve(size_t(m_) + (include_pseudo_edges ? size_t(n_) : 0));
    for (VertexId u = include_pseudo_edges ? 0 : 1; u < VertexId(adj_.size()); ++u) {
        if (!live_[u]) continue;
        for (VertexId v : adj_[u])
            if (v > u) out.emplace_back(u, v);
    }
    return out;
}

}  // namespace dyndfs
