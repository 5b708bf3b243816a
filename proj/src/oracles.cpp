#include "dyndfs/oracles.hpp"

#include <algorithm>
#include <functional>

namespace dyndfs {

namespace {

// Levels by walking parent links only; unreachable slots stay -1.
std::vector<int> naive_levels(const DfsTree& t, const std::vector<VertexId>& live) {
    VertexId maxid = 0;
    for (VertexId v : live) maxid = std::max(maxid, v);
    std::vector<int> lvl(size_t(maxid) + 1, -1);
    for (VertexId v : live) {
        if (lvl[v] >= 0) continue;
        if (t.parent(v) == v) {
            lvl[v] = 0;
            continue;
        }
        std::vector<VertexId> chain;
        VertexId w = v;
        while (lvl[w] < 0 && t.parent(w) != w) {
            chain.push_back(w);
            w = t.parent(w);
            if (w < 0 || w > maxid || chain.size() > lvl.size()) return {};  // broken chain
        }
        int base = t.parent(w) == w ? 0 : lvl[w];
        if (t.parent(w) == w) lvl[w] = 0;
        for (auto it = chain.rbegin(); it != chain.rend(); ++it) lvl[*it] = ++base;
    }
    return lvl;
}

bool naive_ancestor(const DfsTree& t, const std::vector<int>& lvl, VertexId a, VertexId d) {
    while (lvl[d] > lvl[a]) d = t.parent(d);
    return d == a;
}

}  // namespace

bool oracle_validity(const DynamicGraph& g, const DfsTree& t) {
    std::vector<VertexId> live = g.live_vertices();
    // Every live vertex must reach the root through live parents.
    for (VertexId v : live) {
        if (v == t.root()) {
            if (t.parent(v) != v) return false;
            continue;
        }
        VertexId p = t.parent(v);
        if (p < 0 || !g.is_live(p)) return false;
        if (!g.has_edge(p, v)) return false;
    }
    std::vector<int> lvl = naive_levels(t, live);
    if (lvl.empty()) return false;
    for (VertexId v : live)
        if (lvl[v] < 0) return false;  // unreachable or cyclic
    for (const Edge& e : g.edges()) {
        if (t.parent(e.u) == e.v || t.parent(e.v) == e.u) continue;
        bool back = lvl[e.u] < lvl[e.v] ? naive_ancestor(t, lvl, e.u, e.v)
                                        : naive_ancestor(t, lvl, e.v, e.u);
        if (!back) return false;  // cross edge
    }
    return true;
}

std::vector<VertexId> oracle_ref_dfs(const DynamicGraph& g, VertexId root) {
    std::vector<VertexId> parent(size_t(g.max_id()) + 1, kNoVertex);
    std::function<void(VertexId)> go = [&](VertexId v) {
        for (VertexId w : g.neighbors(v)) {
            if (parent[w] != kNoVertex) continue;
            parent[w] = v;
            go(w);
        }
    };
    parent[root] = root;
    go(root);
    return parent;
}

std::set<std::vector<VertexId>> oracle_enum_dfs(const DynamicGraph& g, VertexId root) {
    if (g.live_count() > 9)
        throw PreconditionError("oracle_enum_dfs: instance too large (live count > 9)");
    std::vector<VertexId> live = g.live_vertices();
    std::set<std::vector<VertexId>> trees;
    std::vector<VertexId> parent(size_t(g.max_id()) + 1, kNoVertex);
    std::vector<VertexId> stack;

    std::function<void(int)> go = [&](int visited) {
        if (visited == int(live.size())) {
            trees.insert(parent);
            return;
        }
        // The next tree edge must leave the deepest stack vertex that still
        // has an unvisited neighbor; deeper choices were exhausted.
        for (int s = int(stack.size()) - 1; s >= 0; --s) {
            VertexId v = stack[s];
            bool any = false;
            for (VertexId w : g.neighbors(v)) {
                if (parent[w] != kNoVertex) continue;
                any = true;
                parent[w] = v;
                std::vector<VertexId> saved(stack.begin() + s + 1, stack.end());
                stack.resize(s + 1);
                stack.push_back(w);
                go(visited + 1);
                stack.resize(s + 1);
                stack.insert(stack.end(), saved.begin(), saved.end());
                parent[w] = kNoVertex;
            }
            if (any) break;  // shallower extensions would skip this frontier
        }
    };

    parent[root] = root;
    stack.push_back(root);
    go(1);
    return trees;
}

QueryAnswer oracle_bf_edge_scan(const DView& view, const EdgeQuery& q) {
    const DfsTree& t = view.tree();
    std::vector<VertexId> live;
    for (int r = 1; r <= t.vertex_count(); ++r) live.push_back(t.by_post(r));
    std::vector<int> lvl = naive_levels(t, live);

    auto in_part = [&](VertexId a) {
        switch (q.kind) {
            case PartKind::Vertex:
                return a == q.part;
            case PartKind::Subtree:
                return t.in_tree(a) && naive_ancestor(t, lvl, q.part, a);
            case PartKind::Path:
                return t.in_tree(a) && naive_ancestor(t, lvl, q.part_path.top, a) &&
                       naive_ancestor(t, lvl, a, q.part_path.bottom);
        }
        return false;
    };
    auto on_seg = [&](VertexId b, const TreePath& p) {
        return t.in_tree(b) && naive_ancestor(t, lvl, p.top, b) &&
               naive_ancestor(t, lvl, b, p.bottom);
    };
    auto dir_ok = [&](VertexId a, VertexId b) {
        if (q.kind == PartKind::Path)
            return naive_ancestor(t, lvl, a, b) || naive_ancestor(t, lvl, b, a);
        return naive_ancestor(t, lvl, b, a);
    };

    QueryAnswer best;
    auto offer = [&](VertexId a, VertexId b) {
        if (!in_part(a) || !dir_ok(a, b)) return;
        for (int si = 0; si < int(q.target.segs.size()); ++si) {
            const TargetSeg& s = q.target.segs[si];
            if (!on_seg(b, s.path)) continue;
            QueryHit h{a, b, si, std::abs(lvl[b] - lvl[s.near])};
            if (!best || h.seg < best->seg || (h.seg == best->seg && h.dist < best->dist) ||
                (h.seg == best->seg && h.dist == best->dist &&
                 t.post(h.part_end) < t.post(best->part_end)))
                best = h;
            break;
        }
    };
    for (const Edge& e : view.scan_edges()) {
        if (!t.in_tree(e.u) || !t.in_tree(e.v)) continue;
        offer(e.u, e.v);
        offer(e.v, e.u);
    }
    return best;
}

}  // namespace dyndfs
