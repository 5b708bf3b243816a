#include "dyndfs/reduction.hpp"

#include <algorithm>
#include <sstream>

namespace dyndfs {

std::string Update::str() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::InsertEdge:
            os << "ie " << u << " " << v;
            break;
        case Kind::DeleteEdge:
            os << "de " << u << " " << v;
            break;
        case Kind::DeleteVertex:
            os << "dv " << u;
            break;
        case Kind::InsertVertex:
            os << "iv " << u;
            for (VertexId w : neighbors) os << " " << w;
            break;
    }
    return os.str();
}

namespace {

void check_disjoint(const DfsTree& t, const std::vector<RerootTask>& tasks) {
    std::vector<std::pair<int, int>> spans;
    for (const RerootTask& k : tasks) spans.emplace_back(t.low_post(k.subtree_root),
                                                         t.post(k.subtree_root));
    std::sort(spans.begin(), spans.end());
    for (size_t i = 1; i < spans.size(); ++i)
        if (spans[i].first <= spans[i - 1].second)
            throw InternalError("plan_update produced overlapping subtrees");
}

}  // namespace

UpdatePlan plan_update(const Update& u, const DView& view, QueryBackend& backend) {
    const DfsTree& t = view.tree();
    UpdatePlan plan;
    switch (u.kind) {
        case Update::Kind::InsertEdge: {
            if (t.is_back_edge(u.u, u.v)) break;
            VertexId w = t.lca(u.u, u.v);
            VertexId child = t.child_containing(w, u.v);
            plan.tasks.push_back({child, u.v, u.u, Edge(u.u, u.v)});
            break;
        }
        case Update::Kind::DeleteEdge: {
            VertexId par, child;
            if (t.parent(u.v) == u.u) {
                par = u.u;
                child = u.v;
            } else if (t.parent(u.u) == u.v) {
                par = u.v;
                child = u.u;
            } else {
                break;  // back edge: no tree change
            }
            // Lowest replacement edge on path(par, root); the pseudo-root
            // edges guarantee one exists.
            QueryBatch b;
            b.queries.push_back(EdgeQuery::subtree(
                child, QueryTarget::single(TreePath{t.root(), par}, par)));
            auto ans = backend.run_batch(view, b);
            ++plan.batches;
            if (!ans[0])
                throw InternalError("delete_edge: no replacement edge from the subtree");
            plan.tasks.push_back(
                {child, ans[0]->part_end, ans[0]->target_end, ans[0]->edge()});
            break;
        }
        case Update::Kind::DeleteVertex: {
            const std::vector<VertexId>& kids = t.children(u.u);
            if (kids.empty()) break;
            VertexId above = t.parent(u.u);
            QueryBatch b;
            for (VertexId c : kids)
                b.queries.push_back(EdgeQuery::subtree(
                    c, QueryTarget::single(TreePath{t.root(), above}, above)));
            auto ans = backend.run_batch(view, b);
            ++plan.batches;
            for (size_t k = 0; k < kids.size(); ++k) {
                if (!ans[k])
                    throw InternalError("delete_vertex: no replacement edge from a subtree");
                plan.tasks.push_back(
                    {kids[k], ans[k]->part_end, ans[k]->target_end, ans[k]->edge()});
            }
            break;
        }
        case Update::Kind::InsertVertex: {
            // The pseudo root is always a neighbor; smallest post rank wins.
            VertexId vj = t.root();
            for (VertexId w : u.neighbors)
                if (t.post(w) < t.post(vj)) vj = w;
            // One task per hanging subtree holding a neighbor off path(vj, root),
            // rerooted at that subtree's smallest-post neighbor.
            std::vector<std::pair<VertexId, VertexId>> per_subtree;  // (subtree, neighbor)
            for (VertexId w : u.neighbors) {
                if (w == vj || t.is_ancestor(w, vj)) continue;  // becomes a back edge
                VertexId l = t.lca(w, vj);
                VertexId sub = t.child_containing(l, w);
                auto it = std::find_if(per_subtree.begin(), per_subtree.end(),
                                       [&](const auto& p) { return p.first == sub; });
                if (it == per_subtree.end())
                    per_subtree.emplace_back(sub, w);
                else if (t.post(w) < t.post(it->second))
                    it->second = w;
            }
            for (auto& [sub, w] : per_subtree)
                plan.tasks.push_back({sub, w, u.u, Edge(u.u, w)});
            break;
        }
    }
    std::sort(plan.tasks.begin(), plan.tasks.end(),
              [&](const RerootTask& a, const RerootTask& b) {
                  return t.post(a.subtree_root) < t.post(b.subtree_root);
              });
    check_disjoint(t, plan.tasks);
    if (plan.batches > 4) throw InternalError("plan_update exceeded its batch budget");
    return plan;
}

}  // namespace dyndfs
