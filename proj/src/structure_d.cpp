#include "dyndfs/structure_d.hpp"

#include <algorithm>
#include <string>
#include <unordered_map>

namespace dyndfs {

StructureD StructureD::build(const DfsTree& t, const DynamicGraph& g) {
    if (t.vertex_count() != g.live_count())
        throw PreconditionError("StructureD::build: tree snapshot is stale");
    StructureD d;
    d.t_ = &t;
    d.lists_.assign(size_t(g.max_id()) + 1, {});
    for (VertexId v : g.live_vertices()) {
        if (!t.in_tree(v)) throw PreconditionError("StructureD::build: tree snapshot is stale");
        d.lists_[v].reserve(g.neighbors(v).size());
    }
    // Bucket pass in post-rank order keeps every list sorted without comparisons.
    for (int r = 1; r <= t.vertex_count(); ++r) {
        VertexId w = t.by_post(r);
        for (VertexId u : g.neighbors(w)) {
            d.lists_[u].emplace_back(r, w);
            ++d.entries_;
        }
    }
    return d;
}

std::vector<Edge> DView::scan_edges() const {
    std::vector<Edge> out;
    if (g) {
        out = g->edges();
    } else {
        const DfsTree& t = tree();
        for (int r = 1; r <= t.vertex_count(); ++r) {
            VertexId u = t.by_post(r);
            for (const auto& [rank, w] : d->sorted_neighbors(u))
                if (w > u) out.emplace_back(u, w);
        }
        for (const Edge& e : added_edges) out.push_back(e);
        std::erase_if(out, [&](const Edge& e) { return edge_masked(e.u, e.v); });
    }
    return out;
}

namespace {

// Landing viability per part kind: for vertex/subtree parts the landing must
// be an ancestor of the part endpoint; for path parts any ancestor relation
// between the endpoints qualifies.
bool direction_ok(const DfsTree& t, PartKind kind, VertexId part_end, VertexId landing) {
    if (kind == PartKind::Path)
        return t.is_ancestor(part_end, landing) || t.is_ancestor(landing, part_end);
    return t.is_ancestor(landing, part_end);
}

struct Best {
    QueryAnswer ans;

    void offer(const DfsTree& t, QueryHit h) {
        if (!ans || h.better_than(*ans, t)) ans = h;
    }
};

int seg_dist(const DfsTree& t, const TargetSeg& s, VertexId landing) {
    return std::abs(t.level(landing) - t.level(s.near));
}

// Hits from a single part vertex u against one segment via binary search on
// the sorted neighbor list, clipped to the ancestors of u on the segment.
void scan_vertex_seg(const DView& view, VertexId u, int seg_idx, const TargetSeg& seg,
                     Best& best) {
    const DfsTree& t = view.tree();
    VertexId top = seg.path.top, bottom = seg.path.bottom;
    if (t.is_ancestor(top, u)) {
        VertexId l = t.lca(u, bottom);
        int lo = t.post(l), hi = t.post(top);
        const auto& list = view.d->sorted_neighbors(u);
        auto it = std::lower_bound(list.begin(), list.end(), std::make_pair(lo, VertexId(0)));
        // Range [post(l), post(top)] holds exactly u's ancestors on the segment.
        bool near_top = seg.near == top;
        if (near_top) {
            auto jt = std::upper_bound(list.begin(), list.end(),
                                       std::make_pair(hi + 1, VertexId(0)));
            while (jt != it) {
                --jt;
                if (view.edge_masked(u, jt->second)) continue;
                best.offer(t, QueryHit{u, jt->second, seg_idx, seg_dist(t, seg, jt->second)});
                break;
            }
        } else {
            for (auto jt = it; jt != list.end() && jt->first <= hi; ++jt) {
                if (view.edge_masked(u, jt->second)) continue;
                best.offer(t, QueryHit{u, jt->second, seg_idx, seg_dist(t, seg, jt->second)});
                break;
            }
        }
    }
    // Patched-in edges are rare; check them directly.
    for (const Edge& e : view.added_edges) {
        VertexId other = e.u == u ? e.v : (e.v == u ? e.u : kNoVertex);
        if (other == kNoVertex || !t.in_tree(other)) continue;
        if (t.on_path(other, seg.path) && t.is_ancestor(other, u))
            best.offer(t, QueryHit{u, other, seg_idx, seg_dist(t, seg, other)});
    }
}

// Path parts: edges may leave the part upward (landing is an ancestor of the
// part vertex — the same search as a vertex part) or downward (part vertex is
// an ancestor of the landing — roles reversed, each target vertex looks up
// its ancestors on the part chain).
void scan_path_part_seg(const DView& view, const TreePath& part, int seg_idx,
                        const TargetSeg& seg, Best& best) {
    const DfsTree& t = view.tree();
    for (VertexId a : t.path_vertices(part)) scan_vertex_seg(view, a, seg_idx, seg, best);
    for (VertexId b : t.path_vertices(seg.path)) {
        if (t.is_ancestor(part.top, b)) {
            VertexId l = t.lca(b, part.bottom);
            int lo = t.post(l), hi = t.post(part.top);
            const auto& list = view.d->sorted_neighbors(b);
            auto it = std::lower_bound(list.begin(), list.end(), std::make_pair(lo, VertexId(0)));
            for (; it != list.end() && it->first <= hi; ++it) {
                if (view.edge_masked(b, it->second)) continue;
                // Smallest post rank on the part side wins ties at b.
                best.offer(t, QueryHit{it->second, b, seg_idx, seg_dist(t, seg, b)});
                break;
            }
        }
        for (const Edge& e : view.added_edges) {
            VertexId other = e.u == b ? e.v : (e.v == b ? e.u : kNoVertex);
            if (other == kNoVertex || !t.in_tree(other)) continue;
            if (t.on_path(other, part) && t.is_ancestor(other, b))
                best.offer(t, QueryHit{other, b, seg_idx, seg_dist(t, seg, b)});
        }
    }
}

}  // namespace

void check_well_formed(const DView& view, const EdgeQuery& q) {
    const DfsTree& t = view.tree();
    for (const TargetSeg& s : q.target.segs) {
        t.validate_path(s.path, "query target");
        if (s.near != s.path.top && s.near != s.path.bottom)
            throw PreconditionError("query target: near end not an endpoint");
    }
    switch (q.kind) {
        case PartKind::Vertex:
            if (!t.in_tree(q.part)) throw PreconditionError("query part: vertex not in tree");
            for (const TargetSeg& s : q.target.segs)
                if (t.on_path(q.part, s.path))
                    throw PreconditionError("query part: vertex lies on the target path");
            break;
        case PartKind::Subtree:
            if (!t.in_tree(q.part)) throw PreconditionError("query part: vertex not in tree");
            for (const TargetSeg& s : q.target.segs)
                if (t.is_ancestor(q.part, s.path.bottom) || t.on_path(q.part, s.path))
                    throw PreconditionError("query part: subtree overlaps the target path");
            break;
        case PartKind::Path:
            t.validate_path(q.part_path, "query part path");
            for (const TargetSeg& s : q.target.segs) {
                // Two chains intersect iff the deeper top lies on the other.
                if (t.on_path(q.part_path.top, s.path) || t.on_path(s.path.top, q.part_path))
                    throw PreconditionError("query part: path overlaps the target path");
            }
            break;
    }
}

QueryAnswer query_one(const DView& view, const EdgeQuery& q) {
    if (!view.d) throw PreconditionError("query_one: view has no in-memory structure");
    check_well_formed(view, q);
    const DfsTree& t = view.tree();
    Best best;
    for (int si = 0; si < int(q.target.segs.size()); ++si) {
        const TargetSeg& seg = q.target.segs[si];
        switch (q.kind) {
            case PartKind::Vertex:
                scan_vertex_seg(view, q.part, si, seg, best);
                break;
            case PartKind::Subtree: {
                int lo = t.low_post(q.part), hi = t.post(q.part);
                for (int r = lo; r <= hi; ++r)
                    scan_vertex_seg(view, t.by_post(r), si, seg, best);
                break;
            }
            case PartKind::Path:
                scan_path_part_seg(view, q.part_path, si, seg, best);
                break;
        }
        if (best.ans) break;  // earlier segments take precedence
    }
    return best.ans;
}

void check_independent(const DView& view, const QueryBatch& batch) {
    const DfsTree& t = view.tree();
    // Descendant parts as post-rank intervals (subtrees) and points
    // (vertices, path members); disjointness is overlap-freedom.
    struct Span {
        int lo, hi;
        size_t q;
    };
    std::vector<Span> spans;
    spans.reserve(batch.queries.size() * 2);
    for (size_t i = 0; i < batch.queries.size(); ++i) {
        const EdgeQuery& q = batch.queries[i];
        switch (q.kind) {
            case PartKind::Vertex:
                spans.push_back({t.post(q.part), t.post(q.part), i});
                break;
            case PartKind::Subtree:
                spans.push_back({t.low_post(q.part), t.post(q.part), i});
                break;
            case PartKind::Path:
                for (VertexId v : t.path_vertices(q.part_path))
                    spans.push_back({t.post(v), t.post(v), i});
                break;
        }
    }
    std::sort(spans.begin(), spans.end(),
              [](const Span& a, const Span& b) { return a.lo < b.lo; });
    for (size_t k = 1; k < spans.size(); ++k) {
        if (spans[k].lo <= spans[k - 1].hi && spans[k].q != spans[k - 1].q)
            throw PreconditionError(
                "independence violation: queries " + std::to_string(spans[k - 1].q) + " and " +
                std::to_string(spans[k].q) + " share descendant vertices");
        if (spans[k].hi < spans[k - 1].hi) spans[k].hi = spans[k - 1].hi;  // keep max for chains
    }
}

std::vector<QueryAnswer> QueryBackend::run_batch(const DView& view, const QueryBatch& batch) {
    check_independent(view, batch);
    ++counters_.query_batches;
    counters_.queries += long(batch.queries.size());
    return run_impl(view, batch);
}

std::vector<QueryAnswer> InMemoryBackend::run_impl(const DView& view, const QueryBatch& batch) {
    std::vector<QueryAnswer> out;
    out.reserve(batch.queries.size());
    for (const EdgeQuery& q : batch.queries) out.push_back(query_one(view, q));
    return out;
}

std::vector<QueryAnswer> StreamBackend::run_impl(const DView& view, const QueryBatch& batch) {
    const DfsTree& t = view.tree();
    for (const EdgeQuery& q : batch.queries) check_well_formed(view, q);

    // Ownership index over descendant parts: vertex/path members directly,
    // subtrees as disjoint post-rank intervals.
    std::unordered_map<VertexId, size_t> point_owner;
    struct Interval {
        int lo, hi;
        size_t q;
    };
    std::vector<Interval> intervals;
    for (size_t i = 0; i < batch.queries.size(); ++i) {
        const EdgeQuery& q = batch.queries[i];
        if (q.kind == PartKind::Vertex) {
            point_owner.emplace(q.part, i);
        } else if (q.kind == PartKind::Subtree) {
            intervals.push_back({t.low_post(q.part), t.post(q.part), i});
        } else {
            for (VertexId v : t.path_vertices(q.part_path)) point_owner.emplace(v, i);
        }
    }
    std::sort(intervals.begin(), intervals.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });

    auto owner_of = [&](VertexId a) -> std::optional<size_t> {
        if (auto it = point_owner.find(a); it != point_owner.end()) return it->second;
        if (!t.in_tree(a)) return std::nullopt;
        int p = t.post(a);
        auto it = std::upper_bound(intervals.begin(), intervals.end(), p,
                                   [](int x, const Interval& iv) { return x < iv.lo; });
        if (it != intervals.begin()) {
            --it;
            if (p <= it->hi) return it->q;
        }
        return std::nullopt;
    };

    std::vector<Best> best(batch.queries.size());
    auto consider = [&](VertexId a, VertexId b) {
        auto owner = owner_of(a);
        if (!owner) return;
        const EdgeQuery& q = batch.queries[*owner];
        if (!t.in_tree(b) || !direction_ok(t, q.kind, a, b)) return;
        for (int si = 0; si < int(q.target.segs.size()); ++si) {
            const TargetSeg& seg = q.target.segs[si];
            if (!t.on_path(b, seg.path)) continue;
            best[*owner].offer(t, QueryHit{a, b, si, seg_dist(t, seg, b)});
            break;  // segments are vertex-disjoint parts of one walk
        }
    };

    // The single pass over the edge stream.
    ++counters_.passes;
    if (view.g) {
        for (VertexId u : view.g->live_vertices()) {
            for (VertexId v : view.g->neighbors(u)) {
                if (v <= u) continue;
                consider(u, v);
                consider(v, u);
            }
        }
    } else {
        for (const Edge& e : view.scan_edges()) {
            consider(e.u, e.v);
            consider(e.v, e.u);
        }
    }

    std::vector<QueryAnswer> out;
    out.reserve(batch.queries.size());
    for (auto& b : best) out.push_back(b.ans);
    return out;
}

std::unique_ptr<QueryBackend> make_backend(bool streaming) {
    if (streaming) return std::make_unique<StreamBackend>();
    return std::make_unique<InMemoryBackend>();
}

}  // namespace dyndfs
