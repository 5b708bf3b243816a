#pragma once

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "dyndfs/dfs_tree.hpp"
#include "dyndfs/graph.hpp"
#include "dyndfs/types.hpp"

namespace dyndfs {

// One oriented target segment: an ancestor-descendant path of the snapshot
// tree plus the end "nearest to" which hits are preferred.
struct TargetSeg {
    TreePath path;
    VertexId near = kNoVertex;
};

// Query target. Multi-segment targets model a freshly appended T* path made
// of up to a few tree segments; segs[0] has the highest precedence (it is the
// deepest part of T*), and within a segment hits nearest `near` win.
struct QueryTarget {
    std::vector<TargetSeg> segs;

    static QueryTarget single(TreePath p, VertexId near) { return {{TargetSeg{p, near}}}; }
    bool empty() const { return segs.empty(); }
};

enum class PartKind { Vertex, Subtree, Path };

// The three query forms of the structure: edges from a vertex, a subtree, or
// an ancestor-descendant path, incident on the target, preferring hits
// nearest the target end. For Vertex/Subtree parts only edges landing on
// ancestors of the part vertex count; for Path parts the endpoints must be
// ancestor-related in either direction (the no-cross-edge property makes
// these the only forms that occur).
struct EdgeQuery {
    PartKind kind = PartKind::Vertex;
    VertexId part = kNoVertex;  // Vertex/Subtree
    TreePath part_path;         // Path
    QueryTarget target;

    static EdgeQuery vertex(VertexId w, QueryTarget tg) {
        return {PartKind::Vertex, w, {}, std::move(tg)};
    }
    static EdgeQuery subtree(VertexId w, QueryTarget tg) {
        return {PartKind::Subtree, w, {}, std::move(tg)};
    }
    static EdgeQuery path(TreePath p, QueryTarget tg) {
        return {PartKind::Path, kNoVertex, p, std::move(tg)};
    }
};

struct QueryHit {
    VertexId part_end = kNoVertex;    // endpoint inside the descendant part
    VertexId target_end = kNoVertex;  // landing vertex on the target
    int seg = 0;                      // index into target.segs
    int dist = 0;                     // steps from landing to the segment's near end

    Edge edge() const { return Edge(part_end, target_end); }
    friend bool operator==(const QueryHit&, const QueryHit&) = default;
    // Precedence: earlier segment, then nearest the segment end, then the
    // smallest descendant-side post rank (supplied by the evaluator).
    bool better_than(const QueryHit& o, const DfsTree& t) const {
        if (seg != o.seg) return seg < o.seg;
        if (dist != o.dist) return dist < o.dist;
        return t.post(part_end) < t.post(o.part_end);
    }
};

using QueryAnswer = std::optional<QueryHit>;

struct QueryBatch {
    std::vector<EdgeQuery> queries;
};

// Sorted-neighbor-list structure: for every vertex, its neighbors in
// increasing snapshot post rank. Size is linear in the edge count.
class StructureD {
  public:
    StructureD() = default;
    static StructureD build(const DfsTree& t, const DynamicGraph& g);

    const DfsTree& tree() const { return *t_; }
    const std::vector<std::pair<int, VertexId>>& sorted_neighbors(VertexId v) const {
        return lists_[v];
    }
    size_t total_entries() const { return entries_; }
    bool built() const { return t_ != nullptr; }

  private:
    const DfsTree* t_ = nullptr;
    std::vector<std::vector<std::pair<int, VertexId>>> lists_;
    size_t entries_ = 0;
};

// What the queries of one update run against: the pre-update snapshot plus
// the update's own adjacency delta, so both backends observe the post-update
// edge set under pre-update post ranks.
struct DView {
    const DfsTree* t = nullptr;       // snapshot tree (membership, post ranks)
    const StructureD* d = nullptr;    // in-memory backend
    const DynamicGraph* g = nullptr;  // post-update graph (streaming backend)
    std::optional<Edge> masked_edge;
    VertexId masked_vertex = kNoVertex;
    std::vector<Edge> added_edges;

    const DfsTree& tree() const { return *t; }
    bool edge_masked(VertexId a, VertexId b) const {
        if (masked_vertex != kNoVertex && (a == masked_vertex || b == masked_vertex)) return true;
        return masked_edge && *masked_edge == Edge(a, b);
    }
    // Post-update edge set reconstructed for brute-force scans.
    std::vector<Edge> scan_edges() const;
};

struct BackendCounters {
    long query_batches = 0;
    long queries = 0;
    long passes = 0;  // streaming only

    void reset() { *this = BackendCounters{}; }
};

// Answers one well-formed query against the view (in-memory evaluation).
QueryAnswer query_one(const DView& view, const EdgeQuery& q);

class QueryBackend {
  public:
    virtual ~QueryBackend() = default;

    // Answers positionally aligned with the batch. Checks independence:
    // overlapping descendant parts are an error naming the offending pair.
    std::vector<QueryAnswer> run_batch(const DView& view, const QueryBatch& batch);

    BackendCounters& counters() { return counters_; }

  protected:
    virtual std::vector<QueryAnswer> run_impl(const DView& view, const QueryBatch& batch) = 0;
    BackendCounters counters_;
};

// Delegates to query_one per query.
class InMemoryBackend final : public QueryBackend {
  protected:
    std::vector<QueryAnswer> run_impl(const DView& view, const QueryBatch& batch) override;
};

// Answers every query of a batch in one linear scan over the graph's edges,
// keeping one best-so-far hit per query; one pass per batch.
class StreamBackend final : public QueryBackend {
  protected:
    std::vector<QueryAnswer> run_impl(const DView& view, const QueryBatch& batch) override;
};

std::unique_ptr<QueryBackend> make_backend(bool streaming);

void check_well_formed(const DView& view, const EdgeQuery& q);
void check_independent(const DView& view, const QueryBatch& batch);

}  // namespace dyndfs
