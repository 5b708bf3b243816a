#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dyndfs/dfs_tree.hpp"
#include "dyndfs/metrics.hpp"
#include "dyndfs/structure_d.hpp"
#include "dyndfs/types.hpp"

namespace dyndfs {

// A connected component of the unvisited graph during a reroot. C1 holds a
// single subtree (empty path); C2 holds one ancestor-descendant path plus
// subtrees each having at least one edge to it.
struct Component {
    VertexId entry = kNoVertex;  // r_c: where the traversal enters
    TreePath path;               // p_c, empty for C1
    std::vector<VertexId> trees;
    long id = 0;

    bool is_c1() const { return path.empty(); }
};

// Every symbol of the heavy-subtree traversal and its special case lives
// here, both for the algorithm and for diagnostics when an applicability
// assertion fires.
struct HeavyContext {
    VertexId tau = kNoVertex;     // root of the heavy subtree containing r_c
    VertexId v_h = kNoVertex;     // smallest subtree above the heavy threshold
    VertexId v_l = kNoVertex;     // LCA(r_c, v_h)
    VertexId v_big = kNoVertex;   // v_L: spine subtree containing v_h
    VertexId w_star = kNoVertex;  // LCA(x_p, v_h) on the chain
    VertexId v_p = kNoVertex;     // v_P (kNoVertex when the walk runs through v_h)
    VertexId v_r = kNoVertex;     // v_R
    VertexId tau_p = kNoVertex;   // subtree hanging from the chain containing x_p
    VertexId tau_d = kNoVertex;   // subtree owning (x_d, y_d)
    VertexId tau_prime = kNoVertex;  // cover-traversal subtree
    QueryAnswer x1y1, xdyd, xpyp, x2y2, x2y2_alt, xryr, x3y3;
    QueryAnswer cover_entry, cover_hi, cover_lo, xr_star;

    std::string describe() const;
};

// Rerooted tree of one task: parent assignments in traversal order (the first
// assignment's child is the new root r*, whose parent is recorded as
// kNoVertex) plus the appended segments per batch round for tracing.
struct PartialTree {
    VertexId subtree_root = kNoVertex;  // r0
    VertexId new_root = kNoVertex;      // r*
    std::vector<std::pair<VertexId, VertexId>> assignments;  // (child, parent)

    struct Segment {
        VertexId from, to;
        long round;
    };
    std::vector<Segment> segments;
};

struct TraceRecord {
    int phase = 0, stage = 0;
    long component = 0;
    std::string kind;
    std::vector<std::pair<VertexId, VertexId>> appended;  // segment endpoints
    std::vector<std::string> successors;
};

struct RerootOptions {
    bool instrument = false;
    std::function<void(const TraceRecord&)> trace;
};

// Drives one subtree reroot as a sequence of query rounds so that several
// reroots (and, inside one reroot, all components of a phase/stage) can share
// batches the way the parallel model does. Usage: repeatedly collect() the
// round's queries, answer them through a backend, deliver() the answers.
class RerootRun {
  public:
    RerootRun(const DView& view, VertexId r0, VertexId r_star, RerootOptions opt = {});
    ~RerootRun();
    RerootRun(RerootRun&&) noexcept;

    // Appends this round's queries; returns false once the reroot finished.
    bool collect(QueryBatch& out);
    void deliver(const std::vector<QueryAnswer>& answers, size_t begin, size_t count);
    bool finished() const;

    PartialTree& result();
    const RerootStats& stats() const;

    struct Impl;

  private:
    std::unique_ptr<Impl> impl_;
};

// Convenience wrapper: runs a single reroot to completion on one backend.
PartialTree reroot(const DView& view, QueryBackend& backend, VertexId r0, VertexId r_star,
                   RerootStats* stats = nullptr, RerootOptions opt = {});

}  // namespace dyndfs
