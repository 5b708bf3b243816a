#include "dyndfs/engine.hpp"

#include <algorithm>
#include <chrono>

#include "dyndfs/oracles.hpp"

namespace dyndfs {

Engine::Engine(DynamicGraph g, EngineOptions opt)
    : g_(std::move(g)), backend_(make_backend(opt.streaming)), opt_(std::move(opt)) {
    t_ = DfsTree::static_dfs(g_, kPseudoRoot);
    d_ = StructureD::build(t_, g_);
}

const BackendCounters& Engine::counters() const { return backend_->counters(); }

void Engine::rebuild() {
    t_.rebuild_indices(g_.live_count());
    d_ = StructureD::build(t_, g_);
}

UpdateMetrics Engine::apply_update(const Update& u) {
    auto t0 = std::chrono::steady_clock::now();
    UpdateMetrics metrics;
    long passes0 = backend_->counters().passes;

    // Validate and mutate the graph; the view replays the delta over the
    // pre-update structure so both backends see the post-update edge set.
    DView view;
    view.t = &t_;
    view.d = &d_;
    if (opt_.streaming) view.g = &g_;
    switch (u.kind) {
        case Update::Kind::InsertEdge:
            g_.insert_edge(u.u, u.v);
            view.added_edges.push_back(Edge(u.u, u.v));
            break;
        case Update::Kind::DeleteEdge:
            g_.delete_edge(u.u, u.v);
            view.masked_edge = Edge(u.u, u.v);
            break;
        case Update::Kind::DeleteVertex:
            if (u.u == kPseudoRoot) throw PreconditionError("cannot delete the pseudo root");
            g_.delete_vertex(u.u);
            view.masked_vertex = u.u;
            break;
        case Update::Kind::InsertVertex:
            g_.insert_vertex_with_id(u.u, u.neighbors);
            view.added_edges.push_back(Edge(kPseudoRoot, u.u));
            for (VertexId w : u.neighbors) view.added_edges.push_back(Edge(u.u, w));
            break;
    }

    // From here on, failures roll the engine back to the pre-update state.
    DynamicGraph g_snapshot = g_;
    DfsTree t_snapshot = t_;
    try {
        UpdatePlan plan = plan_update(u, view, *backend_);
        metrics.plan_batches = plan.batches;
        metrics.query_batches = plan.batches;

        // All reroots of one update run as one round sequence: their queries
        // are independent (the subtrees are disjoint), so each round is one
        // set of independent queries and, on the stream backend, one pass.
        RerootOptions ropt;
        ropt.instrument = opt_.instrument;
        ropt.trace = opt_.trace;
        std::vector<RerootRun> runs;
        runs.reserve(plan.tasks.size());
        for (const RerootTask& task : plan.tasks) {
            if (opt_.instrument) {
                bool inside = t_.is_ancestor(task.subtree_root, task.new_root);
                bool outside = !t_.is_ancestor(task.subtree_root, task.attach_parent);
                if (!inside || !outside)
                    throw InternalError("reroot task attach edge is not a subtree boundary");
            }
            runs.emplace_back(view, task.subtree_root, task.new_root, ropt);
        }
        for (;;) {
            QueryBatch round;
            for (RerootRun& run : runs)
                if (!run.finished()) run.collect(round);
            if (round.queries.empty()) break;
            auto answers = backend_->run_batch(view, round);
            ++metrics.query_batches;
            for (RerootRun& run : runs)
                if (!run.finished()) run.deliver(answers, 0, answers.size());
        }

        // Splice: detach rerooted subtrees, apply the structural edit, then
        // hang the rebuilt subtrees in task order.
        auto& parent = t_.mutable_parent();
        auto& children = t_.mutable_children();
        auto detach = [&](VertexId child) {
            auto& cs = children[parent[child]];
            cs.erase(std::find(cs.begin(), cs.end(), child));
        };
        for (const RerootTask& task : plan.tasks) detach(task.subtree_root);
        if (u.kind == Update::Kind::DeleteVertex) {
            detach(u.u);
            parent[u.u] = kNoVertex;
            children[u.u].clear();
        } else if (u.kind == Update::Kind::InsertVertex) {
            t_.ensure_capacity(g_.max_id());
            VertexId vj = plan.tasks.empty() ? kNoVertex : plan.tasks.front().attach_parent;
            // Recompute the chosen parent: smallest post rank among the
            // neighbors and the pseudo root (matches plan_update).
            VertexId choice = t_.root();
            for (VertexId w : u.neighbors)
                if (t_.post(w) < t_.post(choice)) choice = w;
            (void)vj;
            t_.mutable_parent()[u.u] = choice;
            t_.mutable_children()[choice].push_back(u.u);
        }
        size_t ti = 0;
        for (RerootRun& run : runs) {
            PartialTree& pt = run.result();
            const RerootTask& task = plan.tasks[ti++];
            metrics.reroots.push_back(run.stats());
            parent[pt.new_root] = task.attach_parent;
            children[task.attach_parent].push_back(pt.new_root);
            children[pt.new_root].clear();
            for (const auto& [child, par] : pt.assignments) children[child].clear();
            for (const auto& [child, par] : pt.assignments) {
                parent[child] = par;
                children[par].push_back(child);
            }
        }
        rebuild();
    } catch (...) {
        g_ = std::move(g_snapshot);
        t_ = std::move(t_snapshot);
        throw;
    }

    for (const RerootStats& rs : metrics.reroots) {
        metrics.phases = std::max(metrics.phases, rs.phases);
        metrics.stages = std::max(metrics.stages, rs.max_stage);
    }
    metrics.passes = backend_->counters().passes - passes0;
    if (opt_.verify) {
        metrics.verified = true;
        metrics.valid = oracle_validity(g_, t_);
    }
    metrics.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
    return metrics;
}

}  // namespace dyndfs
