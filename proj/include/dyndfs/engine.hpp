#pragma once

#include <functional>
#include <memory>

#include "dyndfs/dfs_tree.hpp"
#include "dyndfs/graph.hpp"
#include "dyndfs/metrics.hpp"
#include "dyndfs/reduction.hpp"
#include "dyndfs/rerooter.hpp"
#include "dyndfs/structure_d.hpp"

namespace dyndfs {

struct EngineOptions {
    bool streaming = false;   // query backend: pass-counting stream vs in-memory
    bool verify = false;      // oracle_validity after every update
    bool instrument = false;  // per-batch invariant checks in the rerooter
    std::function<void(const TraceRecord&)> trace;
};

// The dynamic DFS engine: holds the graph, the current tree, and the query
// structure; applies updates by the reduction-to-rerooting discipline and
// rebuilds indices and the structure after each committed update. Updates
// are rejected atomically: on any error the previous state is restored.
class Engine {
  public:
    explicit Engine(DynamicGraph g, EngineOptions opt = {});

    UpdateMetrics apply_update(const Update& u);

    const DynamicGraph& graph() const { return g_; }
    const DfsTree& tree() const { return t_; }
    const StructureD& structure() const { return d_; }
    const BackendCounters& counters() const;
    const EngineOptions& options() const { return opt_; }

  private:
    void rebuild();

    DynamicGraph g_;
    DfsTree t_;
    StructureD d_;
    std::unique_ptr<QueryBackend> backend_;
    EngineOptions opt_;
};

}  // namespace dyndfs
