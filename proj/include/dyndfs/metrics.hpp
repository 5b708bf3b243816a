#pragma once

#include <vector>

namespace dyndfs {

// Complexity accounting for one subtree reroot of n0 vertices. Batches count
// merged rounds: queries issued by components of the same phase/stage run as
// one set of independent queries, as the parallel model executes them.
struct RerootStats {
    int n0 = 0;
    int phases = 0;             // highest phase index processed
    int max_stage = 0;          // highest stage index processed in any phase
    long batches = 0;           // rounds in which this reroot issued queries
    long max_component_stage_batches = 0;  // per-component per-stage maximum

    long batch_bound() const;   // 12 * (ceil(log2 n0) + 1)^2
    int phase_bound() const;    // ceil(log2 n0)
    int stage_bound() const;    // ceil(log2 n0) + 1
};

struct UpdateMetrics {
    long query_batches = 0;  // rounds over the whole update, planning included
    long passes = 0;         // streaming backend only
    int phases = 0;          // max over this update's reroots
    int stages = 0;          // max over this update's reroots
    bool valid = true;       // oracle verdict when verification ran
    bool verified = false;
    double wall_ms = 0.0;
    long plan_batches = 0;
    std::vector<RerootStats> reroots;
};

int ceil_log2(long n);

}  // namespace dyndfs
