#include "dyndfs/metrics.hpp"

namespace dyndfs {

int ceil_log2(long n) {
    int k = 0;
    while ((1L << k) < n) ++k;
    return k;
}

long RerootStats::batch_bound() const {
    long l = ceil_log2(n0) + 1;
    return 12 * l * l;
}

int RerootStats::phase_bound() const { return ceil_log2(n0); }

int RerootStats::stage_bound() const { return ceil_log2(n0) + 1; }

}  // namespace dyndfs
