#include "dyndfs/dfs_tree.hpp"

#include <algorithm>
#include <string>

namespace dyndfs {

void DfsTree::ensure_capacity(VertexId max_id) {
    size_t need = size_t(max_id) + 1;
    if (parent_.size() < need) {
        parent_.resize(need, kNoVertex);
        children_.resize(need);
        post_.resize(need, 0);
        low_.resize(need, 0);
        level_.resize(need, 0);
        size_.resize(need, 0);
        first_seen_.resize(need, -1);
    }
}

DfsTree DfsTree::static_dfs(const DynamicGraph& g, VertexId root) {
    if (!g.is_live(root)) throw PreconditionError("static_dfs: root not live");
    DfsTree t;
    t.root_ = root;
    t.ensure_capacity(g.max_id());
    std::vector<char> visited(size_t(g.max_id()) + 1, 0);
    // Explicit stack of (vertex, neighbor iterator) to avoid deep recursion.
    struct Frame {
        VertexId v;
        std::set<VertexId>::const_iterator it, end;
    };
    std::vector<Frame> stack;
    visited[root] = 1;
    t.parent_[root] = root;
    stack.push_back({root, g.neighbors(root).begin(), g.neighbors(root).end()});
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.it == f.end) {
            stack.pop_back();
            continue;
        }
        VertexId w = *f.it++;
        if (visited[w]) continue;
        visited[w] = 1;
        t.parent_[w] = f.v;
        t.children_[f.v].push_back(w);
        stack.push_back({w, g.neighbors(w).begin(), g.neighbors(w).end()});
    }
    t.rebuild_indices(g.live_count());
    return t;
}

void DfsTree::rebuild_indices(int live_count) {
    count_ = live_count;
    std::fill(post_.begin(), post_.end(), 0);
    order_.assign(size_t(live_count) + 1, kNoVertex);
    euler_.clear();
    euler_.reserve(size_t(live_count) * 2);
    std::fill(first_seen_.begin(), first_seen_.end(), -1);

    int next_post = 0;
    int seen = 0;
    // Iterative DFS over children lists; child order defines post order.
    struct Frame {
        VertexId v;
        size_t idx;
    };
    std::vector<Frame> stack;
    level_[root_] = 0;
    stack.push_back({root_, 0});
    first_seen_[root_] = int(euler_.size());
    euler_.push_back(root_);
    ++seen;
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.idx < children_[f.v].size()) {
            VertexId c = children_[f.v][f.idx++];
            if (first_seen_[c] != -1)
                throw InternalError("rebuild_indices: cycle through vertex " + std::to_string(c));
            level_[c] = level_[f.v] + 1;
            first_seen_[c] = int(euler_.size());
            euler_.push_back(c);
            ++seen;
            stack.push_back({c, 0});
        } else {
            post_[f.v] = ++next_post;
            order_[next_post] = f.v;
            size_[f.v] = 1;
            low_[f.v] = post_[f.v];
            for (VertexId c : children_[f.v]) {
                size_[f.v] += size_[c];
                low_[f.v] = std::min(low_[f.v], low_[c]);
            }
            stack.pop_back();
            if (!stack.empty()) euler_.push_back(stack.back().v);
        }
    }
    if (seen != live_count)
        throw InternalError("rebuild_indices: tree covers " + std::to_string(seen) +
                            " of " + std::to_string(live_count) + " live vertices");

    // Sparse table of argmin-level positions over the Euler tour.
    int sz = int(euler_.size());
    log2_.assign(size_t(sz) + 1, 0);
    for (int i = 2; i <= sz; ++i) log2_[i] = log2_[i / 2] + 1;
    int levels = log2_[sz] + 1;
    table_.assign(levels, std::vector<int>(sz));
    for (int i = 0; i < sz; ++i) table_[0][i] = i;
    for (int k = 1; k < levels; ++k) {
        int span = 1 << k;
        for (int i = 0; i + span <= sz; ++i) {
            int a = table_[k - 1][i], b = table_[k - 1][i + span / 2];
            table_[k][i] = level_[euler_[a]] <= level_[euler_[b]] ? a : b;
        }
    }
}

VertexId DfsTree::lca(VertexId x, VertexId y) const {
    int a = first_seen_[x], b = first_seen_[y];
    if (a > b) std::swap(a, b);
    int k = log2_[b - a + 1];
    int p = table_[k][a], q = table_[k][b - (1 << k) + 1];
    return level_[euler_[p]] <= level_[euler_[q]] ? euler_[p] : euler_[q];
}

bool DfsTree::on_path(VertexId x, const TreePath& p) const {
    if (p.empty()) return false;
    return is_ancestor(p.top, x) && is_ancestor(x, p.bottom);
}

VertexId DfsTree::child_containing(VertexId y, VertexId x) const {
    if (x == y || !is_ancestor(y, x)) return kNoVertex;
    // Children intervals are disjoint and ordered by post rank.
    const auto& cs = children_[y];
    int lo = 0, hi = int(cs.size()) - 1;
    while (lo <= hi) {
        int mid = (lo + hi) / 2;
        VertexId c = cs[mid];
        if (post_[x] < low_[c])
            hi = mid - 1;
        else if (post_[x] > post_[c])
            lo = mid + 1;
        else
            return c;
    }
    throw InternalError("child_containing: interval bookkeeping is inconsistent");
}

std::vector<VertexId> DfsTree::subtrees_hanging_from(const TreePath& p) const {
    validate_path(p, "subtrees_hanging_from");
    std::vector<VertexId> roots;
    VertexId v = p.top;
    while (true) {
        VertexId next = v == p.bottom ? kNoVertex : child_containing(v, p.bottom);
        for (VertexId c : children_[v])
            if (c != next) roots.push_back(c);
        if (v == p.bottom) break;
        v = next;
    }
    return roots;
}

int DfsTree::path_length(const TreePath& p) const {
    if (p.empty()) return 0;
    return level_[p.bottom] - level_[p.top] + 1;
}

VertexId DfsTree::farther_end(const TreePath& p, VertexId from) const {
    validate_path(p, "farther_end");
    if (!on_path(from, p)) throw PreconditionError("farther_end: vertex not on path");
    int up = level_[from] - level_[p.top];
    int down = level_[p.bottom] - level_[from];
    return up >= down ? p.top : p.bottom;
}

TreePath DfsTree::make_path(VertexId a, VertexId b) const {
    if (is_ancestor(a, b)) return TreePath{a, b};
    if (is_ancestor(b, a)) return TreePath{b, a};
    throw PreconditionError("make_path: endpoints are not ancestor-related");
}

void DfsTree::validate_path(const TreePath& p, const char* what) const {
    if (p.empty()) throw PreconditionError(std::string(what) + ": empty path");
    if (!in_tree(p.top) || !in_tree(p.bottom) || !is_ancestor(p.top, p.bottom))
        throw PreconditionError(std::string(what) + ": not an ancestor-descendant path");
}

std::vector<VertexId> DfsTree::path_vertices(const TreePath& p) const {
    if (p.empty()) return {};
    std::vector<VertexId> out;
    for (VertexId v = p.bottom;; v = parent_[v]) {
        out.push_back(v);
        if (v == p.top) break;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

}  // namespace dyndfs
