#include "dyndfs/rerooter.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace dyndfs {

namespace {

std::string hit_str(const QueryAnswer& a) {
    if (!a) return "none";
    std::ostringstream os;
    os << "(" << a->part_end << "," << a->target_end << ")@seg" << a->seg << "+" << a->dist;
    return os.str();
}

// Per-vertex census over a subtree's post-order slice, with prefix counts for
// O(1) "does this subtree have a hit" tests.
struct SliceCensus {
    int base = 0;
    std::vector<QueryAnswer> ans;
    std::vector<int> cnt;

    void init(const DfsTree& t, VertexId tau) {
        base = t.low_post(tau);
        ans.assign(size_t(t.post(tau) - base + 1), std::nullopt);
    }
    void set(const DfsTree& t, VertexId v, QueryAnswer a) { ans[t.post(v) - base] = std::move(a); }
    void seal() {
        cnt.assign(ans.size() + 1, 0);
        for (size_t k = 0; k < ans.size(); ++k) cnt[k + 1] = cnt[k] + (ans[k] ? 1 : 0);
    }
    bool any(const DfsTree& t, VertexId w) const {
        return cnt[t.post(w) - base + 1] > cnt[t.low_post(w) - base];
    }
};

bool strictly_better_pos(const QueryHit& a, const QueryHit& b) {
    return a.seg != b.seg ? a.seg < b.seg : a.dist < b.dist;
}

}  // namespace

std::string HeavyContext::describe() const {
    std::ostringstream os;
    os << "heavy{tau=" << tau << " v_H=" << v_h << " v_l=" << v_l << " v_L=" << v_big
       << " w*=" << w_star << " v_P=" << v_p << " v_R=" << v_r << " tau_p=" << tau_p
       << " tau_d=" << tau_d << " tau'=" << tau_prime << " x1y1=" << hit_str(x1y1)
       << " xdyd=" << hit_str(xdyd) << " xpyp=" << hit_str(xpyp) << " x2y2=" << hit_str(x2y2)
       << " x2y2'=" << hit_str(x2y2_alt) << " xryr=" << hit_str(xryr)
       << " x3y3=" << hit_str(x3y3) << "}";
    return os.str();
}

struct RerootRun::Impl {
    const DView& view;
    const DfsTree& t;
    VertexId r0, r_star;
    int n0, imax, jlast;
    RerootOptions opt;

    PartialTree out;
    RerootStats stats;
    long next_comp_id = 1;

    struct Emit {
        Component comp;
        VertexId attach = kNoVertex;  // parent of comp.entry in T*
    };
    struct Commit {
        std::vector<std::vector<VertexId>> walks;
        std::vector<VertexId> walk_attach;  // parent of walks[k][0] for k > 0
        std::vector<Emit> emits;
        std::string kind;
    };
    struct Machine {
        Component comp;
        std::vector<std::vector<QueryAnswer>> answered;
        std::vector<EdgeQuery> wanted;
        int ask_seq = 0;
        bool suspended = false;
        bool done = false;
        int rounds_used = 0;
        Commit commit;
        HeavyContext hc;
    };

    std::map<std::pair<int, int>, std::vector<Component>> buckets;
    std::vector<Machine> wave;
    int cur_i = 1, cur_j = 1;
    struct Slice {
        size_t machine, offset, len;
    };
    std::vector<Slice> pending;

    std::vector<int> stamp;
    int epoch = 0;

    Impl(const DView& v, VertexId root0, VertexId root_star, RerootOptions o)
        : view(v), t(v.tree()), r0(root0), r_star(root_star), opt(std::move(o)) {
        if (!t.is_ancestor(r0, r_star))
            throw PreconditionError("reroot: new root is not inside the subtree");
        n0 = t.size(r0);
        imax = ceil_log2(n0);
        jlast = imax + 1;
        stats.n0 = n0;
        out.subtree_root = r0;
        out.new_root = r_star;
        stamp.assign(size_t(t.capacity()), 0);
        Component c0;
        c0.entry = r_star;
        c0.trees = {r0};
        c0.id = next_comp_id++;
        emit_component(std::move(c0), kNoVertex, 1, 1, 0);
    }

    // ---- small tree helpers -------------------------------------------------

    bool heavy_at(VertexId w, int i) const { return (long long)t.size(w) << i > n0; }
    bool path_fits(int len, int j) const { return (long long)len << j <= n0; }

    int max_tree_size(const Component& c) const {
        int m = 0;
        for (VertexId w : c.trees) m = std::max(m, t.size(w));
        return m;
    }

    int component_size(const Component& c) const {
        int s = t.path_length(c.path);
        for (VertexId w : c.trees) s += t.size(w);
        return s;
    }

    VertexId owner_tree(const Component& c, VertexId v) const {
        for (VertexId w : c.trees)
            if (t.is_ancestor(w, v)) return w;
        return kNoVertex;
    }

    VertexId find_vh(VertexId tau, int i) const {
        VertexId v = tau;
        for (;;) {
            VertexId next = kNoVertex;
            for (VertexId c : t.children(v)) {
                if (!heavy_at(c, i)) continue;
                if (next != kNoVertex)
                    throw InternalError("find_vh: two heavy children under " + std::to_string(v));
                next = c;
            }
            if (next == kNoVertex) return v;
            v = next;
        }
    }

    std::vector<VertexId> walk_between(VertexId a, VertexId b) const {
        VertexId l = t.lca(a, b);
        std::vector<VertexId> up;
        for (VertexId v = a; v != l; v = t.parent(v)) up.push_back(v);
        up.push_back(l);
        std::vector<VertexId> down = t.path_vertices(TreePath{l, b});
        up.insert(up.end(), down.begin() + 1, down.end());
        return up;
    }

    std::vector<VertexId> chain_up(VertexId from, VertexId to) const {
        // from (descendant) climbing to `to` inclusive.
        std::vector<VertexId> v = t.path_vertices(TreePath{to, from});
        std::reverse(v.begin(), v.end());
        return v;
    }

    int fresh_epoch() { return ++epoch; }
    void mark(VertexId v) { stamp[v] = epoch; }
    bool marked(VertexId v) const { return stamp[v] == epoch; }

    std::vector<VertexId> pieces_of_walks(const std::vector<const std::vector<VertexId>*>& walks);

    // Splits appended walks into maximal monotone tree runs. Jumps (back-edge
    // hops) and direction turns start a new run; each run's near end is its
    // last-appended vertex, and precedence is reverse append order (deepest
    // part of T* first).
    static QueryTarget target_of_walks(const DfsTree& t,
                                       const std::vector<const std::vector<VertexId>*>& walks) {
        std::vector<TargetSeg> segs;  // in append order
        for (auto* wp : walks) {
            const auto& w = *wp;
            if (w.empty()) continue;
            size_t start = 0;
            int dir = 0;  // 0 unset, +1 down, -1 up
            auto close = [&](size_t end) {
                VertexId first = w[start], last = w[end];
                TreePath p = dir > 0 ? TreePath{first, last}
                                     : (dir < 0 ? TreePath{last, first} : TreePath{first, first});
                segs.push_back(TargetSeg{p, last});
            };
            for (size_t k = 1; k < w.size(); ++k) {
                int d = t.parent(w[k]) == w[k - 1] ? +1 : (t.parent(w[k - 1]) == w[k] ? -1 : 0);
                if (d != 0 && (dir == 0 || d == dir)) {
                    dir = d;
                    continue;
                }
                close(k - 1);
                start = k;
                dir = 0;
            }
            close(w.size() - 1);
        }
        QueryTarget tg;
        tg.segs.assign(segs.rbegin(), segs.rend());
        return tg;
    }

    // ---- ask/replay plumbing ------------------------------------------------

    const std::vector<QueryAnswer>* ask(Machine& m, std::vector<EdgeQuery> qs) {
        size_t idx = size_t(m.ask_seq++);
        if (idx < m.answered.size()) return &m.answered[idx];
        m.wanted = std::move(qs);
        m.suspended = true;
        return nullptr;
    }

    struct Best {
        QueryAnswer ans;
        int src = -1;
        void offer(const DfsTree& t, const QueryAnswer& a, int s) {
            if (!a) return;
            if (!ans || a->better_than(*ans, t)) {
                ans = a;
                src = s;
            }
        }
    };

    // ---- emission -----------------------------------------------------------

    void emit_component(Component c, VertexId attach, int i, int j, int src_i) {
        if (c.trees.empty() && c.path.empty()) return;
        if (c.entry == kNoVertex) throw InternalError("emit: component without entry");
        if (attach != kNoVertex) out.assignments.emplace_back(c.entry, attach);
        int total = component_size(c);
        if (total == 1) return;  // fully appended by the attach assignment
        if (c.id == 0) c.id = next_comp_id++;

        int src_j = j;
        bool advanced = false;
        while (i < imax && (long long)max_tree_size(c) << i <= (long long)n0) {
            ++i;
            advanced = true;
        }
        if (advanced) j = 1;
        while (j < jlast && path_fits(t.path_length(c.path), j)) ++j;
        if (opt.instrument && src_i > 0) {
            // Phase/stage exit bounds: whatever leaves phase i has subtrees of
            // at most n0/2^i vertices; whatever leaves stage j has a path of
            // at most n0/2^j vertices.
            if (i > src_i)
                check(((long long)max_tree_size(c) << src_i) <= n0,
                      "phase bound violated at emission");
            if (i == src_i && j > src_j)
                check(path_fits(t.path_length(c.path), src_j),
                      "stage bound violated at emission");
        }
        buckets[{i, j}].push_back(std::move(c));
    }

    void check(bool ok, const std::string& what) const {
        if (!ok) throw InternalError("rerooter invariant: " + what);
    }

    // ---- instrumented component verification --------------------------------

    template <typename Fn>
    void for_view_neighbors(VertexId v, Fn&& fn) const {
        if (view.d) {
            for (const auto& [rank, w] : view.d->sorted_neighbors(v))
                if (!view.edge_masked(v, w)) fn(w);
            for (const Edge& e : view.added_edges) {
                if (e.u == v) fn(e.v);
                else if (e.v == v) fn(e.u);
            }
        } else if (view.g) {
            for (VertexId w : view.g->neighbors(v)) fn(w);
        }
    }

    void verify_component(const Component& c, const QueryTarget& target) {
        // Structural C1/C2 invariants, checked against the live edge set.
        check(c.entry != kNoVertex && on_component(c, c.entry), "r_c outside component");
        if (!c.path.empty()) t.validate_path(c.path, "component path");
        fresh_epoch();
        for (VertexId w : c.trees)
            for (int r = t.low_post(w); r <= t.post(w); ++r) mark(t.by_post(r));
        for (VertexId w : c.trees) {
            bool touches_path = c.path.empty();
            for (int r = t.low_post(w); r <= t.post(w); ++r) {
                VertexId a = t.by_post(r);
                for_view_neighbors(a, [&](VertexId b) {
                    if (!c.path.empty() && t.on_path(b, c.path)) touches_path = true;
                    if (marked(b) && !t.is_ancestor(w, b))
                        check(false, "edge between distinct component subtrees");
                });
            }
            check(touches_path, "C2 subtree without an edge to p_c");
        }
        (void)target;
    }

    bool on_component(const Component& c, VertexId v) const {
        if (!c.path.empty() && t.on_path(v, c.path)) return true;
        return owner_tree(c, v) != kNoVertex;
    }

    // Recomputes the lowest edge from the component onto the target and
    // compares with the chosen entry; the Components Property discipline.
    void verify_root(const Component& c, const QueryTarget& target, VertexId attach) {
        Best ref;
        auto consider = [&](VertexId a) {
            for_view_neighbors(a, [&](VertexId b) {
                if (!t.in_tree(b)) return;
                for (int si = 0; si < int(target.segs.size()); ++si) {
                    if (!t.on_path(b, target.segs[si].path)) continue;
                    ref.offer(t,
                              QueryHit{a, b, si,
                                       std::abs(t.level(b) - t.level(target.segs[si].near))},
                              0);
                    break;
                }
            });
        };
        for (VertexId w : c.trees)
            for (int r = t.low_post(w); r <= t.post(w); ++r) consider(t.by_post(r));
        for (VertexId v : t.path_vertices(c.path)) consider(v);
        check(ref.ans.has_value(), "component has no edge onto the appended path");
        check(ref.ans->part_end == c.entry && ref.ans->target_end == attach,
              "component root is not the lowest edge onto the appended path");
    }

    // ---- successor assembly ---------------------------------------------------

    // Groups residue subtrees around residual paths and finishes the commit.
    // `path_members[k]` lists subtree roots already known to belong to
    // residual_paths[k]; `piece_bits[k]` flags pieces by index.
    struct Residue {
        TreePath path;                   // may be empty (then ignored)
        std::vector<VertexId> members;   // assigned subtrees
        Best root;                       // combined lowest edge for the C2
    };

    void finish_commit(Machine& m, std::vector<std::vector<VertexId>> walks,
                       std::vector<VertexId> walk_attach, std::vector<Residue> residues,
                       const std::vector<VertexId>& c1_pieces,
                       const std::vector<Best>& c1_roots, const QueryTarget& target,
                       const char* kind) {
        m.commit.kind = kind;
        m.commit.walks = std::move(walks);
        m.commit.walk_attach = std::move(walk_attach);
        for (Residue& r : residues) {
            if (r.path.empty() && r.members.empty()) continue;
            check(r.root.ans.has_value(), "residual component has no edge onto the path");
            Component c;
            c.entry = r.root.ans->part_end;
            c.path = r.path;
            c.trees = std::move(r.members);
            m.commit.emits.push_back(Emit{std::move(c), r.root.ans->target_end});
        }
        for (size_t k = 0; k < c1_pieces.size(); ++k) {
            check(c1_roots[k].ans.has_value(), "C1 piece has no edge onto the path");
            Component c;
            c.entry = c1_roots[k].ans->part_end;
            c.trees = {c1_pieces[k]};
            m.commit.emits.push_back(Emit{std::move(c), c1_roots[k].ans->target_end});
        }
        if (opt.instrument) {
            for (const Emit& e : m.commit.emits) {
                verify_component(e.comp, target);
                verify_root(e.comp, target, e.attach);
            }
        }
    }

    // ---- the stage bodies ------------------------------------------------------

    void run_stage(Machine& m);
    void run_disint(Machine& m, VertexId tau);
    void run_path_halving(Machine& m);
    void run_discon(Machine& m, VertexId tau);
    void run_heavy(Machine& m, VertexId tau);
    void run_heavy_fallback(Machine& m, VertexId tau, VertexId vh, const SliceCensus& pc_census);
    void run_heavy_special(Machine& m, VertexId tau, VertexId vh, VertexId vl, VertexId v_big,
                           const SliceCensus& pc_census);

    // ---- driver ----------------------------------------------------------------

    bool collect(QueryBatch& out_batch);
    void deliver(const std::vector<QueryAnswer>& answers, size_t begin, size_t count);
    void apply_commit(Machine& m);
    bool finished() const { return wave.empty() && buckets.empty(); }
};

// ----------------------------------------------------------------------------
// Dispatch: the guard order of the rerooting procedure. Bucket normalization
// already advanced phase/stage indices, so a machine always has real work.
// ----------------------------------------------------------------------------

void RerootRun::Impl::run_stage(Machine& m) {
    const Component& c = m.comp;
    VertexId tau = owner_tree(c, c.entry);
    bool tau_heavy = tau != kNoVertex && heavy_at(tau, cur_i);
    if (c.path.empty() || (tau_heavy && c.entry == tau)) {
        run_disint(m, tau);
        return;
    }
    if (tau != kNoVertex) {
        if (!tau_heavy) {
            run_discon(m, tau);
            return;
        }
        VertexId vh = find_vh(tau, cur_i);
        if (t.is_ancestor(vh, c.entry)) {
            run_discon(m, tau);
            return;
        }
        run_heavy(m, tau);
        return;
    }
    check(t.on_path(c.entry, c.path), "entry neither in a subtree nor on p_c");
    run_path_halving(m);
}

// ----------------------------------------------------------------------------
// Disintegrating traversal: walk path(r_c, v_H); residues regroup around the
// untraversed upper spine (C1 entry) or around p_c (heavy root of a C2).
// ----------------------------------------------------------------------------

void RerootRun::Impl::run_disint(Machine& m, VertexId tau) {
    const Component& c = m.comp;
    check(tau != kNoVertex, "disint: entry outside every subtree");
    VertexId vh = find_vh(tau, cur_i);
    VertexId vl = t.lca(c.entry, vh);
    std::vector<VertexId> walk = walk_between(c.entry, vh);

    TreePath residual;  // untraversed part of path(r_c, root(tau)); empty for C2 entry
    bool c2_entry = !c.path.empty();
    if (!c2_entry && vl != tau) residual = TreePath{tau, t.parent(vl)};

    std::vector<VertexId> pieces = pieces_of_walks({&walk});
    QueryTarget target = target_of_walks(t, {&walk});

    // Which pieces join the residual path's component.
    TreePath group_path = c2_entry ? c.path : residual;
    std::vector<EdgeQuery> cq;
    if (!group_path.empty())
        for (VertexId p : pieces) cq.push_back(EdgeQuery::subtree(p, QueryTarget::single(group_path, group_path.top)));
    const std::vector<QueryAnswer>* census = nullptr;
    if (!cq.empty()) {
        census = ask(m, std::move(cq));
        if (!census) return;
    }

    // Root queries: every piece plus the residual path and, for the C2 entry,
    // p_c itself (other member subtrees cannot reach inside tau).
    std::vector<EdgeQuery> rq;
    for (VertexId p : pieces) rq.push_back(EdgeQuery::subtree(p, target));
    int p_src = -1, pc_src = -1;
    if (!residual.empty()) {
        p_src = int(rq.size());
        rq.push_back(EdgeQuery::path(residual, target));
    }
    if (c2_entry) {
        pc_src = int(rq.size());
        rq.push_back(EdgeQuery::path(c.path, target));
    }
    auto* roots = ask(m, std::move(rq));
    if (!roots) return;

    Residue grp;  // the component around group_path
    grp.path = group_path;
    std::vector<VertexId> c1s;
    std::vector<Best> c1_roots;
    for (size_t k = 0; k < pieces.size(); ++k) {
        check(((long long)t.size(pieces[k]) << cur_i) <= n0,
              "disint piece exceeds the phase bound");
        bool grouped = census && (*census)[k].has_value();
        if (grouped) {
            grp.members.push_back(pieces[k]);
            grp.root.offer(t, (*roots)[k], int(k));
        } else {
            c1s.push_back(pieces[k]);
            c1_roots.emplace_back();
            c1_roots.back().offer(t, (*roots)[k], int(k));
        }
    }
    if (!residual.empty()) {
        for (VertexId s : t.subtrees_hanging_from(residual)) grp.members.push_back(s);
        grp.root.offer(t, (*roots)[p_src], p_src);
    }
    if (c2_entry) {
        for (VertexId w : c.trees)
            if (w != tau) grp.members.push_back(w);
        grp.root.offer(t, (*roots)[pc_src], pc_src);
    }

    std::vector<Residue> residues;
    if (!grp.path.empty() || !grp.members.empty()) residues.push_back(std::move(grp));
    finish_commit(m, {walk}, {kNoVertex}, std::move(residues), c1s, c1_roots, target,
                  "disint");
}

// ----------------------------------------------------------------------------
// Path halving: walk from r_c to the farther end of p_c.
// ----------------------------------------------------------------------------

void RerootRun::Impl::run_path_halving(Machine& m) {
    const Component& c = m.comp;
    VertexId far = t.farther_end(c.path, c.entry);
    std::vector<VertexId> walk;
    TreePath residual;
    if (far == c.path.top) {
        walk = chain_up(c.entry, c.path.top);
        if (c.entry != c.path.bottom)
            residual = TreePath{t.child_containing(c.entry, c.path.bottom), c.path.bottom};
    } else {
        walk = t.path_vertices(TreePath{c.entry, c.path.bottom});
        if (c.entry != c.path.top) residual = TreePath{c.path.top, t.parent(c.entry)};
    }
    QueryTarget target = target_of_walks(t, {&walk});

    std::vector<EdgeQuery> cq;
    if (!residual.empty())
        for (VertexId w : c.trees)
            cq.push_back(EdgeQuery::subtree(w, QueryTarget::single(residual, residual.top)));
    const std::vector<QueryAnswer>* census = nullptr;
    if (!cq.empty()) {
        census = ask(m, std::move(cq));
        if (!census) return;
    }

    std::vector<EdgeQuery> rq;
    for (VertexId w : c.trees) rq.push_back(EdgeQuery::subtree(w, target));
    int p_src = -1;
    if (!residual.empty()) {
        p_src = int(rq.size());
        rq.push_back(EdgeQuery::path(residual, target));
    }
    auto* roots = ask(m, std::move(rq));
    if (!roots) return;

    if (!residual.empty())
        check(t.path_length(residual) <= (t.path_length(c.path) - 1 + 1) / 2,
              "path halving left more than half");

    Residue grp;
    grp.path = residual;
    std::vector<VertexId> c1s;
    std::vector<Best> c1_roots;
    for (size_t k = 0; k < c.trees.size(); ++k) {
        bool grouped = census && (*census)[k].has_value();
        if (grouped) {
            grp.members.push_back(c.trees[k]);
            grp.root.offer(t, (*roots)[k], int(k));
        } else {
            c1s.push_back(c.trees[k]);
            c1_roots.emplace_back();
            c1_roots.back().offer(t, (*roots)[k], int(k));
        }
    }
    if (p_src >= 0) grp.root.offer(t, (*roots)[p_src], p_src);

    std::vector<Residue> residues;
    if (!grp.path.empty() || !grp.members.empty()) residues.push_back(std::move(grp));
    finish_commit(m, {walk}, {kNoVertex}, std::move(residues), c1s, c1_roots, target,
                  "path-halving");
}

// ----------------------------------------------------------------------------
// Disconnecting traversal: leave tau by the attachment that lets the halving
// of p_c cover every edge from tau, so tau's residues detach from p_c.
// ----------------------------------------------------------------------------

void RerootRun::Impl::run_discon(Machine& m, VertexId tau) {
    const Component& c = m.comp;
    int len = t.path_length(c.path);

    auto* hi = ask(m, {EdgeQuery::subtree(tau, QueryTarget::single(c.path, c.path.top))});
    if (!hi) return;
    check((*hi)[0].has_value(), "discon: subtree has no edge to p_c");
    QueryHit entry_edge = *(*hi)[0];
    int hi_pos = t.level(entry_edge.target_end) - t.level(c.path.top) + 1;
    if (2 * hi_pos > len) {
        // No attachment on the upper half: enter at the lowest instead.
        auto* lo = ask(m, {EdgeQuery::subtree(tau, QueryTarget::single(c.path, c.path.bottom))});
        if (!lo) return;
        entry_edge = *(*lo)[0];
    }
    VertexId x = entry_edge.part_end, y = entry_edge.target_end;

    // Walk through tau to x, jump to y, then cover toward the farther end.
    std::vector<VertexId> walk = walk_between(c.entry, x);
    VertexId far = t.farther_end(c.path, y);
    TreePath residual_pc;
    if (far == c.path.top) {
        auto cover = chain_up(y, c.path.top);
        walk.insert(walk.end(), cover.begin(), cover.end());
        if (y != c.path.bottom)
            residual_pc = TreePath{t.child_containing(y, c.path.bottom), c.path.bottom};
    } else {
        auto cover = t.path_vertices(TreePath{y, c.path.bottom});
        walk.insert(walk.end(), cover.begin(), cover.end());
        if (y != c.path.top) residual_pc = TreePath{c.path.top, t.parent(y)};
    }

    VertexId vl = t.lca(c.entry, x);
    TreePath residual_tau;  // untraversed upper spine of tau
    if (vl != tau) residual_tau = TreePath{tau, t.parent(vl)};

    std::vector<VertexId> pieces = pieces_of_walks({&walk});
    std::erase_if(pieces, [&](VertexId p) { return !t.is_ancestor(tau, p); });
    QueryTarget target = target_of_walks(t, {&walk});

    // Assignments: other member subtrees against the residual p_c piece and
    // tau's pieces against tau's residual spine (disjoint sources, one round).
    std::vector<EdgeQuery> cq;
    std::vector<std::pair<int, int>> cq_role;  // (0=member/residual_pc, 1=piece/residual_tau)
    if (!residual_pc.empty())
        for (VertexId w : c.trees)
            if (w != tau) {
                cq_role.emplace_back(0, int(cq.size()));
                cq.push_back(
                    EdgeQuery::subtree(w, QueryTarget::single(residual_pc, residual_pc.top)));
            }
    if (!residual_tau.empty())
        for (VertexId p : pieces) {
            cq_role.emplace_back(1, int(cq.size()));
            cq.push_back(
                EdgeQuery::subtree(p, QueryTarget::single(residual_tau, residual_tau.top)));
        }
    const std::vector<QueryAnswer>* census = nullptr;
    if (!cq.empty()) {
        census = ask(m, std::move(cq));
        if (!census) return;
    }

    std::vector<EdgeQuery> rq;
    for (VertexId p : pieces) rq.push_back(EdgeQuery::subtree(p, target));
    size_t member_base = rq.size();
    std::vector<VertexId> members;
    for (VertexId w : c.trees)
        if (w != tau) members.push_back(w);
    for (VertexId w : members) rq.push_back(EdgeQuery::subtree(w, target));
    int ptau_src = -1, ppc_src = -1;
    if (!residual_tau.empty()) {
        ptau_src = int(rq.size());
        rq.push_back(EdgeQuery::path(residual_tau, target));
    }
    if (!residual_pc.empty()) {
        ppc_src = int(rq.size());
        rq.push_back(EdgeQuery::path(residual_pc, target));
    }
    auto* roots = ask(m, std::move(rq));
    if (!roots) return;

    // Decode census bits.
    fresh_epoch();
    std::vector<char> member_to_pc(members.size(), 0), piece_to_tau(pieces.size(), 0);
    {
        size_t mi = 0, pi = 0;
        for (size_t k = 0; k < cq_role.size(); ++k) {
            bool hit = (*census)[cq_role[k].second].has_value();
            if (cq_role[k].first == 0) member_to_pc[mi++] = hit;
            else piece_to_tau[pi++] = hit;
        }
        // Roles were appended members-first, pieces-second in cq order.
    }

    Residue tau_grp, pc_grp;
    tau_grp.path = residual_tau;
    pc_grp.path = residual_pc;
    std::vector<VertexId> c1s;
    std::vector<Best> c1_roots;
    for (size_t k = 0; k < pieces.size(); ++k) {
        check(((long long)t.size(pieces[k]) << cur_i) <= n0,
              "discon piece exceeds the phase bound");
        if (!residual_tau.empty() && piece_to_tau[k]) {
            tau_grp.members.push_back(pieces[k]);
            tau_grp.root.offer(t, (*roots)[k], int(k));
        } else {
            c1s.push_back(pieces[k]);
            c1_roots.emplace_back();
            c1_roots.back().offer(t, (*roots)[k], int(k));
        }
    }
    for (size_t k = 0; k < members.size(); ++k) {
        if (residual_pc.empty() || !member_to_pc[k]) {
            c1s.push_back(members[k]);
            c1_roots.emplace_back();
            c1_roots.back().offer(t, (*roots)[member_base + k], int(member_base + k));
        } else {
            pc_grp.members.push_back(members[k]);
            pc_grp.root.offer(t, (*roots)[member_base + k], int(member_base + k));
        }
    }
    if (ptau_src >= 0) {
        for (VertexId s : t.subtrees_hanging_from(residual_tau)) {
            if (!marked(s)) tau_grp.members.push_back(s);  // epoch guards duplicates
            mark(s);
        }
        tau_grp.root.offer(t, (*roots)[ptau_src], ptau_src);
    }
    if (ppc_src >= 0) pc_grp.root.offer(t, (*roots)[ppc_src], ppc_src);

    if (opt.instrument && !residual_pc.empty()) {
        // The entry rule must have put every edge from tau onto the covered
        // part of p_c; the residue must be edge-disjoint from the rest of tau.
        fresh_epoch();
        for (VertexId v : walk) mark(v);
        for (int r = t.low_post(tau); r <= t.post(tau); ++r) {
            VertexId v = t.by_post(r);
            if (marked(v)) continue;
            for_view_neighbors(v, [&](VertexId b) {
                check(!t.on_path(b, residual_pc), "discon residue still connected to p_c");
            });
        }
    }

    std::vector<Residue> residues;
    if (!tau_grp.path.empty() || !tau_grp.members.empty()) residues.push_back(std::move(tau_grp));
    if (!pc_grp.path.empty() || !pc_grp.members.empty()) residues.push_back(std::move(pc_grp));
    finish_commit(m, {walk}, {kNoVertex}, std::move(residues), c1s, c1_roots, target,
                  "discon");
}

}  // namespace dyndfs

#include "rerooter_heavy.ipp"

namespace dyndfs {

// ----------------------------------------------------------------------------
// Driver
// ----------------------------------------------------------------------------

bool RerootRun::Impl::collect(QueryBatch& out_batch) {
    pending.clear();
    for (;;) {
        if (wave.empty()) {
            if (buckets.empty()) return false;
            auto it = buckets.begin();
            cur_i = it->first.first;
            cur_j = it->first.second;
            stats.phases = std::max(stats.phases, cur_i);
            stats.max_stage = std::max(stats.max_stage, cur_j);
            wave.reserve(it->second.size());
            for (Component& c : it->second) {
                Machine mm;
                mm.comp = std::move(c);
                wave.push_back(std::move(mm));
            }
            buckets.erase(it);
        }
        bool any_want = false;
        for (size_t mi = 0; mi < wave.size(); ++mi) {
            Machine& m = wave[mi];
            if (m.done) continue;
            m.suspended = false;
            m.ask_seq = 0;
            m.wanted.clear();
            run_stage(m);
            if (m.suspended) {
                any_want = true;
                ++m.rounds_used;
                check(m.rounds_used <= 12, "component exceeded 12 query batches in one stage");
                stats.max_component_stage_batches =
                    std::max(stats.max_component_stage_batches, long(m.rounds_used));
                pending.push_back({mi, out_batch.queries.size(), m.wanted.size()});
                for (EdgeQuery& q : m.wanted) out_batch.queries.push_back(std::move(q));
            } else {
                m.done = true;
                apply_commit(m);
            }
        }
        if (any_want) {
            ++stats.batches;
            return true;
        }
        wave.clear();
    }
}

void RerootRun::Impl::deliver(const std::vector<QueryAnswer>& answers, size_t begin,
                              size_t count) {
    (void)count;
    for (const Slice& s : pending) {
        auto first = answers.begin() + long(begin + s.offset);
        wave[s.machine].answered.emplace_back(first, first + long(s.len));
    }
    pending.clear();
}

void RerootRun::Impl::apply_commit(Machine& m) {
    TraceRecord rec;
    for (size_t k = 0; k < m.commit.walks.size(); ++k) {
        const auto& w = m.commit.walks[k];
        if (w.empty()) continue;
        if (k > 0) out.assignments.emplace_back(w[0], m.commit.walk_attach[k]);
        for (size_t p = 1; p < w.size(); ++p) out.assignments.emplace_back(w[p], w[p - 1]);
        out.segments.push_back({w.front(), w.back(), stats.batches});
        rec.appended.emplace_back(w.front(), w.back());
    }
    for (Emit& e : m.commit.emits) {
        if (opt.trace) {
            std::ostringstream os;
            os << (e.comp.is_c1() ? "C1" : "C2") << "@" << e.comp.entry;
            rec.successors.push_back(os.str());
        }
        emit_component(std::move(e.comp), e.attach, cur_i, cur_j, cur_i);
    }
    if (opt.trace) {
        rec.phase = cur_i;
        rec.stage = cur_j;
        rec.component = m.comp.id;
        rec.kind = m.commit.kind;
        opt.trace(rec);
    }
}

// ----------------------------------------------------------------------------
// Public surface
// ----------------------------------------------------------------------------

RerootRun::RerootRun(const DView& view, VertexId root0, VertexId root_star, RerootOptions opt)
    : impl_(std::make_unique<Impl>(view, root0, root_star, std::move(opt))) {}

RerootRun::~RerootRun() = default;
RerootRun::RerootRun(RerootRun&&) noexcept = default;

bool RerootRun::collect(QueryBatch& out) { return impl_->collect(out); }

void RerootRun::deliver(const std::vector<QueryAnswer>& answers, size_t begin, size_t count) {
    impl_->deliver(answers, begin, count);
}

bool RerootRun::finished() const { return impl_->finished(); }

PartialTree& RerootRun::result() {
    Impl& i = *impl_;
    long bound = i.stats.batch_bound();
    if (i.stats.batches > bound)
        throw InternalError("reroot exceeded its batch budget: " +
                            std::to_string(i.stats.batches) + " > " + std::to_string(bound));
    if (i.out.assignments.size() + 1 != size_t(i.n0))
        throw InternalError("reroot did not append every vertex exactly once");
    return i.out;
}

const RerootStats& RerootRun::stats() const { return impl_->stats; }

PartialTree reroot(const DView& view, QueryBackend& backend, VertexId r0, VertexId r_star,
                   RerootStats* stats, RerootOptions opt) {
    RerootRun run(view, r0, r_star, std::move(opt));
    QueryBatch batch;
    while (run.collect(batch)) {
        auto answers = backend.run_batch(view, batch);
        run.deliver(answers, 0, answers.size());
        batch.queries.clear();
    }
    if (stats) *stats = run.stats();
    return std::move(run.result());
}

}  // namespace dyndfs
