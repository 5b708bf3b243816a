// Heavy subtree traversal: scenarios 1-3 and the special case. Included by
// rerooter.cpp; operates on RerootRun::Impl.

namespace dyndfs {

// Collects the subtree roots hanging off the walks whose subtrees contain no
// walked vertex; residues inside partially walked subtrees surface through
// the deeper walk vertices instead.
std::vector<VertexId> RerootRun::Impl::pieces_of_walks(
    const std::vector<const std::vector<VertexId>*>& walks) {
    fresh_epoch();
    std::vector<int> posts;
    for (auto* w : walks)
        for (VertexId v : *w) {
            mark(v);
            posts.push_back(t.post(v));
        }
    std::sort(posts.begin(), posts.end());
    std::vector<VertexId> roots;
    for (auto* w : walks)
        for (VertexId v : *w)
            for (VertexId c : t.children(v)) {
                if (marked(c)) continue;
                auto it = std::lower_bound(posts.begin(), posts.end(), t.low_post(c));
                if (it != posts.end() && *it <= t.post(c)) continue;  // partially walked
                roots.push_back(c);
            }
    return roots;
}

void RerootRun::Impl::run_heavy(Machine& m, VertexId tau) {
    const Component& c = m.comp;
    HeavyContext& hc = m.hc;
    hc.tau = tau;
    VertexId rp = tau;  // r' = root(tau)
    VertexId vh = find_vh(tau, cur_i);
    VertexId vl = t.lca(c.entry, vh);
    hc.v_h = vh;
    hc.v_l = vl;
    TreePath spine{rp, c.entry};
    VertexId v_big = t.child_containing(vl, vh);  // v_L
    hc.v_big = v_big;
    TreePath chain{v_big, vh};

    // Round 1: connectivity of every tau vertex to p_c.
    SliceCensus pc_census;
    pc_census.init(t, tau);
    {
        std::vector<EdgeQuery> qs;
        QueryTarget tg = QueryTarget::single(c.path, c.path.top);
        for (int r = t.low_post(tau); r <= t.post(tau); ++r)
            qs.push_back(EdgeQuery::vertex(t.by_post(r), tg));
        auto* a = ask(m, std::move(qs));
        if (!a) return;
        for (int r = t.low_post(tau); r <= t.post(tau); ++r)
            pc_census.set(t, t.by_post(r), (*a)[size_t(r - t.low_post(tau))]);
        pc_census.seal();
    }

    // Round 2: every non-spine tau vertex, and p_c, against the spine nearest
    // the root end: all candidate edges plus scenario-1 roots in one set.
    SliceCensus spine_census;
    spine_census.init(t, tau);
    QueryAnswer pc_on_spine;
    {
        fresh_epoch();
        for (VertexId v : t.path_vertices(spine)) mark(v);
        std::vector<EdgeQuery> qs;
        std::vector<VertexId> order;
        QueryTarget tg = QueryTarget::single(spine, rp);
        for (int r = t.low_post(tau); r <= t.post(tau); ++r) {
            VertexId v = t.by_post(r);
            if (marked(v)) continue;
            order.push_back(v);
            qs.push_back(EdgeQuery::vertex(v, tg));
        }
        size_t pc_idx = qs.size();
        qs.push_back(EdgeQuery::path(c.path, tg));
        auto* a = ask(m, std::move(qs));
        if (!a) return;
        for (size_t k = 0; k < order.size(); ++k) spine_census.set(t, order[k], (*a)[k]);
        spine_census.seal();
        pc_on_spine = (*a)[pc_idx];
    }

    std::vector<VertexId> hang_spine = t.subtrees_hanging_from(spine);
    auto subtree_best = [&](const SliceCensus& cs, VertexId w) {
        Best b;
        for (int r = t.low_post(w); r <= t.post(w); ++r) b.offer(t, cs.ans[r - cs.base], 0);
        return b;
    };

    // Scenario 1: traverse the whole spine unless the lowest edge from the
    // p_c component onto it is a back edge from inside T(v_L).
    Best x1;
    for (VertexId s : hang_spine)
        if (pc_census.any(t, s)) x1.offer(t, subtree_best(spine_census, s).ans, 1);
    x1.offer(t, pc_on_spine, 0);
    check(x1.ans.has_value(), "heavy: p_c component has no edge onto the spine");
    hc.x1y1 = x1.ans;
    bool x1_from_pc = x1.src == 0;
    VertexId x1v = x1.ans->part_end;
    if (x1_from_pc || !t.is_ancestor(v_big, x1v) || t.is_ancestor(vh, x1v) || x1v == v_big) {
        std::vector<VertexId> walk = chain_up(c.entry, rp);
        QueryTarget target = target_of_walks(t, {&walk});
        Residue grp;
        grp.path = c.path;
        std::vector<VertexId> c1s;
        std::vector<Best> c1_roots;
        for (VertexId s : hang_spine) {
            if (pc_census.any(t, s)) {
                grp.members.push_back(s);
                grp.root.offer(t, subtree_best(spine_census, s).ans, 0);
            } else {
                c1s.push_back(s);
                c1_roots.push_back(subtree_best(spine_census, s));
            }
        }
        grp.root.offer(t, pc_on_spine, 0);
        for (VertexId w : c.trees)
            if (w != tau) grp.members.push_back(w);
        std::vector<Residue> residues;
        residues.push_back(std::move(grp));
        finish_commit(m, {walk}, {kNoVertex}, std::move(residues), c1s, c1_roots, target,
                      "heavy-l");
        return;
    }

    // (x_d, y_d): highest spine landing from the eligible subtrees hanging
    // off the spine (except T(v_L)) or off the chain path(v_L, v_H).
    std::vector<VertexId> hang_chain = t.subtrees_hanging_from(chain);
    Best xd;
    VertexId tau_d = kNoVertex;
    auto offer_xd = [&](VertexId s) {
        if (!pc_census.any(t, s)) return;
        Best b = subtree_best(spine_census, s);
        if (b.ans && (!xd.ans || b.ans->better_than(*xd.ans, t))) {
            xd.ans = b.ans;
            tau_d = s;
        }
    };
    for (VertexId s : hang_spine)
        if (s != v_big) offer_xd(s);
    for (VertexId s : hang_chain) offer_xd(s);
    hc.xdyd = xd.ans;
    hc.tau_d = xd.ans ? tau_d : kNoVertex;
    if (!xd.ans) tau_d = kNoVertex;

    // (x_p, y_p): among edges from T(v_L) landing on the spine at or above
    // y_d and strictly above v_l, the source group with the deepest
    // LCA(source, v_H); the global post-rank tie-break steers tree-edge ties
    // into the hanging subtree. The representative is the group's highest
    // landing so nothing in the winning group reaches above y_p.
    QueryAnswer xpyp;
    VertexId w_star = kNoVertex, tau_p = kNoVertex;
    if (vl != rp) {
        VertexId bot3 = t.parent(vl);
        if (xd.ans && t.level(xd.ans->target_end) < t.level(bot3)) bot3 = xd.ans->target_end;
        QueryTarget tg3 = QueryTarget::single(TreePath{rp, bot3}, rp);
        std::vector<EdgeQuery> qs;
        std::vector<std::pair<VertexId, VertexId>> group;  // (chain vertex, subtree or none)
        qs.push_back(EdgeQuery::subtree(vh, tg3));
        group.emplace_back(vh, vh);
        for (VertexId w : t.path_vertices(chain)) {
            if (w == vh) continue;
            qs.push_back(EdgeQuery::vertex(w, tg3));
            group.emplace_back(w, kNoVertex);
            for (VertexId s : t.children(w)) {
                if (t.on_path(s, chain) || t.is_ancestor(s, vh)) continue;
                qs.push_back(EdgeQuery::subtree(s, tg3));
                group.emplace_back(w, s);
            }
        }
        auto* a = ask(m, std::move(qs));
        if (!a) return;
        int best_key = -1;
        for (size_t k = 0; k < group.size(); ++k) {
            const QueryAnswer& cand = (*a)[k];
            if (!cand) continue;
            int key = t.level(group[k].first);
            if (!xpyp || key > best_key ||
                (key == best_key && t.post(cand->part_end) < t.post(xpyp->part_end))) {
                xpyp = cand;
                best_key = key;
                w_star = group[k].first;
                tau_p = group[k].second == vh ? kNoVertex : group[k].second;
            }
        }
    }
    hc.xpyp = xpyp;
    hc.w_star = w_star;
    hc.tau_p = tau_p;

    if (!xpyp) {
        run_heavy_fallback(m, tau, vh, pc_census);
        return;
    }
    VertexId xp = xpyp->part_end, yp = xpyp->target_end;
    VertexId v_p = w_star == vh ? kNoVertex : t.child_containing(w_star, vh);
    hc.v_p = v_p;

    // Scenario 2: p traversal through (x_p, y_p).
    std::vector<VertexId> walk_p = walk_between(c.entry, xp);
    {
        auto down = t.path_vertices(TreePath{yp, t.parent(vl)});
        walk_p.insert(walk_p.end(), down.begin(), down.end());
    }
    TreePath p_prime;  // spine residue above y_p
    if (yp != rp) p_prime = TreePath{rp, t.parent(yp)};
    std::vector<VertexId> pieces_p = pieces_of_walks({&walk_p});
    QueryTarget target_p = target_of_walks(t, {&walk_p});
    int spine_seg_p = -1;  // index of the [y_p .. par(v_l)] segment
    for (int si = 0; si < int(target_p.segs.size()); ++si)
        if (target_p.segs[si].path.top == yp && target_p.segs[si].path.bottom == t.parent(vl))
            spine_seg_p = si;

    QueryAnswer pc_on_p, pp_ans;
    std::vector<QueryAnswer> pieces_p_roots;
    {
        std::vector<EdgeQuery> qs;
        for (VertexId s : pieces_p) qs.push_back(EdgeQuery::subtree(s, target_p));
        size_t pc_idx = qs.size();
        qs.push_back(EdgeQuery::path(c.path, target_p));
        int pp_idx = -1;
        if (!p_prime.empty()) {
            pp_idx = int(qs.size());
            qs.push_back(EdgeQuery::path(p_prime, target_p));
        }
        auto* a = ask(m, std::move(qs));
        if (!a) return;
        pieces_p_roots.assign(a->begin(), a->begin() + long(pieces_p.size()));
        pc_on_p = (*a)[pc_idx];
        if (pp_idx >= 0) pp_ans = (*a)[pp_idx];
    }
    Best b2;
    for (size_t k = 0; k < pieces_p.size(); ++k)
        if (pc_census.any(t, pieces_p[k])) b2.offer(t, pieces_p_roots[k], 1);
    b2.offer(t, pc_on_p, 0);
    check(b2.ans.has_value(), "heavy: no attachment for the p_c component on the p traversal");
    QueryAnswer x2y2 = b2.ans;
    hc.x2y2 = x2y2;
    VertexId x2 = x2y2->part_end;
    bool x2_from_pc = b2.src == 0;

    if (x2_from_pc || v_p == kNoVertex || !t.is_ancestor(v_p, x2) || t.is_ancestor(vh, x2) ||
        x2 == v_p) {
        // Scenario 2 applies.
        std::vector<char> to_pp(pieces_p.size(), 0);
        if (!p_prime.empty()) {
            std::vector<EdgeQuery> cq;
            std::vector<size_t> cq_piece;
            for (size_t k = 0; k < pieces_p.size(); ++k)
                if (!pc_census.any(t, pieces_p[k])) {
                    cq_piece.push_back(k);
                    cq.push_back(EdgeQuery::subtree(pieces_p[k],
                                                    QueryTarget::single(p_prime, p_prime.top)));
                }
            if (!cq.empty()) {
                auto* assign = ask(m, std::move(cq));
                if (!assign) return;
                for (size_t k = 0; k < cq_piece.size(); ++k)
                    to_pp[cq_piece[k]] = (*assign)[k].has_value();
            }
        }
        Residue pcg, ppg;
        pcg.path = c.path;
        ppg.path = p_prime;
        std::vector<VertexId> c1s;
        std::vector<Best> c1_roots;
        for (size_t k = 0; k < pieces_p.size(); ++k) {
            if (pc_census.any(t, pieces_p[k])) {
                pcg.members.push_back(pieces_p[k]);
                pcg.root.offer(t, pieces_p_roots[k], 0);
            } else if (to_pp[k]) {
                ppg.members.push_back(pieces_p[k]);
                ppg.root.offer(t, pieces_p_roots[k], 0);
            } else {
                c1s.push_back(pieces_p[k]);
                Best cb;
                cb.offer(t, pieces_p_roots[k], 0);
                c1_roots.push_back(cb);
            }
        }
        pcg.root.offer(t, pc_on_p, 0);
        for (VertexId w : c.trees)
            if (w != tau) pcg.members.push_back(w);
        if (!p_prime.empty()) {
            for (VertexId s : t.subtrees_hanging_from(p_prime)) {
                ppg.members.push_back(s);
                if (opt.instrument)
                    check(!pc_census.any(t, s), "heavy: subtree above y_p is connected to p_c");
            }
            ppg.root.offer(t, pp_ans, 0);
        }
        std::vector<Residue> residues;
        residues.push_back(std::move(pcg));
        if (!ppg.path.empty()) residues.push_back(std::move(ppg));
        finish_commit(m, {walk_p}, {kNoVertex}, std::move(residues), c1s, c1_roots, target_p,
                      "heavy-p");
        return;
    }

    // Scenario 3: r traversal. Re-route through tau_p when its lowest spine
    // landing would otherwise end up in the untraversed residue, and insist
    // on a jump landing strictly above v_l.
    QueryAnswer x2alt;
    if (tau_p != kNoVertex) {
        TreePath window{yp, t.parent(vl)};
        auto* a =
            ask(m, {EdgeQuery::subtree(tau_p, QueryTarget::single(window, window.bottom))});
        if (!a) return;
        x2alt = (*a)[0];
        check(x2alt.has_value(), "heavy: tau_p lost its spine landing");
        hc.x2y2_alt = x2alt;
    }
    bool c2_valid = spine_seg_p >= 0 && x2y2->seg == spine_seg_p;
    QueryAnswer xryr;
    if (c2_valid && (!x2alt || t.level(x2alt->target_end) <= t.level(x2y2->target_end)))
        xryr = x2y2;
    else if (x2alt)
        xryr = x2alt;
    else
        throw InternalError("heavy traversal exhausted every scenario: " + hc.describe());
    hc.xryr = xryr;
    VertexId xr = xryr->part_end, yr = xryr->target_end;

    std::vector<VertexId> walk_r = walk_between(c.entry, xr);
    {
        auto up = chain_up(yr, rp);
        walk_r.insert(walk_r.end(), up.begin(), up.end());
    }
    TreePath p_second;  // spine strictly between v_l and y_r
    if (yr != t.parent(vl)) p_second = TreePath{t.child_containing(yr, vl), t.parent(vl)};
    std::vector<VertexId> hang_second =
        p_second.empty() ? std::vector<VertexId>{} : t.subtrees_hanging_from(p_second);
    std::vector<VertexId> pieces_r = pieces_of_walks({&walk_r});
    QueryTarget target_r = target_of_walks(t, {&walk_r});

    QueryAnswer pc_on_r, psec_ans;
    std::vector<QueryAnswer> pieces_r_roots, hang_second_roots;
    {
        std::vector<EdgeQuery> qs;
        for (VertexId s : pieces_r) qs.push_back(EdgeQuery::subtree(s, target_r));
        size_t hang_base = qs.size();
        for (VertexId s : hang_second) qs.push_back(EdgeQuery::subtree(s, target_r));
        size_t pc_idx = qs.size();
        qs.push_back(EdgeQuery::path(c.path, target_r));
        int ps_idx = -1;
        if (!p_second.empty()) {
            ps_idx = int(qs.size());
            qs.push_back(EdgeQuery::path(p_second, target_r));
        }
        auto* a = ask(m, std::move(qs));
        if (!a) return;
        pieces_r_roots.assign(a->begin(), a->begin() + long(pieces_r.size()));
        hang_second_roots.assign(a->begin() + long(hang_base),
                                 a->begin() + long(hang_base + hang_second.size()));
        pc_on_r = (*a)[pc_idx];
        if (ps_idx >= 0) psec_ans = (*a)[ps_idx];
    }
    Best b3;
    for (size_t k = 0; k < pieces_r.size(); ++k)
        if (pc_census.any(t, pieces_r[k])) b3.offer(t, pieces_r_roots[k], 1);
    b3.offer(t, pc_on_r, 0);
    check(b3.ans.has_value(), "heavy: no attachment for the p_c component on the r traversal");
    QueryAnswer x3y3 = b3.ans;
    hc.x3y3 = x3y3;
    VertexId x3 = x3y3->part_end;
    bool x3_from_pc = b3.src == 0;
    VertexId w3 = t.lca(xr, vh);
    VertexId v_r = w3 == vh ? kNoVertex : t.child_containing(w3, vh);
    hc.v_r = v_r;

    if (x3_from_pc || v_r == kNoVertex || !t.is_ancestor(v_r, x3) || t.is_ancestor(vh, x3) ||
        x3 == v_r) {
        // Scenario 3 applies.
        std::vector<char> to_ps(pieces_r.size(), 0);
        if (!p_second.empty()) {
            std::vector<EdgeQuery> cq;
            std::vector<size_t> cq_piece;
            for (size_t k = 0; k < pieces_r.size(); ++k)
                if (!pc_census.any(t, pieces_r[k])) {
                    cq_piece.push_back(k);
                    cq.push_back(EdgeQuery::subtree(pieces_r[k],
                                                    QueryTarget::single(p_second, p_second.top)));
                }
            if (!cq.empty()) {
                auto* assign = ask(m, std::move(cq));
                if (!assign) return;
                for (size_t k = 0; k < cq_piece.size(); ++k)
                    to_ps[cq_piece[k]] = (*assign)[k].has_value();
            }
        }
        Residue pcg, psg;
        pcg.path = c.path;
        psg.path = p_second;
        std::vector<VertexId> c1s;
        std::vector<Best> c1_roots;
        for (size_t k = 0; k < pieces_r.size(); ++k) {
            if (pc_census.any(t, pieces_r[k])) {
                pcg.members.push_back(pieces_r[k]);
                pcg.root.offer(t, pieces_r_roots[k], 0);
            } else if (to_ps[k]) {
                psg.members.push_back(pieces_r[k]);
                psg.root.offer(t, pieces_r_roots[k], 0);
            } else {
                c1s.push_back(pieces_r[k]);
                Best cb;
                cb.offer(t, pieces_r_roots[k], 0);
                c1_roots.push_back(cb);
            }
        }
        pcg.root.offer(t, pc_on_r, 0);
        for (VertexId w : c.trees)
            if (w != tau) pcg.members.push_back(w);
        for (size_t k = 0; k < hang_second.size(); ++k) {
            psg.members.push_back(hang_second[k]);
            psg.root.offer(t, hang_second_roots[k], 0);
            if (opt.instrument)
                check(!pc_census.any(t, hang_second[k]),
                      "heavy: subtree below y_r is connected to p_c");
        }
        psg.root.offer(t, psec_ans, 0);
        std::vector<Residue> residues;
        residues.push_back(std::move(pcg));
        if (!psg.path.empty()) residues.push_back(std::move(psg));
        finish_commit(m, {walk_r}, {kNoVertex}, std::move(residues), c1s, c1_roots, target_r,
                      "heavy-r");
        return;
    }

    // Special case; conditions are checked, not assumed.
    check(tau_p != kNoVertex && tau_p == tau_d, "special case without tau_p == tau_d");
    check(x2alt.has_value() && xryr == x2alt, "special case without the re-routed (x_r, y_r)");
    check(c2_valid, "special case with (x_2, y_2) off the spine");
    if (opt.instrument) {
        check(xd.ans && xd.ans->target_end == yp, "propSC: y_d != y_p");
        check(t.level(yr) > t.level(x2y2->target_end), "propSC: y_r not strictly below y_2");
    }
    run_heavy_special(m, tau, vh, vl, v_big, pc_census);
}

// Degenerate heavy corner: after a scenario-1 failure every p_c-side landing
// sits at or below v_l, so the spine residue above v_l is disconnected from
// the p_c component and a disintegrating walk is sound.
void RerootRun::Impl::run_heavy_fallback(Machine& m, VertexId tau, VertexId vh,
                                         const SliceCensus& pc_census) {
    const Component& c = m.comp;
    VertexId vl = t.lca(c.entry, vh);
    std::vector<VertexId> walk = walk_between(c.entry, vh);
    TreePath residual;
    if (vl != tau) residual = TreePath{tau, t.parent(vl)};
    std::vector<VertexId> pieces = pieces_of_walks({&walk});
    QueryTarget target = target_of_walks(t, {&walk});

    std::vector<char> to_res(pieces.size(), 0);
    if (!residual.empty()) {
        std::vector<EdgeQuery> aq;
        std::vector<size_t> aq_piece;
        for (size_t k = 0; k < pieces.size(); ++k)
            if (!pc_census.any(t, pieces[k])) {
                aq_piece.push_back(k);
                aq.push_back(
                    EdgeQuery::subtree(pieces[k], QueryTarget::single(residual, residual.top)));
            }
        if (!aq.empty()) {
            auto* assign = ask(m, std::move(aq));
            if (!assign) return;
            for (size_t k = 0; k < aq_piece.size(); ++k)
                to_res[aq_piece[k]] = (*assign)[k].has_value();
        }
    }

    std::vector<EdgeQuery> rq;
    for (VertexId s : pieces) rq.push_back(EdgeQuery::subtree(s, target));
    size_t pc_idx = rq.size();
    rq.push_back(EdgeQuery::path(c.path, target));
    int res_idx = -1;
    if (!residual.empty()) {
        res_idx = int(rq.size());
        rq.push_back(EdgeQuery::path(residual, target));
    }
    auto* roots = ask(m, std::move(rq));
    if (!roots) return;

    Residue pcg, resg;
    pcg.path = c.path;
    resg.path = residual;
    std::vector<VertexId> c1s;
    std::vector<Best> c1_roots;
    for (size_t k = 0; k < pieces.size(); ++k) {
        if (pc_census.any(t, pieces[k])) {
            pcg.members.push_back(pieces[k]);
            pcg.root.offer(t, (*roots)[k], 0);
        } else if (to_res[k]) {
            resg.members.push_back(pieces[k]);
            resg.root.offer(t, (*roots)[k], 0);
        } else {
            c1s.push_back(pieces[k]);
            Best cb;
            cb.offer(t, (*roots)[k], 0);
            c1_roots.push_back(cb);
        }
    }
    pcg.root.offer(t, (*roots)[pc_idx], 0);
    for (VertexId w : c.trees)
        if (w != tau) pcg.members.push_back(w);
    if (!residual.empty()) {
        for (VertexId s : t.subtrees_hanging_from(residual)) {
            resg.members.push_back(s);
            if (opt.instrument)
                check(!pc_census.any(t, s),
                      "heavy fallback: residual subtree connected to p_c");
        }
        resg.root.offer(t, (*roots)[res_idx], 0);
    }
    std::vector<Residue> residues;
    residues.push_back(std::move(pcg));
    if (!resg.path.empty()) residues.push_back(std::move(resg));
    finish_commit(m, {walk}, {kNoVertex}, std::move(residues), c1s, c1_roots, target,
                  "heavy-fallback");
}

// The special case: a modified r' traversal through (x_2, y_2), followed by
// the root traversal of tau_d or an upward/downward cover traversal of the
// leftover spine piece p_1, whichever the lowest attachment selects.
void RerootRun::Impl::run_heavy_special(Machine& m, VertexId tau, VertexId vh, VertexId vl,
                                        VertexId v_big, const SliceCensus& pc_census) {
    const Component& c = m.comp;
    HeavyContext& hc = m.hc;
    (void)vh;
    (void)v_big;
    VertexId rp = tau;
    VertexId xp = hc.xpyp->part_end, yp = hc.xpyp->target_end;
    VertexId x2 = hc.x2y2->part_end, y2 = hc.x2y2->target_end;
    VertexId yr = hc.xryr->target_end;
    VertexId tau_d = hc.tau_d;

    std::vector<VertexId> walk_main = walk_between(c.entry, x2);
    {
        auto up = chain_up(y2, rp);
        walk_main.insert(walk_main.end(), up.begin(), up.end());
    }
    check(t.level(y2) + 1 < t.level(vl), "special: no room for p_1 below y_2");
    TreePath p1{t.child_containing(y2, vl), t.parent(vl)};
    check(t.on_path(yr, p1), "special: y_r escaped p_1");
    std::vector<VertexId> hang_p1 = t.subtrees_hanging_from(p1);
    std::vector<VertexId> pieces_main = pieces_of_walks({&walk_main});
    QueryTarget target_main = target_of_walks(t, {&walk_main});

    // Census of the remaining tau vertices against p_1.
    SliceCensus p1_census;
    p1_census.init(t, tau);
    {
        fresh_epoch();
        for (VertexId v : walk_main) mark(v);
        for (VertexId v : t.path_vertices(p1)) mark(v);
        std::vector<EdgeQuery> qs;
        std::vector<VertexId> order;
        QueryTarget tg = QueryTarget::single(p1, p1.top);
        for (int r = t.low_post(tau); r <= t.post(tau); ++r) {
            VertexId v = t.by_post(r);
            if (marked(v)) continue;
            order.push_back(v);
            qs.push_back(EdgeQuery::vertex(v, tg));
        }
        auto* a = ask(m, std::move(qs));
        if (!a) return;
        for (size_t k = 0; k < order.size(); ++k) p1_census.set(t, order[k], (*a)[k]);
        p1_census.seal();
    }

    auto census_best = [&](const SliceCensus& cs, VertexId w) {
        Best b;
        for (int r = t.low_post(w); r <= t.post(w); ++r) b.offer(t, cs.ans[r - cs.base], 0);
        return b;
    };

    // Lowest edge on the modified r' walk from the p_1 side.
    std::vector<VertexId> p1_side;
    for (VertexId s : pieces_main)
        if (p1_census.any(t, s)) p1_side.push_back(s);
    for (VertexId s : hang_p1) p1_side.push_back(s);
    QueryAnswer entry_ans;
    int entry_src = -1;  // index into p1_side, or -2 for p_1 itself
    {
        std::vector<EdgeQuery> qs;
        for (VertexId s : p1_side) qs.push_back(EdgeQuery::subtree(s, target_main));
        size_t p1_idx = qs.size();
        qs.push_back(EdgeQuery::path(p1, target_main));
        auto* a = ask(m, std::move(qs));
        if (!a) return;
        Best b;
        for (size_t k = 0; k < p1_side.size(); ++k) b.offer(t, (*a)[k], int(k));
        b.offer(t, (*a)[p1_idx], -2);
        check(b.ans.has_value(), "special: p_1 side has no edge onto the modified walk");
        entry_ans = b.ans;
        entry_src = b.src;
    }
    hc.cover_entry = entry_ans;

    // Branch on whether tau_d's stored (x_d, y_d) is the deepest attachment.
    QueryHit xd_pos;
    {
        bool found = false;
        VertexId yd = hc.xdyd->target_end;
        for (int si = 0; si < int(target_main.segs.size()) && !found; ++si)
            if (t.on_path(yd, target_main.segs[si].path)) {
                xd_pos = QueryHit{hc.xdyd->part_end, yd, si,
                                  std::abs(t.level(yd) - t.level(target_main.segs[si].near))};
                found = true;
            }
        check(found, "special: y_d is not on the modified walk");
    }

    if (!strictly_better_pos(*entry_ans, xd_pos)) {
        // Root traversal of tau_d: continue from (y_p, x_p) up to root(tau_d).
        std::vector<VertexId> walk_d = chain_up(xp, tau_d);
        std::vector<VertexId> pieces = pieces_of_walks({&walk_main, &walk_d});
        QueryTarget target = target_of_walks(t, {&walk_main, &walk_d});
        std::vector<EdgeQuery> rq;
        for (VertexId s : pieces) rq.push_back(EdgeQuery::subtree(s, target));
        size_t hang_base = rq.size();
        for (VertexId s : hang_p1) rq.push_back(EdgeQuery::subtree(s, target));
        size_t pc_idx = rq.size();
        rq.push_back(EdgeQuery::path(c.path, target));
        size_t p1_idx = rq.size();
        rq.push_back(EdgeQuery::path(p1, target));
        auto* roots = ask(m, std::move(rq));
        if (!roots) return;

        Residue pcg, p1g;
        pcg.path = c.path;
        p1g.path = p1;
        std::vector<VertexId> c1s;
        std::vector<Best> c1_roots;
        for (size_t k = 0; k < pieces.size(); ++k) {
            bool to_pc = pc_census.any(t, pieces[k]);
            bool to_p1 = p1_census.any(t, pieces[k]);
            if (opt.instrument)
                check(!(to_pc && to_p1), "special root: piece bridges p_c and p_1");
            if (to_pc) {
                pcg.members.push_back(pieces[k]);
                pcg.root.offer(t, (*roots)[k], 0);
            } else if (to_p1) {
                p1g.members.push_back(pieces[k]);
                p1g.root.offer(t, (*roots)[k], 0);
            } else {
                c1s.push_back(pieces[k]);
                Best cb;
                cb.offer(t, (*roots)[k], 0);
                c1_roots.push_back(cb);
            }
        }
        for (size_t k = 0; k < hang_p1.size(); ++k) {
            p1g.members.push_back(hang_p1[k]);
            p1g.root.offer(t, (*roots)[hang_base + k], 0);
        }
        pcg.root.offer(t, (*roots)[pc_idx], 0);
        p1g.root.offer(t, (*roots)[p1_idx], 0);
        for (VertexId w : c.trees)
            if (w != tau) pcg.members.push_back(w);
        std::vector<Residue> residues;
        residues.push_back(std::move(pcg));
        residues.push_back(std::move(p1g));
        finish_commit(m, {walk_main, walk_d}, {kNoVertex, yp}, std::move(residues), c1s,
                      c1_roots, target, "heavy-special-root");
        return;
    }

    // Cover traversal of p_1.
    VertexId tau_prime = kNoVertex, y_tau = kNoVertex, x_cover = kNoVertex, x_tau = kNoVertex;
    if (entry_src >= 0) {
        tau_prime = p1_side[size_t(entry_src)];
        hc.tau_prime = tau_prime;
        y_tau = entry_ans->part_end;
        Best hi = census_best(p1_census, tau_prime);
        check(hi.ans.has_value(), "special cover: tau' lost its p_1 landing");
        hc.cover_hi = hi.ans;
        x_cover = hi.ans->target_end;
        x_tau = hi.ans->part_end;
        if (opt.instrument)
            check(!pc_census.any(t, tau_prime), "special cover: tau' is connected to p_c");
    } else {
        x_cover = entry_ans->part_end;  // direct edge from p_1
    }

    bool upward = t.level(x_cover) >= t.level(yr);
    std::vector<VertexId> walk_cover;
    TreePath res_p1, res_tau;
    std::vector<VertexId> final_main = walk_main;
    if (upward) {
        if (tau_prime != kNoVertex) {
            // Re-select the lowest edge from tau' so the upward cover leaves
            // no tau' attachment below the entry point.
            auto* lo = ask(m, {EdgeQuery::subtree(tau_prime,
                                                  QueryTarget::single(p1, p1.bottom))});
            if (!lo) return;
            check((*lo)[0].has_value(), "special cover: tau' lost its p_1 landing");
            hc.cover_lo = (*lo)[0];
            x_cover = (*lo)[0]->target_end;
            x_tau = (*lo)[0]->part_end;
            walk_cover = walk_between(y_tau, x_tau);
        }
        auto leg = chain_up(x_cover, p1.top);
        walk_cover.insert(walk_cover.end(), leg.begin(), leg.end());
        if (x_cover != p1.bottom) res_p1 = TreePath{t.child_containing(x_cover, vl), p1.bottom};
    } else {
        // Downward: first re-route the main walk through the lowest tau_d
        // edge strictly above x', so the leftover strip has no tau_d edge.
        QueryAnswer xrs;
        if (x_cover != p1.top) {
            TreePath window{p1.top, t.parent(x_cover)};
            auto* a =
                ask(m, {EdgeQuery::subtree(tau_d, QueryTarget::single(window, window.bottom))});
            if (!a) return;
            xrs = (*a)[0];
        }
        hc.xr_star = xrs;
        VertexId ystar = y2;
        if (xrs) {
            ystar = xrs->target_end;
            final_main = walk_between(c.entry, xrs->part_end);
            auto up = chain_up(ystar, rp);
            final_main.insert(final_main.end(), up.begin(), up.end());
            fresh_epoch();
            for (VertexId v : final_main) mark(v);
            check(marked(entry_ans->target_end), "special cover: y' left the re-routed walk");
        }
        if (tau_prime != kNoVertex) walk_cover = walk_between(y_tau, x_tau);
        auto leg = t.path_vertices(TreePath{x_cover, p1.bottom});
        walk_cover.insert(walk_cover.end(), leg.begin(), leg.end());
        if (t.parent(x_cover) != ystar && x_cover != p1.top)
            res_p1 = TreePath{t.child_containing(ystar, vl), t.parent(x_cover)};
    }
    if (tau_prime != kNoVertex) {
        VertexId meet = t.lca(y_tau, x_tau);
        if (meet != tau_prime) res_tau = TreePath{tau_prime, t.parent(meet)};
    }

    std::vector<VertexId> pieces = pieces_of_walks({&final_main, &walk_cover});
    QueryTarget target = target_of_walks(t, {&final_main, &walk_cover});
    std::vector<VertexId> hang_res_p1 =
        res_p1.empty() ? std::vector<VertexId>{} : t.subtrees_hanging_from(res_p1);
    std::vector<VertexId> hang_res_tau =
        res_tau.empty() ? std::vector<VertexId>{} : t.subtrees_hanging_from(res_tau);

    // Merged assignment round: non-tau' pieces against the p_1 strip, tau'
    // fragments against tau's residual spine.
    std::vector<char> to_p1(pieces.size(), 0), to_tau(pieces.size(), 0);
    {
        std::vector<EdgeQuery> aq;
        std::vector<std::pair<size_t, int>> aq_map;  // (piece index, 0=p1 strip, 1=tau spine)
        for (size_t k = 0; k < pieces.size(); ++k) {
            bool in_tau_prime = tau_prime != kNoVertex && t.is_ancestor(tau_prime, pieces[k]);
            if (in_tau_prime) {
                if (!res_tau.empty()) {
                    aq_map.emplace_back(k, 1);
                    aq.push_back(EdgeQuery::subtree(pieces[k],
                                                    QueryTarget::single(res_tau, res_tau.top)));
                }
            } else if (!res_p1.empty() && !pc_census.any(t, pieces[k])) {
                aq_map.emplace_back(k, 0);
                aq.push_back(
                    EdgeQuery::subtree(pieces[k], QueryTarget::single(res_p1, res_p1.top)));
            }
        }
        if (!aq.empty()) {
            auto* assign = ask(m, std::move(aq));
            if (!assign) return;
            for (size_t k = 0; k < aq_map.size(); ++k) {
                if (!(*assign)[k].has_value()) continue;
                if (aq_map[k].second == 0) to_p1[aq_map[k].first] = 1;
                else to_tau[aq_map[k].first] = 1;
            }
        }
    }

    std::vector<EdgeQuery> rq;
    for (VertexId s : pieces) rq.push_back(EdgeQuery::subtree(s, target));
    size_t hp_base = rq.size();
    for (VertexId s : hang_res_p1) rq.push_back(EdgeQuery::subtree(s, target));
    size_t ht_base = rq.size();
    for (VertexId s : hang_res_tau) rq.push_back(EdgeQuery::subtree(s, target));
    size_t pc_idx = rq.size();
    rq.push_back(EdgeQuery::path(c.path, target));
    int p1_idx = -1, pt_idx = -1;
    if (!res_p1.empty()) {
        p1_idx = int(rq.size());
        rq.push_back(EdgeQuery::path(res_p1, target));
    }
    if (!res_tau.empty()) {
        pt_idx = int(rq.size());
        rq.push_back(EdgeQuery::path(res_tau, target));
    }
    auto* roots = ask(m, std::move(rq));
    if (!roots) return;

    Residue pcg, p1g, taug;
    pcg.path = c.path;
    p1g.path = res_p1;
    taug.path = res_tau;
    std::vector<VertexId> c1s;
    std::vector<Best> c1_roots;
    for (size_t k = 0; k < pieces.size(); ++k) {
        if (pc_census.any(t, pieces[k])) {
            pcg.members.push_back(pieces[k]);
            pcg.root.offer(t, (*roots)[k], 0);
        } else if (to_p1[k]) {
            p1g.members.push_back(pieces[k]);
            p1g.root.offer(t, (*roots)[k], 0);
        } else if (to_tau[k]) {
            taug.members.push_back(pieces[k]);
            taug.root.offer(t, (*roots)[k], 0);
        } else {
            c1s.push_back(pieces[k]);
            Best cb;
            cb.offer(t, (*roots)[k], 0);
            c1_roots.push_back(cb);
        }
    }
    for (size_t k = 0; k < hang_res_p1.size(); ++k) {
        p1g.members.push_back(hang_res_p1[k]);
        p1g.root.offer(t, (*roots)[hp_base + k], 0);
        if (opt.instrument)
            check(!pc_census.any(t, hang_res_p1[k]),
                  "special cover: p_1 strip subtree connected to p_c");
    }
    for (size_t k = 0; k < hang_res_tau.size(); ++k) {
        taug.members.push_back(hang_res_tau[k]);
        taug.root.offer(t, (*roots)[ht_base + k], 0);
    }
    pcg.root.offer(t, (*roots)[pc_idx], 0);
    if (p1_idx >= 0) p1g.root.offer(t, (*roots)[p1_idx], 0);
    if (pt_idx >= 0) taug.root.offer(t, (*roots)[pt_idx], 0);
    for (VertexId w : c.trees)
        if (w != tau) pcg.members.push_back(w);

    std::vector<Residue> residues;
    residues.push_back(std::move(pcg));
    if (!p1g.path.empty() || !p1g.members.empty()) residues.push_back(std::move(p1g));
    if (!taug.path.empty() || !taug.members.empty()) residues.push_back(std::move(taug));
    finish_commit(m, {final_main, walk_cover}, {kNoVertex, entry_ans->target_end},
                  std::move(residues), c1s, c1_roots, target,
                  upward ? "heavy-special-cover-up" : "heavy-special-cover-down");
}

}  // namespace dyndfs
