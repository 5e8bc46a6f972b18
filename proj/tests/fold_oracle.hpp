#pragma once

// Independent oracle for legal-quotient checking: performs the raw set
// quotient of an edge partition with no legality requirement, then folds
// (identifies same-labeled departing edge pairs) until immersed, counting
// folds. A partition is a legal quotient exactly when zero folds are needed.
// Kept deliberately naive and separate from the library implementation.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <vector>

#include "spineforge/rosegraph.hpp"

namespace foldoracle {

using spineforge::rosegraph::CircleFamily;
using spineforge::rosegraph::EdgePartition;
using spineforge::rosegraph::LabeledGraph;
using spineforge::words::Letter;

struct OracleResult {
    LabeledGraph graph;   // folded graph
    int64_t folds = 0;    // number of fold operations performed
};

namespace detail {

struct MutableGraph {
    // parallel arrays; dead edges flagged
    std::vector<int64_t> eu, ev;
    std::vector<int> elabel;  // packed letter for u->v
    std::vector<bool> dead;
    std::vector<int64_t> vparent;

    int64_t vfind(int64_t x) {
        while (vparent[x] != x) {
            vparent[x] = vparent[vparent[x]];
            x = vparent[x];
        }
        return x;
    }
    void vunite(int64_t a, int64_t b) {
        a = vfind(a);
        b = vfind(b);
        if (a == b) return;
        if (a > b) std::swap(a, b);
        vparent[b] = a;
    }
};

inline LabeledGraph finalize(MutableGraph& g) {
    std::map<int64_t, int64_t> vmap;
    for (size_t v = 0; v < g.vparent.size(); ++v) {
        int64_t r = g.vfind(static_cast<int64_t>(v));
        if (!vmap.count(r)) {
            int64_t id = static_cast<int64_t>(vmap.size());
            vmap[r] = id;
        }
    }
    LabeledGraph out;
    out.num_vertices = static_cast<int64_t>(vmap.size());
    for (size_t e = 0; e < g.eu.size(); ++e) {
        if (g.dead[e]) continue;
        out.edges.push_back({vmap[g.vfind(g.eu[e])], vmap[g.vfind(g.ev[e])],
                             Letter::from_packed(g.elabel[e])});
    }
    return out;
}

}  // namespace detail

inline OracleResult fold_quotient(const LabeledGraph& base, const EdgePartition& p) {
    detail::MutableGraph g;
    g.vparent.resize(base.num_vertices);
    for (int64_t v = 0; v < base.num_vertices; ++v) g.vparent[v] = v;
    for (const auto& e : base.edges) {
        g.eu.push_back(e.u);
        g.ev.push_back(e.v);
        g.elabel.push_back(e.label.packed());
        g.dead.push_back(false);
    }
    // Raw set quotient of the partition (labels already validated upstream).
    std::vector<int64_t> edge_root(base.edges.size());
    for (size_t e = 0; e < base.edges.size(); ++e) edge_root[e] = static_cast<int64_t>(e);
    for (const auto& cls : p.classes) {
        int64_t d0 = cls.front();
        for (size_t i = 1; i < cls.size(); ++i) {
            int64_t di = cls[i];
            // Identify di with d0: co-oriented endpoints.
            int64_t u0 = (d0 & 1) ? base.edges[d0 / 2].v : base.edges[d0 / 2].u;
            int64_t v0 = (d0 & 1) ? base.edges[d0 / 2].u : base.edges[d0 / 2].v;
            int64_t ui = (di & 1) ? base.edges[di / 2].v : base.edges[di / 2].u;
            int64_t vi = (di & 1) ? base.edges[di / 2].u : base.edges[di / 2].v;
            g.vunite(u0, ui);
            g.vunite(v0, vi);
            g.dead[di / 2] = true;
        }
    }
    // Fold to an immersion.
    OracleResult res;
    bool changed = true;
    while (changed) {
        changed = false;
        // departures: (vertex, packed label) -> live directed edge
        std::map<std::pair<int64_t, int>, int64_t> dep;
        for (size_t e = 0; e < g.eu.size() && !changed; ++e) {
            if (g.dead[e]) continue;
            for (int dir = 0; dir < 2 && !changed; ++dir) {
                int64_t de = 2 * static_cast<int64_t>(e) + dir;
                int64_t src = g.vfind(dir ? g.ev[e] : g.eu[e]);
                int packed = dir ? -g.elabel[e] : g.elabel[e];
                auto key = std::make_pair(src, packed);
                auto it = dep.find(key);
                if (it == dep.end()) {
                    dep[key] = de;
                    continue;
                }
                // Fold: identify the two departing edges and their far ends.
                int64_t other = it->second;
                if (other / 2 == de / 2) continue;  // same edge both ways: loop
                int64_t far1 = g.vfind((de & 1) ? g.eu[de / 2] : g.ev[de / 2]);
                int64_t far2 = g.vfind((other & 1) ? g.eu[other / 2] : g.ev[other / 2]);
                g.vunite(far1, far2);
                g.dead[de / 2] = true;
                ++res.folds;
                changed = true;
            }
        }
    }
    res.graph = detail::finalize(g);
    return res;
}

// Labeled-graph isomorphism by backtracking with departure-profile pruning;
// intended for small test graphs.
inline bool isomorphic(const LabeledGraph& a, const LabeledGraph& b) {
    if (a.num_vertices != b.num_vertices || a.edges.size() != b.edges.size()) return false;

    // Departure adjacency: vertex -> sorted (packed label, neighbor).
    auto adjacency = [](const LabeledGraph& g) {
        std::vector<std::vector<std::pair<int, int64_t>>> adj(g.num_vertices);
        for (const auto& e : g.edges) {
            adj[e.u].push_back({e.label.packed(), e.v});
            adj[e.v].push_back({-e.label.packed(), e.u});
        }
        for (auto& v : adj) std::sort(v.begin(), v.end());
        return adj;
    };
    auto adj_a = adjacency(a), adj_b = adjacency(b);
    auto profile = [](const std::vector<std::pair<int, int64_t>>& star) {
        std::vector<int> labels;
        for (auto& [l, w] : star) labels.push_back(l);
        return labels;
    };

    std::vector<int64_t> map_ab(a.num_vertices, -1);
    std::vector<char> used(b.num_vertices, 0);
    std::function<bool(int64_t)> rec = [&](int64_t v) -> bool {
        if (v == a.num_vertices) return true;
        for (int64_t w = 0; w < b.num_vertices; ++w) {
            if (used[w]) continue;
            if (profile(adj_a[v]) != profile(adj_b[w])) continue;
            // Incremental consistency: edges from v to mapped vertices must
            // exist identically from w.
            bool ok = true;
            for (auto& [lab, nb] : adj_a[v]) {
                if (map_ab[nb] < 0 && nb != v) continue;
                int64_t target = (nb == v) ? w : map_ab[nb];
                long need = std::count(adj_a[v].begin(), adj_a[v].end(),
                                       std::make_pair(lab, nb));
                long have = std::count(adj_b[w].begin(), adj_b[w].end(),
                                       std::make_pair(lab, target));
                if (need > have) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            map_ab[v] = w;
            used[w] = 1;
            if (rec(v + 1)) return true;
            map_ab[v] = -1;
            used[w] = 0;
        }
        return false;
    };
    if (!rec(0)) return false;
    // Final exact multiset check.
    std::multiset<std::tuple<int64_t, int64_t, int>> ma, mb;
    auto edge_key = [](int64_t u, int64_t v, int packed) {
        if (u > v || (u == v && packed < 0)) {
            std::swap(u, v);
            packed = -packed;
        }
        return std::tuple<int64_t, int64_t, int>(u, v, packed);
    };
    for (const auto& e : a.edges) ma.insert(edge_key(map_ab[e.u], map_ab[e.v], e.label.packed()));
    for (const auto& e : b.edges) mb.insert(edge_key(e.u, e.v, e.label.packed()));
    return ma == mb;
}

}  // namespace foldoracle
