#include "spineforge/spine.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "spineforge/error.hpp"

namespace spineforge::spine {

namespace {

std::string end_str(int64_t end) {
    return "e" + std::to_string(end / 2) + (end & 1 ? "-" : "+");
}

// Departing directed L-edges at L-vertex x = (c, p): the forward edge at p
// and the reversal of the forward edge at p-1.
std::pair<int64_t, int64_t> departing_at(const CircleFamily& L, int64_t x) {
    int64_t n = L.length();
    int64_t c = x / n, p = x % n;
    int64_t out_fwd = 2 * L.edge_id(c, p);
    int64_t out_back = 2 * L.edge_id(c, (p + n - 1) % n) + 1;
    return {out_fwd, out_back};
}

}  // namespace

Spine make_spine(Kind kind, int d, int k, CircleFamily L, EdgePartition partition) {
    if (d < 2) throw Error("dimension must be at least 2");
    Spine s;
    s.kind = kind;
    s.d = d;
    s.k = k;
    s.L = std::move(L);
    s.partition = std::move(partition);
    s.quotient = rosegraph::apply_partition(s.L, s.partition);
    s.fibers.resize(s.quotient.fibers.size());
    for (size_t e = 0; e < s.fibers.size(); ++e) {
        s.fibers[e].strands = s.quotient.fibers[e];
        s.fibers[e].labels.resize(s.fibers[e].strands.size());
        for (size_t i = 0; i < s.fibers[e].labels.size(); ++i)
            s.fibers[e].labels[i] = static_cast<int>(i) + 1;
    }
    ConditionReport ignored;
    s.vertex_class = classify_vertices(s, &ignored);
    return s;
}

std::vector<VertexClass> classify_vertices(const Spine& s, ConditionReport* r1) {
    auto stars = s.quotient.graph.stars();
    std::vector<VertexClass> cls(stars.size(), VertexClass::internal);
    int genuine = s.genuine_valence();
    for (size_t v = 0; v < stars.size(); ++v) {
        auto valence = static_cast<int>(stars[v].size());
        if (valence == 2) {
            cls[v] = VertexClass::internal;
        } else if (valence == genuine) {
            cls[v] = VertexClass::genuine;
        } else {
            cls[v] = VertexClass::invalid;
            if (r1)
                r1->fail("vertex " + std::to_string(v) + " has valence " +
                         std::to_string(valence));
        }
    }
    return cls;
}

namespace {

// Passages of L through quotient vertex v: for each L-vertex over v, the
// unordered pair of ends its two flanks depart along, with the departing
// directed L-edge toward each end.
struct Passage {
    int64_t end_a, end_b;    // end_a < end_b
    int64_t toward_a, toward_b;
};

std::vector<std::vector<Passage>> collect_passages(const Spine& s) {
    std::vector<std::vector<Passage>> at(s.sigma_vertices());
    for (int64_t x = 0; x < s.L.num_vertices(); ++x) {
        int64_t v = s.quotient.vertex_map[x];
        auto [da, db] = departing_at(s.L, x);
        int64_t ea = s.quotient.edge_map[da];
        int64_t eb = s.quotient.edge_map[db];
        Passage p;
        if (ea <= eb)
            p = Passage{ea, eb, da, db};
        else
            p = Passage{eb, ea, db, da};
        at[v].push_back(p);
    }
    return at;
}

// Strands pointing into vertex v along edge-end `end` (end departs v).
std::vector<int64_t> strands_into(const Spine& s, int64_t end) {
    std::vector<int64_t> out;
    int64_t edge = end / 2;
    for (int64_t de : s.fibers[edge].strands) {
        // de is co-oriented with the quotient forward direction 2*edge.
        int64_t arriving = (end & 1) ? de : (de ^ 1);
        // `arriving` maps to end^1, pointing into v.
        out.push_back(arriving);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string perm_cycles(const std::vector<int>& image) {
    std::vector<bool> seen(image.size(), false);
    std::string out;
    for (size_t i = 0; i < image.size(); ++i) {
        if (seen[i] || image[i] == static_cast<int>(i)) continue;
        out += "(";
        size_t j = i;
        bool first = true;
        while (!seen[j]) {
            seen[j] = true;
            if (!first) out += " ";
            out += std::to_string(j);
            first = false;
            j = static_cast<size_t>(image[j]);
        }
        out += ")";
    }
    return out.empty() ? "id" : out;
}

}  // namespace

SpineReport check_regularity(Spine& s, std::optional<int64_t> expected_m) {
    SpineReport rep;
    s.vertex_class = classify_vertices(s, &rep.r1);

    const int dd = s.dd();
    // R2: every fiber has exactly dd strands and a bijective labeling.
    for (int64_t e = 0; e < s.sigma_edges(); ++e) {
        if (static_cast<int>(s.fibers[e].strands.size()) != dd)
            rep.r2.fail("edge " + std::to_string(e) + " has fiber size " +
                        std::to_string(s.fibers[e].strands.size()));
    }

    auto stars = s.quotient.graph.stars();
    auto passages = collect_passages(s);

    // Per genuine vertex: exact pair coverage; cubical also derives the
    // antipodal end-pairing (zero-coverage pairs must form a perfect
    // matching on the ends).
    std::vector<std::map<int64_t, int64_t>> end_pair(s.sigma_vertices());
    for (int64_t v = 0; v < s.sigma_vertices(); ++v) {
        if (s.vertex_class[v] != VertexClass::genuine) continue;
        std::map<std::pair<int64_t, int64_t>, int> count;
        for (const auto& p : passages[v]) ++count[{p.end_a, p.end_b}];
        for (const auto& p : passages[v])
            if (p.end_a == p.end_b)
                rep.r3.fail("U-turn passage at vertex " + std::to_string(v));
        const auto& ends = stars[v];
        std::vector<std::pair<int64_t, int64_t>> zero_pairs;
        for (size_t i = 0; i < ends.size(); ++i) {
            for (size_t j = i + 1; j < ends.size(); ++j) {
                auto key = std::make_pair(std::min(ends[i], ends[j]),
                                          std::max(ends[i], ends[j]));
                int c = count.count(key) ? count[key] : 0;
                if (s.kind == Kind::simplicial) {
                    if (c != 1)
                        rep.r3.fail("vertex " + std::to_string(v) + " pair {" +
                                    end_str(key.first) + "," + end_str(key.second) +
                                    "} carries " + std::to_string(c) + " strands");
                } else {
                    if (c == 0)
                        zero_pairs.push_back(key);
                    else if (c != 1)
                        rep.r3.fail("vertex " + std::to_string(v) + " pair {" +
                                    end_str(key.first) + "," + end_str(key.second) +
                                    "} carries " + std::to_string(c) + " strands");
                }
            }
        }
        if (s.kind == Kind::cubical) {
            std::map<int64_t, int> degree;
            for (auto& [a, b] : zero_pairs) {
                ++degree[a];
                ++degree[b];
            }
            bool matching = zero_pairs.size() == ends.size() / 2;
            for (int64_t end : ends)
                if (degree[end] != 1) matching = false;
            if (!matching) {
                rep.r3.fail("vertex " + std::to_string(v) +
                            ": zero-strand pairs are not a perfect matching (no "
                            "antipodal structure)");
            } else {
                for (auto& [a, b] : zero_pairs) {
                    end_pair[v][a] = b;
                    end_pair[v][b] = a;
                }
            }
        }
    }

    // Cubical fiber pairings: derived at genuine topological-edge endpoints
    // via continuation pullback, propagated through internal vertices, and
    // required to agree end to end.
    if (s.kind == Kind::cubical && rep.r3.pass) {
        for (int64_t e = 0; e < s.sigma_edges(); ++e) {
            s.fibers[e].antipode.assign(s.fibers[e].strands.size(), -1);
        }
        auto pull_back = [&](int64_t v, int64_t end) -> std::map<int64_t, int64_t> {
            // Pairing on strands arriving at v along `end`, via paired
            // continuation ends. Empty result marks failure.
            std::map<int64_t, int64_t> pairing;
            auto strands = strands_into(s, end);
            std::map<int64_t, int64_t> by_continuation;
            for (int64_t de : strands) {
                int64_t cont_end = s.quotient.edge_map[s.L.dnext(de)];
                if (by_continuation.count(cont_end)) return {};
                by_continuation[cont_end] = de;
            }
            for (int64_t de : strands) {
                int64_t cont_end = s.quotient.edge_map[s.L.dnext(de)];
                auto it = end_pair[v].find(cont_end);
                if (it == end_pair[v].end()) return {};
                auto partner = by_continuation.find(it->second);
                if (partner == by_continuation.end()) return {};
                if (partner->second == de) return {};  // fixed point
                pairing[de] = partner->second;
            }
            return pairing;
        };
        for (int64_t e = 0; e < s.sigma_edges() && rep.r3.pass; ++e) {
            // Find the genuine-anchored ends of the topological edge through e
            // by walking both ways; derive the pairing from each genuine end
            // and compare on e's fiber.
            std::vector<std::map<int64_t, int64_t>> derived;
            for (int dir = 0; dir < 2; ++dir) {
                // Walk from edge e in direction dir until a genuine vertex.
                int64_t cur = 2 * e + dir;  // pointing away from e's other side
                int64_t guard = 0;
                while (s.vertex_class[s.quotient.graph.target(cur)] ==
                           VertexClass::internal &&
                       guard++ <= s.sigma_edges()) {
                    int64_t v = s.quotient.graph.target(cur);
                    int64_t next = -1;
                    for (int64_t cand : stars[v])
                        if (cand != (cur ^ 1)) next = cand;
                    if (next < 0) break;
                    cur = next;
                }
                int64_t v = s.quotient.graph.target(cur);
                if (s.vertex_class[v] != VertexClass::genuine) continue;  // cycle
                auto pairing_far = pull_back(v, cur ^ 1);
                if (pairing_far.empty()) {
                    rep.r3.fail("edge " + std::to_string(e) +
                                ": no coherent antipodal pairing at vertex " +
                                std::to_string(v));
                    continue;
                }
                // Transport the far pairing back to e's fiber through the
                // co-orientation: strand over far edge <-> strand over e of
                // the same L-circle run. Walk each strand backwards.
                std::map<int64_t, int64_t> pairing_here;
                for (auto [a, b] : pairing_far) {
                    int64_t pa = a, pb = b;
                    int64_t guard2 = 0;
                    while (s.quotient.edge_map[pa] != 2 * e &&
                           s.quotient.edge_map[pa] != 2 * e + 1 &&
                           guard2++ <= 2 * s.L.num_edges())
                        pa = s.L.dprev(pa);
                    guard2 = 0;
                    while (s.quotient.edge_map[pb] != 2 * e &&
                           s.quotient.edge_map[pb] != 2 * e + 1 &&
                           guard2++ <= 2 * s.L.num_edges())
                        pb = s.L.dprev(pb);
                    // Normalize to co-oriented-with-forward representatives.
                    if (s.quotient.edge_map[pa] != 2 * e) pa ^= 1;
                    if (s.quotient.edge_map[pb] != 2 * e) pb ^= 1;
                    pairing_here[pa] = pb;
                }
                derived.push_back(std::move(pairing_here));
            }
            if (derived.empty()) {
                // Internal cycle: unconstrained; pair strands in sorted order.
                auto& f = s.fibers[e];
                for (int i = 0; i < dd / 2; ++i) {
                    f.antipode[i] = i + dd / 2;
                    f.antipode[i + dd / 2] = i;
                }
                continue;
            }
            if (derived.size() == 2 && derived[0] != derived[1]) {
                rep.r3.fail("edge " + std::to_string(e) +
                            ": antipodal pairings disagree between endpoints");
                continue;
            }
            auto& f = s.fibers[e];
            for (size_t i = 0; i < f.strands.size(); ++i) {
                auto it = derived[0].find(f.strands[i]);
                if (it == derived[0].end()) {
                    rep.r3.fail("edge " + std::to_string(e) + ": strand missing from pairing");
                    break;
                }
                auto pos = std::find(f.strands.begin(), f.strands.end(), it->second);
                f.antipode[i] = static_cast<int>(pos - f.strands.begin());
            }
        }
    }

    // R4: genuine-visit counts per component.
    rep.per_component_m.assign(s.L.components(), 0);
    for (int64_t x = 0; x < s.L.num_vertices(); ++x) {
        int64_t v = s.quotient.vertex_map[x];
        if (s.vertex_class[v] == VertexClass::genuine)
            ++rep.per_component_m[x / s.L.length()];
    }
    if (!rep.per_component_m.empty()) {
        int64_t m0 = rep.per_component_m[0];
        for (int64_t c = 0; c < s.L.components(); ++c)
            if (rep.per_component_m[c] != m0)
                rep.r4.fail("component " + std::to_string(c) + " visits " +
                            std::to_string(rep.per_component_m[c]) +
                            " genuine vertices, component 0 visits " +
                            std::to_string(m0));
        if (rep.r4.pass) rep.m = m0;
        if (expected_m && rep.r4.pass && m0 != *expected_m)
            rep.r4.fail("m = " + std::to_string(m0) + ", expected " +
                        std::to_string(*expected_m));
    }

    // R5: cocycle condition, meaningful once local structure is sound.
    if (rep.r1.pass && rep.r2.pass && rep.r3.pass) {
        for (int64_t c = 0; c < s.L.components(); ++c) {
            Holonomy h = cocycle_holonomy(s, c);
            rep.holonomies.push_back(h.cycles);
            if (!h.is_identity)
                rep.r5.fail("component " + std::to_string(c) + " holonomy " + h.cycles);
        }
    } else {
        rep.r5.fail("skipped: R1-R3 must hold first");
    }

    rep.min_top_edge = min_topological_edge(s);
    return rep;
}

Transport transversal_transport(const Spine& s, int64_t vertex, int64_t in_end,
                                int64_t out_end) {
    if (vertex < 0 || vertex >= s.sigma_vertices()) throw Error("vertex out of range");
    if (s.vertex_class[vertex] != VertexClass::genuine)
        throw Error("transport undefined: vertex is not genuine");

    // Map from "other flank end" to the departing strand along out_end.
    std::map<int64_t, int64_t> toward_out;
    for (int64_t de : s.fibers[out_end / 2].strands) {
        int64_t departing = (out_end & 1) ? (de ^ 1) : de;
        if (s.quotient.vertex_map[s.L.dsource(departing)] != vertex) continue;
        int64_t other = s.L.dprev(departing) ^ 1;  // the other departing flank
        int64_t other_end = s.quotient.edge_map[other];
        if (toward_out.count(other_end))
            throw Error("transport undefined: duplicate strand pair at vertex " +
                        std::to_string(vertex));
        toward_out[other_end] = departing;
    }

    // The driving strand arrives along in_end and leaves along out_end.
    auto ell_it = toward_out.find(in_end);
    if (ell_it == toward_out.end())
        throw Error("transport undefined: no strand passes in->out at vertex " +
                    std::to_string(vertex));
    int64_t ell_departing = ell_it->second;
    int64_t ell_arriving = s.L.dprev(ell_departing);

    const FiberModule& in_fiber = s.fibers[in_end / 2];
    int ell_index = -1;
    std::vector<int64_t> arriving;
    for (size_t i = 0; i < in_fiber.strands.size(); ++i) {
        int64_t de = in_fiber.strands[i];
        int64_t into = (in_end & 1) ? de : (de ^ 1);
        arriving.push_back(into);
        if (into == ell_arriving) ell_index = static_cast<int>(i);
    }
    if (ell_index < 0) throw Error("transport undefined: driving strand not in fiber");

    Transport t;
    for (size_t i = 0; i < arriving.size(); ++i) {
        if (static_cast<int>(i) == ell_index) continue;
        if (s.kind == Kind::cubical && !in_fiber.antipode.empty() &&
            in_fiber.antipode[ell_index] == static_cast<int>(i))
            continue;
        int64_t cont_end = s.quotient.edge_map[s.L.dnext(arriving[i])];
        auto it = toward_out.find(cont_end);
        if (it == toward_out.end())
            throw Error("transport undefined: missing pair {" + end_str(cont_end) +
                        "," + end_str(out_end) + "} at vertex " + std::to_string(vertex));
        t.mapping.emplace_back(arriving[i], it->second);
    }
    return t;
}

Holonomy cocycle_holonomy(const Spine& s, int64_t component) {
    if (component < 0 || component >= s.L.components())
        throw Error("component out of range");
    int64_t n = s.L.length();
    int64_t ell = 2 * s.L.edge_id(component, 0);
    int64_t base_edge = s.quotient.edge_map[ell] / 2;

    Holonomy h;
    const FiberModule& base_fiber = s.fibers[base_edge];
    int ell_index = -1;
    int antipode_index = -1;
    // Trivialization: strands co-oriented with ell.
    bool ell_fwd = (s.quotient.edge_map[ell] & 1) == 0;
    for (size_t i = 0; i < base_fiber.strands.size(); ++i) {
        int64_t de = ell_fwd ? base_fiber.strands[i] : (base_fiber.strands[i] ^ 1);
        if (de == ell) ell_index = static_cast<int>(i);
    }
    if (ell_index < 0) throw Error("transport undefined: base strand not in fiber");
    if (s.kind == Kind::cubical && !base_fiber.antipode.empty())
        antipode_index = base_fiber.antipode[ell_index];
    for (size_t i = 0; i < base_fiber.strands.size(); ++i) {
        if (static_cast<int>(i) == ell_index || static_cast<int>(i) == antipode_index)
            continue;
        h.transversal.push_back(ell_fwd ? base_fiber.strands[i]
                                        : (base_fiber.strands[i] ^ 1));
    }

    std::vector<int64_t> tracked = h.transversal;
    int64_t cur = ell;
    for (int64_t step = 0; step < n; ++step) {
        int64_t x = s.L.dsource(s.L.dnext(cur));  // L-vertex ahead of cur
        int64_t v = s.quotient.vertex_map[x];
        int64_t nxt = s.L.dnext(cur);
        if (s.vertex_class[v] == VertexClass::internal) {
            for (auto& t : tracked) t = s.L.dnext(t);
        } else if (s.vertex_class[v] == VertexClass::genuine) {
            int64_t out_end = s.quotient.edge_map[nxt];
            std::map<int64_t, int64_t> toward_out;
            for (int64_t de : s.fibers[out_end / 2].strands) {
                int64_t departing = (out_end & 1) ? (de ^ 1) : de;
                int64_t other_end = s.quotient.edge_map[s.L.dprev(departing) ^ 1];
                if (toward_out.count(other_end))
                    throw Error("transport undefined: duplicate pair at vertex " +
                                std::to_string(v));
                toward_out[other_end] = departing;
            }
            for (auto& t : tracked) {
                int64_t b = s.quotient.edge_map[s.L.dnext(t)];
                auto it = toward_out.find(b);
                if (it == toward_out.end())
                    throw Error("transport undefined: missing pair at vertex " +
                                std::to_string(v));
                t = it->second;
            }
        } else {
            throw Error("transport undefined: invalid vertex " + std::to_string(v));
        }
        cur = nxt;
    }
    if (cur != ell) throw Error("holonomy walk failed to close");

    std::vector<int> image(h.transversal.size());
    h.is_identity = true;
    for (size_t i = 0; i < tracked.size(); ++i) {
        auto it = std::find(h.transversal.begin(), h.transversal.end(), tracked[i]);
        if (it == h.transversal.end()) throw Error("holonomy image left the transversal");
        image[i] = static_cast<int>(it - h.transversal.begin());
        h.image.push_back(tracked[i]);
        if (image[i] != static_cast<int>(i)) h.is_identity = false;
    }
    h.cycles = perm_cycles(image);
    return h;
}

MappingComplexStats mapping_complex_stats(const Spine& s, const SpineReport& report) {
    if (!(report.r1.pass && report.r2.pass && report.r3.pass && report.r4.pass))
        throw Error("mapping complex stats require a passing R1-R4 report");
    MappingComplexStats st;
    int64_t chi_sigma = s.sigma_vertices() - s.sigma_edges();
    st.chi = chi_sigma + s.L.components();
    // Naive cell count of the coned complex: vertices and edges of the
    // quotient and of L, one vertical edge per L-vertex, one square per
    // L-edge, one disk per component.
    int64_t V = s.sigma_vertices() + s.L.num_vertices();
    int64_t E = s.sigma_edges() + s.L.num_edges() + s.L.num_vertices();
    int64_t F = s.L.num_edges() + s.L.components();
    st.chi_naive = V - E + F;

    st.surface_applicable = (s.kind == Kind::simplicial && s.d == 2);
    if (st.surface_applicable) {
        st.surface_check = true;
        auto passages = collect_passages(s);
        auto stars = s.quotient.graph.stars();
        for (int64_t v = 0; v < s.sigma_vertices() && st.surface_check; ++v) {
            // Link graph: nodes are ends, passages are link edges; a closed
            // surface needs a single cycle through all ends.
            std::map<int64_t, std::vector<int64_t>> link;
            for (const auto& p : passages[v]) {
                link[p.end_a].push_back(p.end_b);
                link[p.end_b].push_back(p.end_a);
            }
            if (link.size() != stars[v].size()) {
                st.surface_check = false;
                break;
            }
            for (auto& [end, nbrs] : link)
                if (nbrs.size() != 2) st.surface_check = false;
            if (!st.surface_check) break;
            // Single cycle: walk it.
            int64_t start = link.begin()->first;
            int64_t prev = -1, cur2 = start;
            size_t visited = 0;
            do {
                int64_t nxt = (link[cur2][0] == prev) ? link[cur2][1] : link[cur2][0];
                prev = cur2;
                cur2 = nxt;
                ++visited;
                if (visited > link.size()) break;
            } while (cur2 != start);
            if (visited != link.size()) st.surface_check = false;
        }
    }
    return st;
}

int64_t min_topological_edge(const Spine& s) {
    auto stars = s.quotient.graph.stars();
    int64_t best = -1;
    std::vector<bool> swept(2 * s.sigma_edges(), false);
    for (int64_t v = 0; v < s.sigma_vertices(); ++v) {
        if (s.vertex_class[v] == VertexClass::internal) continue;
        for (int64_t start : stars[v]) {
            if (swept[start]) continue;
            int64_t cur = start, len = 1;
            swept[cur] = true;
            while (s.vertex_class[s.quotient.graph.target(cur)] == VertexClass::internal) {
                int64_t w = s.quotient.graph.target(cur);
                int64_t nxt = -1;
                for (int64_t cand : stars[w])
                    if (cand != (cur ^ 1)) nxt = cand;
                if (nxt < 0) break;
                cur = nxt;
                swept[cur] = true;
                ++len;
            }
            if (best < 0 || len < best) best = len;
        }
    }
    // Cycles made entirely of internal vertices.
    for (int64_t e = 0; e < s.sigma_edges(); ++e) {
        if (swept[2 * e] || swept[2 * e + 1]) continue;
        int64_t cur = 2 * e, len = 0;
        while (!swept[cur]) {
            swept[cur] = true;
            swept[cur ^ 1] = true;
            ++len;
            int64_t w = s.quotient.graph.target(cur);
            int64_t nxt = -1;
            for (int64_t cand : stars[w])
                if (cand != (cur ^ 1)) nxt = cand;
            if (nxt < 0) break;
            cur = nxt;
        }
        if (best < 0 || len < best) best = len;
    }
    return best;
}

}  // namespace spineforge::spine
