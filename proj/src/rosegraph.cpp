#include "spineforge/rosegraph.hpp"

#include <algorithm>
#include <functional>

namespace spineforge::rosegraph {

std::vector<std::vector<int64_t>> LabeledGraph::stars() const {
    std::vector<std::vector<int64_t>> st(num_vertices);
    for (int64_t e = 0; e < num_edges(); ++e) {
        st[edges[e].u].push_back(forward(e));
        st[edges[e].v].push_back(reversed(e));
    }
    return st;
}

std::optional<ImmersionViolation> immersion_violation(const LabeledGraph& g) {
    auto st = g.stars();
    for (int64_t v = 0; v < g.num_vertices; ++v) {
        std::vector<int> seen;
        for (int64_t de : st[v]) {
            int packed = g.dir_label(de).packed();
            if (std::find(seen.begin(), seen.end(), packed) != seen.end())
                return ImmersionViolation{v, g.dir_label(de)};
            seen.push_back(packed);
        }
    }
    return std::nullopt;
}

bool is_immersed(const LabeledGraph& g) { return !immersion_violation(g).has_value(); }

CircleFamily::CircleFamily(ReducedWord word, int64_t components)
    : word_(std::move(word)), components_(components) {
    if (components_ < 1) throw Error("circle family needs at least one component");
    if (!words::is_reduced(word_, true)) throw Error("word is not cyclically reduced");
    if (word_.empty()) throw Error("circle family needs a nonempty word");
}

int64_t CircleFamily::dsource(int64_t de) const {
    int64_t e = de / 2;
    int64_t c = edge_component(e), p = edge_pos(e);
    return (de & 1) ? vertex_id(c, (p + 1) % length()) : vertex_id(c, p);
}

int64_t CircleFamily::dtarget(int64_t de) const { return dsource(de ^ 1); }

int64_t CircleFamily::dnext(int64_t de) const {
    int64_t e = de / 2;
    int64_t c = edge_component(e), p = edge_pos(e);
    if (de & 1) return 2 * edge_id(c, (p + length() - 1) % length()) + 1;
    return 2 * edge_id(c, (p + 1) % length());
}

int64_t CircleFamily::dprev(int64_t de) const { return dnext(de ^ 1) ^ 1; }

LabeledGraph CircleFamily::to_graph() const {
    LabeledGraph g;
    g.num_vertices = num_vertices();
    g.edges.reserve(num_edges());
    for (int64_t c = 0; c < components_; ++c)
        for (int64_t p = 0; p < length(); ++p)
            g.edges.push_back({vertex_id(c, p), vertex_id(c, (p + 1) % length()),
                               word_.at(static_cast<size_t>(p))});
    return g;
}

CircleFamily circles_from_word(const ReducedWord& r, int64_t copies) {
    return CircleFamily(ReducedWord(r.letters(), true), copies);
}

void EdgePartition::validate_sizes(int64_t expected_size) const {
    for (const auto& cls : classes) {
        auto sz = static_cast<int64_t>(cls.size());
        if (sz != 1 && sz != expected_size)
            throw Error("partition class size " + std::to_string(sz) + " (expected 1 or " +
                        std::to_string(expected_size) + ")");
    }
}

namespace {

Quotient build_quotient(int64_t num_vertices, int64_t num_edges,
                        const std::function<int64_t(int64_t)>& dsource,
                        const std::function<Letter(int64_t)>& dlabel,
                        const EdgePartition& p) {
    UnionFind vertices(num_vertices);
    UnionFind redges(num_edges);

    std::vector<int8_t> in_class(num_edges, 0);
    // Orientation of each underlying edge relative to its class representative:
    // 0 = listed forward, 1 = listed reversed.
    std::vector<int8_t> flip(num_edges, 0);

    for (const auto& cls : p.classes) {
        if (cls.empty()) throw Error("empty partition class");
        Letter ref = dlabel(cls.front());
        for (int64_t de : cls) {
            if (de < 0 || de >= 2 * num_edges) throw Error("directed edge id out of range");
            if (!(dlabel(de) == ref)) throw Error("inconsistent labels in partition class");
            int64_t e = de / 2;
            if (in_class[e]) throw Error("edge listed in two partition classes");
            in_class[e] = 1;
            flip[e] = static_cast<int8_t>(de & 1);
        }
        int64_t d0 = cls.front();
        for (size_t i = 1; i < cls.size(); ++i) {
            vertices.unite(dsource(d0), dsource(cls[i]));
            vertices.unite(dsource(d0 ^ 1), dsource(cls[i] ^ 1));
            redges.unite(d0 / 2, cls[i] / 2);
        }
    }

    // Dense renumbering in increasing canonical-representative order.
    std::vector<int64_t> vmap(num_vertices, -1);
    int64_t vcount = 0;
    for (int64_t v = 0; v < num_vertices; ++v)
        if (vertices.find(v) == v) vmap[v] = vcount++;
    for (int64_t v = 0; v < num_vertices; ++v) vmap[v] = vmap[vertices.find(v)];

    std::vector<int64_t> emap_fwd(num_edges, -1);  // underlying edge -> quotient edge
    int64_t ecount = 0;
    for (int64_t e = 0; e < num_edges; ++e)
        if (redges.find(e) == e) emap_fwd[e] = ecount++;
    for (int64_t e = 0; e < num_edges; ++e) emap_fwd[e] = emap_fwd[redges.find(e)];

    Quotient q;
    q.graph.num_vertices = vcount;
    q.graph.edges.resize(ecount);
    q.fibers.assign(ecount, {});
    q.vertex_map = vmap;
    q.edge_map.assign(2 * num_edges, -1);

    for (int64_t e = 0; e < num_edges; ++e) {
        // Class members are listed co-oriented; the quotient edge adopts the
        // representative's listed direction.
        int64_t rep = redges.find(e);
        int64_t de_fwd = 2 * e + flip[e];
        int64_t qe = emap_fwd[e];
        q.edge_map[de_fwd] = 2 * qe;
        q.edge_map[de_fwd ^ 1] = 2 * qe + 1;
        if (e == rep) {
            int64_t canon = 2 * e + flip[e];
            q.graph.edges[qe] =
                {vmap[dsource(canon)], vmap[dsource(canon ^ 1)], dlabel(canon)};
        }
    }
    for (int64_t e = 0; e < num_edges; ++e)
        q.fibers[emap_fwd[e]].push_back(2 * e + flip[e]);
    for (auto& f : q.fibers) std::sort(f.begin(), f.end());

    auto violation = immersion_violation(q.graph);
    if (violation)
        throw Error("illegal quotient: not immersed at vertex " +
                    std::to_string(violation->vertex) + " (label " +
                    std::string(1, words::letter_to_char(violation->label)) + ")");
    return q;
}

}  // namespace

Quotient apply_partition(const CircleFamily& L, const EdgePartition& p) {
    return build_quotient(
        L.num_vertices(), L.num_edges(), [&](int64_t de) { return L.dsource(de); },
        [&](int64_t de) { return L.dlabel(de); }, p);
}

Quotient apply_partition(const LabeledGraph& g, const EdgePartition& p) {
    return build_quotient(
        g.num_vertices, g.num_edges(), [&](int64_t de) { return g.source(de); },
        [&](int64_t de) { return g.dir_label(de); }, p);
}

}  // namespace spineforge::rosegraph
