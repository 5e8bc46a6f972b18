#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spineforge/words.hpp"

namespace spineforge::rosegraph {

using words::Letter;
using words::ReducedWord;

struct UnionFind {
    std::vector<int64_t> parent;

    explicit UnionFind(size_t n = 0) : parent(n, -1) {}

    int64_t find(int64_t x) {
        int64_t root = x;
        while (parent[root] >= 0) root = parent[root];
        while (parent[x] >= 0) {
            int64_t next = parent[x];
            parent[x] = root;
            x = next;
        }
        return root;
    }

    // Smallest-id representative wins, for reproducible canonical labels.
    bool unite(int64_t a, int64_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (a > b) std::swap(a, b);
        parent[a] += parent[b];
        parent[b] = a;
        return true;
    }
};

// Graph over the rose: vertices 0..V-1, undirected edges carrying a Letter
// for their forward orientation. Directed edge id = 2*edge + dir, dir 1
// meaning the reversed orientation (label inverted).
struct LabeledGraph {
    struct Edge {
        int64_t u = 0, v = 0;
        Letter label;  // for the u -> v direction
    };

    int64_t num_vertices = 0;
    std::vector<Edge> edges;

    int64_t num_edges() const { return static_cast<int64_t>(edges.size()); }

    static int64_t forward(int64_t e) { return 2 * e; }
    static int64_t reversed(int64_t e) { return 2 * e + 1; }
    static int64_t underlying(int64_t de) { return de / 2; }
    static int64_t reverse_dir(int64_t de) { return de ^ 1; }

    int64_t source(int64_t de) const { return (de & 1) ? edges[de / 2].v : edges[de / 2].u; }
    int64_t target(int64_t de) const { return (de & 1) ? edges[de / 2].u : edges[de / 2].v; }
    Letter dir_label(int64_t de) const {
        const Letter& l = edges[de / 2].label;
        return (de & 1) ? l.inverse() : l;
    }

    // Departing directed edges per vertex, in increasing directed-id order.
    std::vector<std::vector<int64_t>> stars() const;
};

struct ImmersionViolation {
    int64_t vertex = 0;
    Letter label;
};

// True iff no vertex has two departing directed edges with equal labels.
// On failure returns the first violation in (vertex, label) order.
std::optional<ImmersionViolation> immersion_violation(const LabeledGraph& g);
bool is_immersed(const LabeledGraph& g);

// The graph L: `components` disjoint circles, each spelling the cyclic word
// r. Edge (c, p) runs from vertex (c, p) to (c, p+1 mod n) with label r[p].
class CircleFamily {
public:
    CircleFamily() = default;
    CircleFamily(ReducedWord word, int64_t components);

    const ReducedWord& word() const { return word_; }
    int64_t components() const { return components_; }
    int64_t length() const { return static_cast<int64_t>(word_.size()); }
    int64_t num_edges() const { return components_ * length(); }
    int64_t num_vertices() const { return components_ * length(); }

    int64_t edge_id(int64_t component, int64_t pos) const { return component * length() + pos; }
    int64_t vertex_id(int64_t component, int64_t pos) const { return component * length() + pos; }
    int64_t edge_component(int64_t e) const { return e / length(); }
    int64_t edge_pos(int64_t e) const { return e % length(); }

    Letter label(int64_t e) const { return word_.at(static_cast<size_t>(edge_pos(e))); }

    // Directed-edge endpoints and labels; directed id = 2*edge + dir.
    int64_t dsource(int64_t de) const;
    int64_t dtarget(int64_t de) const;
    Letter dlabel(int64_t de) const {
        Letter l = label(de / 2);
        return (de & 1) ? l.inverse() : l;
    }
    // The directed edge that continues `de` along its circle (next edge in
    // the direction of travel).
    int64_t dnext(int64_t de) const;
    int64_t dprev(int64_t de) const;

    LabeledGraph to_graph() const;

private:
    ReducedWord word_;
    int64_t components_ = 0;
};

CircleFamily circles_from_word(const ReducedWord& r, int64_t copies);

// Partition of the directed edges of a CircleFamily into orientation-aligned
// classes. A class lists directed edge ids; every listed edge is identified
// with the others co-orientedly. Each underlying edge appears in at most one
// class (via either orientation). Unlisted edges are singleton ("free").
struct EdgePartition {
    std::vector<std::vector<int64_t>> classes;

    // Class sizes must be 1 or expected_size when expected_size > 0.
    void validate_sizes(int64_t expected_size) const;
};

struct Quotient {
    LabeledGraph graph;
    std::vector<int64_t> vertex_map;               // L-vertex -> quotient vertex
    std::vector<int64_t> edge_map;                 // L-directed-edge -> quotient directed edge
    std::vector<std::vector<int64_t>> fibers;      // quotient edge -> L-directed ids, co-oriented
};

// Collapse each class to a single edge, identifying endpoints accordingly.
// Throws "inconsistent labels" if a class mixes oriented labels and
// "illegal quotient" (with the violating vertex) if the result is not
// immersed. Vertex/edge ids in the quotient are canonical
// smallest-representative labels, densely renumbered in increasing order.
Quotient apply_partition(const CircleFamily& L, const EdgePartition& p);

// Same construction for an arbitrary labeled graph (used by the fold oracle
// comparisons and move internals).
Quotient apply_partition(const LabeledGraph& g, const EdgePartition& p);

}  // namespace spineforge::rosegraph
