#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spineforge/error.hpp"

namespace spineforge::layout {

// Combinatorics of draping beachballs on hypercube skeletons.
//
// The 1-skeleton C of the dim-cube hosts one beachball per antipodal vertex
// pair {w, w-bar}: dim monotone paths from w to w-bar, path p flipping
// coordinates in the order flip_orders[p]. The flip orders are the rotations
// of a zigzag sequence, whose consecutive-direction transitions decompose
// the doubled complete graph on directions; together with the right choice
// of representative w per pair this makes every cube edge carry exactly dim
// strands and every unordered direction pair at every vertex carry exactly
// one strand passage.

std::vector<std::vector<int>> strand_flip_orders(int dim);

// Representative rule: w anchors its pair iff popcount(w & mask) is even.
// Throws when no linear mask satisfies the coverage conditions.
uint32_t representative_mask(int dim);

inline bool is_representative(uint32_t vertex, uint32_t mask) {
    return (__builtin_popcount(vertex & mask) & 1) == 0;
}

struct CubeLayout {
    int dim = 0;
    uint32_t rep_mask = 0;
    std::vector<std::vector<int>> flip_orders;

    int64_t num_vertices() const { return int64_t(1) << dim; }
    int64_t num_pairs() const { return int64_t(1) << (dim - 1); }
    int64_t num_edges() const { return int64_t(dim) << (dim - 1); }

    // Edge in direction j with lower endpoint u (bit j of u clear).
    int64_t edge_id(uint32_t u, int j) const;
    // Inverse of edge_id.
    std::pair<uint32_t, int> edge_of(int64_t id) const;

    bool representative(uint32_t v) const { return is_representative(v, rep_mask); }
    uint32_t antipode(uint32_t v) const {
        return v ^ static_cast<uint32_t>((int64_t(1) << dim) - 1);
    }
    // Representatives in increasing vertex order, one per antipodal pair.
    std::vector<uint32_t> representatives() const;

    // Coordinates flipped before step t of path p (t = 0..dim).
    uint32_t prefix_mask(int p, int t) const;
    // Vertex sequence of strand p from representative w (dim+1 vertices).
    std::vector<uint32_t> strand_vertices(uint32_t w, int p) const;
};

CubeLayout make_cube_layout(int dim);

struct LayoutCheck {
    bool ok = true;
    std::string detail;
};

// Structural validation: every edge carries exactly dim strands; at every
// vertex the strand ends occupy all dim directions and interior passages
// cover every unordered direction pair exactly once.
LayoutCheck verify_cube_layout(const CubeLayout& c);

// Height pairs: the four pairs of length-d binary words prescribing the two
// lifts of each beachball edge in the lens gluing. d >= 3 (d = 2 degenerate).
struct HeightPair {
    std::vector<int> a, b;
};
std::vector<HeightPair> height_pairs(int d);
// Parity bit used in the third and fourth pairs (1 for odd d, 0 for even d).
int height_parity_bit(int d);

// Lens layout for cubical dimension d >= 3: beachballs of degree 2(d-1)
// draped on the spherical graph S(C) of the (d-1)-cube. Upstairs vertex
// (u, bit) has id 2*u + bit; the lift of base edge E with bits (bl, bh) at
// the lower/upper base endpoints has id 4*E + 2*bl + bh.
struct LensLayout {
    int d = 0;
    CubeLayout base;                // dim = d-1
    std::vector<HeightPair> pairs;  // 4
    // Copy-subset classes: subset_sign[g][sel] in 0..1 assigns the two lifts
    // (sel = 0 for word a, 1 for word b) of every base strand to opposite
    // antipodal subset halves, constant in the strand index. Such a global
    // coloring exists only for d <= 4; subset_ok records whether it does.
    int subset_sign[4][2] = {};
    bool subset_ok = false;

    int64_t num_vertices() const { return 2 * base.num_vertices(); }
    int64_t num_edges() const { return 4 * base.num_edges(); }
    int dd() const { return 2 * (d - 1); }

    int64_t lift_vertex(uint32_t u, int bit) const { return 2 * int64_t(u) + bit; }
    int64_t lift_edge(int64_t base_edge, int low_bit, int high_bit) const {
        return 4 * base_edge + 2 * low_bit + high_bit;
    }
    // Upstairs edge ids along the lift of strand p from representative w by
    // word h (h has d bits), plus per-step traversal direction (true = from
    // the step's lower base vertex).
    struct LiftStep {
        int64_t edge;
        bool upward;
    };
    std::vector<LiftStep> lift_steps(uint32_t w, int p, const std::vector<int>& h) const;
};

LensLayout make_lens_layout(int d);

// Layout-level local verification of the lens structure: per-lift strand
// counts, vertex valences including the two stems, exact non-antipodal pair
// coverage, and the antipodal zero pattern.
LayoutCheck verify_lens_layout(const LensLayout& l);

}  // namespace spineforge::layout
