#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spineforge/common.hpp"
#include "spineforge/rosegraph.hpp"

namespace spineforge::state {

using rosegraph::CircleFamily;
using rosegraph::EdgePartition;

// Directed L-path: `len` unit edges starting at directed edge `start`,
// chained by dnext.
struct Run {
    int64_t start = -1;
    int64_t len = 0;
};

std::vector<int64_t> run_edges(const CircleFamily& L, const Run& r);
words::ReducedWord run_word(const CircleFamily& L, const Run& r);

// A glued segment: dd co-oriented strand runs of equal length, identified
// columnwise in the quotient.
struct GluedSegment {
    std::vector<Run> strands;
    bool alive = true;

    int64_t length() const { return strands.empty() ? 0 : strands.front().len; }
};

enum class PieceType : uint8_t {
    beachball,
    barrel,
    bipart,
    half_barrel,
    cover,
    remainder,
};

std::string piece_type_name(PieceType t);

// A piece of free material. Beachballs carry dd parallel strands; covers
// (barrels, biparts, generic covers) carry the free edges of a beachball
// cover whose topology is realized through the glued segments at their
// endpoints; remainder pieces carry the leftover even segments of one
// remainder component; half-barrels track torn beachballs.
struct Piece {
    PieceType type = PieceType::beachball;
    std::vector<Run> strands;
    bool alive = true;
    int64_t chain = -1;       // reservoir chain id, -1 when chainless
    int64_t chain_pos = -1;   // index within the chain
    int64_t cover_degree = 1; // covering degree for barrel/bipart/cover
    std::vector<int> subsets; // cubical copy-subset per strand (optional)
};

// Reservoir chain: cyclic alternation seg[0], piece[0], seg[1], piece[1], ...
// seg[i] immediately precedes piece[i] along L; open chains (after surgery)
// set `cyclic` false, in which case seg.size() == pieces.size() + 1 and
// seg.back() trails the last piece.
struct Chain {
    std::vector<int64_t> segments;
    std::vector<int64_t> pieces;
    bool cyclic = true;
};

struct BuildParamsCore {
    Kind kind = Kind::simplicial;
    int d = 2;
    int k = 3;
    int64_t lambda = 8;  // unit segment length used by this state
    int64_t bigN = 64;
};

class GluingState {
public:
    BuildParamsCore params;
    CircleFamily L;

    std::vector<GluedSegment> segments;
    std::vector<Piece> pieces;
    std::vector<Chain> chains;
    // Classes added by the reservoir gluings (unit-level directed ids).
    std::vector<std::vector<int64_t>> extra_classes;
    // Elimination bookkeeping for symmetrization: component -> collapsed mass.
    std::vector<int64_t> elimination_ledger;
    std::vector<std::string> trace;

    int dd() const { return gluing_multiplicity(params.kind, params.d); }

    int64_t add_segment(GluedSegment s);
    int64_t add_piece(Piece p);

    // Materialized partition: one class per glued-segment column plus the
    // extra classes.
    EdgePartition partition() const;
    rosegraph::Quotient quotient() const;  // throws when illegal
    void assert_legal() const;

    // Every L-edge must be owned exactly once by a live segment strand or a
    // live piece strand. Throws on violation; returns total mass.
    int64_t audit_mass() const;

    int64_t live_piece_count(PieceType t) const;
    int64_t free_edge_count() const;  // edges owned by live pieces

    void log(const std::string& line) { trace.push_back(line); }

    // Chain navigation: the glued segment before/after a reservoir piece.
    int64_t segment_before(int64_t piece_id) const;
    int64_t segment_after(int64_t piece_id) const;
    // The reservoir piece after/before a given piece in its chain, or -1.
    int64_t piece_after(int64_t piece_id) const;
    int64_t piece_before(int64_t piece_id) const;

    // Remove a piece from its chain, leaving the chain open at that point.
    void detach_from_chain(int64_t piece_id);
};

}  // namespace spineforge::state
