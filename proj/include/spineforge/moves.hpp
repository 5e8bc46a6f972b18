#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "spineforge/layout.hpp"
#include "spineforge/state.hpp"

namespace spineforge::moves {

using state::GluingState;
using state::Piece;
using state::PieceType;
using state::Run;

// ---------------------------------------------------------------- covering

enum class RowMode { cover, collapse };

// s columns of r consecutive reservoir beachballs; columns[c][row] lists the
// piece ids top to bottom, consecutive within one chain.
struct CoveringMatrix {
    std::vector<std::vector<int64_t>> columns;
};

// perms[j] describes p_j for the r+1 glued rows j = 0..r: dd permutations of
// the s columns (perms[j][slot][column] = new column). p_0 and p_r must be
// identities. row_modes has one entry per beachball row 1..r.
struct CoveringResult {
    std::vector<std::vector<int64_t>> row_pieces;  // per beachball row
    std::vector<int64_t> collapsed_segments;
};
CoveringResult covering_move(GluingState& st, const CoveringMatrix& m,
                             const std::vector<std::vector<std::vector<int>>>& perms,
                             const std::vector<RowMode>& row_modes);

// Elimination: dd columns x 3 rows; rows 1 and 3 turn into covering-type
// biparts, the middle row collapses into glued segments. Trades 2*dd
// beachballs for 2 biparts and eliminates dd beachballs.
struct TradeResult {
    std::vector<int64_t> pieces;
};
TradeResult elimination_move(GluingState& st, const CoveringMatrix& m);

// Rolling: 2 columns x 2 rows; trades 4 beachballs for 2 barrels.
TradeResult rolling_move(GluingState& st, const CoveringMatrix& m);

// -------------------------------------------------------------------- tear

// A vertex of the quotient addressed through a glued segment endpoint:
// end = 0 is where the strands start, end = 1 where they finish.
struct VertexRef {
    int64_t segment = -1;
    int end = 1;
};

struct TearResult {
    std::vector<int64_t> half_barrels;
    std::vector<int64_t> biparts;
    std::vector<int64_t> promoted_barrels;
    std::vector<int64_t> new_segments;
};

// Tears the remainder component whose vertices v and v2 are anchored by the
// given glued segments, consuming the two reservoir beachballs adjacent
// through those segments and the 3(dd-1) beachballs listed as consecutive
// chain triples (outer, middle, outer).
TearResult tear_move(GluingState& st, int64_t remainder_piece, VertexRef v,
                     VertexRef v2,
                     const std::vector<std::array<int64_t, 3>>& triples);

// ------------------------------------------------------------ cube gluings

// Assignment of reservoir beachballs to the antipodal-pair slots of one cube
// instance. Slot order follows CubeLayout::representatives(). For slot s,
// strand_of[s][p] names the beachball strand draped on flip path p, and
// orient[s] = 1 when the beachball's A-end sits at the antipode rather than
// at the representative.
struct CubeAssignment {
    std::vector<int64_t> beachballs;
    std::vector<std::vector<int>> strand_of;
    std::vector<int> orient;
};

struct GlueStats {
    int64_t consumed = 0;
    int64_t classes_created = 0;
};

// Drapes 2^{d-1} beachballs on the d-cube skeleton (simplicial case). Strand
// length must be divisible by d; cube edges acquire length (strand len)/d
// and exactly d strands each. Throws "hypercube labels illegal" when the
// words do not agree along some cube edge.
GlueStats hypercube_glue(GluingState& st, const layout::CubeLayout& cube,
                         const CubeAssignment& a, bool validate = true);

// Lens gluing (cubical, d >= 3): slots ordered by (base representative,
// height pair); beachball strands are matched to (base strand p, word sel)
// via strand_of[slot][2*p + sel].
GlueStats lens_glue(GluingState& st, const layout::LensLayout& lens,
                    const CubeAssignment& a, bool validate = true);

// Degenerate cubical d = 2 lens: two beachballs identified along a circle of
// two arcs. strand_of[slot] maps arc index 0/1 to the beachball strand.
GlueStats lens_glue_circle(GluingState& st, const CubeAssignment& a,
                           bool validate = true);

// -------------------------------------------------------------- spherical

// The spherical graph S(g): one 0-sphere per vertex, one joined pair of
// 0-spheres (4 edges) per edge. Vertex v lifts to 2v and 2v+1; edge e lifts
// to 4e + 2*(bit at u) + (bit at v).
rosegraph::LabeledGraph spherical_graph(const rosegraph::LabeledGraph& g);

// Height pairs re-exported for the CLI and tests.
using layout::height_pairs;
using layout::HeightPair;

}  // namespace spineforge::moves
