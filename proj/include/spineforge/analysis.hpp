#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spineforge/spine.hpp"
#include "spineforge/words.hpp"

namespace spineforge::analysis {

using words::Letter;
using words::Presentation;
using words::ReducedWord;

// ------------------------------------------------------------------ pieces

// Longest common subword between two distinct occurrences over the
// symmetrized set (all relators, cyclic rotations, inverses), divided by n.
// An occurrence is (relator, cyclic offset, direction); a word matching at
// the same occurrence only is not a piece.
struct PieceStats {
    int64_t max_piece = 0;
    double ratio = 0.0;
};
PieceStats pieces_ratio(const Presentation& p);

// --------------------------------------------------------- bead structure

struct BeadDecomposition {
    int64_t m = 0;        // number of (r_i, s_i) factors, divisible by dd
    int64_t r_len = 0;    // nominal |r_i| (last factor absorbs rounding)
    int64_t s_len = 0;    // nominal |s_i|
    int64_t lip_len = 0;  // ceil(C log n)
    // Factor start offsets: factor i spans [starts[2i], starts[2i]+...)
    std::vector<int64_t> r_starts, s_starts;
    // One lip per residue class i of s-blocks: the common word and its
    // occurrence offset inside each designated s-block.
    struct Lip {
        ReducedWord word;
        std::vector<int64_t> offsets;  // position in r, one per block
    };
    std::vector<Lip> lips;
    bool lips_gluable = false;  // the lip classes glue into a legal quotient
    std::vector<int64_t> piece_masses;  // arcs between consecutive lip runs
};

// Factorize r = r_1 s_1 ... r_m s_m and search each residue family
// s_i, s_{i+m/dd}, ... for a common subword of length ceil(C log n).
// Throws "no lip found" (reporting the longest common length) when some
// family has none; throws on C >= delta / log(2k-1).
BeadDecomposition bead_decompose(const ReducedWord& r, double delta, double C,
                                 int dd, int k, uint64_t seed);

// --------------------------------------------------- long subword lifting

struct LiftCheckResult {
    enum class Verdict { lifts, counterexample, inconclusive };
    Verdict verdict = Verdict::lifts;
    // Witness for a counterexample: start quotient edge (directed) and the
    // occurrence offset in r (offsets >= n refer to the inverse word).
    int64_t witness_edge = -1;
    int64_t witness_offset = -1;
    int64_t paths_checked = 0;
};

// Checks that every immersed quotient path of length ceil(beta * n) whose
// label word occurs cyclically in r or r^{-1} lifts to L. `node_cap` bounds
// the exploration; exceeding it yields the inconclusive verdict.
LiftCheckResult long_subword_lift_check(const spine::Spine& s, double beta,
                                        int64_t node_cap = 50000000);

}  // namespace spineforge::analysis
