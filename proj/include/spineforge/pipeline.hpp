#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spineforge/moves.hpp"
#include "spineforge/spine.hpp"
#include "spineforge/state.hpp"

namespace spineforge::pipeline {

using state::GluingState;
using words::ReducedWord;

struct BuildParams {
    Kind kind = Kind::simplicial;
    int d = 2;
    int k = 3;
    int64_t lambda = 0;        // 0: default 4*dd
    int64_t bigN = 0;          // 0: default 8*lambda
    int64_t copies = 0;        // 0: derived (1 simplicial, dd cubical)
    int64_t groups = 2;        // matching groups per circle (even)
    uint64_t seed = 1;
    int64_t retry_budget = 256;

    int dd() const { return gluing_multiplicity(kind, d); }
    // Dimension of the draping skeleton: d for the simplicial cube, d-1 for
    // the cubical lens, 1 for the degenerate cubical d = 2 circle.
    int cube_dim() const {
        if (kind == Kind::simplicial) return d;
        return d >= 3 ? d - 1 : 1;
    }
    int64_t lambda_or_default() const { return lambda > 0 ? lambda : 4 * dd(); }
    int64_t bigN_or_default() const {
        return bigN > 0 ? bigN : 8 * lambda_or_default();
    }
    // Internal segment length: cube edges come out at exactly lambda.
    int64_t Lambda() const {
        int cd = cube_dim();
        return (kind == Kind::cubical && d == 2) ? lambda_or_default()
                                                 : lambda_or_default() * cd;
    }
    int64_t copies_or_default() const {
        if (copies > 0) return copies;
        return kind == Kind::simplicial ? 1 : dd();
    }
    // Relator length per circle.
    int64_t n() const { return groups * dd() * Lambda() * bigN_or_default(); }
    // Beachballs consumed per draping instance.
    int64_t per_instance() const {
        if (kind == Kind::simplicial) return int64_t(1) << (d - 1);
        return d == 2 ? 2 : int64_t(4) << (d - 2);
    }

    void validate() const;
};

// Deterministic structured relator admitting a complete block matching and
// an exact draping of its beachball inventory. Every pipeline stage still
// searches and verifies on the word alone.
ReducedWord sample_buildable_relator(const BuildParams& p);

// Variant for the move fuzzer: a single shared odd word and tuple-contiguous
// block layout, so covering/tear preconditions are widely satisfiable and
// the remainder genuinely needs tearing.
ReducedWord sample_fuzz_relator(const BuildParams& p);

// ------------------------------------------------------------------ stages

struct BlockRef {
    int64_t circle = 0;
    int64_t block = 0;
    bool operator==(const BlockRef&) const = default;
    auto operator<=>(const BlockRef&) const = default;
};

struct BlockStructure {
    int64_t blocks_per_circle = 0;
    int64_t segment_len = 0;   // Lambda
    int64_t segments_per_block = 0;  // N
    // Start position of block b in circle c: b * segment_len * N.
    int64_t block_start(const BlockRef& b) const {
        return b.block * segment_len * segments_per_block;
    }
};

struct Matching {
    // Each tuple lists dd blocks in slot order (cubical: slot = copy subset).
    std::vector<std::vector<BlockRef>> tuples;
    std::vector<BlockRef> unmatched;
};

GluingState initial_state(const ReducedWord& r, const BuildParams& p);

// rho = n mod (Lambda*N) must vanish for the end-to-end pipeline; the
// standalone operation glues dd planted copies of a subword of length
// Lambda*N + rho across distinct circles and returns the pregluing segment.
struct NormalizeResult {
    int64_t rho = 0;
    int64_t segment = -1;  // -1 when rho == 0
};
NormalizeResult normalize_length(GluingState& st, const BuildParams& p);

BlockStructure segment_blocks(const GluingState& st, const BuildParams& p);

Matching match_blocks(const GluingState& st, const BlockStructure& bs,
                      const BuildParams& p, uint64_t salt = 0);

// Supercompatible resolution via copies; returns the rebuilt state and
// matching with the copy multiplier applied (no-op when nothing unmatched).
struct ResolveResult {
    GluingState st;
    Matching matching;
    int64_t copy_multiplier = 1;
};
ResolveResult resolve_unmatched(const GluingState& st, const BlockStructure& bs,
                                const Matching& m, const BuildParams& p);

void glue_matched(GluingState& st, const BlockStructure& bs, const Matching& m);

// Converts the remainder into reservoir material: beachball-shaped
// components are promoted directly; others go through tear moves.
void clear_remainder(GluingState& st, const BuildParams& p);

// Consumes the whole reservoir through hypercube / lens gluings discovered
// from the labels; throws a stage error when material cannot be placed.
void glue_reservoir(GluingState& st, const BuildParams& p, uint64_t salt = 0);

// Verifies the R4 balance (per-component genuine visits).
void symmetrize(GluingState& st);

struct BuildResult {
    spine::Spine spine;
    spine::SpineReport report;
    std::vector<std::string> trace;
    int64_t cocycle_attempts = 0;
};

// Full pipeline: normalize, segment, match, resolve, glue, clear remainder,
// glue reservoir, symmetrize, adjust cocycles. Throws Error tagged with the
// failing stage.
BuildResult build_spine(const ReducedWord& r, const BuildParams& p);

// Cocycle adjustment: bounded search over matching perturbations and
// reservoir-assignment salts until every component holonomy is trivial.
// Exposed for tests; build_spine calls it internally.
struct CocycleAdjustment {
    GluingState st;
    int64_t attempts = 0;
};
CocycleAdjustment adjust_cocycles(const GluingState& base_state,
                                  const BlockStructure& bs, const Matching& m,
                                  const BuildParams& p);

}  // namespace spineforge::pipeline
