#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spineforge/common.hpp"
#include "spineforge/rosegraph.hpp"

namespace spineforge::spine {

using rosegraph::CircleFamily;
using rosegraph::EdgePartition;
using rosegraph::Quotient;
using spineforge::Kind;

enum class VertexClass : uint8_t { internal, genuine, invalid };

// Fiber of a quotient edge: its strands are directed L-edges co-oriented
// with the edge's forward direction. `labels` is a bijection onto
// 1..strands.size(); `antipode` (cubical only) stores, per strand index,
// the index of the antipodal strand, or stays empty when no coherent
// pairing exists.
struct FiberModule {
    std::vector<int64_t> strands;
    std::vector<int> labels;
    std::vector<int> antipode;
};

struct Spine {
    Kind kind = Kind::simplicial;
    int d = 2;
    int k = 2;
    CircleFamily L;
    EdgePartition partition;
    Quotient quotient;
    std::vector<FiberModule> fibers;
    std::vector<VertexClass> vertex_class;

    int dd() const { return kind == Kind::simplicial ? d : 2 * (d - 1); }
    int genuine_valence() const { return kind == Kind::simplicial ? d + 1 : 2 * d; }
    int64_t sigma_vertices() const { return quotient.graph.num_vertices; }
    int64_t sigma_edges() const { return quotient.graph.num_edges(); }
};

// Applies the partition (throws on illegal quotients) and derives fibers and
// vertex classes. Fiber antipodal pairings are derived during
// check_regularity; make_spine leaves them empty.
Spine make_spine(Kind kind, int d, int k, CircleFamily L, EdgePartition partition);

struct ConditionReport {
    bool pass = true;
    std::vector<std::string> witnesses;

    void fail(std::string witness) {
        pass = false;
        if (witnesses.size() < 16) witnesses.push_back(std::move(witness));
    }
};

struct SpineReport {
    ConditionReport r1, r2, r3, r4, r5;
    std::vector<int64_t> per_component_m;
    int64_t m = -1;                      // common genuine-visit count when R4 passes
    int64_t min_top_edge = -1;
    std::vector<std::string> holonomies; // one per component; "id" or cycle notation

    bool regular() const { return r1.pass && r2.pass && r3.pass && r4.pass && r5.pass; }
};

std::vector<VertexClass> classify_vertices(const Spine& s,
                                           ConditionReport* r1 = nullptr);

// Full verification of the defining conditions. Populates the derived
// cubical fiber pairings on `s` when coherent. Violations are reported,
// never thrown.
SpineReport check_regularity(Spine& s, std::optional<int64_t> expected_m = {});

// Transversal parallel transport at a genuine vertex. Edges at the vertex
// are addressed by their departing directed quotient-edge ids ("ends");
// `in_end` is the end along which the driving strand arrived (i.e. the
// reversal of its arrival direction) and `out_end` the end it leaves by.
// Returns pairs (strand, image): directed L-edges pointing into the vertex
// over in_end's edge, mapped to directed L-edges departing along out_end.
struct Transport {
    std::vector<std::pair<int64_t, int64_t>> mapping;
};
Transport transversal_transport(const Spine& s, int64_t vertex, int64_t in_end,
                                int64_t out_end);

// Holonomy of the transversal connection around one component of L, in the
// trivialization given by the fiber over the component's first edge.
struct Holonomy {
    std::vector<int64_t> transversal;  // directed L-edges at the base edge
    std::vector<int64_t> image;        // image[i] = final position of transversal[i]
    bool is_identity = false;
    std::string cycles;                // "id" or e.g. "(0 2 1)"
};
Holonomy cocycle_holonomy(const Spine& s, int64_t component);

struct MappingComplexStats {
    int64_t chi = 0;
    int64_t chi_naive = 0;   // V - E + F over the explicit cell structure
    bool surface_applicable = false;
    bool surface_check = false;
};
// Requires a passing report for R1-R4 (throws otherwise).
MappingComplexStats mapping_complex_stats(const Spine& s, const SpineReport& report);

// Shortest maximal internal path (topological edge) length; cycles of
// internal vertices count with their full length.
int64_t min_topological_edge(const Spine& s);

}  // namespace spineforge::spine
