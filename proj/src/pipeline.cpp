#include "spineforge/pipeline.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "spineforge/layout.hpp"
#include "spineforge/rng.hpp"

namespace spineforge::pipeline {

using layout::CubeLayout;
using layout::LensLayout;
using rosegraph::CircleFamily;
using state::Chain;
using state::GluedSegment;
using state::Piece;
using state::PieceType;
using state::Run;
using words::Letter;

void BuildParams::validate() const {
    if (d < 2) throw Error("dimension must be at least 2", "config");
    if (k < 2) throw Error("rank too small", "config");
    int need = kind == Kind::simplicial ? d + 1 : 2 * d + 1;
    if (2 * k - 1 < need)
        throw Error("rank too small: need 2k-1 >= " + std::to_string(need) +
                        " for " + kind_name(kind) + " d=" + std::to_string(d),
                    "config");
    int64_t lam = lambda_or_default();
    if (lam % dd() != 0)
        throw Error("lambda must be divisible by the gluing multiplicity", "config");
    if (bigN_or_default() % 2 != 0) throw Error("N must be even", "config");
    if (groups < 2 || groups % 2 != 0)
        throw Error("matching groups must be even and at least 2", "config");
    if ((bigN_or_default() / 2) % per_instance() != 0)
        throw Error("N/2 beachballs per group must fill draping instances exactly",
                    "config");
    // The alphabet must accommodate the departure letters at genuine vertices.
    int departures = kind == Kind::simplicial ? d + 1 : 2 * d;
    if (departures > 2 * k)
        throw Error("alphabet too small for genuine-vertex departures", "config");
}

namespace {

// ------------------------------------------------------------ letter utils

std::vector<Letter> full_alphabet(int k) {
    std::vector<Letter> a;
    for (int g = 1; g <= k; ++g) {
        a.push_back(Letter{g, +1});
        a.push_back(Letter{g, -1});
    }
    return a;
}

// Reduced word of the given length with prescribed first and last letters
// (len >= 3, or len >= 1 with compatible constraints).
std::vector<Letter> word_with_ends(int k, int64_t len, Letter first, Letter last,
                                   Rng& rng) {
    if (len == 1) {
        if (!(first == last)) throw Error("length-1 word with distinct ends");
        return {first};
    }
    std::vector<Letter> w;
    w.push_back(first);
    for (int64_t t = 1; t + 1 < len; ++t) {
        // Keep one step of lookahead so the final letter stays attachable.
        for (;;) {
            Letter cand = words::random_reduced_word(k, 1, rng).letters()[0];
            if (words::cancels(w.back(), cand)) continue;
            if (t + 2 == len && words::cancels(cand, last)) continue;
            w.push_back(cand);
            break;
        }
    }
    if (words::cancels(w.back(), last)) throw Error("word ends cancel");
    w.push_back(last);
    return w;
}

// ------------------------------------------------------- instance labeling

// Labels for one draping instance. Simplicial: one word per cube edge
// (oriented lower -> upper vertex) plus a stem letter per cube vertex.
// Cubical d >= 3: one word per lift edge plus two stem letters per upstairs
// vertex. Cubical d = 2: two arc words plus two stem letters at each of the
// two circle vertices.
struct InstanceLabels {
    std::vector<std::vector<Letter>> edge_words;
    std::vector<std::array<Letter, 2>> stem_letters;  // [vertex][slot]
};

struct LayoutCache {
    BuildParams p;
    CubeLayout cube;       // simplicial
    LensLayout lens;       // cubical d >= 3
    std::vector<uint32_t> reps;

    explicit LayoutCache(const BuildParams& params) : p(params) {
        if (p.kind == Kind::simplicial) {
            cube = layout::make_cube_layout(p.d);
            reps = cube.representatives();
        } else if (p.d >= 3) {
            lens = layout::make_lens_layout(p.d);
            reps = lens.base.representatives();
        }
    }

    int64_t edge_len() const { return p.lambda_or_default(); }

    // Height beachballs touching an upstairs vertex (u, bit), ascending.
    std::array<int, 2> heights_at(uint32_t u, int bit) const {
        std::array<int, 2> out{-1, -1};
        int n = 0;
        bool at_rep = lens.base.representative(u);
        for (int g = 0; g < 4; ++g) {
            int b = at_rep ? lens.pairs[g].a.front() : lens.pairs[g].a.back();
            if (b == bit) out[n++] = g;
        }
        return out;
    }
};

InstanceLabels make_instance_labels(const LayoutCache& lc, Rng rng) {
    const BuildParams& p = lc.p;
    InstanceLabels lab;
    auto alphabet = full_alphabet(p.k);
    auto shuffled = [&](Rng& r) {
        auto a = alphabet;
        for (size_t i = a.size(); i > 1; --i) std::swap(a[i - 1], a[r.below(i)]);
        return a;
    };

    if (p.kind == Kind::simplicial) {
        const CubeLayout& c = lc.cube;
        int64_t V = c.num_vertices();
        // Departure letters: directions 0..d-1 then the stem.
        std::vector<std::vector<Letter>> dep(V);
        for (int64_t u = 0; u < V; ++u) {
            Rng r = rng.split(0x100 + u);
            auto a = shuffled(r);
            dep[u].assign(a.begin(), a.begin() + p.d + 1);
        }
        lab.stem_letters.resize(V);
        for (int64_t u = 0; u < V; ++u) lab.stem_letters[u] = {dep[u][p.d], dep[u][p.d]};
        lab.edge_words.resize(c.num_edges());
        for (int64_t e = 0; e < c.num_edges(); ++e) {
            auto [u, j] = c.edge_of(e);
            uint32_t v = u | (uint32_t(1) << j);
            Rng r = rng.split(0x9000 + e);
            lab.edge_words[e] = word_with_ends(p.k, lc.edge_len(), dep[u][j],
                                               dep[v][j].inverse(), r);
        }
        return lab;
    }
    if (p.d >= 3) {
        const LensLayout& l = lc.lens;
        int64_t V = l.num_vertices();
        int bd = l.base.dim;
        // Departure items per upstairs vertex: (direction j, far bit) pairs
        // then the two stems.
        std::vector<std::vector<Letter>> dep(V);
        for (int64_t uv = 0; uv < V; ++uv) {
            Rng r = rng.split(0x200 + uv);
            auto a = shuffled(r);
            dep[uv].assign(a.begin(), a.begin() + 2 * bd + 2);
        }
        lab.stem_letters.resize(V);
        for (int64_t uv = 0; uv < V; ++uv)
            lab.stem_letters[uv] = {dep[uv][2 * bd], dep[uv][2 * bd + 1]};
        lab.edge_words.resize(l.num_edges());
        for (int64_t base_e = 0; base_e < l.base.num_edges(); ++base_e) {
            auto [u, j] = l.base.edge_of(base_e);
            uint32_t v = u | (uint32_t(1) << j);
            for (int bl = 0; bl < 2; ++bl) {
                for (int bh = 0; bh < 2; ++bh) {
                    int64_t le = l.lift_edge(base_e, bl, bh);
                    Rng r = rng.split(0xA000 + le);
                    Letter first = dep[l.lift_vertex(u, bl)][2 * j + bh];
                    Letter last = dep[l.lift_vertex(v, bh)][2 * j + bl].inverse();
                    lab.edge_words[le] = word_with_ends(p.k, lc.edge_len(), first, last, r);
                }
            }
        }
        return lab;
    }
    // Cubical d = 2: a circle of two arcs between vertices P (= 0) and Q (= 1).
    std::vector<std::vector<Letter>> dep(2);
    for (int v = 0; v < 2; ++v) {
        Rng r = rng.split(0x300 + v);
        auto a = shuffled(r);
        dep[v].assign(a.begin(), a.begin() + 4);  // arc0, arc1, stem0, stem1
    }
    lab.stem_letters.resize(2);
    for (int v = 0; v < 2; ++v) lab.stem_letters[v] = {dep[v][2], dep[v][3]};
    lab.edge_words.resize(2);
    for (int arc = 0; arc < 2; ++arc) {
        Rng r = rng.split(0xB00 + arc);
        lab.edge_words[arc] =
            word_with_ends(p.k, lc.edge_len(), dep[0][arc], dep[1][arc].inverse(), r);
    }
    return lab;
}

// Travel word of a draped strand, oriented from the representative end.
std::vector<Letter> simplicial_strand_word(const LayoutCache& lc,
                                           const InstanceLabels& lab, uint32_t w,
                                           int path) {
    const CubeLayout& c = lc.cube;
    std::vector<Letter> out;
    for (int t = 0; t < c.dim; ++t) {
        int j = c.flip_orders[path][t];
        uint32_t at = w ^ c.prefix_mask(path, t);
        bool upward = ((at >> j) & 1) == 0;
        uint32_t lower = at & ~(uint32_t(1) << j);
        const auto& word = lab.edge_words[c.edge_id(lower, j)];
        if (upward) {
            out.insert(out.end(), word.begin(), word.end());
        } else {
            for (auto it = word.rbegin(); it != word.rend(); ++it)
                out.push_back(it->inverse());
        }
    }
    return out;
}

std::vector<Letter> lens_strand_word(const LayoutCache& lc, const InstanceLabels& lab,
                                     uint32_t w, int path, int g, int sel) {
    const LensLayout& l = lc.lens;
    const auto& h = sel ? l.pairs[g].b : l.pairs[g].a;
    auto steps = l.lift_steps(w, path, h);
    std::vector<Letter> out;
    for (const auto& st : steps) {
        const auto& word = lab.edge_words[st.edge];
        if (st.upward) {
            out.insert(out.end(), word.begin(), word.end());
        } else {
            for (auto it = word.rbegin(); it != word.rend(); ++it)
                out.push_back(it->inverse());
        }
    }
    return out;
}

// ------------------------------------------------ buildable relator plan

// Shared plan for the generator: which labeling serves each beachball slot
// (g, loc), the stem letters at the two ends of each glued word, and the
// derived even words.
struct GeneratorPlan {
    // E[g][i][loc], O[g][loc] as letter vectors.
    std::vector<std::vector<std::vector<std::vector<Letter>>>> E;
    std::vector<std::vector<std::vector<Letter>>> O;
};

GeneratorPlan make_buildable_plan(const BuildParams& p, const LayoutCache& lc) {
    const int dd = p.dd();
    const int64_t half = p.bigN_or_default() / 2;  // beachball slots per group
    const int64_t q = p.groups;
    const int64_t P = p.per_instance();
    Rng root(p.seed);

    GeneratorPlan plan;
    plan.E.assign(q, std::vector<std::vector<std::vector<Letter>>>(
                         dd, std::vector<std::vector<Letter>>(half)));
    plan.O.assign(q, std::vector<std::vector<Letter>>(half));

    // Labelings: one per (station, m), shared by the station's two groups.
    // In the cubical case the dd rotation chains reuse the same labelings,
    // so each (g, loc) word is well defined independently of the rotation.
    std::vector<std::vector<InstanceLabels>> labels(q / 2);
    for (int64_t a = 0; a < q / 2; ++a) {
        for (int64_t m = 0; m * P < half; ++m) {
            Rng r = root.split(0x5000 + a * 4096 + m);
            labels[a].push_back(make_instance_labels(lc, r));
        }
    }
    auto labeling_of = [&](int64_t g, int64_t loc) -> const InstanceLabels& {
        return labels[g / 2][loc / P];
    };
    auto position_of = [&](int64_t /*g*/, int64_t loc) -> int64_t { return loc % P; };

    // Derived even words.
    for (int64_t g = 0; g < q; ++g) {
        for (int64_t loc = 0; loc < half; ++loc) {
            const InstanceLabels& lab = labeling_of(g, loc);
            int64_t pos = position_of(g, loc);
            if (p.kind == Kind::simplicial) {
                uint32_t w = lc.reps[pos];
                for (int i = 0; i < dd; ++i)
                    plan.E[g][i][loc] = simplicial_strand_word(lc, lab, w, i);
            } else if (p.d >= 3) {
                // pos indexes (pair, height): pos = pair_index * 4 + height.
                uint32_t w = lc.reps[pos / 4];
                int g_h = static_cast<int>(pos % 4);
                for (int path = 0; path < p.d - 1; ++path) {
                    for (int sel = 0; sel < 2; ++sel) {
                        int subset = path + lc.lens.subset_sign[g_h][sel] * (p.d - 1);
                        plan.E[g][subset][loc] =
                            lens_strand_word(lc, lab, w, path, g_h, sel);
                    }
                }
            } else {
                for (int arc = 0; arc < 2; ++arc) {
                    plan.E[g][arc][loc] =
                        std::vector<Letter>(lab.edge_words[arc].begin(),
                                            lab.edge_words[arc].end());
                }
            }
        }
    }

    // Stem letters at the two ends of O(g, loc): the start letter comes from
    // the B-end of the previous slot's beachball, the final letter from the
    // A-end of this slot's beachball.
    auto stem_letter_at_A = [&](int64_t g, int64_t loc) -> Letter {
        const InstanceLabels& lab = labeling_of(g, loc);
        int64_t pos = position_of(g, loc);
        if (p.kind == Kind::simplicial) return lab.stem_letters[lc.reps[pos]][0];
        if (p.d >= 3) {
            uint32_t w = lc.reps[pos / 4];
            int g_h = static_cast<int>(pos % 4);
            int bit = lc.lens.pairs[g_h].a.front();
            auto hs = lc.heights_at(w, bit);
            int slot = (hs[0] == g_h) ? 0 : 1;
            return lab.stem_letters[lc.lens.lift_vertex(w, bit)][slot];
        }
        // d = 2 circle: A at vertex P (= 0); beachball slot within the
        // instance picks the stem slot.
        return lab.stem_letters[0][pos % 2];
    };
    auto stem_letter_at_B = [&](int64_t g, int64_t loc) -> Letter {
        const InstanceLabels& lab = labeling_of(g, loc);
        int64_t pos = position_of(g, loc);
        if (p.kind == Kind::simplicial)
            return lab.stem_letters[lc.cube.antipode(lc.reps[pos])][0];
        if (p.d >= 3) {
            uint32_t w = lc.reps[pos / 4];
            uint32_t wb = lc.lens.base.antipode(w);
            int g_h = static_cast<int>(pos % 4);
            int bit = lc.lens.pairs[g_h].a.back();
            auto hs = lc.heights_at(wb, bit);
            int slot = (hs[0] == g_h) ? 0 : 1;
            return lab.stem_letters[lc.lens.lift_vertex(wb, bit)][slot];
        }
        return lab.stem_letters[1][pos % 2];
    };

    // Station groups share their odd words (the twin labelings already make
    // the even words match), giving the matching stage genuine interchange
    // freedom for the cocycle adjustment.
    Rng orng = root.split(0x700);
    for (int64_t g = 0; g < q; ++g) {
        for (int64_t loc = 0; loc < half; ++loc) {
            if (g % 2 == 1 && q == 2) {
                // With one station the stem constraints of twin groups
                // coincide, so sharing the odd words is consistent and gives
                // the matcher genuine interchange freedom.
                plan.O[g][loc] = plan.O[g - 1][loc];
                continue;
            }
            int64_t prev_g = loc == 0 ? (g + q - 1) % q : g;
            int64_t prev_loc = loc == 0 ? half - 1 : loc - 1;
            Letter first = stem_letter_at_B(prev_g, prev_loc);
            Letter last = stem_letter_at_A(g, loc).inverse();
            Rng r = orng.split(g * 65536 + loc);
            plan.O[g][loc] = word_with_ends(p.k, p.Lambda(), first, last, r);
        }
    }
    return plan;
}

}  // namespace

ReducedWord sample_buildable_relator(const BuildParams& p) {
    p.validate();
    LayoutCache lc(p);
    auto plan = make_buildable_plan(p, lc);
    const int dd = p.dd();
    const int64_t half = p.bigN_or_default() / 2;
    std::vector<Letter> r;
    r.reserve(p.n());
    for (int i = 0; i < dd; ++i) {
        for (int64_t g = 0; g < p.groups; ++g) {
            for (int64_t loc = 0; loc < half; ++loc) {
                r.insert(r.end(), plan.O[g][loc].begin(), plan.O[g][loc].end());
                r.insert(r.end(), plan.E[g][i][loc].begin(), plan.E[g][i][loc].end());
            }
        }
    }
    return ReducedWord(std::move(r), true);
}

ReducedWord sample_fuzz_relator(const BuildParams& p) {
    p.validate();
    const int dd = p.dd();
    const int64_t half = p.bigN_or_default() / 2;
    const int64_t Lam = p.Lambda();
    Rng root(p.seed);
    auto alphabet = full_alphabet(p.k);

    // One global odd word; its first letter also fixes what even words must
    // avoid at their ends.
    Letter ofirst = alphabet[0];
    Rng orng = root.split(1);
    auto O = word_with_ends(p.k, Lam, ofirst, ofirst, orng);
    Letter avoid_first = O.back().inverse();   // even first letters must differ
    Letter avoid_last = O.front().inverse();   // even last letters must differ

    std::vector<Letter> first_pool, last_pool;
    for (const auto& l : alphabet) {
        if (!(l == avoid_first)) first_pool.push_back(l);
        if (!(l == avoid_last)) last_pool.push_back(l);
    }
    if (static_cast<int>(first_pool.size()) < dd ||
        static_cast<int>(last_pool.size()) < dd)
        throw Error("alphabet too small for fuzz relator", "config");

    // Even-word palette: dd slot classes x 5 location phases. Word content
    // depends on ((i + g) mod dd, loc mod 5) only, which puts rotated word
    // vectors on different tuples: covering-move rows then admit both the
    // covering-type and the monochromatic-collapse label patterns.
    const int phases = 5;
    std::vector<std::vector<std::vector<Letter>>> palette(
        dd, std::vector<std::vector<Letter>>(phases));
    for (int t = 0; t < dd; ++t) {
        for (int ph = 0; ph < phases; ++ph) {
            Letter first = first_pool[(t + ph) % first_pool.size()];
            Letter last = last_pool[(t + ph) % last_pool.size()];
            Rng er = root.split(0x40000 + t * 64 + ph);
            palette[t][ph] = word_with_ends(p.k, Lam, first, last, er);
        }
    }
    std::vector<Letter> r;
    r.reserve(p.n());
    // Tuple-contiguous layout: blocks (g, 0..dd-1) adjacent, so the boundary
    // segments form a necklace remainder.
    for (int64_t g = 0; g < p.groups; ++g) {
        for (int i = 0; i < dd; ++i) {
            for (int64_t loc = 0; loc < half; ++loc) {
                r.insert(r.end(), O.begin(), O.end());
                const auto& E = palette[(i + g) % dd][loc % phases];
                r.insert(r.end(), E.begin(), E.end());
            }
        }
    }
    return ReducedWord(std::move(r), true);
}

// ---------------------------------------------------------------- stages

namespace {

std::vector<Letter> run_letters(const CircleFamily& L, int64_t circle, int64_t pos,
                                int64_t len) {
    std::vector<Letter> out;
    out.reserve(len);
    int64_t n = L.length();
    for (int64_t i = 0; i < len; ++i)
        out.push_back(L.word().at(static_cast<size_t>((pos + i) % n)));
    (void)circle;
    return out;
}

uint64_t letters_hash(const std::vector<Letter>& ls) {
    uint64_t h = 1469598103934665603ull;
    for (const auto& l : ls) {
        h ^= static_cast<uint64_t>(l.packed() + 64);
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

NormalizeResult normalize_length(GluingState& st, const BuildParams& p) {
    NormalizeResult res;
    int64_t period = p.Lambda() * p.bigN_or_default();
    int64_t n = st.L.length();
    res.rho = n % period;
    if (res.rho == 0) {
        st.log("normalize_length rho=0 no-op");
        return res;
    }
    int64_t W = period + res.rho;
    const int dd = st.dd();
    if (st.L.components() < dd)
        throw Error("normalization needs at least dd circles", "normalize_length");
    // Occurrence classes of cyclic W-subwords by content.
    std::map<uint64_t, std::vector<int64_t>> occurrences;
    for (int64_t pos = 0; pos < n; ++pos)
        occurrences[letters_hash(run_letters(st.L, 0, pos, W))].push_back(pos);
    int64_t budget = p.retry_budget;
    for (auto& [h, positions] : occurrences) {
        (void)h;
        if (static_cast<int64_t>(positions.size()) < dd) continue;
        // Verify true equality against the first position.
        auto ref = run_letters(st.L, 0, positions.front(), W);
        std::vector<int64_t> good;
        for (int64_t pos : positions)
            if (run_letters(st.L, 0, pos, W) == ref) good.push_back(pos);
        if (static_cast<int64_t>(good.size()) < dd) continue;
        if (budget-- <= 0) break;
        GluedSegment seg;
        for (int i = 0; i < dd; ++i)
            seg.strands.push_back(Run{2 * st.L.edge_id(i, good[i]), W});
        GluingState copy = st;
        res.segment = copy.add_segment(seg);
        rosegraph::EdgePartition part = copy.partition();
        try {
            rosegraph::apply_partition(copy.L, part);
        } catch (const Error&) {
            continue;  // illegal placement; try the next class
        }
        copy.log("normalize_length rho=" + std::to_string(res.rho));
        st = std::move(copy);
        return res;
    }
    throw Error("normalization failed: no legal placement of a length-" +
                    std::to_string(W) + " subword across " + std::to_string(dd) +
                    " circles",
                "normalize_length");
}

BlockStructure segment_blocks(const GluingState& st, const BuildParams& p) {
    BlockStructure bs;
    bs.segment_len = p.Lambda();
    bs.segments_per_block = p.bigN_or_default();
    int64_t period = bs.segment_len * bs.segments_per_block;
    if (st.L.length() % period != 0)
        throw Error("relator length is not divisible by lambda*N", "segment_blocks");
    bs.blocks_per_circle = st.L.length() / period;
    return bs;
}

namespace {

struct BlockWords {
    std::vector<uint64_t> odd_hash;             // per odd segment
    std::vector<std::vector<Letter>> odd_words;  // verified on demand
};

// First/last letters of the even segment at location loc of a block, and of
// the preceding block's final even segment (loc == -1).
struct EvenEnds {
    Letter first, last;
};

class MatchContext {
public:
    MatchContext(const GluingState& st, const BlockStructure& bs, const BuildParams& p)
        : st_(st), bs_(bs), p_(p) {}

    int64_t half() const { return bs_.segments_per_block / 2; }

    int64_t block_pos(const BlockRef& b) const { return bs_.block_start(b); }

    std::vector<Letter> odd_word(const BlockRef& b, int64_t l) const {
        return run_letters(st_.L, b.circle, block_pos(b) + 2 * l * bs_.segment_len,
                           bs_.segment_len);
    }
    EvenEnds even_ends(const BlockRef& b, int64_t loc) const {
        int64_t n = st_.L.length();
        int64_t start;
        if (loc >= 0) {
            start = block_pos(b) + (2 * loc + 1) * bs_.segment_len;
        } else {
            // The final even segment of the preceding block.
            start = (block_pos(b) - bs_.segment_len + n) % n;
        }
        const auto& w = st_.L.word();
        return {w.at(static_cast<size_t>(start % n)),
                w.at(static_cast<size_t>((start + bs_.segment_len - 1) % n))};
    }

    uint64_t signature(const BlockRef& b) const {
        std::vector<Letter> all;
        for (int64_t l = 0; l < half(); ++l) {
            auto w = odd_word(b, l);
            all.insert(all.end(), w.begin(), w.end());
        }
        return letters_hash(all);
    }

    bool odd_words_equal(const BlockRef& a, const BlockRef& b) const {
        for (int64_t l = 0; l < half(); ++l)
            if (odd_word(a, l) != odd_word(b, l)) return false;
        return true;
    }

    // Even-segment legality across a (partial) tuple: both ends distinct at
    // every location including the preceding boundary.
    bool evens_legal(const std::vector<BlockRef>& tuple) const {
        for (int64_t loc = -1; loc < half(); ++loc) {
            std::set<int> firsts, lasts;
            for (const auto& b : tuple) {
                auto e = even_ends(b, loc);
                if (!firsts.insert(e.first.packed()).second) return false;
                if (!lasts.insert(e.last.packed()).second) return false;
            }
        }
        return true;
    }

    int subset_of(const BlockRef& b) const {
        return static_cast<int>(b.circle % p_.dd());
    }

private:
    const GluingState& st_;
    const BlockStructure& bs_;
    const BuildParams& p_;
};

}  // namespace

Matching match_blocks(const GluingState& st, const BlockStructure& bs,
                      const BuildParams& p, uint64_t salt) {
    MatchContext ctx(st, bs, p);
    const int dd = p.dd();
    const bool cubical = p.kind == Kind::cubical;

    std::map<uint64_t, std::vector<BlockRef>> buckets;
    for (int64_t c = 0; c < st.L.components(); ++c)
        for (int64_t b = 0; b < bs.blocks_per_circle; ++b)
            buckets[ctx.signature({c, b})].push_back({c, b});

    Matching m;
    Rng rng(p.seed ^ (0x51ED270B * (salt + 1)));
    for (auto& [sig, blocks] : buckets) {
        (void)sig;
        // Aligned scheme first: when the bucket splits into dd even-word
        // classes of equal size, transversals taken at matching ranks glue
        // with parallel boundaries. Class rank follows the earliest block;
        // within a class, blocks sort by ((circle - rank) mod dd, index) so
        // that rank-consistency also distributes copy subsets.
        {
            std::map<uint64_t, std::vector<BlockRef>> classes;
            for (const auto& b : blocks) {
                std::vector<Letter> evens;
                for (int64_t loc = 0; loc < ctx.half(); ++loc) {
                    auto e = ctx.even_ends(b, loc);
                    evens.push_back(e.first);
                    evens.push_back(e.last);
                }
                // Use full even content for the class key.
                std::vector<Letter> content;
                for (int64_t loc = 0; loc < ctx.half(); ++loc) {
                    auto w = run_letters(st.L, b.circle,
                                         bs.block_start(b) + (2 * loc + 1) * bs.segment_len,
                                         bs.segment_len);
                    content.insert(content.end(), w.begin(), w.end());
                }
                classes[letters_hash(content)].push_back(b);
            }
            bool uniform = static_cast<int>(classes.size()) == dd;
            size_t class_size = blocks.size() / std::max<size_t>(1, classes.size());
            std::vector<std::vector<BlockRef>> ordered;
            for (auto& [h, cls] : classes) {
                (void)h;
                if (cls.size() != class_size) uniform = false;
                ordered.push_back(cls);
            }
            if (uniform && class_size * dd == blocks.size()) {
                std::sort(ordered.begin(), ordered.end(),
                          [](const auto& a, const auto& b) {
                              return *std::min_element(a.begin(), a.end()) <
                                     *std::min_element(b.begin(), b.end());
                          });
                for (int rank = 0; rank < dd; ++rank) {
                    std::sort(ordered[rank].begin(), ordered[rank].end(),
                              [&](const BlockRef& a, const BlockRef& b) {
                                  auto key = [&](const BlockRef& x) {
                                      return std::make_pair(
                                          ((x.circle - rank) % dd + dd) % dd,
                                          x.block * 4096 + x.circle);
                                  };
                                  return key(a) < key(b);
                              });
                }
                std::vector<std::vector<BlockRef>> tuples;
                bool ok = true;
                for (size_t t = 0; t < class_size && ok; ++t) {
                    std::vector<BlockRef> tuple;
                    for (int rank = 0; rank < dd; ++rank)
                        tuple.push_back(ordered[rank][t]);
                    if (!ctx.evens_legal(tuple)) ok = false;
                    for (size_t i = 0; i + 1 < tuple.size() && ok; ++i)
                        if (!ctx.odd_words_equal(tuple[i], tuple[i + 1])) ok = false;
                    if (cubical && ok) {
                        std::set<int> subsets;
                        for (const auto& b : tuple)
                            if (!subsets.insert(ctx.subset_of(b)).second) ok = false;
                    }
                    tuples.push_back(std::move(tuple));
                }
                if (ok) {
                    for (auto& tuple : tuples) {
                        if (cubical)
                            std::sort(tuple.begin(), tuple.end(),
                                      [&](const BlockRef& a, const BlockRef& b) {
                                          return ctx.subset_of(a) < ctx.subset_of(b);
                                      });
                        m.tuples.push_back(std::move(tuple));
                    }
                    continue;  // bucket fully matched by the aligned scheme
                }
            }
        }
        // Generic salted greedy with backtracking.
        for (size_t i = blocks.size(); i > 1; --i)
            std::swap(blocks[i - 1], blocks[rng.below(i)]);
        std::vector<bool> used(blocks.size(), false);
        // Repeatedly extract one legal tuple by bounded backtracking.
        for (;;) {
            std::vector<size_t> chosen;
            std::function<bool(size_t)> extend = [&](size_t from) -> bool {
                if (static_cast<int>(chosen.size()) == dd) return true;
                for (size_t i = from; i < blocks.size(); ++i) {
                    if (used[i]) continue;
                    if (!chosen.empty()) {
                        if (!ctx.odd_words_equal(blocks[chosen.front()], blocks[i]))
                            continue;
                        if (cubical) {
                            bool dup = false;
                            for (size_t j : chosen)
                                if (ctx.subset_of(blocks[j]) == ctx.subset_of(blocks[i]))
                                    dup = true;
                            if (dup) continue;
                        }
                    }
                    std::vector<BlockRef> tup;
                    for (size_t j : chosen) tup.push_back(blocks[j]);
                    tup.push_back(blocks[i]);
                    if (!ctx.evens_legal(tup)) continue;
                    chosen.push_back(i);
                    used[i] = true;
                    if (extend(chosen.empty() ? 0 : chosen.front() + 1)) return true;
                    used[i] = false;
                    chosen.pop_back();
                }
                return false;
            };
            if (!extend(0)) break;
            std::vector<BlockRef> tuple;
            for (size_t i : chosen) tuple.push_back(blocks[i]);
            if (cubical)
                std::sort(tuple.begin(), tuple.end(),
                          [&](const BlockRef& a, const BlockRef& b) {
                              return ctx.subset_of(a) < ctx.subset_of(b);
                          });
            m.tuples.push_back(std::move(tuple));
        }
        for (size_t i = 0; i < blocks.size(); ++i)
            if (!used[i]) m.unmatched.push_back(blocks[i]);
    }
    std::sort(m.unmatched.begin(), m.unmatched.end());
    std::sort(m.tuples.begin(), m.tuples.end());
    return m;
}

ResolveResult resolve_unmatched(const GluingState& st, const BlockStructure& bs,
                                const Matching& m, const BuildParams& p) {
    ResolveResult out{st, m, 1};
    if (m.unmatched.empty()) return out;
    MatchContext ctx(st, bs, p);
    const int dd = p.dd();

    // For every unmatched block pick a disjoint matched tuple making a
    // supercompatible (dd+1)-family.
    std::set<size_t> dissolved;
    std::vector<std::vector<BlockRef>> families;
    for (const auto& u : m.unmatched) {
        bool found = false;
        for (size_t ti = 0; ti < m.tuples.size() && !found; ++ti) {
            if (dissolved.count(ti)) continue;
            const auto& t = m.tuples[ti];
            if (!ctx.odd_words_equal(u, t.front())) continue;
            std::vector<BlockRef> family = t;
            family.push_back(u);
            // Every leave-one-out dd-subset must be legal.
            bool super = true;
            for (size_t skip = 0; skip < family.size() && super; ++skip) {
                std::vector<BlockRef> sub;
                for (size_t i = 0; i < family.size(); ++i)
                    if (i != skip) sub.push_back(family[i]);
                if (!ctx.evens_legal(sub)) super = false;
                if (p.kind == Kind::cubical && super) {
                    std::set<int> subsets;
                    for (const auto& b : sub)
                        if (!subsets.insert(ctx.subset_of(b)).second) super = false;
                }
            }
            if (!super) continue;
            dissolved.insert(ti);
            families.push_back(std::move(family));
            found = true;
        }
        if (!found)
            throw Error("resolution failed: no supercompatible tuple for block (" +
                            std::to_string(u.circle) + "," + std::to_string(u.block) +
                            ")",
                        "resolve_unmatched");
    }

    // Rebuild with dd copies of the whole graph; block (c, b) of layer l
    // becomes (c + l * C, b).
    int64_t C = st.L.components();
    out.copy_multiplier = dd;
    out.st = st;
    out.st.L = rosegraph::circles_from_word(st.L.word(), C * dd);
    out.matching.tuples.clear();
    out.matching.unmatched.clear();
    auto lift = [&](const BlockRef& b, int64_t layer) {
        return BlockRef{b.circle + layer * C, b.block};
    };
    for (size_t ti = 0; ti < m.tuples.size(); ++ti) {
        if (dissolved.count(ti)) continue;
        for (int64_t layer = 0; layer < dd; ++layer) {
            std::vector<BlockRef> t;
            for (const auto& b : m.tuples[ti]) t.push_back(lift(b, layer));
            out.matching.tuples.push_back(std::move(t));
        }
    }
    for (const auto& family : families) {
        // dd+1 leave-one-out subsets; subset s omits family[s] and draws its
        // members from distinct layers so every block instance is used once:
        // block family[i] appears in subsets s != i, taking layer index
        // determined by a round-robin.
        int fam = static_cast<int>(family.size());  // dd + 1
        for (int s = 0; s < fam; ++s) {
            std::vector<BlockRef> t;
            for (int i = 0; i < fam; ++i) {
                if (i == s) continue;
                // Layer: how many earlier subsets already used block i.
                int64_t layer = s > i ? s - 1 : s;
                t.push_back(lift(family[i], layer));
            }
            if (p.kind == Kind::cubical)
                std::sort(t.begin(), t.end(), [&](const BlockRef& a, const BlockRef& b) {
                    return a.circle % dd < b.circle % dd;
                });
            out.matching.tuples.push_back(std::move(t));
        }
    }
    std::sort(out.matching.tuples.begin(), out.matching.tuples.end());
    out.st.log("resolve_unmatched copies x" + std::to_string(dd));
    return out;
}

void glue_matched(GluingState& st, const BlockStructure& bs, const Matching& m) {
    if (!m.unmatched.empty())
        throw Error("matching still has unmatched blocks", "glue_matched");
    const int64_t Lam = bs.segment_len;
    const int64_t N = bs.segments_per_block;
    const int64_t half = N / 2;
    int64_t n = st.L.length();

    std::map<BlockRef, int64_t> tuple_of;
    for (size_t ti = 0; ti < m.tuples.size(); ++ti)
        for (const auto& b : m.tuples[ti]) tuple_of[b] = static_cast<int64_t>(ti);
    if (static_cast<int64_t>(tuple_of.size()) !=
        st.L.components() * bs.blocks_per_circle)
        throw Error("matching does not cover every block exactly once", "glue_matched");

    GluingState copy = st;
    // Per tuple: glued odd segments, interior beachballs, one open chain.
    std::vector<std::vector<int64_t>> tuple_segments(m.tuples.size());
    for (size_t ti = 0; ti < m.tuples.size(); ++ti) {
        const auto& tuple = m.tuples[ti];
        Chain chain;
        for (int64_t l = 0; l < half; ++l) {
            GluedSegment seg;
            for (const auto& b : tuple)
                seg.strands.push_back(
                    Run{2 * copy.L.edge_id(b.circle,
                                           (bs.block_start(b) + 2 * l * Lam) % n),
                        Lam});
            int64_t sid = copy.add_segment(seg);
            tuple_segments[ti].push_back(sid);
            chain.segments.push_back(sid);
            if (l + 1 < half) {
                Piece bb;
                bb.type = PieceType::beachball;
                for (const auto& b : tuple)
                    bb.strands.push_back(
                        Run{2 * copy.L.edge_id(
                                    b.circle, (bs.block_start(b) + (2 * l + 1) * Lam) % n),
                            Lam});
                if (copy.params.kind == Kind::cubical)
                    for (const auto& b : tuple)
                        bb.subsets.push_back(static_cast<int>(b.circle % copy.dd()));
                int64_t pid = copy.add_piece(bb);
                copy.pieces[pid].chain = static_cast<int64_t>(copy.chains.size());
                copy.pieces[pid].chain_pos = l;
                chain.pieces.push_back(pid);
            }
        }
        chain.cyclic = false;
        copy.chains.push_back(std::move(chain));
    }

    // Boundary (final even) segments form the remainder, grouped into
    // connected components by their quotient endpoints.
    struct BoundaryRun {
        Run run;
        int64_t tuple_a;  // tuple owning the preceding odd segment
        int slot;
    };
    std::vector<BoundaryRun> boundary;
    for (size_t ti = 0; ti < m.tuples.size(); ++ti) {
        const auto& tuple = m.tuples[ti];
        for (size_t slot = 0; slot < tuple.size(); ++slot) {
            const auto& b = tuple[slot];
            boundary.push_back(
                {Run{2 * copy.L.edge_id(b.circle,
                                        (bs.block_start(b) + (N - 1) * Lam) % n),
                     Lam},
                 static_cast<int64_t>(ti), static_cast<int>(slot)});
        }
    }
    // Connected components via quotient vertex classes.
    auto quotient = copy.quotient();
    std::map<int64_t, int64_t> comp;
    std::function<int64_t(int64_t)> find = [&](int64_t x) -> int64_t {
        auto it = comp.find(x);
        if (it == comp.end() || it->second == x) return x;
        return it->second = find(it->second);
    };
    auto endpoints = [&](const Run& r) {
        int64_t de_last = r.start;
        for (int64_t i = 1; i < r.len; ++i) de_last = copy.L.dnext(de_last);
        return std::make_pair(quotient.vertex_map[copy.L.dsource(r.start)],
                              quotient.vertex_map[copy.L.dsource(de_last ^ 1)]);
    };
    for (const auto& br : boundary) {
        auto [a, b] = endpoints(br.run);
        comp.emplace(a, a);
        comp.emplace(b, b);
        comp[find(a)] = find(b);
    }
    std::map<int64_t, std::vector<size_t>> groups;
    for (size_t i = 0; i < boundary.size(); ++i)
        groups[find(endpoints(boundary[i].run).first)].push_back(i);
    for (auto& [root, members] : groups) {
        (void)root;
        Piece rem;
        rem.type = PieceType::remainder;
        std::sort(members.begin(), members.end(), [&](size_t x, size_t y) {
            return std::make_pair(boundary[x].tuple_a, boundary[x].slot) <
                   std::make_pair(boundary[y].tuple_a, boundary[y].slot);
        });
        for (size_t i : members) rem.strands.push_back(boundary[i].run);
        copy.add_piece(rem);
    }

    copy.audit_mass();
    copy.assert_legal();
    copy.log("glue_matched tuples=" + std::to_string(m.tuples.size()) +
             " remainder_components=" + std::to_string(groups.size()));
    st = std::move(copy);
}

}  // namespace spineforge::pipeline

namespace spineforge::pipeline {

namespace {

// Ownership index: L-edge -> (segment id, strand index, offset) for live
// glued segments.
struct SegmentIndex {
    std::vector<int64_t> seg, strand, offset;
    explicit SegmentIndex(const GluingState& st)
        : seg(st.L.num_edges(), -1),
          strand(st.L.num_edges(), -1),
          offset(st.L.num_edges(), -1) {
        for (size_t sid = 0; sid < st.segments.size(); ++sid) {
            if (!st.segments[sid].alive) continue;
            for (size_t si = 0; si < st.segments[sid].strands.size(); ++si) {
                int64_t de = st.segments[sid].strands[si].start;
                for (int64_t off = 0; off < st.segments[sid].strands[si].len; ++off) {
                    seg[de / 2] = static_cast<int64_t>(sid);
                    strand[de / 2] = static_cast<int64_t>(si);
                    offset[de / 2] = off;
                    de = st.L.dnext(de);
                }
            }
        }
    }
};

}  // namespace

void clear_remainder(GluingState& st, const BuildParams& p) {
    // Pass 1: promote beachball-shaped remainder components (their strands
    // already run between two glued endpoints in parallel).
    const int dd = st.dd();
    auto quotient = st.quotient();
    SegmentIndex index(st);
    GluingState copy = st;
    int64_t promoted = 0;
    for (size_t pid = 0; pid < st.pieces.size(); ++pid) {
        const Piece& rem = st.pieces[pid];
        if (!rem.alive || rem.type != PieceType::remainder) continue;
        if (static_cast<int>(rem.strands.size()) != dd) continue;
        // Parallel check: one common start vertex, one common end vertex.
        std::set<int64_t> starts, ends;
        for (const auto& r : rem.strands) {
            int64_t last = r.start;
            for (int64_t i = 1; i < r.len; ++i) last = st.L.dnext(last);
            starts.insert(quotient.vertex_map[st.L.dsource(r.start)]);
            ends.insert(quotient.vertex_map[st.L.dsource(last ^ 1)]);
        }
        if (starts.size() != 1 || ends.size() != 1 || *starts.begin() == *ends.begin())
            continue;
        // Slot alignment with the left glued segment.
        int64_t left_seg = -1;
        std::vector<Run> ordered(dd);
        std::vector<int> subsets(dd, 0);
        bool ok = true;
        for (const auto& r : rem.strands) {
            int64_t prev = st.L.dprev(r.start);
            int64_t owner = index.seg[prev / 2];
            if (owner < 0 || (left_seg >= 0 && owner != left_seg)) {
                ok = false;
                break;
            }
            left_seg = owner;
            int64_t slot = index.strand[prev / 2];
            ordered[slot] = r;
            if (copy.params.kind == Kind::cubical)
                subsets[slot] = static_cast<int>(st.L.edge_component(r.start / 2) % dd);
        }
        if (!ok || left_seg < 0) continue;
        // Right-side alignment for chain merging.
        int64_t right_seg = -1;
        bool aligned = true;
        for (int slot = 0; slot < dd; ++slot) {
            int64_t last = ordered[slot].start;
            for (int64_t i = 1; i < ordered[slot].len; ++i) last = st.L.dnext(last);
            int64_t nxt = st.L.dnext(last);
            int64_t owner = index.seg[nxt / 2];
            if (owner < 0 || (right_seg >= 0 && owner != right_seg)) {
                aligned = false;
                break;
            }
            right_seg = owner;
            if (index.strand[nxt / 2] != slot) aligned = false;
        }
        Piece bb;
        bb.type = PieceType::beachball;
        bb.strands = ordered;
        if (copy.params.kind == Kind::cubical) bb.subsets = subsets;
        int64_t new_id = copy.add_piece(bb);
        copy.pieces[pid].alive = false;
        ++promoted;
        if (aligned && right_seg >= 0) {
            // Merge the chains ending at left_seg and starting at right_seg.
            int64_t c1 = -1, c2 = -1;
            for (size_t c = 0; c < copy.chains.size(); ++c) {
                if (!copy.chains[c].segments.empty() &&
                    copy.chains[c].segments.back() == left_seg)
                    c1 = static_cast<int64_t>(c);
                if (!copy.chains[c].segments.empty() &&
                    copy.chains[c].segments.front() == right_seg)
                    c2 = static_cast<int64_t>(c);
            }
            if (c1 >= 0 && c2 >= 0 && !copy.chains[c1].cyclic) {
                if (c1 == c2) {
                    Chain& ch = copy.chains[c1];
                    ch.pieces.push_back(new_id);
                    ch.cyclic = true;
                } else {
                    Chain& a = copy.chains[c1];
                    Chain& b = copy.chains[c2];
                    a.pieces.push_back(new_id);
                    a.pieces.insert(a.pieces.end(), b.pieces.begin(), b.pieces.end());
                    a.segments.insert(a.segments.end(), b.segments.begin(),
                                      b.segments.end());
                    b.pieces.clear();
                    b.segments.clear();
                }
                // Reindex affected chains.
                for (size_t c = 0; c < copy.chains.size(); ++c)
                    for (size_t i = 0; i < copy.chains[c].pieces.size(); ++i) {
                        copy.pieces[copy.chains[c].pieces[i]].chain =
                            static_cast<int64_t>(c);
                        copy.pieces[copy.chains[c].pieces[i]].chain_pos =
                            static_cast<int64_t>(i);
                    }
            }
        }
    }
    copy.log("clear_remainder promoted=" + std::to_string(promoted));

    // Pass 2: remaining components need tear moves. The engineered pipeline
    // never reaches this; honest bounded attempts otherwise.
    int64_t budget = p.retry_budget;
    for (;;) {
        int64_t target = -1;
        for (size_t pid = 0; pid < copy.pieces.size(); ++pid)
            if (copy.pieces[pid].alive &&
                copy.pieces[pid].type == PieceType::remainder)
                target = static_cast<int64_t>(pid);
        if (target < 0) break;
        if (budget-- <= 0)
            throw Error("reservoir exhausted: remainder could not be cleared within "
                        "budget",
                        "clear_remainder");
        // Anchors: glued segments whose ends meet the component.
        SegmentIndex idx2(copy);
        const Piece& rem = copy.pieces[target];
        std::vector<moves::VertexRef> anchors;
        for (const auto& r : rem.strands) {
            int64_t prev = copy.L.dprev(r.start);
            if (idx2.seg[prev / 2] >= 0 &&
                idx2.offset[prev / 2] ==
                    copy.segments[idx2.seg[prev / 2]].length() - 1)
                anchors.push_back({idx2.seg[prev / 2], 1});
            int64_t last = r.start;
            for (int64_t i = 1; i < r.len; ++i) last = copy.L.dnext(last);
            int64_t nxt = copy.L.dnext(last);
            if (idx2.seg[nxt / 2] >= 0 && idx2.offset[nxt / 2] == 0)
                anchors.push_back({idx2.seg[nxt / 2], 0});
        }
        // Candidate consecutive triples whose stems match the anchor words.
        bool torn = false;
        for (size_t ai = 0; ai < anchors.size() && !torn; ++ai) {
            for (size_t bi = 0; bi < anchors.size() && !torn; ++bi) {
                if (ai == bi) continue;
                // Gather triples from chains, wordcheck inside tear_move.
                std::vector<std::array<int64_t, 3>> triples;
                std::set<int64_t> taken;
                for (const auto& ch : copy.chains) {
                    for (size_t i = 0; i + 2 < ch.pieces.size() &&
                                       static_cast<int>(triples.size()) < dd - 1;
                         ++i) {
                        auto tri = std::array<int64_t, 3>{ch.pieces[i], ch.pieces[i + 1],
                                                          ch.pieces[i + 2]};
                        bool clash = false;
                        for (int64_t id : tri)
                            if (taken.count(id) ||
                                !copy.pieces[id].alive ||
                                copy.pieces[id].type != PieceType::beachball)
                                clash = true;
                        if (clash) continue;
                        for (int64_t id : tri) taken.insert(id);
                        triples.push_back(tri);
                        i += 2;
                    }
                    if (static_cast<int>(triples.size()) == dd - 1) break;
                }
                if (static_cast<int>(triples.size()) != dd - 1) continue;
                try {
                    moves::tear_move(copy, target, anchors[ai], anchors[bi], triples);
                    torn = true;
                } catch (const Error&) {
                    // keep searching
                }
            }
        }
        if (!torn)
            throw Error("tear labels disagree: remainder component " +
                            std::to_string(target) + " has no tearable anchor pair",
                        "clear_remainder");
    }
    copy.audit_mass();
    st = std::move(copy);
}

}  // namespace spineforge::pipeline

namespace spineforge::pipeline {

namespace {

// ------------------------------------------------ reservoir glue discovery

std::vector<Letter> run_letters_of(const GluingState& st, const Run& r) {
    std::vector<Letter> out;
    out.reserve(r.len);
    int64_t de = r.start;
    for (int64_t i = 0; i < r.len; ++i) {
        out.push_back(st.L.dlabel(de));
        de = st.L.dnext(de);
    }
    return out;
}

std::vector<Letter> reversed_letters(const std::vector<Letter>& w) {
    std::vector<Letter> out;
    out.reserve(w.size());
    for (auto it = w.rbegin(); it != w.rend(); ++it) out.push_back(it->inverse());
    return out;
}

// Incremental word table over layout edges, with departing-letter budgets
// at the layout vertices so stem and edge collisions prune the search early.
struct PartialLabels {
    std::map<int64_t, std::vector<Letter>> words;
    std::map<int64_t, std::vector<int>> letters;  // vertex -> departures

    bool add_letter(int64_t v, Letter l) {
        auto& xs = letters[v];
        if (std::find(xs.begin(), xs.end(), l.packed()) != xs.end()) return false;
        xs.push_back(l.packed());
        return true;
    }

    bool place(int64_t edge, const std::vector<Letter>& w, int64_t vu, int64_t vv) {
        auto it = words.find(edge);
        if (it != words.end()) return it->second == w;
        words[edge] = w;
        return add_letter(vu, w.front()) && add_letter(vv, w.back().inverse());
    }
};

struct DiscoveryContext {
    const BuildParams& p;
    LayoutCache& lc;
    GluingState& st;
    std::vector<int64_t> pool;  // unconsumed beachball ids, search order
    std::map<int64_t, std::vector<std::vector<Letter>>> word_cache;

    int64_t edge_len() const { return st.params.lambda / lc_cube_dim(); }
    int lc_cube_dim() const { return p.cube_dim(); }

    const std::vector<std::vector<Letter>>& strand_words(int64_t pid) {
        auto it = word_cache.find(pid);
        if (it != word_cache.end()) return it->second;
        std::vector<std::vector<Letter>> sw;
        for (const auto& run : st.pieces[pid].strands)
            sw.push_back(run_letters_of(st, run));
        return word_cache.emplace(pid, std::move(sw)).first->second;
    }
};

// Try to drape piece `pid` at slot `slot` (orientation + wiring search),
// extending the partial labels; calls `next` for the continuation and rolls
// back on failure.
bool try_place_simplicial(DiscoveryContext& ctx, PartialLabels& labels,
                          moves::CubeAssignment& a, size_t slot, int64_t pid,
                          const std::function<bool()>& next) {
    const CubeLayout& cube = ctx.lc.cube;
    uint32_t w = ctx.lc.reps[slot];
    int dim = cube.dim;
    int64_t le = ctx.edge_len();
    const auto& strand_words = ctx.strand_words(pid);

    const Piece& piece = ctx.st.pieces[pid];
    int64_t first = piece.strands.front().start;
    int64_t last = first;
    for (int64_t i = 1; i < piece.strands.front().len; ++i) last = ctx.st.L.dnext(last);
    Letter a_stem = ctx.st.L.dlabel(ctx.st.L.dprev(first) ^ 1);
    Letter b_stem = ctx.st.L.dlabel(ctx.st.L.dnext(last));

    for (int orient = 0; orient < 2; ++orient) {
        PartialLabels outer = labels;
        int64_t va = orient ? cube.antipode(w) : w;
        int64_t vb = orient ? w : cube.antipode(w);
        if (!labels.add_letter(va, a_stem) || !labels.add_letter(vb, b_stem)) {
            labels = std::move(outer);
            continue;
        }
        std::vector<std::vector<Letter>> travel = strand_words;
        if (orient)
            for (auto& sw : travel) sw = reversed_letters(sw);
        // Assign strands to paths with incremental consistency.
        std::vector<int> strand_of(dim, -1);
        std::vector<bool> used(dim, false);
        std::function<bool(int)> wire = [&](int path) -> bool {
            if (path == dim) {
                a.beachballs[slot] = pid;
                a.strand_of[slot].assign(strand_of.begin(), strand_of.end());
                a.orient[slot] = orient;
                if (next()) return true;
                return false;
            }
            for (int idx = 0; idx < dim; ++idx) {
                if (used[idx]) continue;
                // Check the path's step words against the partial table.
                PartialLabels saved = labels;
                bool ok = true;
                for (int t = 0; t < dim && ok; ++t) {
                    int j = cube.flip_orders[path][t];
                    uint32_t at = w ^ cube.prefix_mask(path, t);
                    bool upward = ((at >> j) & 1) == 0;
                    uint32_t lower = at & ~(uint32_t(1) << j);
                    std::vector<Letter> step(travel[idx].begin() + t * le,
                                             travel[idx].begin() + (t + 1) * le);
                    if (!upward) step = reversed_letters(step);
                    if (!labels.place(cube.edge_id(lower, j), step, lower,
                                      lower | (uint32_t(1) << j)))
                        ok = false;
                }
                if (ok) {
                    used[idx] = true;
                    strand_of[path] = idx;
                    if (wire(path + 1)) return true;
                    used[idx] = false;
                    strand_of[path] = -1;
                }
                labels = std::move(saved);
            }
            return false;
        };
        if (wire(0)) return true;
        labels = std::move(outer);
    }
    return false;
}

bool try_place_lens(DiscoveryContext& ctx, PartialLabels& labels,
                    moves::CubeAssignment& a, size_t slot, int64_t pid,
                    const std::function<bool()>& next) {
    const LensLayout& lens = ctx.lc.lens;
    int bd = lens.base.dim;
    int dd = ctx.p.dd();
    uint32_t w = ctx.lc.reps[slot / 4];
    int g = static_cast<int>(slot % 4);
    int64_t le = ctx.st.pieces[pid].strands.front().len / bd;
    const auto& strand_words = ctx.strand_words(pid);

    const Piece& piece = ctx.st.pieces[pid];
    int64_t first = piece.strands.front().start;
    int64_t last = first;
    for (int64_t i = 1; i < piece.strands.front().len; ++i) last = ctx.st.L.dnext(last);
    Letter a_stem = ctx.st.L.dlabel(ctx.st.L.dprev(first) ^ 1);
    Letter b_stem = ctx.st.L.dlabel(ctx.st.L.dnext(last));
    int64_t lo = lens.lift_vertex(w, lens.pairs[g].a.front());
    int64_t hi = lens.lift_vertex(lens.base.antipode(w), lens.pairs[g].a.back());

    auto lift_ends = [&](const layout::LensLayout::LiftStep& stp) {
        int64_t base_e = stp.edge / 4;
        int bl = static_cast<int>((stp.edge / 2) % 2), bh = static_cast<int>(stp.edge % 2);
        auto [u, j] = lens.base.edge_of(base_e);
        uint32_t v = u | (uint32_t(1) << j);
        return std::make_pair(lens.lift_vertex(u, bl), lens.lift_vertex(v, bh));
    };

    for (int orient = 0; orient < 2; ++orient) {
        PartialLabels outer = labels;
        int64_t va = orient ? hi : lo;
        int64_t vb = orient ? lo : hi;
        if (!labels.add_letter(va, a_stem) || !labels.add_letter(vb, b_stem)) {
            labels = std::move(outer);
            continue;
        }
        std::vector<std::vector<Letter>> travel = strand_words;
        if (orient)
            for (auto& sw : travel) sw = reversed_letters(sw);
        std::vector<int> strand_of(dd, -1);
        std::vector<bool> used(dd, false);
        std::function<bool(int)> wire = [&](int pair_sel) -> bool {
            if (pair_sel == dd) {
                a.beachballs[slot] = pid;
                a.strand_of[slot].assign(strand_of.begin(), strand_of.end());
                a.orient[slot] = orient;
                return next();
            }
            int path = pair_sel / 2, sel = pair_sel % 2;
            const auto& h = sel ? lens.pairs[g].b : lens.pairs[g].a;
            auto steps = lens.lift_steps(w, path, h);
            for (int idx = 0; idx < dd; ++idx) {
                if (used[idx]) continue;
                PartialLabels saved = labels;
                bool ok = true;
                for (int t = 0; t < bd && ok; ++t) {
                    std::vector<Letter> step(travel[idx].begin() + t * le,
                                             travel[idx].begin() + (t + 1) * le);
                    if (!steps[t].upward) step = reversed_letters(step);
                    auto [vu, vv] = lift_ends(steps[t]);
                    if (!labels.place(steps[t].edge, step, vu, vv)) ok = false;
                }
                if (ok) {
                    used[idx] = true;
                    strand_of[pair_sel] = idx;
                    if (wire(pair_sel + 1)) return true;
                    used[idx] = false;
                    strand_of[pair_sel] = -1;
                }
                labels = std::move(saved);
            }
            return false;
        };
        if (wire(0)) return true;
        labels = std::move(outer);
    }
    return false;
}

}  // namespace

void glue_reservoir(GluingState& st, const BuildParams& p, uint64_t salt) {
    LayoutCache lc(p);
    int64_t per = p.per_instance();
    int64_t total = st.live_piece_count(PieceType::beachball);
    if (total % per != 0)
        throw Error("cover search failed: " + std::to_string(total) +
                        " beachballs do not fill instances of " + std::to_string(per),
                    "glue_reservoir");

    GluingState work = st;
    int64_t instances = 0;
    while (work.live_piece_count(PieceType::beachball) > 0) {
        DiscoveryContext ctx{p, lc, work, {}, {}};
        moves::CubeAssignment a;
        a.beachballs.assign(per, -1);
        a.strand_of.assign(per, {});
        a.orient.assign(per, 0);

        // Attempt to drape one instance from an explicit candidate list; the
        // slot candidates come from the list in order. Commits on success.
        int64_t nodes_budget = 0;
        auto attempt = [&](const std::vector<int64_t>& cands) -> bool {
            PartialLabels labels;
            std::vector<char> taken(work.pieces.size(), 0);
            std::function<bool(size_t)> fill = [&](size_t slot) -> bool {
                if (nodes_budget-- <= 0) return false;
                if (slot == static_cast<size_t>(per)) {
                    try {
                        if (p.kind == Kind::simplicial)
                            moves::hypercube_glue(work, lc.cube, a, false);
                        else if (p.d >= 3)
                            moves::lens_glue(work, lc.lens, a, false);
                        else
                            moves::lens_glue_circle(work, a, false);
                        return true;
                    } catch (const Error&) {
                        return false;
                    }
                }
                for (int64_t pid : cands) {
                    if (taken[pid]) continue;
                    if (!work.pieces[pid].alive ||
                        work.pieces[pid].type != PieceType::beachball)
                        continue;
                    taken[pid] = 1;
                    bool placed = false;
                    auto next = [&]() { return fill(slot + 1); };
                    if (p.kind == Kind::simplicial)
                        placed = try_place_simplicial(ctx, labels, a, slot, pid, next);
                    else if (p.d >= 3)
                        placed = try_place_lens(ctx, labels, a, slot, pid, next);
                    else {
                        const auto& sw = ctx.strand_words(pid);
                        const Piece& piece = work.pieces[pid];
                        int64_t first = piece.strands.front().start;
                        int64_t lastde = first;
                        for (int64_t i = 1; i < piece.strands.front().len; ++i)
                            lastde = work.L.dnext(lastde);
                        Letter a_stem = work.L.dlabel(work.L.dprev(first) ^ 1);
                        Letter b_stem = work.L.dlabel(work.L.dnext(lastde));
                        for (int orient = 0; orient < 2 && !placed; ++orient) {
                            auto travel = sw;
                            if (orient)
                                for (auto& x : travel) x = reversed_letters(x);
                            for (int flip = 0; flip < 2 && !placed; ++flip) {
                                PartialLabels saved = labels;
                                if (labels.add_letter(orient ? 1 : 0, a_stem) &&
                                    labels.add_letter(orient ? 0 : 1, b_stem) &&
                                    labels.place(0, travel[flip], 0, 1) &&
                                    labels.place(1, travel[1 - flip], 0, 1)) {
                                    a.beachballs[slot] = pid;
                                    a.strand_of[slot] = {flip, 1 - flip};
                                    a.orient[slot] = orient;
                                    if (fill(slot + 1)) {
                                        placed = true;
                                        break;
                                    }
                                }
                                labels = std::move(saved);
                            }
                        }
                    }
                    if (placed) return true;
                    taken[pid] = 0;
                }
                return false;
            };
            return fill(0);
        };

        // Phase 1: windows of `per` consecutive chain pieces. Instance mates
        // sit together along reservoir chains, so the inner slots are nearly
        // forced and wrong wirings die immediately.
        bool done = false;
        for (size_t ci = 0; ci < work.chains.size() && !done; ++ci) {
            const Chain& ch = work.chains[ci];
            int64_t len = static_cast<int64_t>(ch.pieces.size());
            if (len < per) continue;
            int64_t limit = ch.cyclic ? len : len - per + 1;
            for (int64_t off0 = 0; off0 < limit && !done; ++off0) {
                int64_t off = (off0 + static_cast<int64_t>(salt)) % limit;
                std::vector<int64_t> window;
                bool usable = true;
                for (int64_t i = 0; i < per; ++i) {
                    int64_t pid = ch.pieces[(off + i) % len];
                    const Piece& pc = work.pieces[pid];
                    if (!pc.alive || pc.type != PieceType::beachball) usable = false;
                    window.push_back(pid);
                }
                if (!usable) continue;
                nodes_budget = 200000;
                done = attempt(window);
            }
        }
        // Phase 2: bounded general search over the whole pool.
        if (!done) {
            std::vector<int64_t> pool;
            for (size_t pid = 0; pid < work.pieces.size(); ++pid)
                if (work.pieces[pid].alive &&
                    work.pieces[pid].type == PieceType::beachball)
                    pool.push_back(static_cast<int64_t>(pid));
            if (!pool.empty())
                std::rotate(pool.begin(), pool.begin() + (salt % pool.size()),
                            pool.end());
            nodes_budget = 2000000;
            done = attempt(pool);
        }
        if (!done)
            throw Error("cover search failed: no instance assembles from the "
                        "remaining " +
                            std::to_string(work.live_piece_count(PieceType::beachball)) +
                            " beachballs",
                        "glue_reservoir");
        ++instances;
    }
    if (work.free_edge_count() != 0)
        throw Error("cover search failed: free edges remain after gluing",
                    "glue_reservoir");
    work.assert_legal();
    work.log("glue_reservoir instances=" + std::to_string(instances));
    st = std::move(work);
}

void symmetrize(GluingState& st) {
    auto q = st.quotient();
    auto stars = q.graph.stars();
    int genuine = st.params.kind == Kind::simplicial ? st.params.d + 1
                                                     : 2 * st.params.d;
    std::vector<int64_t> visits(st.L.components(), 0);
    for (int64_t x = 0; x < st.L.num_vertices(); ++x)
        if (static_cast<int>(stars[q.vertex_map[x]].size()) == genuine)
            ++visits[x / st.L.length()];
    for (int64_t c = 1; c < st.L.components(); ++c)
        if (visits[c] != visits[0])
            throw Error("unbalanced genuine-visit counts: component 0 has " +
                            std::to_string(visits[0]) + ", component " +
                            std::to_string(c) + " has " + std::to_string(visits[c]),
                        "symmetrize");
    st.log("symmetrize m=" + std::to_string(visits.empty() ? 0 : visits[0]));
}

CocycleAdjustment adjust_cocycles(const GluingState& base_state,
                                  const BlockStructure& bs, const Matching& m,
                                  const BuildParams& p) {
    for (int64_t attempt = 0; attempt < p.retry_budget; ++attempt) {
        Matching mk = attempt == 0 ? m : match_blocks(base_state, bs, p, attempt);
        if (!mk.unmatched.empty()) continue;
        GluingState st = base_state;
        try {
            glue_matched(st, bs, mk);
            clear_remainder(st, p);
            glue_reservoir(st, p, attempt);
            symmetrize(st);
        } catch (const Error&) {
            if (attempt == 0) throw;  // the baseline must glue
            continue;
        }
        spine::Spine s = spine::make_spine(
            p.kind == Kind::simplicial ? spine::Kind::simplicial : spine::Kind::cubical,
            p.d, p.k, st.L, st.partition());
        auto report = spine::check_regularity(s);
        if (!(report.r1.pass && report.r2.pass && report.r3.pass && report.r4.pass))
            throw Error("checker rejects local structure: " +
                            (report.r1.witnesses.empty()
                                 ? (report.r3.witnesses.empty()
                                        ? std::string("r2/r4")
                                        : report.r3.witnesses.front())
                                 : report.r1.witnesses.front()),
                        "adjust_cocycles");
        if (report.r5.pass) {
            st.log("adjust_cocycles attempts=" + std::to_string(attempt + 1));
            return {std::move(st), attempt + 1};
        }
    }
    throw Error("cocycle adjustment failed within the retry budget",
                "adjust_cocycles");
}

BuildResult build_spine(const ReducedWord& r, const BuildParams& p) {
    p.validate();
    GluingState st = initial_state(r, p);
    st.log("build_spine kind=" + kind_name(p.kind) + " d=" + std::to_string(p.d) +
           " k=" + std::to_string(p.k) + " n=" + std::to_string(p.n()) +
           " seed=" + std::to_string(p.seed));
    auto norm = normalize_length(st, p);
    if (norm.rho != 0)
        throw Error("full pipeline requires lambda*N to divide n "
                    "(normalization pregluing is a standalone operation)",
                    "normalize_length");
    auto bs = segment_blocks(st, p);
    st.log("segment_blocks blocks_per_circle=" + std::to_string(bs.blocks_per_circle));
    auto m = match_blocks(st, bs, p);
    st.log("match_blocks tuples=" + std::to_string(m.tuples.size()) +
           " unmatched=" + std::to_string(m.unmatched.size()));
    auto resolved = resolve_unmatched(st, bs, m, p);
    for (const auto& line : st.trace)
        if (std::find(resolved.st.trace.begin(), resolved.st.trace.end(), line) ==
            resolved.st.trace.end())
            resolved.st.trace.push_back(line);
    auto adj = adjust_cocycles(resolved.st, bs, resolved.matching, p);

    BuildResult out;
    out.cocycle_attempts = adj.attempts;
    out.spine = spine::make_spine(
        p.kind == Kind::simplicial ? spine::Kind::simplicial : spine::Kind::cubical,
        p.d, p.k, adj.st.L, adj.st.partition());
    out.report = spine::check_regularity(out.spine);
    out.trace = adj.st.trace;
    if (!out.report.regular())
        throw Error("final verification failed", "verify");
    if (out.report.min_top_edge < p.lambda_or_default())
        throw Error("minimum topological edge " +
                        std::to_string(out.report.min_top_edge) + " below lambda",
                    "verify");
    return out;
}

GluingState initial_state(const ReducedWord& r, const BuildParams& p) {
    p.validate();
    if (static_cast<int64_t>(r.size()) != p.n())
        throw Error("relator length " + std::to_string(r.size()) +
                        " does not match the configured n = " + std::to_string(p.n()),
                    "config");
    GluingState st;
    st.params.kind = p.kind;
    st.params.d = p.d;
    st.params.k = p.k;
    st.params.lambda = p.Lambda();
    st.params.bigN = p.bigN_or_default();
    st.L = rosegraph::circles_from_word(r, p.copies_or_default());
    return st;
}

}  // namespace spineforge::pipeline
