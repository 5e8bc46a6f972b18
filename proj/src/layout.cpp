#include "spineforge/layout.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <numeric>

namespace spineforge::layout {

namespace {

std::vector<int> zigzag(int dim) {
    std::vector<int> s;
    s.reserve(dim);
    s.push_back(0);
    int lo = 1, hi = dim - 1;
    bool take_low = true;
    while (static_cast<int>(s.size()) < dim) {
        s.push_back(take_low ? lo++ : hi--);
        take_low = !take_low;
    }
    return s;
}

}  // namespace

std::vector<std::vector<int>> strand_flip_orders(int dim) {
    if (dim < 1) throw Error("cube dimension must be positive");
    auto base = zigzag(dim);
    std::vector<std::vector<int>> orders(dim, std::vector<int>(dim));
    for (int p = 0; p < dim; ++p)
        for (int t = 0; t < dim; ++t) orders[p][t] = (base[t] + p) % dim;
    return orders;
}

uint32_t representative_mask(int dim) {
    if (dim == 1) return 1;
    auto orders = strand_flip_orders(dim);
    auto prefix = [&](int p, int t) {  // flips before step t
        uint32_t m = 0;
        for (int i = 0; i < t; ++i) m |= uint32_t(1) << orders[p][i];
        return m;
    };

    // Interior transitions (p, t), grouped by their direction pair, with the
    // mask determining the anchoring representative.
    std::map<std::pair<int, int>, std::vector<uint32_t>> by_pair;
    for (int p = 0; p < dim; ++p) {
        for (int t = 0; t + 1 < dim; ++t) {
            int a = orders[p][t], b = orders[p][t + 1];
            if (a > b) std::swap(a, b);
            by_pair[{a, b}].push_back(prefix(p, t + 1));
        }
    }

    for (uint32_t mask = 1; mask < (uint32_t(1) << dim); ++mask) {
        if ((__builtin_popcount(mask) & 1) == 0) continue;
        bool ok = true;
        for (auto& [pr, slots] : by_pair) {
            (void)pr;
            if (slots.size() != 2) {
                ok = false;
                break;
            }
            uint32_t delta = slots[0] ^ slots[1];
            if ((__builtin_popcount(delta & mask) & 1) == 0) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        for (int j = 0; j < dim && ok; ++j) {
            if ((mask >> j) & 1) continue;
            // Edge-coverage balance along directions outside the mask.
            int ones = 0;
            for (int p = 0; p < dim; ++p) {
                int t = static_cast<int>(
                    std::find(orders[p].begin(), orders[p].end(), j) - orders[p].begin());
                ones += __builtin_popcount(prefix(p, t) & mask) & 1;
            }
            if (2 * ones != dim) ok = false;
        }
        if (ok) return mask;
    }
    throw Error("no linear representative rule for dimension " + std::to_string(dim));
}

int64_t CubeLayout::edge_id(uint32_t u, int j) const {
    uint32_t low = u & ((uint32_t(1) << j) - 1);
    uint32_t high = u >> (j + 1);
    uint32_t squeezed = low | (high << j);
    return int64_t(j) * (int64_t(1) << (dim - 1)) + squeezed;
}

std::pair<uint32_t, int> CubeLayout::edge_of(int64_t id) const {
    int j = static_cast<int>(id >> (dim - 1));
    uint32_t squeezed = static_cast<uint32_t>(id & ((int64_t(1) << (dim - 1)) - 1));
    uint32_t low = squeezed & ((uint32_t(1) << j) - 1);
    uint32_t high = squeezed >> j;
    return {low | (high << (j + 1)), j};
}

std::vector<uint32_t> CubeLayout::representatives() const {
    std::vector<uint32_t> reps;
    for (uint32_t v = 0; v < (uint32_t(1) << dim); ++v)
        if (representative(v)) reps.push_back(v);
    return reps;
}

uint32_t CubeLayout::prefix_mask(int p, int t) const {
    uint32_t m = 0;
    for (int i = 0; i < t; ++i) m |= uint32_t(1) << flip_orders[p][i];
    return m;
}

std::vector<uint32_t> CubeLayout::strand_vertices(uint32_t w, int p) const {
    std::vector<uint32_t> vs;
    vs.reserve(dim + 1);
    uint32_t cur = w;
    vs.push_back(cur);
    for (int t = 0; t < dim; ++t) {
        cur ^= uint32_t(1) << flip_orders[p][t];
        vs.push_back(cur);
    }
    return vs;
}

CubeLayout make_cube_layout(int dim) {
    CubeLayout c;
    c.dim = dim;
    c.flip_orders = strand_flip_orders(dim);
    c.rep_mask = representative_mask(dim);
    return c;
}

LayoutCheck verify_cube_layout(const CubeLayout& c) {
    LayoutCheck res;
    const int dim = c.dim;
    std::vector<int> edge_cover(c.num_edges(), 0);
    int pair_count = dim * (dim - 1) / 2;
    auto pair_index = [&](int a, int b) {
        if (a > b) std::swap(a, b);
        return a * dim - a * (a + 1) / 2 + (b - a - 1);
    };
    std::vector<uint8_t> passages(c.num_vertices() * pair_count, 0);
    std::vector<uint32_t> end_dirs(c.num_vertices(), 0);

    for (uint32_t w : c.representatives()) {
        for (int p = 0; p < dim; ++p) {
            auto vs = c.strand_vertices(w, p);
            for (int t = 0; t < dim; ++t) {
                int j = c.flip_orders[p][t];
                uint32_t lower = vs[t] & ~(uint32_t(1) << j);
                ++edge_cover[c.edge_id(lower, j)];
                if (t > 0) {
                    int a = c.flip_orders[p][t - 1];
                    ++passages[int64_t(vs[t]) * pair_count + pair_index(a, j)];
                }
            }
            uint32_t first_bit = uint32_t(1) << c.flip_orders[p][0];
            uint32_t last_bit = uint32_t(1) << c.flip_orders[p][dim - 1];
            if (end_dirs[w] & first_bit) {
                res.ok = false;
                res.detail = "duplicate strand-end direction at representative";
            }
            end_dirs[w] |= first_bit;
            if (end_dirs[c.antipode(w)] & last_bit) {
                res.ok = false;
                res.detail = "duplicate strand-end direction at anti-representative";
            }
            end_dirs[c.antipode(w)] |= last_bit;
        }
    }
    for (int64_t e = 0; e < c.num_edges(); ++e) {
        if (edge_cover[e] != dim) {
            res.ok = false;
            res.detail = "edge " + std::to_string(e) + " carries " +
                         std::to_string(edge_cover[e]) + " strands (want " +
                         std::to_string(dim) + ")";
            return res;
        }
    }
    for (int64_t v = 0; v < c.num_vertices(); ++v) {
        if (end_dirs[v] != (uint32_t(1) << dim) - 1) {
            res.ok = false;
            res.detail = "vertex " + std::to_string(v) + " strand ends miss a direction";
            return res;
        }
        for (int idx = 0; idx < pair_count; ++idx) {
            if (passages[v * pair_count + idx] != 1) {
                res.ok = false;
                res.detail = "vertex " + std::to_string(v) + " pair slot " +
                             std::to_string(idx) + " carries " +
                             std::to_string(passages[v * pair_count + idx]) +
                             " passages";
                return res;
            }
        }
    }
    return res;
}

// Validated by the local lens checker: even dimensions need x = 1, odd
// dimensions x = 0, except d = 3 where both choices give the same four
// pairs and x = 1 matches the published order.
int height_parity_bit(int d) { return (d % 2 == 0 || d == 3) ? 1 : 0; }

namespace {

std::vector<int> periodic_prefix(const std::vector<int>& pattern, int len) {
    std::vector<int> out(len);
    for (int i = 0; i < len; ++i) out[i] = pattern[i % pattern.size()];
    return out;
}

std::vector<int> height_word(int first, const std::vector<int>& pattern, int mid_len,
                             int last) {
    std::vector<int> w;
    w.push_back(first);
    auto mid = periodic_prefix(pattern, mid_len);
    w.insert(w.end(), mid.begin(), mid.end());
    w.push_back(last);
    return w;
}

}  // namespace

std::vector<HeightPair> height_pairs(int d) {
    if (d <= 2) throw Error("degenerate dimension");
    int x = height_parity_bit(d);
    int mid = d - 2;
    std::vector<HeightPair> hp(4);
    hp[0] = {height_word(0, {0}, mid, 0), height_word(0, {1}, mid, 0)};
    hp[1] = {height_word(0, {0, 1}, mid, 1), height_word(0, {1, 0}, mid, 1)};
    hp[2] = {height_word(1, {1, 1, 0, 0}, mid, x), height_word(1, {0, 0, 1, 1}, mid, x)};
    hp[3] = {height_word(1, {1, 0, 0, 1}, mid, 1 - x),
             height_word(1, {0, 1, 1, 0}, mid, 1 - x)};
    return hp;
}

std::vector<LensLayout::LiftStep> LensLayout::lift_steps(uint32_t w, int p,
                                                         const std::vector<int>& h) const {
    auto vs = base.strand_vertices(w, p);
    std::vector<LiftStep> steps;
    steps.reserve(base.dim);
    for (int i = 0; i < base.dim; ++i) {
        int j = base.flip_orders[p][i];
        bool upward = ((vs[i] >> j) & 1) == 0;
        uint32_t lower = vs[i] & ~(uint32_t(1) << j);
        int bl = upward ? h[i] : h[i + 1];
        int bh = upward ? h[i + 1] : h[i];
        steps.push_back({lift_edge(base.edge_id(lower, j), bl, bh), upward});
    }
    return steps;
}

LensLayout make_lens_layout(int d) {
    if (d < 3) throw Error("lens layout needs dimension >= 3 (d = 2 uses the circle)");
    LensLayout l;
    l.d = d;
    l.base = make_cube_layout(d - 1);
    l.pairs = height_pairs(d);

    // 2-color the eight height words so that the two lifts crossing a common
    // lift edge, and the two words of a height pair, land in opposite
    // copy-subset halves. Nodes: (g, sel) -> 2g + sel.
    std::vector<std::vector<int>> adj(8);
    auto word_of = [&](int node) -> const std::vector<int>& {
        return (node & 1) ? l.pairs[node >> 1].b : l.pairs[node >> 1].a;
    };
    for (int g = 0; g < 4; ++g) {
        adj[2 * g].push_back(2 * g + 1);
        adj[2 * g + 1].push_back(2 * g);
    }
    for (int i = 1; i < d; ++i) {
        std::map<std::pair<int, int>, std::vector<int>> bucket;
        for (int node = 0; node < 8; ++node) {
            const auto& h = word_of(node);
            bucket[{h[i - 1], h[i]}].push_back(node);
        }
        for (auto& [bits, nodes] : bucket) {
            (void)bits;
            if (nodes.size() != 2)
                throw Error("height words do not cross lifts in pairs at step " +
                            std::to_string(i));
            adj[nodes[0]].push_back(nodes[1]);
            adj[nodes[1]].push_back(nodes[0]);
        }
    }
    std::vector<int> color(8, -1);
    std::vector<int> stack{0};
    color[0] = 0;
    l.subset_ok = true;
    while (!stack.empty()) {
        int n = stack.back();
        stack.pop_back();
        for (int m : adj[n]) {
            if (color[m] < 0) {
                color[m] = 1 - color[n];
                stack.push_back(m);
            } else if (color[m] == color[n]) {
                // No global copy-subset coloring (happens for d >= 5); the
                // local spine structure is unaffected.
                l.subset_ok = false;
            }
        }
    }
    for (int n = 0; n < 8; ++n)
        if (color[n] < 0) color[n] = 0;
    for (int g = 0; g < 4; ++g)
        for (int sel = 0; sel < 2; ++sel) l.subset_sign[g][sel] = color[2 * g + sel];
    return l;
}

LayoutCheck verify_lens_layout(const LensLayout& l) {
    LayoutCheck res;
    const int d = l.d;
    const int bd = l.base.dim;     // d - 1
    const int items = 2 * bd + 2;  // two lifts per base direction + two stems

    for (const auto& hp : l.pairs) {
        if (hp.a.front() != hp.b.front() || hp.a.back() != hp.b.back()) {
            res.ok = false;
            res.detail = "height pair endpoints disagree";
            return res;
        }
    }
    // Words agreeing on two consecutive bits must differ just outside; this
    // is what sends co-crossing lifts into antipodal continuations.
    auto word_of = [&](int node) -> const std::vector<int>& {
        return (node & 1) ? l.pairs[node >> 1].b : l.pairs[node >> 1].a;
    };
    for (int n1 = 0; n1 < 8; ++n1) {
        for (int n2 = n1 + 1; n2 < 8; ++n2) {
            const auto &h1 = word_of(n1), &h2 = word_of(n2);
            for (int i = 1; i < d; ++i) {
                if (h1[i - 1] != h2[i - 1] || h1[i] != h2[i]) continue;
                if (i - 2 >= 0 && h1[i - 2] == h2[i - 2]) {
                    res.ok = false;
                    res.detail = "co-crossing words agree one step before position " +
                                 std::to_string(i);
                    return res;
                }
                if (i + 1 < d && h1[i + 1] == h2[i + 1]) {
                    res.ok = false;
                    res.detail = "co-crossing words agree one step after position " +
                                 std::to_string(i);
                    return res;
                }
            }
        }
    }

    std::vector<int> lift_cover(l.num_edges(), 0);
    auto pair_index = [&](int a, int b) {
        if (a > b) std::swap(a, b);
        return a * items - a * (a + 1) / 2 + (b - a - 1);
    };
    int pair_count = items * (items - 1) / 2;
    std::vector<uint8_t> passages(l.num_vertices() * pair_count, 0);
    std::vector<int> stem_count(l.num_vertices(), 0);
    std::vector<std::array<int, 2>> stems_at(l.num_vertices(), std::array<int, 2>{-1, -1});
    auto stem_slot = [&](int64_t uv, int g) {
        auto& st = stems_at[uv];
        for (int s = 0; s < 2; ++s)
            if (st[s] == g) return 2 * bd + s;
        for (int s = 0; s < 2; ++s)
            if (st[s] < 0) {
                st[s] = g;
                return 2 * bd + s;
            }
        return -1;
    };

    for (uint32_t w : l.base.representatives()) {
        for (int g = 0; g < 4; ++g) {
            for (int sel = 0; sel < 2; ++sel) {
                const auto& h = sel ? l.pairs[g].b : l.pairs[g].a;
                for (int p = 0; p < bd; ++p) {
                    auto vs = l.base.strand_vertices(w, p);
                    auto steps = l.lift_steps(w, p, h);
                    for (auto& st : steps) ++lift_cover[st.edge];
                    for (int i = 1; i < bd; ++i) {
                        int64_t uv = l.lift_vertex(vs[i], h[i]);
                        int item_in = 2 * l.base.flip_orders[p][i - 1] + h[i - 1];
                        int item_out = 2 * l.base.flip_orders[p][i] + h[i + 1];
                        if (item_in == item_out) {
                            res.ok = false;
                            res.detail = "lift U-turn";
                            return res;
                        }
                        ++passages[uv * pair_count + pair_index(item_in, item_out)];
                    }
                    {
                        int64_t uv = l.lift_vertex(vs[0], h[0]);
                        int slot = stem_slot(uv, g);
                        int item = 2 * l.base.flip_orders[p][0] + h[1];
                        ++passages[uv * pair_count + pair_index(slot, item)];
                        if (p == 0 && sel == 0) ++stem_count[uv];
                    }
                    {
                        int64_t uv = l.lift_vertex(vs[bd], h[bd]);
                        int slot = stem_slot(uv, g);
                        int item = 2 * l.base.flip_orders[p][bd - 1] + h[bd - 1];
                        ++passages[uv * pair_count + pair_index(slot, item)];
                        if (p == 0 && sel == 0) ++stem_count[uv];
                    }
                }
            }
        }
    }

    for (int64_t e = 0; e < l.num_edges(); ++e) {
        if (lift_cover[e] != l.dd()) {
            res.ok = false;
            res.detail = "lift edge " + std::to_string(e) + " carries " +
                         std::to_string(lift_cover[e]) + " strands (want " +
                         std::to_string(l.dd()) + ")";
            return res;
        }
    }
    for (int64_t uv = 0; uv < l.num_vertices(); ++uv) {
        if (stem_count[uv] != 2) {
            res.ok = false;
            res.detail = "upstairs vertex " + std::to_string(uv) + " touches " +
                         std::to_string(stem_count[uv]) + " beachball ends (want 2)";
            return res;
        }
        for (int a = 0; a < items; ++a) {
            for (int b = a + 1; b < items; ++b) {
                int count = passages[uv * pair_count + pair_index(a, b)];
                bool antipodal = (a < 2 * bd && b < 2 * bd && (a / 2) == (b / 2)) ||
                                 (a >= 2 * bd && b >= 2 * bd);
                int want = antipodal ? 0 : 1;
                if (count != want) {
                    res.ok = false;
                    res.detail = "upstairs vertex " + std::to_string(uv) + " items (" +
                                 std::to_string(a) + "," + std::to_string(b) + ") carry " +
                                 std::to_string(count) + " passages (want " +
                                 std::to_string(want) + ")";
                    return res;
                }
            }
        }
    }
    return res;
}

}  // namespace spineforge::layout
