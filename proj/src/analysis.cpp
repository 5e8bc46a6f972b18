#include "spineforge/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "spineforge/rng.hpp"
#include "spineforge/rosegraph.hpp"

namespace spineforge::analysis {

namespace {

// Occurrence context: every relator contributes its cyclic word and the
// cyclic word of its inverse.
struct Symmetrized {
    std::vector<std::vector<Letter>> cyc;  // 2 entries per relator

    explicit Symmetrized(const Presentation& p) {
        for (const auto& r : p.relators) {
            cyc.push_back(r.letters());
            cyc.push_back(r.inverse().letters());
        }
    }

    Letter at(size_t w, int64_t pos) const {
        const auto& v = cyc[w];
        int64_t n = static_cast<int64_t>(v.size());
        return v[static_cast<size_t>(((pos % n) + n) % n)];
    }
};

uint64_t mix(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Is some word of length L shared by two distinct occurrences?
bool has_repeat(const Symmetrized& sym, int64_t L) {
    if (L <= 0) return true;
    std::unordered_map<uint64_t, std::vector<std::pair<int, int64_t>>> seen;
    for (size_t w = 0; w < sym.cyc.size(); ++w) {
        int64_t n = static_cast<int64_t>(sym.cyc[w].size());
        if (L > n) continue;
        // Rolling polynomial hash over the cyclic word.
        const uint64_t B = 0x100000001B3ull;
        uint64_t pw = 1;
        for (int64_t t = 1; t < L; ++t) pw *= B;
        uint64_t h = 0;
        for (int64_t t = 0; t < L; ++t)
            h = h * B + mix(static_cast<uint64_t>(sym.at(w, t).packed() + 64));
        for (int64_t off = 0; off < n; ++off) {
            auto& bucket = seen[h];
            for (auto& [w2, off2] : bucket) {
                if (static_cast<int>(w) == w2 && off == off2) continue;
                bool equal = true;
                for (int64_t t = 0; t < L && equal; ++t)
                    if (!(sym.at(w2, off2 + t) == sym.at(w, off + t))) equal = false;
                if (equal) return true;
            }
            bucket.push_back({static_cast<int>(w), off});
            // slide
            h = (h - pw * mix(static_cast<uint64_t>(sym.at(w, off).packed() + 64))) * B +
                mix(static_cast<uint64_t>(sym.at(w, off + L).packed() + 64));
        }
    }
    return false;
}

}  // namespace

PieceStats pieces_ratio(const Presentation& p) {
    if (p.relators.empty()) return {};
    for (const auto& r : p.relators)
        if (r.empty()) throw Error("relators must be nonempty");
    Symmetrized sym(p);
    int64_t n = static_cast<int64_t>(p.relators.front().size());
    int64_t lo = 0, hi = n;
    while (lo < hi) {
        int64_t mid = (lo + hi + 1) / 2;
        if (has_repeat(sym, mid))
            lo = mid;
        else
            hi = mid - 1;
    }
    PieceStats st;
    st.max_piece = lo;
    st.ratio = static_cast<double>(lo) / static_cast<double>(n);
    return st;
}

namespace {

std::vector<Letter> cyclic_slice(const ReducedWord& r, int64_t start, int64_t len) {
    std::vector<Letter> out;
    out.reserve(len);
    int64_t n = static_cast<int64_t>(r.size());
    for (int64_t i = 0; i < len; ++i)
        out.push_back(r.at(static_cast<size_t>(((start + i) % n + n) % n)));
    return out;
}

uint64_t letters_key(const std::vector<Letter>& w) {
    uint64_t h = 1469598103934665603ull;
    for (const auto& l : w) {
        h ^= static_cast<uint64_t>(l.packed() + 64);
        h *= 1099511628211ull;
    }
    return h;
}

int64_t longest_common_across(const ReducedWord& r,
                              const std::vector<std::pair<int64_t, int64_t>>& blocks) {
    auto common_at = [&](int64_t L) {
        std::map<uint64_t, std::vector<Letter>> inter;
        bool first = true;
        for (auto& [start, len] : blocks) {
            std::map<uint64_t, std::vector<Letter>> cur;
            for (int64_t off = 0; off + L <= len; ++off) {
                auto w = cyclic_slice(r, start + off, L);
                cur.emplace(letters_key(w), w);
            }
            if (first) {
                inter = std::move(cur);
                first = false;
            } else {
                for (auto it = inter.begin(); it != inter.end();) {
                    auto found = cur.find(it->first);
                    if (found == cur.end() || !(found->second == it->second))
                        it = inter.erase(it);
                    else
                        ++it;
                }
            }
            if (inter.empty()) return false;
        }
        return !inter.empty();
    };
    int64_t hi = blocks.front().second;
    for (auto& [s, len] : blocks) {
        (void)s;
        hi = std::min(hi, len);
    }
    int64_t lo = 0;
    while (lo < hi) {
        int64_t mid = (lo + hi + 1) / 2;
        if (common_at(mid))
            lo = mid;
        else
            hi = mid - 1;
    }
    return lo;
}

}  // namespace

BeadDecomposition bead_decompose(const ReducedWord& r, double delta, double C,
                                 int dd, int k, uint64_t seed) {
    int64_t n = static_cast<int64_t>(r.size());
    if (n < 4) throw Error("word too short for a bead decomposition");
    if (!(delta > 0 && delta < 1)) throw Error("delta must lie in (0,1)");
    double bound = delta / std::log(2.0 * k - 1.0);
    if (!(C > 0) || C >= bound)
        throw Error("constant C must satisfy C < delta/log(2k-1) (bound " +
                    std::to_string(bound) + ")");

    BeadDecomposition bd;
    bd.r_len = std::max<int64_t>(1, static_cast<int64_t>(std::pow(n, 1.0 - delta)));
    bd.s_len = std::max<int64_t>(1, static_cast<int64_t>(std::pow(n, delta)));
    bd.lip_len = static_cast<int64_t>(std::ceil(C * std::log(static_cast<double>(n))));
    if (bd.lip_len < 1) bd.lip_len = 1;
    int64_t unit = bd.r_len + bd.s_len;
    bd.m = (n / unit) / dd * dd;
    if (bd.m < dd) throw Error("word too short: no dd-divisible factor count fits");
    int64_t pos = 0;
    for (int64_t i = 0; i < bd.m; ++i) {
        bd.r_starts.push_back(pos);
        pos += bd.r_len;
        bd.s_starts.push_back(pos);
        pos += bd.s_len;
    }
    // The final s-factor absorbs the rounding remainder up to n.
    auto s_block = [&](int64_t i) -> std::pair<int64_t, int64_t> {
        int64_t start = bd.s_starts[i];
        int64_t end = (i + 1 < bd.m) ? bd.r_starts[i + 1] : n;
        return {start, end - start};
    };

    int64_t fam = bd.m / dd;
    Rng rng(seed);
    for (int64_t i = 0; i < fam; ++i) {
        std::vector<std::pair<int64_t, int64_t>> blocks;
        for (int j = 0; j < dd; ++j) blocks.push_back(s_block(i + j * fam));
        std::map<uint64_t, std::vector<Letter>> inter;
        std::map<uint64_t, std::vector<int64_t>> offsets;
        bool first = true;
        for (auto& [start, len] : blocks) {
            std::map<uint64_t, std::vector<Letter>> cur;
            std::map<uint64_t, int64_t> cur_off;
            for (int64_t off = 0; off + bd.lip_len <= len; ++off) {
                auto w = cyclic_slice(r, start + off, bd.lip_len);
                uint64_t key = letters_key(w);
                if (!cur.count(key)) {
                    cur.emplace(key, w);
                    cur_off[key] = start + off;
                }
            }
            if (first) {
                inter = std::move(cur);
                for (auto& [key, off] : cur_off) offsets[key] = {off};
                first = false;
            } else {
                for (auto it = inter.begin(); it != inter.end();) {
                    auto found = cur.find(it->first);
                    if (found == cur.end() || !(found->second == it->second)) {
                        offsets.erase(it->first);
                        it = inter.erase(it);
                    } else {
                        offsets[it->first].push_back(cur_off[it->first]);
                        ++it;
                    }
                }
            }
            if (inter.empty()) break;
        }
        if (inter.empty()) {
            int64_t best = longest_common_across(r, blocks);
            throw Error("no lip found in family " + std::to_string(i) +
                        " (longest common length " + std::to_string(best) + ")");
        }
        auto it = inter.begin();
        std::advance(it, rng.below(inter.size()));
        BeadDecomposition::Lip lip;
        lip.word = ReducedWord(it->second, false);
        lip.offsets = offsets[it->first];
        bd.lips.push_back(std::move(lip));
    }

    // Gluability of the lip classes as a partial quotient.
    {
        auto L = rosegraph::circles_from_word(r, 1);
        rosegraph::EdgePartition part;
        std::set<int64_t> used;
        bool overlap = false;
        for (const auto& lip : bd.lips) {
            for (int64_t t = 0; t < bd.lip_len; ++t) {
                std::vector<int64_t> cls;
                for (int64_t off : lip.offsets) {
                    int64_t e = (off + t) % n;
                    if (!used.insert(e).second) overlap = true;
                    cls.push_back(2 * e);
                }
                part.classes.push_back(std::move(cls));
            }
        }
        bd.lips_gluable = false;
        if (!overlap) {
            try {
                rosegraph::apply_partition(L, part);
                bd.lips_gluable = true;
            } catch (const Error&) {
            }
        }
    }

    // Piece masses: arcs between consecutive lip runs around the circle.
    std::vector<int64_t> lip_positions;
    for (const auto& lip : bd.lips)
        for (int64_t off : lip.offsets) lip_positions.push_back(off % n);
    std::sort(lip_positions.begin(), lip_positions.end());
    for (size_t i = 0; i < lip_positions.size(); ++i) {
        int64_t cur = lip_positions[i] + bd.lip_len;
        int64_t next = (i + 1 < lip_positions.size()) ? lip_positions[i + 1]
                                                      : lip_positions[0] + n;
        bd.piece_masses.push_back(next - cur);
    }
    return bd;
}

LiftCheckResult long_subword_lift_check(const spine::Spine& s, double beta,
                                        int64_t node_cap) {
    LiftCheckResult res;
    int64_t n = s.L.length();
    int64_t T = static_cast<int64_t>(std::ceil(beta * static_cast<double>(n)));
    if (T < 1) T = 1;

    // Occurrence positions 0..n-1 read r, n..2n-1 read r^{-1}.
    ReducedWord inv = ReducedWord(s.L.word().letters(), true).inverse();
    auto occ_letter = [&](int64_t q) {
        return q < n ? s.L.word().at(static_cast<size_t>(q))
                     : inv.at(static_cast<size_t>(q - n));
    };
    auto occ_next = [&](int64_t q) {
        return q < n ? (q + 1) % n : n + (q + 1 - n) % n;
    };

    const auto& g = s.quotient.graph;
    auto stars = g.stars();
    std::vector<std::map<int, int64_t>> next_by_letter(g.num_vertices);
    for (int64_t v = 0; v < g.num_vertices; ++v)
        for (int64_t de : stars[v]) next_by_letter[v][g.dir_label(de).packed()] = de;

    // Maximal walk length (in edges, capped at T) of the deterministic
    // occurrence-following walk from state (edge, q).
    std::unordered_map<uint64_t, int32_t> memo;
    auto key = [&](int64_t de, int64_t q) {
        return static_cast<uint64_t>(de) * static_cast<uint64_t>(2 * n) +
               static_cast<uint64_t>(q);
    };
    int64_t budget = node_cap;
    auto walk_len = [&](int64_t de0, int64_t q0) -> int64_t {
        std::vector<uint64_t> path;
        std::unordered_set<uint64_t> on_path;
        int64_t cur = de0, q = q0;
        int64_t tail;  // walk length from the stopping state onward
        for (;;) {
            uint64_t kk = key(cur, q);
            auto it = memo.find(kk);
            if (it != memo.end()) {
                tail = it->second;
                break;
            }
            if (on_path.count(kk) || static_cast<int64_t>(path.size()) >= T) {
                tail = T;  // cycle or already long enough
                break;
            }
            if (budget-- <= 0) return -1;
            path.push_back(kk);
            on_path.insert(kk);
            int64_t head = g.target(cur);
            int64_t nq = occ_next(q);
            auto nx = next_by_letter[head].find(occ_letter(nq).packed());
            if (nx == next_by_letter[head].end()) {
                tail = 0;  // the pushed state is a final edge
                // assign and return below; note path.back() gets tail+1... the
                // final edge itself counts 1.
                int64_t v2 = tail;
                for (auto pit = path.rbegin(); pit != path.rend(); ++pit) {
                    v2 = std::min<int64_t>(T, v2 + 1);
                    memo[*pit] = static_cast<int32_t>(v2);
                }
                return memo[key(de0, q0)];
            }
            cur = nx->second;
            q = nq;
        }
        int64_t v2 = tail;
        for (auto pit = path.rbegin(); pit != path.rend(); ++pit) {
            v2 = std::min<int64_t>(T, v2 + 1);
            memo[*pit] = static_cast<int32_t>(v2);
        }
        return path.empty() ? tail : memo[key(de0, q0)];
    };

    auto lce = [&](int64_t de, int64_t q) {
        int64_t len = 0;
        while (len < T) {
            if (!(s.L.dlabel(de) == occ_letter(q))) break;
            de = s.L.dnext(de);
            q = occ_next(q);
            ++len;
        }
        return len;
    };

    for (int64_t q = 0; q < 2 * n; ++q) {
        int packed = occ_letter(q).packed();
        for (int64_t e = 0; e < g.num_edges(); ++e) {
            for (int dir = 0; dir < 2; ++dir) {
                int64_t de = 2 * e + dir;
                if (g.dir_label(de).packed() != packed) continue;
                int64_t len = walk_len(de, q);
                if (len < 0) {
                    res.verdict = LiftCheckResult::Verdict::inconclusive;
                    return res;
                }
                if (len < T) continue;  // the word is not realized for T edges
                ++res.paths_checked;
                bool lifts = false;
                for (int64_t strand : s.fibers[e].strands) {
                    int64_t sde = dir ? (strand ^ 1) : strand;
                    if (budget-- <= 0) {
                        res.verdict = LiftCheckResult::Verdict::inconclusive;
                        return res;
                    }
                    if (lce(sde, q) >= T) {
                        lifts = true;
                        break;
                    }
                }
                if (!lifts) {
                    res.verdict = LiftCheckResult::Verdict::counterexample;
                    res.witness_edge = de;
                    res.witness_offset = q;
                    return res;
                }
            }
        }
    }
    res.verdict = LiftCheckResult::Verdict::lifts;
    return res;
}

}  // namespace spineforge::analysis
