#include "spineforge/moves.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

namespace spineforge::moves {

using rosegraph::CircleFamily;
using state::Chain;
using state::GluedSegment;
using state::run_edges;
using state::run_word;

namespace {

Run reverse_run(const CircleFamily& L, const Run& r) {
    int64_t de = r.start;
    for (int64_t i = 1; i < r.len; ++i) de = L.dnext(de);
    return Run{de ^ 1, r.len};
}

Run subrun(const CircleFamily& L, const Run& r, int64_t offset, int64_t len) {
    int64_t de = r.start;
    for (int64_t i = 0; i < offset; ++i) de = L.dnext(de);
    return Run{de, len};
}

int64_t run_last_edge(const CircleFamily& L, const Run& r) {
    int64_t de = r.start;
    for (int64_t i = 1; i < r.len; ++i) de = L.dnext(de);
    return de;
}

// Strand-slot alignment along a chain: segment.strands[i] must continue into
// piece.strands[i], which must continue into the next segment's strands[i].
void check_alignment(const GluingState& st, int64_t piece_id) {
    const Piece& p = st.pieces[piece_id];
    int64_t seg_before = st.segment_before(piece_id);
    int64_t seg_after = st.segment_after(piece_id);
    if (seg_before < 0 || seg_after < 0) throw Error("piece is not chained");
    const GluedSegment& sb = st.segments[seg_before];
    const GluedSegment& sa = st.segments[seg_after];
    if (sb.strands.size() != p.strands.size() || sa.strands.size() != p.strands.size())
        throw Error("chain strand counts disagree");
    for (size_t i = 0; i < p.strands.size(); ++i) {
        if (st.L.dnext(run_last_edge(st.L, sb.strands[i])) != p.strands[i].start)
            throw Error("chain slots misaligned before piece");
        if (st.L.dnext(run_last_edge(st.L, p.strands[i])) != sa.strands[i].start)
            throw Error("chain slots misaligned after piece");
    }
}

bool same_word(const CircleFamily& L, const Run& a, const Run& b) {
    if (a.len != b.len) return false;
    int64_t da = a.start, db = b.start;
    for (int64_t i = 0; i < a.len; ++i) {
        if (!(L.dlabel(da) == L.dlabel(db))) return false;
        da = L.dnext(da);
        db = L.dnext(db);
    }
    return true;
}

bool is_identity_perms(const std::vector<std::vector<int>>& slot_perms) {
    for (const auto& perm : slot_perms)
        for (size_t a = 0; a < perm.size(); ++a)
            if (perm[a] != static_cast<int>(a)) return false;
    return true;
}

void check_perm_block(const std::vector<std::vector<int>>& slot_perms, int dd, int s) {
    if (static_cast<int>(slot_perms.size()) != dd)
        throw Error("permutation block needs one permutation per strand slot");
    for (const auto& perm : slot_perms) {
        if (static_cast<int>(perm.size()) != s) throw Error("permutation size mismatch");
        std::vector<bool> seen(s, false);
        for (int v : perm) {
            if (v < 0 || v >= s || seen[v]) throw Error("not a permutation");
            seen[v] = true;
        }
    }
}

}  // namespace

CoveringResult covering_move(GluingState& st, const CoveringMatrix& m,
                             const std::vector<std::vector<std::vector<int>>>& perms,
                             const std::vector<RowMode>& row_modes) {
    const int dd = st.dd();
    const int s = static_cast<int>(m.columns.size());
    if (s < 1) throw Error("covering matrix needs at least one column");
    const int r = static_cast<int>(m.columns.front().size());
    if (r < 1) throw Error("covering matrix needs at least one row");
    for (const auto& col : m.columns)
        if (static_cast<int>(col.size()) != r) throw Error("ragged covering matrix");
    if (static_cast<int>(perms.size()) != r + 1)
        throw Error("need r+1 permutation blocks");
    if (static_cast<int>(row_modes.size()) != r) throw Error("need r row modes");
    for (const auto& block : perms) check_perm_block(block, dd, s);
    if (!is_identity_perms(perms.front()) || !is_identity_perms(perms.back()))
        throw Error("p_0 and p_r must be the identity permutation");

    // Validate pieces: alive chained beachballs, consecutive per column,
    // all distinct.
    std::set<int64_t> used;
    for (const auto& col : m.columns) {
        for (int row = 0; row < r; ++row) {
            int64_t id = col[row];
            if (id < 0 || id >= static_cast<int64_t>(st.pieces.size()))
                throw Error("bad piece id");
            const Piece& p = st.pieces[id];
            if (!p.alive || p.type != PieceType::beachball)
                throw Error("covering matrix entries must be live beachballs");
            if (!used.insert(id).second) throw Error("piece repeated in matrix");
            check_alignment(st, id);
            if (row + 1 < r && st.piece_after(id) != col[row + 1])
                throw Error("column is not a consecutive chain run");
        }
    }

    // Row segment ids: row j = 0..r; rows 0..r-1 precede beachball row j+1,
    // row r follows the last.
    auto row_segment = [&](int c, int j) {
        if (j < r) return st.segment_before(m.columns[c][j]);
        return st.segment_after(m.columns[c][r - 1]);
    };
    // Interior rows must carry one common word across columns.
    for (int j = 1; j < r; ++j) {
        const Run& ref = st.segments[row_segment(0, j)].strands.front();
        for (int c = 0; c < s; ++c) {
            const GluedSegment& seg = st.segments[row_segment(c, j)];
            for (const auto& run : seg.strands)
                if (!same_word(st.L, ref, run))
                    throw Error("illegal cover labels: row " + std::to_string(j) +
                                " words differ");
        }
    }
    // Collapse rows: trivial cover around them and monochromatic classes.
    for (int row = 1; row <= r; ++row) {
        if (row_modes[row - 1] != RowMode::collapse) continue;
        if (perms[row - 1] != perms[row])
            throw Error("collapse needs trivial cover");
        for (int t = 0; t < s; ++t) {
            // Post-permutation beachball t: strand slot i drawn from column
            // a with perms[row][i][a] == t.
            const Run* ref = nullptr;
            for (int i = 0; i < dd; ++i) {
                int a = static_cast<int>(
                    std::find(perms[row][i].begin(), perms[row][i].end(), t) -
                    perms[row][i].begin());
                const Run& run = st.pieces[m.columns[a][row - 1]].strands[i];
                if (!ref)
                    ref = &run;
                else if (!same_word(st.L, *ref, run))
                    throw Error("collapse needs monochromatic beachball labels");
            }
        }
    }

    GluingState copy = st;
    CoveringResult result;
    result.row_pieces.resize(r);

    // Detach all matrix pieces from their chains.
    for (const auto& col : m.columns)
        for (int64_t id : col) copy.detach_from_chain(id);

    // Re-glue interior rows.
    // new_segment_of[j][t] = id of T^j_t; rows 0 and r keep the originals.
    std::vector<std::vector<int64_t>> new_segment_of(r + 1, std::vector<int64_t>(s));
    for (int c = 0; c < s; ++c) {
        new_segment_of[0][c] = row_segment(c, 0);
        new_segment_of[r][c] = row_segment(c, r);
    }
    for (int j = 1; j < r; ++j) {
        std::vector<GluedSegment> fresh(s);
        for (int t = 0; t < s; ++t) fresh[t].strands.resize(dd);
        for (int c = 0; c < s; ++c) {
            const GluedSegment& old = copy.segments[row_segment(c, j)];
            for (int i = 0; i < dd; ++i)
                fresh[perms[j][i][c]].strands[i] = old.strands[i];
            copy.segments[row_segment(c, j)].alive = false;
        }
        for (int t = 0; t < s; ++t) new_segment_of[j][t] = copy.add_segment(fresh[t]);
    }

    // Rebuild beachball rows.
    for (int row = 1; row <= r; ++row) {
        // Strand (c, i) connects top class perms[row-1][i][c] to bottom class
        // perms[row][i][c]. Components over top/bottom classes decide pieces.
        rosegraph::UnionFind uf(2 * s);
        for (int c = 0; c < s; ++c)
            for (int i = 0; i < dd; ++i)
                uf.unite(perms[row - 1][i][c], s + perms[row][i][c]);

        if (row_modes[row - 1] == RowMode::collapse) {
            for (int t = 0; t < s; ++t) {
                GluedSegment seg;
                seg.strands.resize(dd);
                for (int i = 0; i < dd; ++i) {
                    int a = static_cast<int>(
                        std::find(perms[row][i].begin(), perms[row][i].end(), t) -
                        perms[row][i].begin());
                    seg.strands[i] = copy.pieces[m.columns[a][row - 1]].strands[i];
                }
                result.collapsed_segments.push_back(copy.add_segment(seg));
            }
            for (int c = 0; c < s; ++c) copy.pieces[m.columns[c][row - 1]].alive = false;
            // Track eliminated mass per component for symmetrization.
            if (copy.elimination_ledger.empty())
                copy.elimination_ledger.assign(copy.L.components(), 0);
            for (int c = 0; c < s; ++c) {
                for (const auto& run : copy.pieces[m.columns[c][row - 1]].strands)
                    copy.elimination_ledger[copy.L.edge_component(run.start / 2)] +=
                        run.len;
            }
            continue;
        }

        std::map<int64_t, std::vector<std::pair<int, int>>> comp_strands;
        for (int c = 0; c < s; ++c)
            for (int i = 0; i < dd; ++i)
                comp_strands[uf.find(perms[row - 1][i][c])].push_back({c, i});
        for (auto& [root, strands] : comp_strands) {
            (void)root;
            std::set<int> cols;
            for (auto& [c, i] : strands) cols.insert(c);
            Piece np;
            np.cover_degree = static_cast<int64_t>(cols.size());
            // Bipart: a dd-column cover whose top/bottom classes pair up
            // through exactly one strand each (the complete bipartite cover).
            std::set<std::pair<int, int>> seen_pairs;
            bool simple = true;
            for (auto& [c, i] : strands) {
                auto key = std::make_pair(perms[row - 1][i][c], perms[row][i][c]);
                if (!seen_pairs.insert(key).second) simple = false;
            }
            if (np.cover_degree == 1)
                np.type = PieceType::beachball;
            else if (np.cover_degree == dd && simple &&
                     static_cast<int64_t>(strands.size()) ==
                         np.cover_degree * np.cover_degree)
                np.type = PieceType::bipart;
            else if (np.cover_degree == 2)
                np.type = PieceType::barrel;
            else
                np.type = PieceType::cover;
            std::sort(strands.begin(), strands.end(),
                      [](auto& a, auto& b) { return a < b; });
            for (auto& [c, i] : strands)
                np.strands.push_back(copy.pieces[m.columns[c][row - 1]].strands[i]);
            result.row_pieces[row - 1].push_back(copy.add_piece(np));
        }
        for (int c = 0; c < s; ++c) copy.pieces[m.columns[c][row - 1]].alive = false;
    }

    try {
        copy.assert_legal();
    } catch (const Error& e) {
        throw Error(std::string("illegal cover labels: ") + e.what());
    }
    copy.log("covering_move s=" + std::to_string(s) + " r=" + std::to_string(r));
    st = std::move(copy);
    return result;
}

TradeResult elimination_move(GluingState& st, const CoveringMatrix& m) {
    const int dd = st.dd();
    if (static_cast<int>(m.columns.size()) != dd)
        throw Error("elimination needs dd columns");
    if (m.columns.front().size() != 3) throw Error("elimination needs 3 rows");

    // Covering-type bipart labels for rows 1 and 3: the strand words must be
    // constant along each slot and form a legal beachball labeling.
    for (int row : {0, 2}) {
        for (int i = 0; i < dd; ++i) {
            const Run& ref = st.pieces[m.columns[0][row]].strands[i];
            for (int c = 1; c < dd; ++c)
                if (!same_word(st.L, ref, st.pieces[m.columns[c][row]].strands[i]))
                    throw Error("no covering-type labeling: row " +
                                std::to_string(row + 1) + " slot " + std::to_string(i));
        }
    }
    // Middle row: post-spread classes monochromatic, i.e. word(c, i) depends
    // only on c + i mod dd.
    for (int t = 0; t < dd; ++t) {
        const Run* ref = nullptr;
        for (int i = 0; i < dd; ++i) {
            int c = ((t - i) % dd + dd) % dd;
            const Run& run = st.pieces[m.columns[c][1]].strands[i];
            if (!ref)
                ref = &run;
            else if (!same_word(st.L, *ref, run))
                throw Error("no covering-type labeling: middle row class " +
                            std::to_string(t));
        }
    }

    std::vector<std::vector<std::vector<int>>> perms(4);
    auto identity = [&]() {
        std::vector<std::vector<int>> block(dd, std::vector<int>(dd));
        for (int i = 0; i < dd; ++i)
            for (int c = 0; c < dd; ++c) block[i][c] = c;
        return block;
    };
    auto spread = [&]() {
        std::vector<std::vector<int>> block(dd, std::vector<int>(dd));
        for (int i = 0; i < dd; ++i)
            for (int c = 0; c < dd; ++c) block[i][c] = (c + i) % dd;
        return block;
    };
    perms[0] = identity();
    perms[1] = spread();
    perms[2] = spread();
    perms[3] = identity();
    auto res = covering_move(st, m, perms,
                             {RowMode::cover, RowMode::collapse, RowMode::cover});
    TradeResult out;
    for (auto& row : res.row_pieces)
        for (int64_t id : row) out.pieces.push_back(id);
    for (int64_t id : out.pieces)
        if (st.pieces[id].type != PieceType::bipart)
            throw Error("elimination produced a non-bipart cover");
    if (out.pieces.size() != 2) throw Error("elimination expected exactly 2 biparts");
    st.log("elimination_move");
    return out;
}

TradeResult rolling_move(GluingState& st, const CoveringMatrix& m) {
    const int dd = st.dd();
    if (m.columns.size() != 2 || m.columns.front().size() != 2)
        throw Error("rolling needs a 2x2 matrix");
    // The interior permutation must vary across slots: a uniform swap is a
    // trivial (disconnected) cover, while swapping a single slot rolls the
    // two sheets into one connected barrel per row.
    std::vector<std::vector<std::vector<int>>> perms(3);
    std::vector<std::vector<int>> id_block(dd, {0, 1}), mixed(dd, {0, 1});
    mixed[0] = {1, 0};
    perms[0] = id_block;
    perms[1] = mixed;
    perms[2] = id_block;
    auto res = covering_move(st, m, perms, {RowMode::cover, RowMode::cover});
    TradeResult out;
    for (auto& row : res.row_pieces)
        for (int64_t id : row) out.pieces.push_back(id);
    if (out.pieces.size() != 2) throw Error("rolling expected exactly 2 barrels");
    for (int64_t id : out.pieces) {
        bool barrelish = st.pieces[id].type == PieceType::barrel ||
                         (dd == 2 && st.pieces[id].type == PieceType::bipart);
        if (!barrelish) throw Error("rolling produced a non-barrel cover");
    }
    st.log("rolling_move");
    return out;
}

namespace {

// Locate a glued segment inside the chain structure; returns (chain, index)
// or (-1, -1).
std::pair<int64_t, int64_t> find_segment_in_chains(const GluingState& st, int64_t seg) {
    for (size_t c = 0; c < st.chains.size(); ++c) {
        const Chain& ch = st.chains[c];
        for (size_t i = 0; i < ch.segments.size(); ++i)
            if (ch.segments[i] == seg) return {static_cast<int64_t>(c),
                                               static_cast<int64_t>(i)};
    }
    return {-1, -1};
}

// The reservoir piece on the far side of segment `seg` from the vertex
// (end = 1 means the strands finish at the vertex, so the far side is the
// piece preceding the segment in its chain).
int64_t adjacent_piece_through(const GluingState& st, int64_t seg, int end) {
    auto [c, i] = find_segment_in_chains(st, seg);
    if (c < 0) throw Error("segment is not chained");
    const Chain& ch = st.chains[c];
    if (end == 1) {
        if (i - 1 >= 0 && i - 1 < static_cast<int64_t>(ch.pieces.size()))
            return ch.pieces[i - 1];
        if (ch.cyclic) return ch.pieces[(i - 1 + ch.pieces.size()) % ch.pieces.size()];
    } else {
        if (i < static_cast<int64_t>(ch.pieces.size())) return ch.pieces[i];
        if (ch.cyclic) return ch.pieces[i % ch.pieces.size()];
    }
    throw Error("reservoir exhausted: no beachball adjacent through segment " +
                std::to_string(seg));
}

// After a tear, a closed component of rungs and remainder runs forming a
// connected 2-fold beachball cover is an honest barrel: promote it.
std::vector<int64_t> promote_closed_barrels(GluingState& st) {
    std::vector<int64_t> promoted;
    auto q = st.quotient();
    const int dd = st.dd();

    // Vertex classes of the endpoints of every half-barrel rung run and
    // remainder run.
    auto endpoints = [&](const Run& r) {
        int64_t a = q.vertex_map[st.L.dsource(r.start)];
        int64_t b = q.vertex_map[st.L.dsource(run_last_edge(st.L, r) ^ 1)];
        return std::make_pair(a, b);
    };
    // Union-find over quotient vertices touched by candidate runs.
    std::map<int64_t, int64_t> comp;
    std::function<int64_t(int64_t)> find = [&](int64_t x) -> int64_t {
        auto it = comp.find(x);
        if (it == comp.end() || it->second == x) return x;
        return it->second = find(it->second);
    };
    struct RunRef {
        int64_t piece;
        size_t index;
        std::pair<int64_t, int64_t> ends;
    };
    std::vector<RunRef> refs;
    for (size_t pid = 0; pid < st.pieces.size(); ++pid) {
        const Piece& p = st.pieces[pid];
        if (!p.alive) continue;
        if (p.type != PieceType::half_barrel && p.type != PieceType::remainder) continue;
        for (size_t ri = 0; ri < p.strands.size(); ++ri) {
            auto ends = endpoints(p.strands[ri]);
            refs.push_back({static_cast<int64_t>(pid), ri, ends});
            comp.emplace(ends.first, ends.first);
            comp.emplace(ends.second, ends.second);
            comp[find(ends.first)] = find(ends.second);
        }
    }
    std::map<int64_t, std::vector<size_t>> groups;
    for (size_t i = 0; i < refs.size(); ++i)
        groups[find(refs[i].ends.first)].push_back(i);

    for (auto& [root, members] : groups) {
        (void)root;
        // Barrel profile: 4 vertices, 2*dd runs, every vertex meeting dd runs.
        if (static_cast<int>(members.size()) != 2 * dd) continue;
        std::map<int64_t, int> valence;
        for (size_t i : members) {
            ++valence[refs[i].ends.first];
            ++valence[refs[i].ends.second];
        }
        if (valence.size() != 4) continue;
        bool ok = true;
        for (auto& [v, count] : valence) {
            (void)v;
            if (count != dd) ok = false;
        }
        if (!ok) continue;
        // Exclusively half-barrel rungs plus exactly two remainder runs, and
        // only whole half-barrel pieces.
        std::map<int64_t, int> rung_pieces;
        int remainder_runs = 0;
        for (size_t i : members) {
            const Piece& p = st.pieces[refs[i].piece];
            if (p.type == PieceType::half_barrel)
                ++rung_pieces[refs[i].piece];
            else
                ++remainder_runs;
        }
        if (remainder_runs != 2) continue;
        bool whole = true;
        for (auto& [pid, count] : rung_pieces)
            if (count != static_cast<int>(st.pieces[pid].strands.size())) whole = false;
        if (!whole) continue;

        Piece barrel;
        barrel.type = PieceType::barrel;
        barrel.cover_degree = 2;
        std::map<int64_t, std::vector<size_t>> remainder_taken;
        for (size_t i : members) {
            Piece& p = st.pieces[refs[i].piece];
            barrel.strands.push_back(p.strands[refs[i].index]);
            if (p.type == PieceType::half_barrel)
                p.alive = false;
            else
                remainder_taken[refs[i].piece].push_back(refs[i].index);
        }
        for (auto& [pid, idxs] : remainder_taken) {
            Piece& p = st.pieces[pid];
            std::vector<Run> keep;
            for (size_t ri = 0; ri < p.strands.size(); ++ri)
                if (std::find(idxs.begin(), idxs.end(), ri) == idxs.end())
                    keep.push_back(p.strands[ri]);
            p.strands = std::move(keep);
            if (p.strands.empty()) p.alive = false;
        }
        promoted.push_back(st.add_piece(barrel));
    }
    return promoted;
}

}  // namespace

TearResult tear_move(GluingState& st, int64_t remainder_piece, VertexRef v,
                     VertexRef v2,
                     const std::vector<std::array<int64_t, 3>>& triples) {
    const int dd = st.dd();
    if (static_cast<int>(triples.size()) != dd - 1)
        throw Error("tear needs dd-1 consecutive beachball triples");
    if (remainder_piece < 0 || remainder_piece >= static_cast<int64_t>(st.pieces.size()) ||
        !st.pieces[remainder_piece].alive ||
        st.pieces[remainder_piece].type != PieceType::remainder)
        throw Error("tear target must be a live remainder piece");
    for (auto ref : {v, v2})
        if (ref.segment < 0 || ref.segment >= static_cast<int64_t>(st.segments.size()) ||
            !st.segments[ref.segment].alive)
            throw Error("tear anchor segment invalid");

    int64_t bbL = adjacent_piece_through(st, v.segment, v.end);
    int64_t bbR = adjacent_piece_through(st, v2.segment, v2.end);

    std::set<int64_t> used{bbL, bbR};
    std::vector<int64_t> mids, outer;
    std::vector<int64_t> stems_in(dd - 1), stems_out(dd - 1);
    for (int j = 0; j < dd - 1; ++j) {
        auto [P, M, Q] = triples[j];
        if (st.piece_after(P) != M || st.piece_after(M) != Q)
            throw Error("triple is not consecutive in its chain");
        for (int64_t id : {P, M, Q}) {
            if (!st.pieces[id].alive || st.pieces[id].type != PieceType::beachball)
                throw Error("triple members must be live beachballs");
            if (!used.insert(id).second) throw Error("overlapping tear material");
            check_alignment(st, id);
        }
        mids.push_back(M);
        outer.push_back(P);
        outer.push_back(Q);
        stems_in[j] = st.segment_after(P);
        stems_out[j] = st.segment_after(M);
    }
    for (int64_t id : {bbL, bbR}) {
        if (!st.pieces[id].alive || st.pieces[id].type != PieceType::beachball)
            throw Error("adjacent reservoir pieces must be live beachballs");
        check_alignment(st, id);
    }

    // Label agreement: the re-glued classes mix S_v with the j-th incoming
    // stems (oriented toward the tear) and S_v2 with the outgoing stems.
    auto oriented = [&](int64_t seg, bool toward_end) {
        std::vector<Run> runs;
        for (const auto& run : st.segments[seg].strands)
            runs.push_back(toward_end ? run : reverse_run(st.L, run));
        return runs;
    };
    // S_v oriented so the tear vertex is at the run end; incoming stems keep
    // their stored direction (they end at the mid beachball).
    auto sv = oriented(v.segment, v.end == 1);
    auto sv2 = oriented(v2.segment, v2.end == 1);
    // For the outgoing side the tear vertex sits at the run start.
    for (auto& run : sv2) run = reverse_run(st.L, run);
    if (v2.end == 1)
        for (auto& run : sv2) run = reverse_run(st.L, run);
    // (sv2 now starts at the tear vertex.)
    for (int j = 0; j < dd - 1; ++j) {
        for (int i = 0; i < dd; ++i) {
            if (!same_word(st.L, sv[i], st.segments[stems_in[j]].strands[i]))
                throw Error("tear labels disagree (incoming stems)");
            if (!same_word(st.L, sv2[i], st.segments[stems_out[j]].strands[i]))
                throw Error("tear labels disagree (outgoing stems)");
        }
    }

    GluingState copy = st;
    TearResult result;

    // Detach the consumed pieces from chains.
    for (int64_t id : {bbL, bbR}) copy.detach_from_chain(id);
    for (int64_t id : mids) copy.detach_from_chain(id);
    for (int64_t id : outer) copy.detach_from_chain(id);

    // Unglue the 2*dd segments and re-glue slotwise.
    copy.segments[v.segment].alive = false;
    copy.segments[v2.segment].alive = false;
    for (int j = 0; j < dd - 1; ++j) {
        copy.segments[stems_in[j]].alive = false;
        copy.segments[stems_out[j]].alive = false;
    }
    for (int i = 0; i < dd; ++i) {
        GluedSegment gin, gout;
        gin.strands.push_back(sv[i]);
        gout.strands.push_back(sv2[i]);
        for (int j = 0; j < dd - 1; ++j) {
            gin.strands.push_back(st.segments[stems_in[j]].strands[i]);
            gout.strands.push_back(st.segments[stems_out[j]].strands[i]);
        }
        result.new_segments.push_back(copy.add_segment(gin));
        result.new_segments.push_back(copy.add_segment(gout));
    }

    // Half-barrels: the mid beachballs' slot-i strands become the rungs
    // joining v_i to v2_i.
    for (int i = 0; i < dd; ++i) {
        Piece hb;
        hb.type = PieceType::half_barrel;
        for (int j = 0; j < dd - 1; ++j)
            hb.strands.push_back(st.pieces[mids[j]].strands[i]);
        result.half_barrels.push_back(copy.add_piece(hb));
    }
    for (int64_t id : mids) copy.pieces[id].alive = false;

    // Two biparts from bbL with the incoming outer beachballs and bbR with
    // the outgoing ones.
    auto make_bipart = [&](int64_t anchor, bool incoming) {
        Piece bp;
        bp.type = PieceType::bipart;
        bp.cover_degree = dd;
        for (const auto& run : st.pieces[anchor].strands) bp.strands.push_back(run);
        copy.pieces[anchor].alive = false;
        for (int j = 0; j < dd - 1; ++j) {
            int64_t id = triples[j][incoming ? 0 : 2];
            for (const auto& run : st.pieces[id].strands) bp.strands.push_back(run);
            copy.pieces[id].alive = false;
        }
        return copy.add_piece(bp);
    };
    result.biparts.push_back(make_bipart(bbL, true));
    result.biparts.push_back(make_bipart(bbR, false));

    try {
        copy.assert_legal();
    } catch (const Error& e) {
        throw Error(std::string("tear would make the quotient illegal: ") + e.what());
    }
    result.promoted_barrels = promote_closed_barrels(copy);
    copy.log("tear_move dd=" + std::to_string(dd));
    st = std::move(copy);
    return result;
}

GlueStats hypercube_glue(GluingState& st, const layout::CubeLayout& cube,
                         const CubeAssignment& a, bool validate) {
    if (st.params.kind != Kind::simplicial)
        throw Error("hypercube gluing applies to the simplicial case");
    const int dim = cube.dim;
    auto reps = cube.representatives();
    if (a.beachballs.size() != reps.size() || a.strand_of.size() != reps.size() ||
        a.orient.size() != reps.size())
        throw Error("cube assignment needs 2^{d-1} slots");

    // Gather per-edge crossings.
    struct Crossing {
        Run sub;     // oriented along the strand's travel
        bool upward; // travel from the lower cube vertex
    };
    std::vector<std::vector<Crossing>> crossings(cube.num_edges());
    int64_t lambda_e = -1;
    for (size_t slot = 0; slot < reps.size(); ++slot) {
        uint32_t w = reps[slot];
        const Piece& p = st.pieces[a.beachballs[slot]];
        if (!p.alive || p.type != PieceType::beachball)
            throw Error("cube assignment entries must be live beachballs");
        if (static_cast<int>(p.strands.size()) != dim)
            throw Error("beachball degree mismatch for hypercube gluing");
        int64_t len = p.strands.front().len;
        if (len % dim != 0)
            throw Error("strand length not divisible by the cube dimension");
        if (lambda_e < 0) lambda_e = len / dim;
        if (lambda_e != len / dim) throw Error("strand lengths differ");
        std::vector<bool> strand_used(dim, false);
        for (int path = 0; path < dim; ++path) {
            int idx = a.strand_of[slot][path];
            if (idx < 0 || idx >= dim || strand_used[idx])
                throw Error("strand wiring is not a bijection");
            strand_used[idx] = true;
            Run travel = a.orient[slot] ? reverse_run(st.L, p.strands[idx])
                                        : p.strands[idx];
            for (int t = 0; t < dim; ++t) {
                int j = cube.flip_orders[path][t];
                uint32_t at = w ^ cube.prefix_mask(path, t);
                bool upward = ((at >> j) & 1) == 0;
                uint32_t lower = at & ~(uint32_t(1) << j);
                crossings[cube.edge_id(lower, j)].push_back(
                    {subrun(st.L, travel, int64_t(t) * lambda_e, lambda_e), upward});
            }
        }
    }

    for (int64_t e = 0; e < cube.num_edges(); ++e) {
        auto& cs = crossings[e];
        if (static_cast<int>(cs.size()) != dim)
            throw Error("hypercube labels illegal: edge coverage is not d");
        // All upward-oriented words must agree.
        Run ref = cs.front().upward ? cs.front().sub : reverse_run(st.L, cs.front().sub);
        for (const auto& c : cs) {
            Run up = c.upward ? c.sub : reverse_run(st.L, c.sub);
            if (!same_word(st.L, ref, up))
                throw Error("hypercube labels illegal: words differ on a cube edge");
        }
    }
    GluingState scratch;
    GluingState& copy = validate ? (scratch = st, scratch) : st;
    GlueStats stats;
    for (int64_t e = 0; e < cube.num_edges(); ++e) {
        auto& cs = crossings[e];
        for (int64_t off = 0; off < lambda_e; ++off) {
            std::vector<int64_t> cls;
            for (const auto& c : cs) {
                Run up = c.upward ? c.sub : reverse_run(st.L, c.sub);
                cls.push_back(run_edges(copy.L, up)[off]);
            }
            copy.extra_classes.push_back(std::move(cls));
            ++stats.classes_created;
        }
    }
    for (int64_t id : a.beachballs) {
        copy.detach_from_chain(id);
        copy.pieces[id].alive = false;
        ++stats.consumed;
    }
    if (validate) {
        copy.assert_legal();
        st = std::move(copy);
    }
    st.log("hypercube_glue dim=" + std::to_string(dim));
    return stats;
}

GlueStats lens_glue(GluingState& st, const layout::LensLayout& lens,
                    const CubeAssignment& a, bool validate) {
    if (st.params.kind != Kind::cubical)
        throw Error("lens gluing applies to the cubical case");
    const int d = lens.d;
    const int bd = lens.base.dim;
    const int dd = lens.dd();
    auto reps = lens.base.representatives();
    size_t slots = reps.size() * 4;
    if (a.beachballs.size() != slots || a.strand_of.size() != slots ||
        a.orient.size() != slots)
        throw Error("lens assignment needs 4 * 2^{d-2} slots");

    struct Crossing {
        Run sub;
        bool upward;
    };
    std::vector<std::vector<Crossing>> crossings(lens.num_edges());
    int64_t lambda_e = -1;
    for (size_t ri = 0; ri < reps.size(); ++ri) {
        uint32_t w = reps[ri];
        for (int g = 0; g < 4; ++g) {
            size_t slot = ri * 4 + g;
            const Piece& p = st.pieces[a.beachballs[slot]];
            if (!p.alive || p.type != PieceType::beachball)
                throw Error("lens assignment entries must be live beachballs");
            if (static_cast<int>(p.strands.size()) != dd)
                throw Error("beachball degree mismatch for lens gluing");
            int64_t len = p.strands.front().len;
            if (len % bd != 0)
                throw Error("strand length not divisible by d-1");
            if (lambda_e < 0) lambda_e = len / bd;
            std::vector<bool> used(dd, false);
            for (int pth = 0; pth < bd; ++pth) {
                for (int sel = 0; sel < 2; ++sel) {
                    int idx = a.strand_of[slot][2 * pth + sel];
                    if (idx < 0 || idx >= dd || used[idx])
                        throw Error("lens strand wiring is not a bijection");
                    used[idx] = true;
                    const auto& h = sel ? lens.pairs[g].b : lens.pairs[g].a;
                    Run travel = a.orient[slot] ? reverse_run(st.L, p.strands[idx])
                                                : p.strands[idx];
                    auto steps = lens.lift_steps(w, pth, h);
                    for (int t = 0; t < bd; ++t)
                        crossings[steps[t].edge].push_back(
                            {subrun(st.L, travel, int64_t(t) * lambda_e, lambda_e),
                             steps[t].upward});
                }
            }
        }
    }

    for (int64_t e = 0; e < lens.num_edges(); ++e) {
        auto& cs = crossings[e];
        if (static_cast<int>(cs.size()) != dd)
            throw Error("lens labels illegal: lift coverage is not 2(d-1)");
        Run ref = cs.front().upward ? cs.front().sub : reverse_run(st.L, cs.front().sub);
        for (const auto& c : cs) {
            Run up = c.upward ? c.sub : reverse_run(st.L, c.sub);
            if (!same_word(st.L, ref, up))
                throw Error("lens labels illegal: words differ on a lift edge");
        }
    }
    GluingState scratch;
    GluingState& copy = validate ? (scratch = st, scratch) : st;
    GlueStats stats;
    for (int64_t e = 0; e < lens.num_edges(); ++e) {
        auto& cs = crossings[e];
        for (int64_t off = 0; off < lambda_e; ++off) {
            std::vector<int64_t> cls;
            for (const auto& c : cs) {
                Run up = c.upward ? c.sub : reverse_run(st.L, c.sub);
                cls.push_back(run_edges(copy.L, up)[off]);
            }
            copy.extra_classes.push_back(std::move(cls));
            ++stats.classes_created;
        }
    }
    for (int64_t id : a.beachballs) {
        copy.detach_from_chain(id);
        copy.pieces[id].alive = false;
        ++stats.consumed;
    }
    if (validate) {
        copy.assert_legal();
        st = std::move(copy);
    }
    st.log("lens_glue d=" + std::to_string(d));
    return stats;
}

GlueStats lens_glue_circle(GluingState& st, const CubeAssignment& a,
                           bool validate) {
    if (st.params.kind != Kind::cubical || st.params.d != 2)
        throw Error("the circle lens applies to cubical d = 2");
    if (a.beachballs.size() != 2)
        throw Error("circle lens consumes exactly two beachballs");
    // Two beachballs of degree 2 identified along two arcs: arc k is the
    // class of the two strand_of[slot][k] strands, co-oriented by orient.
    std::array<std::array<Run, 2>, 2> travel;  // [slot][arc]
    for (int slot = 0; slot < 2; ++slot) {
        const Piece& p = st.pieces[a.beachballs[slot]];
        if (!p.alive || p.type != PieceType::beachball || p.strands.size() != 2)
            throw Error("circle lens entries must be live degree-2 beachballs");
        for (int arc = 0; arc < 2; ++arc) {
            const Run& r = p.strands[a.strand_of[slot][arc]];
            travel[slot][arc] = a.orient[slot] ? reverse_run(st.L, r) : r;
        }
    }
    for (int arc = 0; arc < 2; ++arc)
        if (!same_word(st.L, travel[0][arc], travel[1][arc]))
            throw Error("lens labels illegal: arc words differ");
    GluingState scratch;
    GluingState& copy = validate ? (scratch = st, scratch) : st;
    GlueStats stats;
    for (int arc = 0; arc < 2; ++arc) {
        auto e0 = run_edges(copy.L, travel[0][arc]);
        auto e1 = run_edges(copy.L, travel[1][arc]);
        for (size_t off = 0; off < e0.size(); ++off) {
            copy.extra_classes.push_back({e0[off], e1[off]});
            ++stats.classes_created;
        }
    }
    for (int64_t id : a.beachballs) {
        copy.detach_from_chain(id);
        copy.pieces[id].alive = false;
        ++stats.consumed;
    }
    if (validate) {
        copy.assert_legal();
        st = std::move(copy);
    }
    st.log("lens_glue_circle");
    return stats;
}

rosegraph::LabeledGraph spherical_graph(const rosegraph::LabeledGraph& g) {
    rosegraph::LabeledGraph out;
    out.num_vertices = 2 * g.num_vertices;
    out.edges.reserve(4 * g.edges.size());
    for (const auto& e : g.edges)
        for (int bu = 0; bu < 2; ++bu)
            for (int bv = 0; bv < 2; ++bv)
                out.edges.push_back({2 * e.u + bu, 2 * e.v + bv, e.label});
    return out;
}

}  // namespace spineforge::moves
