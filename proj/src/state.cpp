#include "spineforge/state.hpp"

#include <algorithm>

namespace spineforge::state {

std::vector<int64_t> run_edges(const CircleFamily& L, const Run& r) {
    std::vector<int64_t> out;
    out.reserve(r.len);
    int64_t de = r.start;
    for (int64_t i = 0; i < r.len; ++i) {
        out.push_back(de);
        de = L.dnext(de);
    }
    return out;
}

words::ReducedWord run_word(const CircleFamily& L, const Run& r) {
    std::vector<words::Letter> ls;
    ls.reserve(r.len);
    int64_t de = r.start;
    for (int64_t i = 0; i < r.len; ++i) {
        ls.push_back(L.dlabel(de));
        de = L.dnext(de);
    }
    return words::ReducedWord(std::move(ls), false);
}

std::string piece_type_name(PieceType t) {
    switch (t) {
        case PieceType::beachball: return "beachball";
        case PieceType::barrel: return "barrel";
        case PieceType::bipart: return "bipart";
        case PieceType::half_barrel: return "half_barrel";
        case PieceType::cover: return "cover";
        case PieceType::remainder: return "remainder";
    }
    return "?";
}

int64_t GluingState::add_segment(GluedSegment s) {
    segments.push_back(std::move(s));
    return static_cast<int64_t>(segments.size()) - 1;
}

int64_t GluingState::add_piece(Piece p) {
    pieces.push_back(std::move(p));
    return static_cast<int64_t>(pieces.size()) - 1;
}

EdgePartition GluingState::partition() const {
    EdgePartition p;
    for (const auto& seg : segments) {
        if (!seg.alive) continue;
        int64_t len = seg.length();
        std::vector<int64_t> cursors;
        cursors.reserve(seg.strands.size());
        for (const auto& run : seg.strands) cursors.push_back(run.start);
        for (int64_t t = 0; t < len; ++t) {
            p.classes.push_back(cursors);
            for (auto& de : cursors) de = L.dnext(de);
        }
    }
    for (const auto& cls : extra_classes) p.classes.push_back(cls);
    return p;
}

rosegraph::Quotient GluingState::quotient() const {
    return rosegraph::apply_partition(L, partition());
}

void GluingState::assert_legal() const { (void)quotient(); }

int64_t GluingState::audit_mass() const {
    std::vector<int8_t> owner(L.num_edges(), 0);
    auto own = [&](const Run& r, const char* what) {
        int64_t de = r.start;
        for (int64_t i = 0; i < r.len; ++i) {
            int64_t e = de / 2;
            if (owner[e])
                throw Error(std::string("edge owned twice (") + what + ")");
            owner[e] = 1;
            de = L.dnext(de);
        }
    };
    for (const auto& seg : segments) {
        if (!seg.alive) continue;
        for (const auto& run : seg.strands) own(run, "segment");
    }
    for (const auto& pc : pieces) {
        if (!pc.alive) continue;
        for (const auto& run : pc.strands) own(run, "piece");
    }
    int64_t total = 0;
    for (int64_t e = 0; e < L.num_edges(); ++e) {
        if (!owner[e]) throw Error("edge " + std::to_string(e) + " unowned");
        ++total;
    }
    return total;
}

int64_t GluingState::live_piece_count(PieceType t) const {
    int64_t n = 0;
    for (const auto& p : pieces)
        if (p.alive && p.type == t) ++n;
    return n;
}

int64_t GluingState::free_edge_count() const {
    int64_t n = 0;
    for (const auto& p : pieces)
        if (p.alive)
            for (const auto& run : p.strands) n += run.len;
    return n;
}

int64_t GluingState::segment_before(int64_t piece_id) const {
    const Piece& p = pieces[piece_id];
    if (p.chain < 0) return -1;
    return chains[p.chain].segments[p.chain_pos];
}

int64_t GluingState::segment_after(int64_t piece_id) const {
    const Piece& p = pieces[piece_id];
    if (p.chain < 0) return -1;
    const Chain& c = chains[p.chain];
    if (c.cyclic) return c.segments[(p.chain_pos + 1) % c.segments.size()];
    return c.segments[p.chain_pos + 1];
}

int64_t GluingState::piece_after(int64_t piece_id) const {
    const Piece& p = pieces[piece_id];
    if (p.chain < 0) return -1;
    const Chain& c = chains[p.chain];
    if (c.cyclic) return c.pieces[(p.chain_pos + 1) % c.pieces.size()];
    if (p.chain_pos + 1 < static_cast<int64_t>(c.pieces.size()))
        return c.pieces[p.chain_pos + 1];
    return -1;
}

int64_t GluingState::piece_before(int64_t piece_id) const {
    const Piece& p = pieces[piece_id];
    if (p.chain < 0) return -1;
    const Chain& c = chains[p.chain];
    if (c.cyclic)
        return c.pieces[(p.chain_pos + c.pieces.size() - 1) % c.pieces.size()];
    if (p.chain_pos - 1 >= 0) return c.pieces[p.chain_pos - 1];
    return -1;
}

void GluingState::detach_from_chain(int64_t piece_id) {
    Piece& p = pieces[piece_id];
    if (p.chain < 0) return;
    int64_t cid = p.chain;
    Chain& c = chains[cid];
    int64_t pos = p.chain_pos;
    std::vector<int64_t> left_pieces(c.pieces.begin(), c.pieces.begin() + pos);
    std::vector<int64_t> left_segs(c.segments.begin(), c.segments.begin() + pos + 1);
    std::vector<int64_t> right_pieces(c.pieces.begin() + pos + 1, c.pieces.end());
    std::vector<int64_t> right_segs(c.segments.begin() + pos + 1, c.segments.end());
    if (c.cyclic) {
        // Reopen into one open chain: the part after the removed piece, then
        // the part before it. Open chains carry one more segment than pieces.
        std::vector<int64_t> ps = right_pieces;
        ps.insert(ps.end(), left_pieces.begin(), left_pieces.end());
        std::vector<int64_t> ss = right_segs;
        ss.insert(ss.end(), left_segs.begin(), left_segs.end());
        c.pieces = std::move(ps);
        c.segments = std::move(ss);
        c.cyclic = false;
    } else {
        c.pieces = std::move(left_pieces);
        c.segments = std::move(left_segs);
        if (!right_pieces.empty()) {
            Chain nc;
            nc.pieces = std::move(right_pieces);
            nc.segments = std::move(right_segs);
            nc.cyclic = false;
            int64_t nid = static_cast<int64_t>(chains.size());
            for (size_t i = 0; i < nc.pieces.size(); ++i) {
                pieces[nc.pieces[i]].chain = nid;
                pieces[nc.pieces[i]].chain_pos = static_cast<int64_t>(i);
            }
            chains.push_back(std::move(nc));
        }
    }
    Chain& c2 = chains[cid];
    for (size_t i = 0; i < c2.pieces.size(); ++i) {
        pieces[c2.pieces[i]].chain = cid;
        pieces[c2.pieces[i]].chain_pos = static_cast<int64_t>(i);
    }
    pieces[piece_id].chain = -1;
    pieces[piece_id].chain_pos = -1;
}

}  // namespace spineforge::state
