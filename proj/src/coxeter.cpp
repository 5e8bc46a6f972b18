#include "spineforge/coxeter.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace spineforge::coxeter {

int CoxeterDiagram::edge_label(int i) const {
    if (i < 0 || i >= d) throw Error("edge index out of range");
    if (i == 0) return m;
    if (kind == DiagramKind::cube && i == d - 1) return 4;
    return 3;
}

GramMatrix gram_matrix(const CoxeterDiagram& diag) {
    if (diag.m < 3) throw Error("edge label m must be at least 3");
    if (diag.d < 2) throw Error("dimension must be at least 2");
    int n = diag.nodes();
    GramMatrix g;
    g.n = n;
    g.entries.assign(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) g.entries[i * n + i] = 1.0;
    for (int i = 0; i + 1 < n; ++i) {
        double v = -std::cos(M_PI / diag.edge_label(i));
        g.entries[i * n + i + 1] = v;
        g.entries[(i + 1) * n + i] = v;
    }
    return g;
}

std::string class_name(GeometryClass c) {
    switch (c) {
        case GeometryClass::spherical: return "spherical";
        case GeometryClass::euclidean: return "euclidean";
        case GeometryClass::compact: return "compact";
        case GeometryClass::ideal: return "ideal";
        case GeometryClass::superideal: return "superideal";
    }
    return "?";
}

int class_index(GeometryClass c) { return static_cast<int>(c); }

namespace {

// Exact arithmetic in Z[sqrt2, sqrt3]: a + b*sqrt2 + c*sqrt3 + e*sqrt6.
// Determinants of 2G live here whenever all labels are in {3, 4, 6}.
struct Quad {
    long long a = 0, b = 0, c = 0, e = 0;

    static Quad integer(long long v) { return {v, 0, 0, 0}; }
    bool is_zero() const { return a == 0 && b == 0 && c == 0 && e == 0; }

    Quad operator+(const Quad& o) const { return {a + o.a, b + o.b, c + o.c, e + o.e}; }
    Quad operator-(const Quad& o) const { return {a - o.a, b - o.b, c - o.c, e - o.e}; }
    Quad operator*(const Quad& o) const {
        // (a + b r2 + c r3 + e r6)(a' + b' r2 + c' r3 + e' r6)
        return {a * o.a + 2 * b * o.b + 3 * c * o.c + 6 * e * o.e,
                a * o.b + b * o.a + 3 * (c * o.e + e * o.c),
                a * o.c + c * o.a + 2 * (b * o.e + e * o.b),
                a * o.e + e * o.a + b * o.c + c * o.b};
    }

    // Exact sign via nested conjugate comparisons.
    int sign() const {
        // x = P + sqrt3 * Q with P = a + b r2, Q = c + e r2.
        auto sign2 = [](long long u, long long v) -> int {
            // sign of u + v*sqrt2
            if (u == 0 && v == 0) return 0;
            if (u >= 0 && v >= 0) return 1;
            if (u <= 0 && v <= 0) return -1;
            long long lhs = u * u, rhs = 2 * v * v;  // compare |u| vs |v sqrt2|
            if (lhs == rhs) return 0;                // cannot happen for v != 0
            bool u_bigger = lhs > rhs;
            return (u > 0) == u_bigger ? (u > 0 ? 1 : -1) : (v > 0 ? 1 : -1);
        };
        int sp = sign2(a, b);
        int sq = sign2(c, e);
        if (sq == 0) return sp;
        if (sp == 0) return sq;
        if (sp == sq) return sp;
        // Compare P^2 vs 3 Q^2 in Z[sqrt2].
        long long p2a = a * a + 2 * b * b, p2b = 2 * a * b;
        long long q2a = 3 * (c * c + 2 * e * e), q2b = 3 * (2 * c * e);
        int cmp = sign2(p2a - q2a, p2b - q2b);
        if (cmp == 0) return 0;
        return cmp > 0 ? sp : sq;
    }
};

bool exact_capable(const CoxeterDiagram& diag, int skip_node) {
    for (int i = 0; i + 1 < diag.nodes(); ++i) {
        if (i == skip_node || i + 1 == skip_node) continue;
        int lab = diag.edge_label(i);
        if (lab != 3 && lab != 4 && lab != 6) return false;
    }
    return true;
}

// Off-diagonal entries of 2G: -2 cos(pi/label).
Quad doubled_entry(int label) {
    switch (label) {
        case 3: return Quad::integer(-1);
        case 4: return {0, -1, 0, 0};
        case 6: return {0, 0, -1, 0};
        default: throw Error("no exact entry for label " + std::to_string(label));
    }
}

// Leading principal minor signs of 2G restricted to a node subset (a run of
// consecutive nodes), exactly.
std::vector<int> exact_minor_signs(const CoxeterDiagram& diag,
                                   const std::vector<int>& nodes) {
    std::vector<int> signs;
    Quad prev2 = Quad::integer(1);  // D_{-1}
    Quad prev1 = Quad::integer(1);  // D_0
    for (size_t i = 0; i < nodes.size(); ++i) {
        Quad det = Quad::integer(2) * prev1;
        if (i > 0) {
            // nodes are consecutive, so the coupling label is edge nodes[i-1].
            Quad b = doubled_entry(diag.edge_label(nodes[i - 1]));
            det = det - b * b * prev2;
        }
        signs.push_back(det.sign());
        prev2 = prev1;
        prev1 = det;
    }
    return signs;
}

// Eigenvalue sign counts for the tridiagonal block on a consecutive node
// run, via Sturm counts at +-eps with an exact zero count when available.
SignCount block_signs(const CoxeterDiagram& diag, const std::vector<int>& nodes) {
    SignCount out;
    int n = static_cast<int>(nodes.size());
    if (n == 0) return out;
    std::vector<double> offdiag(n - 1);
    for (int i = 0; i + 1 < n; ++i)
        offdiag[i] = -std::cos(M_PI / diag.edge_label(nodes[i]));

    auto count_below = [&](double x) {
        // Number of eigenvalues < x by the Sturm/LDL recurrence.
        int count = 0;
        double d = 1.0 - x;
        if (d == 0) d = -1e-300;
        if (d < 0) ++count;
        for (int i = 1; i < n; ++i) {
            d = (1.0 - x) - offdiag[i - 1] * offdiag[i - 1] / d;
            if (d == 0) d = -1e-300;
            if (d < 0) ++count;
        }
        return count;
    };

    const double eps = 1e-9;
    bool consecutive = true;
    for (int i = 0; i + 1 < n; ++i)
        if (nodes[i + 1] != nodes[i] + 1) consecutive = false;
    bool exact = consecutive;
    for (int i = 0; i + 1 < n && exact; ++i) {
        int lab = diag.edge_label(nodes[i]);
        if (lab != 3 && lab != 4 && lab != 6) exact = false;
    }
    if (exact) {
        // A tridiagonal matrix with nonzero couplings has simple spectrum,
        // so the kernel dimension is 0 or 1 and is decided by the exact
        // determinant; nonzero eigenvalues sit far outside the eps window.
        auto signs = exact_minor_signs(diag, nodes);
        out.zero = signs.back() == 0 ? 1 : 0;
        out.neg = count_below(-eps);
        out.pos = n - out.neg - out.zero;
        return out;
    }
    int below = count_below(-eps);
    int upto = count_below(eps);
    out.neg = below;
    out.zero = upto - below;
    out.pos = n - upto;
    if (out.zero > 0) throw Error("indeterminate (increase precision)");
    return out;
}

}  // namespace

SignCount spectrum_signs(const CoxeterDiagram& diag, int skip_node) {
    if (skip_node < 0) {
        std::vector<int> nodes(diag.nodes());
        for (int i = 0; i < diag.nodes(); ++i) nodes[i] = i;
        return block_signs(diag, nodes);
    }
    // Deleting a node splits the line into at most two consecutive runs.
    SignCount total;
    std::vector<int> left, right;
    for (int i = 0; i < skip_node; ++i) left.push_back(i);
    for (int i = skip_node + 1; i < diag.nodes(); ++i) right.push_back(i);
    for (const auto& run : {left, right}) {
        if (run.empty()) continue;
        SignCount s = block_signs(diag, run);
        total.neg += s.neg;
        total.zero += s.zero;
        total.pos += s.pos;
    }
    return total;
}

GeometryClass classify(const CoxeterDiagram& diag) {
    if (!exact_capable(diag, -1) && diag.m > 1000)
        throw Error("indeterminate (increase precision)");
    SignCount full = spectrum_signs(diag);
    if (full.neg == 0 && full.zero == 0) return GeometryClass::spherical;
    if (full.neg == 0) return GeometryClass::euclidean;
    if (full.neg != 1)
        throw Error("signature (" + std::to_string(full.pos) + "," +
                    std::to_string(full.neg) + ") is not a spine geometry");
    bool some_singular = false;
    for (int skip = 0; skip < diag.nodes(); ++skip) {
        SignCount fig = spectrum_signs(diag, skip);
        if (fig.neg > 0) return GeometryClass::superideal;
        if (fig.zero > 0) some_singular = true;
    }
    return some_singular ? GeometryClass::ideal : GeometryClass::compact;
}

std::string classification_csv(int m_min, int m_max, int d_min, int d_max) {
    std::ostringstream out;
    out << "kind,m,d,class\n";
    for (auto kind : {DiagramKind::simplex, DiagramKind::cube}) {
        for (int m = m_min; m <= m_max; ++m) {
            for (int d = d_min; d <= d_max; ++d) {
                CoxeterDiagram diag{kind, m, d};
                out << (kind == DiagramKind::simplex ? "simplex" : "cube") << ","
                    << m << "," << d << ",";
                try {
                    out << class_name(classify(diag));
                } catch (const Error& e) {
                    out << "error:" << e.what();
                }
                out << "\n";
            }
        }
    }
    return out.str();
}

}  // namespace spineforge::coxeter
