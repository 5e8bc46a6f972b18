#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spineforge/error.hpp"

namespace spineforge::coxeter {

enum class DiagramKind { simplex, cube };

// Linear diagram on d+1 nodes: first edge labeled m, last edge labeled 4 in
// the cube family, all other edges labeled 3.
struct CoxeterDiagram {
    DiagramKind kind = DiagramKind::simplex;
    int m = 3;
    int d = 2;

    int nodes() const { return d + 1; }
    int edge_label(int i) const;  // label of the edge between nodes i, i+1
};

struct GramMatrix {
    int n = 0;
    std::vector<double> entries;  // row-major n x n

    double at(int i, int j) const { return entries[i * n + j]; }
};

// G_ii = 1, G_{i,i+1} = -cos(pi/label), zero elsewhere.
GramMatrix gram_matrix(const CoxeterDiagram& diag);

enum class GeometryClass { spherical, euclidean, compact, ideal, superideal };

std::string class_name(GeometryClass c);
int class_index(GeometryClass c);  // spherical < euclidean < ... < superideal

// Signature of the Gram matrix, then vertex figures for the hyperbolic case:
// all positive definite -> compact; some singular positive semidefinite and
// none indefinite -> ideal; some indefinite -> superideal. Eigenvalue signs
// come from Sturm counts with exact quadratic-integer confirmation when all
// edge labels lie in {3, 4, 6}; otherwise a near-zero eigenvalue raises
// "indeterminate (increase precision)".
GeometryClass classify(const CoxeterDiagram& diag);

// Signs of the spectrum of a tridiagonal block (negatives, zeros, positives).
struct SignCount {
    int neg = 0, zero = 0, pos = 0;
};
SignCount spectrum_signs(const CoxeterDiagram& diag, int skip_node = -1);

// CSV table over ranges, for the CLI: kind,m,d,class per row.
std::string classification_csv(int m_min, int m_max, int d_min, int d_max);

}  // namespace spineforge::coxeter
