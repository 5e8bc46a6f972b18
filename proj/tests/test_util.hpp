#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

// Shared helpers for the test suites.

namespace testutil {

// Regularized upper incomplete gamma Q(a, x), for chi-square p-values:
// p = Q(dof/2, stat/2). Series for x < a+1, continued fraction otherwise.
inline double gamma_q(double a, double x) {
    if (x < 0 || a <= 0) return 1.0;
    if (x == 0) return 1.0;
    double gln = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-14) break;
        }
        double p = sum * std::exp(-x + a * std::log(x) - gln);
        return 1.0 - p;
    }
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::fabs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-14) break;
    }
    return std::exp(-x + a * std::log(x) - gln) * h;
}

inline double chi_square_p(const std::vector<int64_t>& observed,
                           const std::vector<double>& expected) {
    double stat = 0;
    for (size_t i = 0; i < observed.size(); ++i) {
        double diff = observed[i] - expected[i];
        stat += diff * diff / expected[i];
    }
    return gamma_q((observed.size() - 1) / 2.0, stat / 2.0);
}

}  // namespace testutil
