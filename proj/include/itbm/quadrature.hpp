#pragma once

// Gauss-Legendre quadrature on [0,1].

#include <cmath>
#include <stdexcept>
#include <vector>

#include "itbm/special.hpp"

namespace itbm {

struct QuadratureRule {
    std::vector<double> nodes;    // strictly increasing, in (0,1)
    std::vector<double> weights;  // positive, summing to 1
    int size() const { return static_cast<int>(nodes.size()); }
};

// Nodes by Newton iteration on P_n with the three-term recurrence; standard
// construction, accurate to machine precision for the orders used here.
inline QuadratureRule gauss_legendre(int n) {
    if (n < 1 || n > 8192) throw std::invalid_argument("gauss_legendre: order out of range");
    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Tricomi-style initial guess for the i-th root of P_n on [-1,1].
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) {
                // one polishing step
                p0 = 1.0;
                p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                x -= p1 / dp;
                break;
            }
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1,1] -> [0,1]; x decreases with i, so it lands mirrored
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = 0.5 * (x + 1.0);
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = 0.5 * w;
        rule.nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 - x);
        rule.weights[static_cast<std::size_t>(i)] = 0.5 * w;
    }
    return rule;
}

}  // namespace itbm
