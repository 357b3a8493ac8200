#pragma once

// Path norms on [0, 1]. The sup norm of a sampled path is the grid sup; Lp
// norms use the trapezoid rule on the literal path grid with the process
// pinned at X(0) = 0.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "itbm/simulate.hpp"
#include "itbm/special.hpp"

namespace itbm {

struct NormSpec {
    bool is_sup = true;
    double p = 2.0;

    static NormSpec sup() { return NormSpec{true, std::numeric_limits<double>::infinity()}; }

    static NormSpec lp(double p) {
        if (std::isinf(p)) return sup();
        if (!(p >= 1.0)) throw std::invalid_argument("NormSpec::lp: p must be >= 1");
        return NormSpec{false, p};
    }

    std::string name() const {
        if (is_sup) return "sup";
        if (p == 2.0) return "l2";
        return "lp";
    }

    // The serialization kind: "sup" or "lp" (p carried separately).
    std::string kind_name() const { return is_sup ? "sup" : "lp"; }
};

inline double grid_norm(const NormSpec& ns, const TimeGrid& grid,
                        const std::vector<double>& values) {
    if (values.size() != grid.times.size())
        throw std::invalid_argument("grid_norm: grid/value size mismatch");
    const std::size_t n = values.size();
    if (ns.is_sup) {
        double mx = 0.0;
        for (double v : values) mx = std::max(mx, std::fabs(v));
        return mx;
    }
    // Trapezoid over the nodes (0, t_1, ..., t_n) with |X(0)|^p = 0.
    KahanSum s;
    for (std::size_t k = 0; k < n; ++k) {
        const double left = (k == 0) ? 0.0 : grid.times[k - 1];
        const double right = (k + 1 < n) ? grid.times[k + 1] : grid.times[k];
        const double w = 0.5 * (right - left);
        s.add(w * std::pow(std::fabs(values[k]), ns.p));
    }
    return std::pow(s.value(), 1.0 / ns.p);
}

// L2 norm of a truncated KL expansion is exact in the coefficients.
inline double kl_l2_norm(const std::vector<double>& coeff) {
    KahanSum s;
    for (double c : coeff) s.add(c * c);
    return std::sqrt(s.value());
}

}  // namespace itbm
