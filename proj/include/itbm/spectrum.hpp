#pragma once

// Spectral decomposition of the covariance operator
//   (A_m f)(t) = Int_0^1 K_m(s,t) f(s) ds
// by the Nystrom method on Gauss-Legendre nodes, plus the derived spectral
// constants (eigenvalue bounds, the Zolotarev product, q->p operator norms).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "itbm/process.hpp"
#include "itbm/quadrature.hpp"
#include "itbm/rng.hpp"

namespace itbm {

struct Spectrum {
    int m = 0;
    int n_nodes = 0;
    std::vector<double> eigenvalues;      // reported, sorted descending
    std::vector<double> raw_eigenvalues;  // matrix eigenvalues, same order
    Eigen::MatrixXd eigenvectors;         // column n: f_n at the nodes, weight-orthonormal
    QuadratureRule rule;
    double trace_check = 0.0;  // sum of eigenvalues / closed-form trace
    double gap = 0.0;          // (l1 - l2) / l1
};

struct ZolotarevConstants {
    double c_bar = 1.0;     // prod_{n>=2} (1 - l_n/l_1)^(-1/2), tail-completed
    double c_lambda = 0.0;  // 2 c_bar sqrt(l_1 / (2 pi))
    double truncation_error_bound = 0.0;
    double lambda1 = 0.0;
    int n_terms = 0;
};

struct EigenBoundReport {
    double lower = 0.0;  // bound on l_1 itself
    double upper = 0.0;
    double lambda1 = 0.0;
    double margin = 0.0;  // distance of l_1 (m!)^2 to the nearer bound
    bool pass = false;
};

inline Spectrum nystrom_spectrum(const ProcessSpec& spec, int n_nodes) {
    if (n_nodes < 8) throw std::invalid_argument("nystrom_spectrum: need at least 8 nodes");
    Spectrum sp;
    sp.m = spec.m;
    sp.n_nodes = n_nodes;
    sp.rule = gauss_legendre(n_nodes);

    const int n = n_nodes;
    std::vector<double> sqw(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) sqw[static_cast<std::size_t>(i)] = std::sqrt(sp.rule.weights[static_cast<std::size_t>(i)]);

    // Symmetrized Nystrom matrix B = D^(1/2) K D^(1/2).
    Eigen::MatrixXd b(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            const double v = kernel_value(spec, sp.rule.nodes[static_cast<std::size_t>(i)],
                                          sp.rule.nodes[static_cast<std::size_t>(j)]) *
                             sqw[static_cast<std::size_t>(i)] * sqw[static_cast<std::size_t>(j)];
            b(i, j) = v;
            b(j, i) = v;
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("nystrom_spectrum: eigensolver failed");

    // Eigen returns ascending order; flip to descending.
    sp.raw_eigenvalues.resize(static_cast<std::size_t>(n));
    sp.eigenvectors.resize(n, n);
    for (int k = 0; k < n; ++k) {
        const int src = n - 1 - k;
        sp.raw_eigenvalues[static_cast<std::size_t>(k)] = es.eigenvalues()(src);
        for (int i = 0; i < n; ++i)
            sp.eigenvectors(i, k) = es.eigenvectors()(i, src) / sqw[static_cast<std::size_t>(i)];
    }
    if (sp.raw_eigenvalues.back() < -1e-8)
        throw std::runtime_error(
            "nystrom_spectrum: eigenvalue below -1e-8; kernel matrix is not PSD");

    sp.eigenvalues = sp.raw_eigenvalues;
    if (spec.m == 0) {
        // K_0(s,t) = min(s,t) has a kink on the diagonal. Quadrature against
        // the kink inflates every Nystrom eigenvalue by the nearly uniform
        // amount s_n = pi^2 / (72 (n+1/2)^2) + O(n^-4). Subtracting it from
        // the leading block restores spectral accuracy (~1e-9 at n=256)
        // where the eigenvalues are large enough for the shift to matter,
        // while the far tail (where l_k < s_n) is left alone.
        const double shift = kPi * kPi / (72.0 * (n + 0.5) * (n + 0.5));
        const int top = std::min(64, n / 4);
        for (int k = 0; k < top; ++k) sp.eigenvalues[static_cast<std::size_t>(k)] -= shift;
        // Re-sort jointly so (eigenvalue, eigenvector) pairs stay aligned.
        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int c) {
            return sp.eigenvalues[static_cast<std::size_t>(a)] > sp.eigenvalues[static_cast<std::size_t>(c)];
        });
        std::vector<double> ev(static_cast<std::size_t>(n)), raw(static_cast<std::size_t>(n));
        Eigen::MatrixXd vec(n, n);
        for (int k = 0; k < n; ++k) {
            ev[static_cast<std::size_t>(k)] = sp.eigenvalues[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
            raw[static_cast<std::size_t>(k)] = sp.raw_eigenvalues[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
            vec.col(k) = sp.eigenvectors.col(order[static_cast<std::size_t>(k)]);
        }
        sp.eigenvalues = std::move(ev);
        sp.raw_eigenvalues = std::move(raw);
        sp.eigenvectors = std::move(vec);
    }

    // Diagnose the discretization itself: the raw matrix eigenvalues carry the
    // quadrature's view of the trace, before any asymptotic correction.
    double sum = 0.0;
    for (double v : sp.raw_eigenvalues) sum += v;
    sp.trace_check = sum / trace_value(spec);
    sp.gap = (n >= 2) ? (sp.eigenvalues[0] - sp.eigenvalues[1]) / sp.eigenvalues[0] : 1.0;
    return sp;
}

// Number of leading modes whose Nystrom eigenpairs are numerically
// trustworthy for interpolation.
inline int reliable_terms(const Spectrum& sp) {
    const double floor = 1e-12 * sp.raw_eigenvalues.front();
    int n = 0;
    while (n < static_cast<int>(sp.raw_eigenvalues.size()) &&
           sp.raw_eigenvalues[static_cast<std::size_t>(n)] > floor)
        ++n;
    return n;
}

// Nystrom interpolation of eigenfunctions at arbitrary points:
//   f_n(t) = (1/l_n) sum_j w_j K(t, x_j) f_n(x_j).
// Returns the (points x n_terms) matrix of values.
inline Eigen::MatrixXd evaluate_eigenfunctions_at(const ProcessSpec& spec, const Spectrum& sp,
                                                  const std::vector<double>& points,
                                                  int n_terms) {
    if (n_terms < 1 || n_terms > reliable_terms(sp))
        throw std::invalid_argument("evaluate_eigenfunctions_at: n_terms out of range");
    const int n = sp.rule.size();
    const int np = static_cast<int>(points.size());
    Eigen::MatrixXd kw(np, n);
    for (int i = 0; i < np; ++i)
        for (int j = 0; j < n; ++j)
            kw(i, j) = kernel_value(spec, points[static_cast<std::size_t>(i)],
                                    sp.rule.nodes[static_cast<std::size_t>(j)]) *
                       sp.rule.weights[static_cast<std::size_t>(j)];
    Eigen::MatrixXd f = kw * sp.eigenvectors.leftCols(n_terms);
    for (int k = 0; k < n_terms; ++k) f.col(k) /= sp.raw_eigenvalues[static_cast<std::size_t>(k)];
    return f;
}

inline EigenBoundReport check_eigen_bounds(const ProcessSpec& spec, const Spectrum& sp) {
    if (sp.m != spec.m) throw std::invalid_argument("check_eigen_bounds: spectrum is for a different m");
    EigenBoundReport rep;
    const double mp1 = spec.m + 1.0;
    const double lo_scaled = 1.0 / (mp1 * mp1 * (2.0 * spec.m + 3.0));
    const double up_scaled = 1.0 / spec.two_m_plus_one;
    rep.lower = lo_scaled / spec.m_fact_sq;
    rep.upper = up_scaled / spec.m_fact_sq;
    rep.lambda1 = sp.eigenvalues.at(0);
    const double scaled = rep.lambda1 * spec.m_fact_sq;
    rep.margin = std::min(scaled - lo_scaled, up_scaled - scaled);
    rep.pass = rep.margin > 0.0;
    return rep;
}

// c_bar = prod_{n>=2} (1 - l_n/l_1)^(-1/2). The product runs over computed
// eigenvalues with l_n/l_1 > 1e-14. When the computed spectrum accounts for
// the operator trace to 0.1%, the first-order contribution of the missing
// tail, exp(deficit/(2 l_1)) with deficit = trace - sum l_n, is folded in and
// only the second-order remainder is reported as a bound; otherwise the full
// first-order bound is reported and nothing is folded.
inline ZolotarevConstants zolotarev_constants(const Spectrum& sp, double tol) {
    if (sp.eigenvalues.empty()) throw std::invalid_argument("zolotarev_constants: empty spectrum");
    ZolotarevConstants zc;
    zc.lambda1 = sp.eigenvalues[0];
    if (!(zc.lambda1 > 0.0))
        throw std::runtime_error("zolotarev_constants: leading eigenvalue not positive");
    if (sp.eigenvalues.size() >= 2) {
        const double l2 = sp.eigenvalues[1];
        if (zc.lambda1 - l2 < tol * zc.lambda1)
            throw std::runtime_error(
                "zolotarev_constants: spectral gap below tolerance; constant would be unstable");
    }

    KahanSum log_prod;
    double sum_all = zc.lambda1;
    double smallest_included = zc.lambda1;
    for (std::size_t i = 1; i < sp.eigenvalues.size(); ++i) {
        const double l = sp.eigenvalues[i];
        sum_all += l;
        const double ratio = l / zc.lambda1;
        if (ratio > 1e-14) {
            log_prod.add(-0.5 * std::log1p(-ratio));
            smallest_included = l;
            ++zc.n_terms;
        }
    }

    const ProcessSpec spec(sp.m);
    const double trace = trace_value(spec);
    const double deficit = std::max(0.0, trace - sum_all);
    double c_bar = std::exp(log_prod.value());
    if (deficit <= 1e-3 * trace) {
        c_bar *= std::exp(deficit / (2.0 * zc.lambda1));
        zc.truncation_error_bound =
            std::expm1(0.25 * (smallest_included / zc.lambda1) * (deficit / zc.lambda1));
    } else {
        zc.truncation_error_bound = std::expm1(deficit / (2.0 * zc.lambda1));
    }
    zc.c_bar = c_bar;
    zc.c_lambda = 2.0 * zc.c_bar * std::sqrt(zc.lambda1 / (2.0 * kPi));
    return zc;
}

namespace detail {

// Gauge map u -> |u|^(t-1) sign(u), the subdifferential direction of the
// t-norm; t = 1 degenerates to the sign vector.
inline void gauge_map(std::vector<double>& v, double t) {
    if (t == 2.0) return;
    for (double& u : v) {
        const double a = std::fabs(u);
        const double s = (u > 0.0) ? 1.0 : ((u < 0.0) ? -1.0 : 0.0);
        u = (t == 1.0) ? s : s * std::pow(a, t - 1.0);
    }
}

inline double weighted_norm(const std::vector<double>& v, const std::vector<double>& w, double p) {
    if (std::isinf(p)) {
        double mx = 0.0;
        for (double u : v) mx = std::max(mx, std::fabs(u));
        return mx;
    }
    KahanSum s;
    for (std::size_t i = 0; i < v.size(); ++i) s.add(w[i] * std::pow(std::fabs(v[i]), p));
    return std::pow(s.value(), 1.0 / p);
}

}  // namespace detail

// ||A_m||_{q->p} with 1/p + 1/q = 1 by the nonlinear power iteration
//   x <- Psi_p(A Psi_p(A x)),   Psi_t(u) = |u|^(t-1) sign(u),
// normalized in the weighted q-norm; the Rayleigh value is ||A x||_p. For
// p = 2 this is power iteration on A^2; for p = 1 it is the sign-vector
// ascent x <- sgn(A sgn(A x)). The objective is non-convex for p != 2, so
// the constant start is augmented with 5 fixed pseudo-random restarts and
// the largest converged value wins.
inline double operator_p_norm(const ProcessSpec& spec, double p, const QuadratureRule& rule,
                              double tol) {
    if (!(p >= 1.0)) throw std::invalid_argument("operator_p_norm: p must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("operator_p_norm: tol must be positive");
    const int n = rule.size();
    Eigen::MatrixXd k(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
            const double v = kernel_value(spec, rule.nodes[static_cast<std::size_t>(i)],
                                          rule.nodes[static_cast<std::size_t>(j)]);
            k(i, j) = v;
            k(j, i) = v;
        }

    const double q = (p == 1.0) ? std::numeric_limits<double>::infinity() : p / (p - 1.0);
    const auto apply = [&](const std::vector<double>& g, std::vector<double>& out) {
        for (int i = 0; i < n; ++i) {
            KahanSum s;
            for (int j = 0; j < n; ++j)
                s.add(rule.weights[static_cast<std::size_t>(j)] * k(i, j) * g[static_cast<std::size_t>(j)]);
            out[static_cast<std::size_t>(i)] = s.value();
        }
    };

    double best = 0.0;
    const int max_iter = 2000;
    for (int start = 0; start <= 5; ++start) {
        std::vector<double> x(static_cast<std::size_t>(n), 1.0);
        if (start > 0) {
            NormalStream ns(RngStream{0xB0BDull, static_cast<std::uint64_t>(start)}, 0, 0);
            for (double& u : x) u = 2.0 * ns.next_uniform() - 1.0;
        }
        const double nx0 = detail::weighted_norm(x, rule.weights, q);
        for (double& u : x) u /= nx0;

        std::vector<double> ax(static_cast<std::size_t>(n)), work(static_cast<std::size_t>(n));
        double prev = -1.0, cur = 0.0;
        bool converged = false;
        for (int it = 0; it < max_iter; ++it) {
            apply(x, ax);
            cur = detail::weighted_norm(ax, rule.weights, p);
            if (it > 0 && std::fabs(cur - prev) < tol) {
                converged = true;
                break;
            }
            prev = cur;
            work = ax;
            detail::gauge_map(work, p);
            apply(work, x);
            detail::gauge_map(x, p);
            const double nx = detail::weighted_norm(x, rule.weights, q);
            if (!(nx > 0.0)) break;
            for (double& u : x) u /= nx;
        }
        if (!converged)
            throw std::runtime_error("operator_p_norm: no convergence after " +
                                     std::to_string(max_iter) + " iterations (last values " +
                                     std::to_string(prev) + ", " + std::to_string(cur) + ")");
        best = std::max(best, cur);
    }
    return best;
}

}  // namespace itbm
