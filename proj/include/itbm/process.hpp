#pragma once

// Closed-form quantities of the m-times integrated Brownian motion X_m:
// covariance kernel, marginal variance, and the exact one-step transition
// law of the state vector (X_0, ..., X_m).

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "itbm/special.hpp"

namespace itbm {

struct ProcessSpec {
    int m = 0;
    double m_fact_sq = 1.0;  // (m!)^2
    int two_m_plus_one = 1;

    explicit ProcessSpec(int order) : m(order) {
        if (m < 0) throw std::invalid_argument("ProcessSpec: m must be nonnegative");
        if (m > kMaxFactorial)
            throw std::invalid_argument("ProcessSpec: m > 20 not supported (factorials overflow)");
        const double f = factorial(m);
        m_fact_sq = f * f;
        two_m_plus_one = 2 * m + 1;
    }
};

struct KernelValue {
    double s = 0.0;
    double t = 0.0;
    double value = 0.0;
};

namespace detail {

inline void check_time(double t, const char* what) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error(std::string(what) + " outside [0,1]");
}

// Lower-triangular in-place Cholesky. Returns -1 on success, otherwise the
// index of the first pivot that is not positive at working precision.
inline int llt_lower(Eigen::MatrixXd& a) {
    const auto n = a.rows();
    for (Eigen::Index j = 0; j < n; ++j) {
        double d = a(j, j);
        for (Eigen::Index k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
        if (!(d > 0.0) || !std::isfinite(d)) return static_cast<int>(j);
        const double lj = std::sqrt(d);
        a(j, j) = lj;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (Eigen::Index k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
            a(i, j) = s / lj;
        }
        for (Eigen::Index k = j + 1; k < n; ++k) a(j, k) = 0.0;
    }
    return -1;
}

}  // namespace detail

// K_m(s,t) = (1/(m!)^2) * Int_0^min(s,t) (s-u)^m (t-u)^m du, evaluated by the
// exact binomial double sum; no quadrature error enters downstream results.
inline double kernel_value(const ProcessSpec& spec, double s, double t) {
    detail::check_time(s, "kernel_value: s");
    detail::check_time(t, "kernel_value: t");
    const double w = std::min(s, t);
    const int m = spec.m;
    if (m == 0) return w;
    if (w == 0.0) return 0.0;

    double spow[kMaxFactorial + 1], tpow[kMaxFactorial + 1], wpow[2 * kMaxFactorial + 2];
    spow[0] = tpow[0] = wpow[0] = 1.0;
    for (int j = 1; j <= m; ++j) {
        spow[j] = spow[j - 1] * s;
        tpow[j] = tpow[j - 1] * t;
    }
    for (int j = 1; j <= 2 * m + 1; ++j) wpow[j] = wpow[j - 1] * w;

    double sum = 0.0;
    for (int j = 0; j <= m; ++j) {
        const double cj = binomial(m, j) * spow[m - j];
        for (int k = 0; k <= m; ++k) {
            const double term =
                cj * binomial(m, k) * tpow[m - k] * wpow[j + k + 1] / (j + k + 1);
            sum += ((j + k) % 2 == 0) ? term : -term;
        }
    }
    return sum / spec.m_fact_sq;
}

inline KernelValue kernel_point(const ProcessSpec& spec, double s, double t) {
    return KernelValue{s, t, kernel_value(spec, s, t)};
}

// Var X_m(t) = t^(2m+1) / ((m!)^2 (2m+1)); strictly increasing on [0,1], so
// the variance maximizer is uniquely t = 1.
inline double variance(const ProcessSpec& spec, double t) {
    detail::check_time(t, "variance: t");
    return std::pow(t, spec.two_m_plus_one) / (spec.m_fact_sq * spec.two_m_plus_one);
}

// Int_0^1 Var X_m(t) dt -- the trace of the covariance operator.
inline double trace_value(const ProcessSpec& spec) {
    return 1.0 / (spec.m_fact_sq * spec.two_m_plus_one * (spec.two_m_plus_one + 1));
}

struct StateTransition {
    double h = 0.0;
    Eigen::MatrixXd transition;  // lower triangular, T[k][j] = h^(k-j)/(k-j)!
    Eigen::MatrixXd noise_cov;   // C[j][k] = h^(j+k+1)/(j! k! (j+k+1))
    Eigen::MatrixXd noise_chol;  // lower triangular, L L^T = C
    double jitter = 0.0;         // diagonal jitter, 0 unless the fallback ran
};

// Exact conditional law of (X_0,...,X_m)(t+h) given the state at t. The noise
// covariance factors in closed form: C = D H D with D = diag(h^(j+1/2)/j!)
// and H the Hilbert matrix 1/(j+k+1), whose Cholesky factor is
//   H = G G^T,  G[j][k] = sqrt(2k+1) (j!)^2 / ((j-k)! (j+k+1)!),
// (the Gram matrix of monomials in the shifted-Legendre basis), so
//   L[j][k] = h^(j+1/2) sqrt(2k+1) j! / ((j-k)! (j+k+1)!).
// This avoids factorizing a severely ill-conditioned matrix numerically.
inline StateTransition state_transition(const ProcessSpec& spec, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("state_transition: h must be positive");
    const int d = spec.m + 1;
    StateTransition out;
    out.h = h;
    out.transition = Eigen::MatrixXd::Zero(d, d);
    out.noise_cov = Eigen::MatrixXd::Zero(d, d);
    out.noise_chol = Eigen::MatrixXd::Zero(d, d);

    for (int k = 0; k < d; ++k)
        for (int j = 0; j <= k; ++j)
            out.transition(k, j) = std::pow(h, k - j) / factorial(k - j);

    for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
            out.noise_cov(j, k) =
                std::pow(h, j + k + 1) / (factorial(j) * factorial(k) * (j + k + 1));

    for (int j = 0; j < d; ++j) {
        const double hj = std::pow(h, j + 0.5);
        for (int k = 0; k <= j; ++k) {
            double v = hj * std::sqrt(2.0 * k + 1.0) * factorial(j);
            // (j+k+1)! exceeds 20! for large m; build the denominator directly.
            double denom = factorial(j - k);
            for (int i = 2; i <= j + k + 1; ++i) denom *= i;
            out.noise_chol(j, k) = v / denom;
        }
        const double diag = out.noise_chol(j, j);
        if (!(diag > 0.0) || !std::isnormal(diag))
            throw std::runtime_error(
                "state_transition: noise covariance not positive definite at working "
                "precision (h too small for this m)");
    }

    // Closed form is exact; the reconstruction check guards against future
    // edits. If it ever fails, refactorize with a small diagonal jitter.
    double max_rel = 0.0;
    for (int j = 0; j < d; ++j)
        for (int k = 0; k <= j; ++k) {
            double r = 0.0;
            for (int i = 0; i <= k; ++i) r += out.noise_chol(j, i) * out.noise_chol(k, i);
            const double scale =
                std::sqrt(out.noise_cov(j, j) * out.noise_cov(k, k));
            max_rel = std::max(max_rel, std::fabs(r - out.noise_cov(j, k)) / scale);
        }
    if (max_rel > 1e-12) {
        out.jitter = 1e-15 * out.noise_cov.trace();
        Eigen::MatrixXd a = out.noise_cov;
        for (int j = 0; j < d; ++j) a(j, j) += out.jitter;
        const int pivot = detail::llt_lower(a);
        if (pivot >= 0)
            throw std::runtime_error(
                "state_transition: noise covariance not positive definite (pivot " +
                std::to_string(pivot) + ")");
        out.noise_chol = a;
    }
    return out;
}

}  // namespace itbm
