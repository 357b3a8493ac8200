#pragma once

// Closed-form evaluators: the sharp tail asymptotics for sup and L2 norms,
// the Lp Brownian-motion tail, the reflection-series oracle, the Borell and
// entropy-route bounds, the Laplace-transform asymptotics, and the Lifshits
// tail/Laplace consistency ratio. Everything is computed in log space and
// exponentiated last.

#include <cmath>
#include <functional>
#include <stdexcept>

#include "itbm/process.hpp"
#include "itbm/special.hpp"
#include "itbm/spectrum.hpp"

namespace itbm {

struct AsymptoticValue {
    double value = 0.0;
    double log_value = 0.0;
    // Asymptotic formulas are meaningless when the nominal "probability"
    // prefactor/r is not even small; flagged, never fatal.
    bool regime_warning = false;
};

struct SigmaP {
    double p = 0.0;
    double sigma = 0.0;
    double gamma_half = 0.0;  // Gamma(1/2 + 1/p)
    double gamma_one = 0.0;   // Gamma(1 + 1/p)
};

namespace detail {

inline AsymptoticValue make_asym(double log_prefactor, double r, double exponent) {
    AsymptoticValue a;
    a.log_value = log_prefactor - std::log(r) + exponent;
    a.value = std::exp(a.log_value);
    a.regime_warning = a.log_value > std::log(0.5);
    return a;
}

}  // namespace detail

inline SigmaP sigma_p(double p) {
    if (!(p > 0.0)) throw std::domain_error("sigma_p: p must be positive");
    SigmaP s;
    s.p = p;
    s.gamma_half = gamma_pos(0.5 + 1.0 / p);
    s.gamma_one = gamma_pos(1.0 + 1.0 / p);
    s.sigma = std::sqrt(2.0 / (p * kPi)) * std::pow(1.0 + p / 2.0, (p - 2.0) / (2.0 * p)) *
              s.gamma_half / s.gamma_one;
    return s;
}

// P{ sup_{[0,1]} |X_m| > r }. The m = 0 and m >= 1 prefactors differ.
inline AsymptoticValue asymptotic_tail_sup(const ProcessSpec& spec, double r) {
    if (!(r > 0.0)) throw std::domain_error("asymptotic_tail_sup: r must be positive");
    double log_pref, expo;
    if (spec.m == 0) {
        log_pref = std::log(4.0 / kSqrt2Pi);
        expo = -0.5 * r * r;
    } else {
        log_pref = std::log(2.0) - std::log(factorial(spec.m)) -
                   0.5 * std::log(2.0 * kPi * spec.two_m_plus_one);
        expo = -0.5 * spec.m_fact_sq * spec.two_m_plus_one * r * r;
    }
    return detail::make_asym(log_pref, r, expo);
}

// P{ sup_{[0,1]} X_m > r } (no absolute value): half the two-sided value,
// since for large r the extremes at the dominating point t = 1 have
// asymptotically independent signs.
inline AsymptoticValue asymptotic_tail_sup_one_sided(const ProcessSpec& spec, double r) {
    AsymptoticValue a = asymptotic_tail_sup(spec, r);
    a.log_value -= std::log(2.0);
    a.value = std::exp(a.log_value);
    return a;
}

// P{ ||X_m||_L2 > r } = c_lambda r^(-1) exp(-r^2/(2 l_1)).
inline AsymptoticValue asymptotic_tail_l2(const Spectrum&, const ZolotarevConstants& zc,
                                          double r) {
    if (!(r > 0.0)) throw std::domain_error("asymptotic_tail_l2: r must be positive");
    return detail::make_asym(std::log(zc.c_lambda), r, -r * r / (2.0 * zc.lambda1));
}

// P{ ||W||_Lp > r } for Brownian motion (m = 0 only).
inline AsymptoticValue asymptotic_tail_lp_bm(double p, double r) {
    if (!(p > 0.0)) throw std::domain_error("asymptotic_tail_lp_bm: p must be positive");
    if (!(r > 0.0)) throw std::domain_error("asymptotic_tail_lp_bm: r must be positive");
    const SigmaP s = sigma_p(p);
    const double log_pref = std::log(2.0 * s.sigma) - 0.75 * std::log(kPi) +
                            0.5 * (std::log(s.gamma_half) - std::log(s.gamma_one));
    return detail::make_asym(log_pref, r, -r * r / (2.0 * s.sigma * s.sigma));
}

// Exact P{ sup |W| > r } by the reflection series
//   P{ sup |W| <= r } = sum_{k in Z} (-1)^k [Phi((2k+1)r) - Phi((2k-1)r)],
// summed symmetrically until terms fall below 1e-17.
inline double reflection_tail_bm(double r) {
    if (!(r > 0.0)) throw std::domain_error("reflection_tail_bm: r must be positive");
    double inside = 2.0 * normal_cdf(r) - 1.0;  // k = 0
    for (int k = 1; k < 100000; ++k) {
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        const double term = normal_cdf((2.0 * k + 1.0) * r) - normal_cdf((2.0 * k - 1.0) * r);
        inside += 2.0 * sign * term;  // k and -k contribute equally
        if (term < 1e-17) break;
    }
    return 1.0 - inside;
}

// Discrete-monitoring correction: the sup of W over an n-point uniform grid
// behaves like the continuous sup against a barrier pushed out by
// beta sqrt(h), beta = -zeta(1/2)/sqrt(2 pi) (Broadie-Glasserman-Kou).
inline constexpr double kDiscreteBarrierBeta = 1.4603545088095868 / 2.5066282746310002;

inline double reflection_tail_bm_grid(double r, int grid_n) {
    if (grid_n < 1) throw std::domain_error("reflection_tail_bm_grid: grid_n must be positive");
    return reflection_tail_bm(r + kDiscreteBarrierBeta * std::sqrt(1.0 / grid_n));
}

// Borell: P{ ||Y|| > r } <= 2 exp(-(r - E||Y||)^2 / (2 sigma_T^2)).
inline double borell_bound(double r, double mean_norm, double sigma_sq) {
    if (!(sigma_sq > 0.0)) throw std::domain_error("borell_bound: sigma_sq must be positive");
    if (!(r > mean_norm)) throw std::domain_error("borell_bound: bound vacuous for r <= E||Y||");
    const double d = r - mean_norm;
    return 2.0 * std::exp(-d * d / (2.0 * sigma_sq));
}

// Entropy-route upper bound: c1 exp(-r^2/(2 ||A_m||_p) + c2 r^(2/(2m+3))).
// c1, c2 are the caller's; the paper leaves them implicit.
inline AsymptoticValue thm2_bound(const ProcessSpec& spec, double p, double r, double c1,
                                  double c2, double op_norm) {
    if (!(p >= 1.0)) throw std::domain_error("thm2_bound: p must be >= 1");
    if (!(r > 0.0)) throw std::domain_error("thm2_bound: r must be positive");
    if (!(c1 > 0.0 && c2 > 0.0)) throw std::domain_error("thm2_bound: c1, c2 must be positive");
    if (!(op_norm > 0.0)) throw std::domain_error("thm2_bound: op_norm must be positive");
    AsymptoticValue a;
    a.log_value = std::log(c1) - r * r / (2.0 * op_norm) +
                  c2 * std::pow(r, 2.0 / (2.0 * spec.m + 3.0));
    a.value = std::exp(a.log_value);
    return a;
}

// Small-ball-to-tail transfer: c1 exp(-l^2/(2 sigma^2) + c2 l^(a/(a+1)) (log l)^(b/(a+1))).
inline AsymptoticValue thm3_bound(double lambda, double alpha, double beta, double sigma,
                                  double c1, double c2) {
    if (!(alpha > 0.0)) throw std::domain_error("thm3_bound: alpha must be positive");
    if (!(sigma > 0.0)) throw std::domain_error("thm3_bound: sigma must be positive");
    if (!(c1 > 0.0)) throw std::domain_error("thm3_bound: c1 must be positive");
    if (beta != 0.0 && !(lambda > 1.0))
        throw std::domain_error("thm3_bound: need lambda > 1 when beta != 0");
    if (!(lambda > 0.0)) throw std::domain_error("thm3_bound: lambda must be positive");
    const double log_factor = (beta == 0.0) ? 1.0 : std::pow(std::log(lambda), beta / (alpha + 1.0));
    AsymptoticValue a;
    a.log_value = std::log(c1) - lambda * lambda / (2.0 * sigma * sigma) +
                  c2 * std::pow(lambda, alpha / (alpha + 1.0)) * log_factor;
    a.value = std::exp(a.log_value);
    return a;
}

namespace detail {

inline void check_theta(double theta, const char* who) {
    if (!(theta >= 1.0 && theta < 2.0))
        throw std::domain_error(std::string(who) + ": theta must lie in [1, 2)");
}

}  // namespace detail

// E exp{ r (sup X_m)^theta } ~ (2-theta)^(-1/2)
//     exp{ (2-theta)/(2 theta) ((m!)^2(2m+1))^(theta/(theta-2)) (r theta)^(2/(2-theta)) }.
inline AsymptoticValue laplace_asymptotic_sup(const ProcessSpec& spec, double theta, double r) {
    detail::check_theta(theta, "laplace_asymptotic_sup");
    if (!(r > 0.0)) throw std::domain_error("laplace_asymptotic_sup: r must be positive");
    const double big_m = spec.m_fact_sq * spec.two_m_plus_one;
    AsymptoticValue a;
    a.log_value = -0.5 * std::log(2.0 - theta) +
                  (2.0 - theta) / (2.0 * theta) * std::pow(big_m, theta / (theta - 2.0)) *
                      std::pow(r * theta, 2.0 / (2.0 - theta));
    a.value = std::exp(a.log_value);
    return a;
}

// E exp{ r ||X_m||_L2^theta } ~ c(lambda) sqrt(2 pi / ((2-theta) l_1))
//     exp{ (2-theta)/(2 theta) l_1^(theta/(2-theta)) (r theta)^(2/(2-theta)) }.
inline AsymptoticValue laplace_asymptotic_l2(const ZolotarevConstants& zc, double theta,
                                             double r) {
    detail::check_theta(theta, "laplace_asymptotic_l2");
    if (!(r > 0.0)) throw std::domain_error("laplace_asymptotic_l2: r must be positive");
    AsymptoticValue a;
    a.log_value = std::log(zc.c_lambda) +
                  0.5 * (std::log(2.0 * kPi) - std::log(2.0 - theta) - std::log(zc.lambda1)) +
                  (2.0 - theta) / (2.0 * theta) * std::pow(zc.lambda1, theta / (2.0 - theta)) *
                      std::pow(r * theta, 2.0 / (2.0 - theta));
    a.value = std::exp(a.log_value);
    return a;
}

// c3(m, p, theta) = (2-theta)/(2 theta) theta^(2/(2-theta)) ||A_m||_p^(theta/(2-theta)).
inline double laplace_c3(double theta, double op_norm) {
    detail::check_theta(theta, "laplace_c3");
    if (!(op_norm > 0.0)) throw std::domain_error("laplace_c3: op_norm must be positive");
    return (2.0 - theta) / (2.0 * theta) * std::pow(theta, 2.0 / (2.0 - theta)) *
           std::pow(op_norm, theta / (2.0 - theta));
}

// Lp upper bound: c1 exp{ c2 r^(2/((2-theta)(2m+3))) + c3 r^(2/(2-theta)) }.
inline AsymptoticValue laplace_upper_lp(const ProcessSpec& spec, double theta, double r,
                                        double c1, double c2, double c3) {
    detail::check_theta(theta, "laplace_upper_lp");
    if (!(r > 0.0)) throw std::domain_error("laplace_upper_lp: r must be positive");
    if (!(c1 > 0.0)) throw std::domain_error("laplace_upper_lp: c1 must be positive");
    AsymptoticValue a;
    a.log_value = std::log(c1) +
                  c2 * std::pow(r, 2.0 / ((2.0 - theta) * (2.0 * spec.m + 3.0))) +
                  c3 * std::pow(r, 2.0 / (2.0 - theta));
    a.value = std::exp(a.log_value);
    return a;
}

// Ratio of the two sides of the Lifshits relation at level r:
//   P{ sup xi > x(r) }  vs
//   sqrt(2-theta) E exp{r (sup xi)^theta 1{sup>0}} exp{-x(r)^2/(theta s2)}
//       sigma / (sqrt(2 pi) x(r)),
// with x(r) = (r theta s2)^(1/(2-theta)). Both sides are supplied as
// log-valued evaluators so the ratio survives far into the tail.
inline double lifshits_consistency(const std::function<double(double)>& log_tail_at,
                                   const std::function<double(double)>& log_laplace_at,
                                   double sigma_sq, double theta, double r) {
    detail::check_theta(theta, "lifshits_consistency");
    if (!(sigma_sq > 0.0)) throw std::domain_error("lifshits_consistency: sigma_sq must be positive");
    if (!(r > 0.0)) throw std::domain_error("lifshits_consistency: r must be positive");
    const double x = std::pow(r * theta * sigma_sq, 1.0 / (2.0 - theta));
    const double log_lhs = log_tail_at(x);
    const double log_rhs = 0.5 * std::log(2.0 - theta) + log_laplace_at(r) -
                           x * x / (theta * sigma_sq) + 0.5 * std::log(sigma_sq) -
                           std::log(kSqrt2Pi * x);
    if (!std::isfinite(log_lhs) || !std::isfinite(log_rhs))
        throw std::runtime_error("lifshits_consistency: inputs not resolvable at this r");
    return std::exp(log_lhs - log_rhs);
}

}  // namespace itbm
