#pragma once

// Scalar special functions and numeric helpers shared across the library.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace itbm {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kSqrt2Pi = 2.506628274631000502415765284811045253;

// Exact integer factorials; 20! is the largest that fits in 64 bits.
inline constexpr int kMaxFactorial = 20;

constexpr std::uint64_t factorial_u64(int n) {
    std::uint64_t f = 1;
    for (int i = 2; i <= n; ++i) f *= static_cast<std::uint64_t>(i);
    return f;
}

inline double factorial(int n) {
    if (n < 0 || n > kMaxFactorial) throw std::invalid_argument("factorial: n out of [0,20]");
    static const std::array<double, kMaxFactorial + 1> table = [] {
        std::array<double, kMaxFactorial + 1> t{};
        for (int i = 0; i <= kMaxFactorial; ++i) t[i] = static_cast<double>(factorial_u64(i));
        return t;
    }();
    return table[static_cast<std::size_t>(n)];
}

inline double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    return factorial(n) / (factorial(k) * factorial(n - k));
}

// Compensated accumulation (Kahan). Keeps merge results independent of the
// number of partial sums to well beyond 12 significant digits.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    void merge(const KahanSum& other) {
        add(other.sum);
        add(-other.carry);
    }
    double value() const { return sum; }
};

// log Gamma on (0, inf) by Spouge's approximation with a = 15; the absolute
// error of the bracketed series is below 1e-13 on the range used here.
inline double lgamma_pos(double x) {
    if (!(x > 0.0)) throw std::domain_error("lgamma_pos: x must be positive");
    constexpr int a = 15;
    static const std::array<double, a> coeff = [] {
        std::array<double, a> c{};
        c[0] = kSqrt2Pi;
        double fact = 1.0;  // (k-1)!
        for (int k = 1; k < a; ++k) {
            if (k > 1) fact *= static_cast<double>(k - 1);
            const double ak = static_cast<double>(a - k);
            c[static_cast<std::size_t>(k)] =
                ((k % 2 == 1) ? 1.0 : -1.0) * std::pow(ak, k - 0.5) * std::exp(ak) / fact;
        }
        return c;
    }();
    const double z = x - 1.0;
    double series = coeff[0];
    for (int k = 1; k < a; ++k) series += coeff[static_cast<std::size_t>(k)] / (z + k);
    return (z + 0.5) * std::log(z + a) - (z + a) + std::log(series);
}

inline double gamma_pos(double x) { return std::exp(lgamma_pos(x)); }

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / kSqrt2Pi; }

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Upper tail P{Z > x}; erfc keeps relative accuracy far into the tail.
inline double normal_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

// Inverse normal CDF, Acklam's rational approximation (max relative error
// about 1.15e-9). Chosen over iterative refinements for speed and for a
// fixed, platform-stable operation sequence.
inline double inv_norm_cdf(double p) {
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("inv_norm_cdf: p must be in (0,1)");
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p <= 1.0 - plow) {
        const double q = p - 0.5, r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

// log cosh(y) without overflow for large |y|.
inline double log_cosh(double y) {
    const double ay = std::fabs(y);
    return ay + std::log1p(std::exp(-2.0 * ay)) - 0.6931471805599453094172321214581766;
}

}  // namespace itbm
