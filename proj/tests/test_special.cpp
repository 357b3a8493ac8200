#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "itbm/special.hpp"

using namespace itbm;

TEST_CASE("factorial matches exact integers and rejects out-of-range") {
    CHECK(factorial(0) == 1.0);
    CHECK(factorial(1) == 1.0);
    CHECK(factorial(5) == 120.0);
    CHECK(factorial(12) == 479001600.0);
    CHECK(factorial(20) == 2432902008176640000.0);
    CHECK_THROWS_AS(factorial(-1), std::invalid_argument);
    CHECK_THROWS_AS(factorial(21), std::invalid_argument);
}

TEST_CASE("binomial coefficients") {
    CHECK(binomial(0, 0) == 1.0);
    CHECK(binomial(5, 2) == 10.0);
    CHECK(binomial(10, 5) == 252.0);
    CHECK(binomial(4, 7) == 0.0);
    CHECK(binomial(4, -1) == 0.0);
}

TEST_CASE("Kahan accumulation is merge-order stable") {
    // 1e16 + 1 repeated: plain double addition loses the ones entirely.
    KahanSum a;
    a.add(1e16);
    for (int i = 0; i < 1000; ++i) a.add(1.0);
    a.add(-1e16);
    CHECK(a.value() == Catch::Approx(1000.0).margin(1e-6));

    // Merging two halves equals one pass.
    KahanSum whole, left, right;
    for (int i = 1; i <= 2000; ++i) {
        const double x = 1.0 / (i * i);
        whole.add(x);
        (i <= 1000 ? left : right).add(x);
    }
    left.merge(right);
    CHECK(left.value() == Catch::Approx(whole.value()).epsilon(1e-15));
}

TEST_CASE("lgamma_pos against closed forms") {
    CHECK(lgamma_pos(1.0) == Catch::Approx(0.0).margin(1e-12));
    CHECK(lgamma_pos(2.0) == Catch::Approx(0.0).margin(1e-12));
    CHECK(lgamma_pos(5.0) == Catch::Approx(std::log(24.0)).epsilon(1e-12));
    // Gamma(1/2) = sqrt(pi)
    CHECK(gamma_pos(0.5) == Catch::Approx(std::sqrt(kPi)).epsilon(1e-12));
    // Gamma(3/2) = sqrt(pi)/2
    CHECK(gamma_pos(1.5) == Catch::Approx(std::sqrt(kPi) / 2.0).epsilon(1e-12));
    CHECK_THROWS_AS(lgamma_pos(0.0), std::domain_error);
    CHECK_THROWS_AS(lgamma_pos(-2.5), std::domain_error);
}

TEST_CASE("normal cdf/pdf/tail basics") {
    CHECK(normal_cdf(0.0) == Catch::Approx(0.5).epsilon(1e-15));
    CHECK(normal_cdf(1.0) == Catch::Approx(0.841344746068543).epsilon(1e-12));
    CHECK(normal_tail(1.0) == Catch::Approx(1.0 - 0.841344746068543).epsilon(1e-12));
    CHECK(normal_tail(8.0) == Catch::Approx(6.220960574271786e-16).epsilon(1e-10));
    CHECK(normal_pdf(0.0) == Catch::Approx(1.0 / kSqrt2Pi).epsilon(1e-15));
    CHECK(normal_cdf(2.0) + normal_tail(2.0) == Catch::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("inverse normal cdf fixed values") {
    // Reference points for the rational approximation, frozen to guard the
    // coefficient tables.
    CHECK(inv_norm_cdf(0.001) == Catch::Approx(-3.090232304709404).epsilon(1e-9));
    CHECK(inv_norm_cdf(0.02425) == Catch::Approx(-1.9729610490848712).epsilon(1e-9));
    CHECK(inv_norm_cdf(0.3) == Catch::Approx(-0.5244005132792953).epsilon(1e-9));
    CHECK(inv_norm_cdf(0.5) == Catch::Approx(0.0).margin(1e-12));
    CHECK(inv_norm_cdf(0.7) == Catch::Approx(0.5244005132792952).epsilon(1e-9));
    CHECK(inv_norm_cdf(0.97575) == Catch::Approx(1.9729610490848712).epsilon(1e-9));
    CHECK(inv_norm_cdf(0.999) == Catch::Approx(3.090232304709404).epsilon(1e-9));
    CHECK(inv_norm_cdf(1e-10) == Catch::Approx(-6.36134089949508).epsilon(1e-8));
    CHECK_THROWS_AS(inv_norm_cdf(0.0), std::domain_error);
    CHECK_THROWS_AS(inv_norm_cdf(1.0), std::domain_error);
    CHECK_THROWS_AS(inv_norm_cdf(-0.1), std::domain_error);
}

TEST_CASE("inverse normal cdf round-trips through the cdf") {
    for (double p : {1e-8, 1e-4, 0.01, 0.2, 0.5, 0.8, 0.99, 0.9999, 1.0 - 1e-8}) {
        const double x = inv_norm_cdf(p);
        CHECK(normal_cdf(x) == Catch::Approx(p).epsilon(5e-8).margin(1e-12));
    }
}

TEST_CASE("log_cosh asymptotics") {
    CHECK(log_cosh(0.0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(log_cosh(1.0) == Catch::Approx(std::log(std::cosh(1.0))).epsilon(1e-14));
    CHECK(log_cosh(-1.0) == Catch::Approx(log_cosh(1.0)).epsilon(1e-15));
    // For |y| large, log cosh y -> |y| - log 2; cosh itself overflows by 800.
    CHECK(log_cosh(800.0) == Catch::Approx(800.0 - std::log(2.0)).epsilon(1e-14));
    CHECK(std::isfinite(log_cosh(1e308)));
}
