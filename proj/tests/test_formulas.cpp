#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "itbm/formulas.hpp"

using namespace itbm;

TEST_CASE("sup-norm tail asymptotics: fixed points and structure") {
    const ProcessSpec s0(0);
    const AsymptoticValue a0 = asymptotic_tail_sup(s0, 2.0);
    CHECK(a0.value == Catch::Approx(0.1079819).epsilon(1e-6));
    CHECK(a0.log_value == Catch::Approx(std::log(a0.value)).margin(1e-12));
    CHECK_FALSE(a0.regime_warning);

    const ProcessSpec s1(1);
    const AsymptoticValue a1 = asymptotic_tail_sup(s1, 1.0);
    CHECK(a1.value == Catch::Approx(0.102787).epsilon(1e-5));

    // Gaussian exponent: log value drops by exactly (m!)^2(2m+1)(r2^2-r1^2)/2
    // plus the log r ratio.
    const ProcessSpec s2(2);
    const AsymptoticValue b1 = asymptotic_tail_sup(s2, 2.0);
    const AsymptoticValue b2 = asymptotic_tail_sup(s2, 3.0);
    const double drop = b1.log_value - b2.log_value;
    CHECK(drop == Catch::Approx(0.5 * 4.0 * 5.0 * (9.0 - 4.0) + std::log(3.0 / 2.0)).epsilon(1e-12));

    CHECK_THROWS_AS(asymptotic_tail_sup(s0, 0.0), std::domain_error);
}

TEST_CASE("one-sided sup tail is exactly half the two-sided value") {
    for (int m : {0, 1, 3}) {
        const ProcessSpec spec(m);
        for (double r : {1.0, 2.5}) {
            const AsymptoticValue two = asymptotic_tail_sup(spec, r);
            const AsymptoticValue one = asymptotic_tail_sup_one_sided(spec, r);
            CHECK(one.value == Catch::Approx(0.5 * two.value).epsilon(1e-14));
        }
    }
}

TEST_CASE("regime warning trips when the formula cannot be a probability") {
    CHECK(asymptotic_tail_sup(ProcessSpec(0), 0.3).regime_warning);
    CHECK_FALSE(asymptotic_tail_sup(ProcessSpec(0), 3.0).regime_warning);
}

TEST_CASE("sigma_p closed form at p = 2") {
    const SigmaP s = sigma_p(2.0);
    CHECK(s.sigma * s.sigma == Catch::Approx(4.0 / (kPi * kPi)).epsilon(1e-10));
    CHECK(s.gamma_half == Catch::Approx(1.0).epsilon(1e-12));          // Gamma(1)
    CHECK(s.gamma_one == Catch::Approx(std::sqrt(kPi) / 2.0).epsilon(1e-12));  // Gamma(3/2)
    CHECK_THROWS_AS(sigma_p(0.0), std::domain_error);
}

TEST_CASE("Lp tail at p = 2 coincides with the spectral L2 tail") {
    const ProcessSpec spec(0);
    const Spectrum sp = nystrom_spectrum(spec, 256);
    const ZolotarevConstants zc = zolotarev_constants(sp, 1e-6);
    for (double r : {1.0, 2.0, 3.0}) {
        const double via_p = asymptotic_tail_lp_bm(2.0, r).value;
        const double via_spec = asymptotic_tail_l2(sp, zc, r).value;
        CHECK(std::fabs(via_p - via_spec) / via_spec < 1e-6);
    }
    CHECK_THROWS_AS(asymptotic_tail_lp_bm(2.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(asymptotic_tail_lp_bm(0.0, 1.0), std::domain_error);
}

TEST_CASE("spectral L2 tail has the stated closed form") {
    const ProcessSpec spec(0);
    const Spectrum sp = nystrom_spectrum(spec, 256);
    const ZolotarevConstants zc = zolotarev_constants(sp, 1e-6);
    const double r = 2.0;
    const AsymptoticValue a = asymptotic_tail_l2(sp, zc, r);
    CHECK(a.log_value ==
          Catch::Approx(std::log(zc.c_lambda) - std::log(r) - r * r / (2.0 * zc.lambda1))
              .margin(1e-12));
    CHECK(a.value == Catch::Approx(0.002061).epsilon(5e-3));
}

TEST_CASE("reflection series: frozen value, limits, and asymptotic approach") {
    CHECK(reflection_tail_bm(1.0) == Catch::Approx(0.6292225702).epsilon(1e-8));
    CHECK(reflection_tail_bm(0.2) > 0.999);
    CHECK(reflection_tail_bm(8.0) < 1e-13);
    // The closed-form asymptotic overshoots by ~1/r^2 at moderate r.
    const double ratio = asymptotic_tail_sup(ProcessSpec(0), 4.0).value / reflection_tail_bm(4.0);
    CHECK(ratio > 1.0);
    CHECK(ratio < 1.08);
    CHECK_THROWS_AS(reflection_tail_bm(0.0), std::domain_error);
}

TEST_CASE("discrete-monitoring reference is below the continuous tail and converges") {
    const double cont = reflection_tail_bm(1.0);
    const double g256 = reflection_tail_bm_grid(1.0, 256);
    const double g4096 = reflection_tail_bm_grid(1.0, 4096);
    CHECK(g256 < cont);
    CHECK(g4096 < cont);
    CHECK(g256 < g4096);
    CHECK(cont - g4096 < cont - g256);
    CHECK(kDiscreteBarrierBeta == Catch::Approx(0.5825971579).epsilon(1e-9));
    CHECK_THROWS_AS(reflection_tail_bm_grid(1.0, 0), std::domain_error);
}

TEST_CASE("Borell bound values and domain") {
    CHECK(borell_bound(3.0, 1.0, 1.0) == Catch::Approx(2.0 * std::exp(-2.0)).epsilon(1e-12));
    CHECK(borell_bound(2.0, 0.5, 0.25) ==
          Catch::Approx(2.0 * std::exp(-1.5 * 1.5 / 0.5)).epsilon(1e-12));
    CHECK_THROWS_AS(borell_bound(1.0, 1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(borell_bound(0.5, 1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(borell_bound(2.0, 1.0, 0.0), std::domain_error);
}

TEST_CASE("entropy-route bound: exponent structure and monotonicity") {
    const ProcessSpec spec(1);
    const double op = 0.08;
    for (double r : {1.0, 2.0, 4.0}) {
        const AsymptoticValue a = thm2_bound(spec, 2.0, r, 1.5, 0.7, op);
        const double expect = std::log(1.5) - r * r / (2.0 * op) + 0.7 * std::pow(r, 2.0 / 5.0);
        CHECK(a.log_value == Catch::Approx(expect).margin(1e-12));
    }
    // Larger c2 can only weaken the bound.
    CHECK(thm2_bound(spec, 2.0, 3.0, 1.0, 2.0, op).value >
          thm2_bound(spec, 2.0, 3.0, 1.0, 1.0, op).value);
    CHECK_THROWS_AS(thm2_bound(spec, 0.5, 1.0, 1.0, 1.0, op), std::domain_error);
    CHECK_THROWS_AS(thm2_bound(spec, 2.0, 1.0, 0.0, 1.0, op), std::domain_error);
    CHECK_THROWS_AS(thm2_bound(spec, 2.0, 1.0, 1.0, 1.0, 0.0), std::domain_error);
}

TEST_CASE("small-ball transfer bound: log factor rules") {
    // beta = 0: no log factor, valid for any positive lambda.
    const AsymptoticValue a = thm3_bound(0.5, 2.0, 0.0, 1.0, 1.0, 1.0);
    CHECK(a.log_value ==
          Catch::Approx(-0.125 + std::pow(0.5, 2.0 / 3.0)).margin(1e-12));
    // beta != 0 requires lambda > 1.
    CHECK_THROWS_AS(thm3_bound(0.5, 2.0, 1.0, 1.0, 1.0, 1.0), std::domain_error);
    const AsymptoticValue b = thm3_bound(3.0, 2.0, 1.5, 1.0, 1.0, 1.0);
    const double expect =
        -4.5 + std::pow(3.0, 2.0 / 3.0) * std::pow(std::log(3.0), 0.5);
    CHECK(b.log_value == Catch::Approx(expect).margin(1e-12));
    CHECK_THROWS_AS(thm3_bound(1.0, -1.0, 0.0, 1.0, 1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(thm3_bound(1.0, 2.0, 0.0, 0.0, 1.0, 1.0), std::domain_error);
}

TEST_CASE("Laplace asymptotics: theta domain and theta = 1 reductions") {
    const ProcessSpec s1(1);
    CHECK_THROWS_AS(laplace_asymptotic_sup(s1, 0.99, 1.0), std::domain_error);
    CHECK_THROWS_AS(laplace_asymptotic_sup(s1, 2.0, 1.0), std::domain_error);
    // theta = 1, m = 1: exponent (1/2) (1/3) r^2 since ((m!)^2(2m+1))^(-1) = 1/3.
    const AsymptoticValue a = laplace_asymptotic_sup(s1, 1.0, 3.0);
    CHECK(a.log_value == Catch::Approx(0.5 * 9.0 / 3.0).margin(1e-12));

    const ProcessSpec s0(0);
    const Spectrum sp = nystrom_spectrum(s0, 256);
    const ZolotarevConstants zc = zolotarev_constants(sp, 1e-6);
    const AsymptoticValue b = laplace_asymptotic_l2(zc, 1.0, 2.0);
    const double expect = std::log(zc.c_lambda) +
                          0.5 * (std::log(2.0 * kPi) - std::log(zc.lambda1)) +
                          0.5 * zc.lambda1 * 4.0;
    CHECK(b.log_value == Catch::Approx(expect).margin(1e-12));
}

TEST_CASE("Laplace growth constant and the Lp upper envelope") {
    // theta = 1 collapses c3 to op_norm / 2.
    CHECK(laplace_c3(1.0, 0.3) == Catch::Approx(0.15).epsilon(1e-14));
    // General theta against the definition.
    const double theta = 1.5, op = 0.4;
    const double expect = (0.5 / 3.0) * std::pow(1.5, 4.0) * std::pow(0.4, 3.0);
    CHECK(laplace_c3(theta, op) == Catch::Approx(expect).epsilon(1e-12));
    CHECK_THROWS_AS(laplace_c3(1.0, 0.0), std::domain_error);

    const ProcessSpec spec(1);
    const double c3 = laplace_c3(1.0, op);
    const AsymptoticValue lo = laplace_upper_lp(spec, 1.0, 2.0, 1.0, 1.0, c3);
    const AsymptoticValue hi = laplace_upper_lp(spec, 1.0, 4.0, 1.0, 1.0, c3);
    CHECK(lo.log_value == Catch::Approx(std::pow(2.0, 0.4) + c3 * 4.0).margin(1e-12));
    CHECK(hi.value > lo.value);
    CHECK_THROWS_AS(laplace_upper_lp(spec, 1.0, 1.0, 0.0, 1.0, c3), std::domain_error);
}

TEST_CASE("tail/Laplace consistency ratio is one on the matching closed forms") {
    // One-sided sup tail and the sup-norm Laplace asymptotic satisfy the
    // relation exactly for every r; the ratio must be 1 to rounding.
    const ProcessSpec spec(1);
    const double sigma_sq = variance(spec, 1.0);
    const auto log_tail = [&](double x) {
        return asymptotic_tail_sup_one_sided(spec, x).log_value;
    };
    const auto log_lap = [&](double rr) {
        return laplace_asymptotic_sup(spec, 1.0, rr).log_value;
    };
    for (double r : {2.0, 5.0, 10.0, 40.0}) {
        const double ratio = lifshits_consistency(log_tail, log_lap, sigma_sq, 1.0, r);
        CHECK(ratio == Catch::Approx(1.0).margin(1e-10));
    }
    CHECK_THROWS_AS(lifshits_consistency(log_tail, log_lap, 0.0, 1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(lifshits_consistency(log_tail, log_lap, sigma_sq, 1.0, 0.0),
                    std::domain_error);
    const auto bad = [](double) { return std::nan(""); };
    CHECK_THROWS_AS(lifshits_consistency(bad, log_lap, sigma_sq, 1.0, 1.0), std::runtime_error);
}
