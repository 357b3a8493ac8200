#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "itbm/process.hpp"

using namespace itbm;

TEST_CASE("ProcessSpec validates the order") {
    CHECK_THROWS_AS(ProcessSpec(-1), std::invalid_argument);
    CHECK_THROWS_AS(ProcessSpec(21), std::invalid_argument);
    const ProcessSpec s3(3);
    CHECK(s3.m_fact_sq == 36.0);
    CHECK(s3.two_m_plus_one == 7);
}

TEST_CASE("kernel fixed points") {
    // m = 0: K(s,t) = min(s,t).
    CHECK(kernel_value(ProcessSpec(0), 0.3, 0.7) == Catch::Approx(0.3).epsilon(1e-15));
    CHECK(kernel_value(ProcessSpec(0), 0.7, 0.3) == Catch::Approx(0.3).epsilon(1e-15));
    // m = 1, s = 1/2, t = 1: int_0^{1/2} (1/2-u)(1-u) du = 5/48.
    CHECK(kernel_value(ProcessSpec(1), 0.5, 1.0) == Catch::Approx(5.0 / 48.0).epsilon(1e-14));
    // m = 2 diagonal at 1: 1/((2!)^2 * 5) = 1/20.
    CHECK(kernel_value(ProcessSpec(2), 1.0, 1.0) == Catch::Approx(0.05).epsilon(1e-14));
    // Zero boundary.
    CHECK(kernel_value(ProcessSpec(2), 0.0, 0.9) == 0.0);
    CHECK_THROWS_AS(kernel_value(ProcessSpec(1), -0.1, 0.5), std::domain_error);
    CHECK_THROWS_AS(kernel_value(ProcessSpec(1), 0.5, 1.1), std::domain_error);
}

TEST_CASE("kernel is symmetric and matches quadrature of the defining integral") {
    for (int m : {1, 2, 3, 5}) {
        const ProcessSpec spec(m);
        for (double s : {0.2, 0.55, 0.9}) {
            for (double t : {0.35, 0.7, 1.0}) {
                const double k1 = kernel_value(spec, s, t);
                CHECK(k1 == Catch::Approx(kernel_value(spec, t, s)).margin(1e-16));
                // Midpoint rule on the defining integral, fine enough for 1e-8.
                const double w = std::min(s, t);
                const int nq = 20000;
                double acc = 0.0;
                for (int i = 0; i < nq; ++i) {
                    const double u = w * (i + 0.5) / nq;
                    acc += std::pow(s - u, m) * std::pow(t - u, m);
                }
                acc *= w / nq / spec.m_fact_sq;
                CHECK(k1 == Catch::Approx(acc).epsilon(1e-7).margin(1e-12));
            }
        }
    }
}

TEST_CASE("variance and trace closed forms") {
    for (int m : {0, 1, 2, 4}) {
        const ProcessSpec spec(m);
        CHECK(variance(spec, 1.0) ==
              Catch::Approx(kernel_value(spec, 1.0, 1.0)).epsilon(1e-14));
        CHECK(variance(spec, 0.5) ==
              Catch::Approx(kernel_value(spec, 0.5, 0.5)).epsilon(1e-14));
        // Trapezoid of the diagonal vs the closed-form trace.
        const int n = 20000;
        double acc = 0.0;
        for (int i = 1; i <= n; ++i) {
            const double t = static_cast<double>(i) / n;
            acc += variance(spec, t) * (i == n ? 0.5 : 1.0);
        }
        acc /= n;
        CHECK(trace_value(spec) == Catch::Approx(acc).epsilon(1e-6));
    }
    CHECK(trace_value(ProcessSpec(0)) == Catch::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(variance(ProcessSpec(1), 1.5), std::domain_error);
}

TEST_CASE("state transition m=1 h=1 closed forms") {
    const StateTransition st = state_transition(ProcessSpec(1), 1.0);
    CHECK(st.transition(0, 0) == 1.0);
    CHECK(st.transition(0, 1) == 0.0);
    CHECK(st.transition(1, 0) == 1.0);
    CHECK(st.transition(1, 1) == 1.0);
    CHECK(st.noise_cov(0, 0) == Catch::Approx(1.0).epsilon(1e-15));
    CHECK(st.noise_cov(0, 1) == Catch::Approx(0.5).epsilon(1e-15));
    CHECK(st.noise_cov(1, 0) == Catch::Approx(0.5).epsilon(1e-15));
    CHECK(st.noise_cov(1, 1) == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(st.noise_chol(0, 0) == Catch::Approx(1.0).epsilon(1e-15));
    CHECK(st.noise_chol(1, 0) == Catch::Approx(0.5).epsilon(1e-15));
    CHECK(st.noise_chol(1, 1) == Catch::Approx(std::sqrt(3.0) / 6.0).epsilon(1e-14));
    CHECK(st.jitter == 0.0);
}

TEST_CASE("noise Cholesky reconstructs the covariance across orders and steps") {
    for (int m : {0, 1, 3, 6, 10}) {
        const ProcessSpec spec(m);
        for (double h : {1.0, 1.0 / 64.0, 1.0 / 4096.0}) {
            const StateTransition st = state_transition(spec, h);
            const Eigen::MatrixXd r = st.noise_chol * st.noise_chol.transpose();
            const int d = m + 1;
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < d; ++k) {
                    const double scale =
                        std::sqrt(st.noise_cov(j, j) * st.noise_cov(k, k));
                    CHECK(std::fabs(r(j, k) - st.noise_cov(j, k)) / scale < 1e-12);
                }
            // Semigroup: two half steps compose to one full step.
            const StateTransition half = state_transition(spec, h / 2.0);
            const Eigen::MatrixXd t2 = half.transition * half.transition;
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < d; ++k)
                    CHECK(t2(j, k) == Catch::Approx(st.transition(j, k)).epsilon(1e-12).margin(1e-15));
        }
    }
}

TEST_CASE("transition covariance matches the kernel on a two-step grid") {
    // Cov of X_m at grid {h, 2h} computed from the state recursion must agree
    // with the closed-form kernel.
    for (int m : {0, 1, 2}) {
        const ProcessSpec spec(m);
        const double h = 0.5;
        const StateTransition st = state_transition(spec, h);
        const int d = m + 1;
        // State covariance at h is noise_cov; at 2h it is T C T' + C.
        const Eigen::MatrixXd c1 = st.noise_cov;
        const Eigen::MatrixXd c2 = st.transition * c1 * st.transition.transpose() + st.noise_cov;
        // Cross-cov Cov(Y(h), Y(2h)) = C1 T'.
        const Eigen::MatrixXd c12 = c1 * st.transition.transpose();
        CHECK(c1(d - 1, d - 1) == Catch::Approx(kernel_value(spec, h, h)).epsilon(1e-13));
        CHECK(c2(d - 1, d - 1) == Catch::Approx(kernel_value(spec, 1.0, 1.0)).epsilon(1e-13));
        CHECK(c12(d - 1, d - 1) == Catch::Approx(kernel_value(spec, h, 1.0)).epsilon(1e-13));
    }
}

TEST_CASE("state transition rejects nonpositive and degenerate steps") {
    CHECK_THROWS_AS(state_transition(ProcessSpec(1), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(state_transition(ProcessSpec(1), -0.25), std::invalid_argument);
    // h^(m+1/2) underflows to subnormal/zero: must refuse, not silently degrade.
    CHECK_THROWS_AS(state_transition(ProcessSpec(20), 1e-16), std::runtime_error);
}
