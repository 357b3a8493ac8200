#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "itbm/simulate.hpp"

using namespace itbm;

namespace {

// Two-sample Kolmogorov-Smirnov distance.
double ks_distance(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / a.size() -
                                  static_cast<double>(j) / b.size()));
    }
    return d;
}

double sup_abs(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::fabs(x));
    return s;
}

}  // namespace

TEST_CASE("time grid validation") {
    CHECK_THROWS_AS(TimeGrid(std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(TimeGrid({0.0, 0.5, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(TimeGrid({0.5, 0.5, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(TimeGrid({0.5, 1.0, 0.75}), std::invalid_argument);
    CHECK_THROWS_AS(TimeGrid({0.25, 0.5}), std::invalid_argument);  // must end at 1
    CHECK_THROWS_AS(TimeGrid({0.25, 1.5}), std::invalid_argument);
    const TimeGrid g = TimeGrid::uniform(4);
    REQUIRE(g.size() == 4);
    CHECK(g.times.back() == 1.0);
    CHECK(g.times.front() == Catch::Approx(0.25).epsilon(1e-15));
    CHECK(TimeGrid({1.0}).size() == 1);
}

TEST_CASE("exact sampler is deterministic and stream-addressable") {
    const ProcessSpec spec(2);
    const StepPlan plan(spec, TimeGrid::uniform(16));
    std::vector<double> a, b, c;
    sample_path_exact(plan, RngStream{99, 4}, 7, a);
    sample_path_exact(plan, RngStream{99, 4}, 7, b);
    sample_path_exact(plan, RngStream{99, 4}, 8, c);
    REQUIRE(a.size() == 16);
    CHECK(a == b);   // bit-identical replay
    CHECK(a != c);   // different path, different bytes
    // run_states agrees with run on the last component using the same draws.
    NormalStream ns(RngStream{99, 4}, 7, kChannelNormals);
    Eigen::MatrixXd st;
    plan.run_states(ns, st);
    REQUIRE(st.rows() == 16);
    REQUIRE(st.cols() == 3);
    for (int k = 0; k < 16; ++k)
        CHECK(st(k, 2) == a[static_cast<std::size_t>(k)]);
}

TEST_CASE("single-point grid reduces to the marginal normal") {
    const ProcessSpec spec(0);
    const StepPlan plan(spec, TimeGrid({1.0}));
    const int n = 200000;
    double s1 = 0.0, s2 = 0.0;
    std::vector<double> x;
    for (int i = 0; i < n; ++i) {
        sample_path_exact(plan, RngStream{11, 0}, static_cast<std::uint64_t>(i), x);
        s1 += x[0];
        s2 += x[0] * x[0];
    }
    CHECK(s1 / n == Catch::Approx(0.0).margin(4.0 / std::sqrt(static_cast<double>(n))));
    CHECK(s2 / n == Catch::Approx(1.0).margin(4.0 * std::sqrt(2.0 / n)));
}

TEST_CASE("endpoint variance is exact in law on coarse and fine grids") {
    const ProcessSpec spec(2);
    const double v_exact = variance(spec, 1.0);
    const int n = 50000;
    for (int g : {2, 256}) {
        const StepPlan plan(spec, TimeGrid::uniform(g));
        double s2 = 0.0;
        std::vector<double> x;
        for (int i = 0; i < n; ++i) {
            sample_path_exact(plan, RngStream{21, static_cast<std::uint64_t>(g)},
                              static_cast<std::uint64_t>(i), x);
            s2 += x.back() * x.back();
        }
        const double vhat = s2 / n;
        const double se = v_exact * std::sqrt(2.0 / n);
        CHECK(vhat == Catch::Approx(v_exact).margin(4.0 * se));
    }
}

TEST_CASE("empirical covariance matches the kernel") {
    const ProcessSpec spec(1);
    const TimeGrid grid = TimeGrid::uniform(4);
    const StepPlan plan(spec, grid);
    const int n = 200000;
    double acc[4][4] = {};
    std::vector<double> x;
    for (int i = 0; i < n; ++i) {
        sample_path_exact(plan, RngStream{31, 0}, static_cast<std::uint64_t>(i), x);
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b <= a; ++b) acc[a][b] += x[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(b)];
    }
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b <= a; ++b) {
            const double k = kernel_value(spec, grid.times[static_cast<std::size_t>(a)],
                                          grid.times[static_cast<std::size_t>(b)]);
            const double kaa = kernel_value(spec, grid.times[static_cast<std::size_t>(a)],
                                            grid.times[static_cast<std::size_t>(a)]);
            const double kbb = kernel_value(spec, grid.times[static_cast<std::size_t>(b)],
                                            grid.times[static_cast<std::size_t>(b)]);
            const double se = std::sqrt((kaa * kbb + k * k) / n);
            CHECK(acc[a][b] / n == Catch::Approx(k).margin(4.0 * se));
        }
}

TEST_CASE("exact and Cholesky samplers agree in law on the grid sup") {
    const ProcessSpec spec(1);
    const TimeGrid grid = TimeGrid::uniform(64);
    const StepPlan plan(spec, grid);
    const CholeskySampler chol(spec, grid);
    const int n = 100000;
    std::vector<double> se(static_cast<std::size_t>(n)), sc(static_cast<std::size_t>(n)), x;
    for (int i = 0; i < n; ++i) {
        sample_path_exact(plan, RngStream{41, 0}, static_cast<std::uint64_t>(i), x);
        se[static_cast<std::size_t>(i)] = sup_abs(x);
        sample_path_cholesky(chol, RngStream{41, 1}, static_cast<std::uint64_t>(i), x);
        sc[static_cast<std::size_t>(i)] = sup_abs(x);
    }
    // Two-sample KS at the 1% level: critical value 1.628 sqrt(2/n).
    const double crit = 1.628 * std::sqrt(2.0 / n);
    CHECK(ks_distance(se, sc) < crit);
}

TEST_CASE("Cholesky sampler refuses oversized grids") {
    CHECK_THROWS_AS(CholeskySampler(ProcessSpec(0), TimeGrid::uniform(1025)),
                    std::invalid_argument);
}

TEST_CASE("independent streams decorrelate endpoints") {
    const ProcessSpec spec(0);
    const StepPlan plan(spec, TimeGrid::uniform(8));
    const int n = 100000;
    double sab = 0.0, sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0;
    std::vector<double> x;
    for (int i = 0; i < n; ++i) {
        sample_path_exact(plan, RngStream{51, 0}, static_cast<std::uint64_t>(i), x);
        const double a = x.back();
        sample_path_exact(plan, RngStream{51, 1}, static_cast<std::uint64_t>(i), x);
        const double b = x.back();
        sab += a * b;
        sa += a;
        sb += b;
        saa += a * a;
        sbb += b * b;
    }
    const double cov = sab / n - (sa / n) * (sb / n);
    const double corr =
        cov / std::sqrt((saa / n - (sa / n) * (sa / n)) * (sbb / n - (sb / n) * (sb / n)));
    CHECK(std::fabs(corr) < 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("KL coefficients reproduce the truncated second moment") {
    const ProcessSpec spec(0);
    const Spectrum sp = nystrom_spectrum(spec, 256);
    const int terms = 200;
    double lsum = 0.0;
    for (int k = 0; k < terms; ++k) lsum += sp.eigenvalues[static_cast<std::size_t>(k)];
    // The 200-term truncation carries all but ~5e-4 of the trace 1/2.
    CHECK(trace_value(spec) - lsum == Catch::Approx(0.0).margin(1.5e-3));
    CHECK(trace_value(spec) - lsum > 0.0);

    const int n = 200000;
    std::vector<double> coeff;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        sample_kl_coefficients(sp, terms, RngStream{61, 0}, static_cast<std::uint64_t>(i), coeff);
        double q = 0.0;
        for (double c : coeff) q += c * c;
        s1 += q;
        s2 += q * q;
    }
    const double mean = s1 / n;
    const double sd = std::sqrt(std::max(0.0, s2 / n - mean * mean));
    CHECK(mean == Catch::Approx(lsum).margin(4.0 * sd / std::sqrt(static_cast<double>(n))));

    CHECK_THROWS_AS(sample_kl_coefficients(sp, 0, RngStream{61, 0}, 0, coeff),
                    std::invalid_argument);
    CHECK_THROWS_AS(sample_kl_coefficients(sp, 10000, RngStream{61, 0}, 0, coeff),
                    std::invalid_argument);
}

TEST_CASE("KL paths on a grid approach the exact law as terms grow") {
    // Variance of the KL-evaluated path at t equals the truncated kernel
    // diagonal sum_k l_k f_k(t)^2, which converges upward to K(t,t).
    const ProcessSpec spec(1);
    const Spectrum sp = nystrom_spectrum(spec, 128);
    const TimeGrid grid = TimeGrid::uniform(8);
    const int terms = std::min(40, reliable_terms(sp));
    const KlEvaluator kl(spec, sp, grid, terms);
    const int n = 100000;
    std::vector<double> coeff, x;
    double s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        sample_kl_coefficients(sp, terms, RngStream{71, 0}, static_cast<std::uint64_t>(i), coeff);
        kl.evaluate(coeff, x);
        s2 += x.back() * x.back();
    }
    const double v = variance(spec, 1.0);
    const double se = v * std::sqrt(2.0 / n);
    // 40 terms reproduce the endpoint variance to well under the MC noise.
    CHECK(s2 / n == Catch::Approx(v).margin(4.0 * se + 1e-4));

    std::vector<double> bad(static_cast<std::size_t>(terms + 1), 0.0);
    CHECK_THROWS_AS(kl.evaluate(bad, x), std::invalid_argument);
}
