// Prints the leading covariance eigenvalues of X_m for m = 0..3, the
// (m!)^2-scaled window they must sit in, and the derived series constants.

#include <cstdio>

#include "itbm/spectrum.hpp"

int main() {
    for (int m = 0; m <= 3; ++m) {
        const itbm::ProcessSpec spec(m);
        const itbm::Spectrum sp = itbm::nystrom_spectrum(spec, 256);
        const itbm::EigenBoundReport b = itbm::check_eigen_bounds(spec, sp);
        const itbm::ZolotarevConstants zc = itbm::zolotarev_constants(sp, 1e-6);

        std::printf("m = %d  (nodes = %d, trace check = %.12f)\n", m, sp.n_nodes, sp.trace_check);
        std::printf("  lambda_1..5:");
        for (int n = 0; n < 5; ++n) std::printf(" %.10f", sp.eigenvalues[n]);
        std::printf("\n");
        std::printf("  (m!)^2 lambda_1 = %.10f in [%.10f, %.10f], margin %.3e %s\n",
                    b.lambda1 * spec.m_fact_sq, b.lower * spec.m_fact_sq,
                    b.upper * spec.m_fact_sq, b.margin, b.pass ? "ok" : "VIOLATED");
        std::printf("  c_bar = %.10f  c_lambda = %.10f  (truncation bound %.2e)\n\n", zc.c_bar,
                    zc.c_lambda, zc.truncation_error_bound);
    }
    return 0;
}
