#pragma once

// Monte Carlo estimation of tail probabilities, small-ball curves, and
// Laplace transforms of path norms, with Cameron-Martin importance sampling
// for the rare-event regime.
//
// Importance sampling uses a symmetric two-component mixture tilt: a random
// sign s (from the auxiliary channel) picks the drift +mu or -mu, and the
// likelihood ratio against the mixture density is
//     w = exp(a^2/(2 v) - log cosh(a y / v)),
// where y is the tilted coordinate (endpoint value, or leading KL
// coefficient) and v its variance. A one-sided tilt would see only one of
// the two symmetric extremes of |X| and estimate half the two-sided tail;
// the mixture stays unbiased for it at the cost of one extra uniform.
//
// Accumulation is chunked: paths are processed in fixed blocks of 65536 in
// index order, compensated sums within a block, blocks merged in index
// order. Results are therefore invariant to the worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "itbm/formulas.hpp"
#include "itbm/norms.hpp"
#include "itbm/process.hpp"
#include "itbm/rng.hpp"
#include "itbm/simulate.hpp"
#include "itbm/spectrum.hpp"

namespace itbm {

enum class DriftKind { none, endpoint, eigenfunction };

struct ISConfig {
    DriftKind kind = DriftKind::none;
    double shift = -1.0;  // shift magnitude a; negative means "default to r"
};

struct McOptions {
    int grid_points = 4096;  // uniform grid for sup/Lp norms
    int kl_terms = 400;      // truncation for the KL route to L2 norms
    const Spectrum* spectrum = nullptr;
    int threads = 1;
    double ess_floor = 32.0;
    bool l2_grid_route = false;  // force L2 via grid quadrature (oracle route)
};

struct TailEstimate {
    int m = 0;
    NormSpec norm;
    double r = 0.0;
    double estimate = 0.0;
    double std_error = 0.0;
    long long n = 0;
    bool importance = false;
    double shift = 0.0;
    double ess = 0.0;
    bool ess_warning = false;
    double weight_mean = 1.0;
    double weight_std_error = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

struct MeanEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    long long n = 0;
};

struct SmallBallCurve {
    std::vector<double> eps;
    std::vector<double> p_hat;
    std::vector<int> included;
    double slope = 0.0;
    int n_included = 0;
    long long n = 0;
};

enum class LaplaceMethod { direct_mc, tail_integral };

struct LaplaceEstimate {
    double value = 1.0;
    double std_error = 0.0;  // direct method only
    LaplaceMethod method = LaplaceMethod::direct_mc;
    double r = 0.0;
    double theta = 1.0;
    double crossover = 0.0;  // splice point (tail-integral method)
    bool spliced = false;
    long long n = 0;
};

namespace detail {

inline constexpr long long kChunk = 65536;

template <class Fn>
inline void for_chunks(long long n, int threads, Fn&& fn) {
    const long long n_chunks = (n + kChunk - 1) / kChunk;
    if (threads <= 1) {
        for (long long c = 0; c < n_chunks; ++c) fn(c, c * kChunk, std::min(n, (c + 1) * kChunk));
        return;
    }
    std::atomic<long long> next{0};
    auto worker = [&]() {
        long long c;
        while ((c = next.fetch_add(1)) < n_chunks)
            fn(c, c * kChunk, std::min(n, (c + 1) * kChunk));
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

// One configured sampler: draws path i, applies the tilt, returns the norm
// and the likelihood weight.
class PathEngine {
  public:
    PathEngine(const ProcessSpec& spec, const NormSpec& norm, const ISConfig& is, double a,
               const McOptions& opts)
        : spec_(spec), norm_(norm), drift_(is.kind), a_(a) {
        const bool l2 = !norm.is_sup && norm.p == 2.0;
        use_kl_ = l2 && !opts.l2_grid_route;
        if (use_kl_) {
            if (opts.spectrum == nullptr)
                throw std::invalid_argument("mc_tail: KL route for L2 requires a Spectrum");
            sp_ = opts.spectrum;
            if (sp_->m != spec.m) throw std::invalid_argument("mc_tail: spectrum is for a different m");
            kl_terms_ = std::min(opts.kl_terms, static_cast<int>(sp_->eigenvalues.size()));
            if (kl_terms_ < 1) throw std::invalid_argument("mc_tail: empty spectrum");
            lambda1_ = sp_->eigenvalues[0];
            if (drift_ == DriftKind::endpoint)
                throw std::invalid_argument("mc_tail: endpoint drift applies to grid norms only");
        } else {
            grid_ = TimeGrid::uniform(opts.grid_points);
            plan_.emplace(spec, grid_);
            k11_ = variance(spec, 1.0);
            if (drift_ == DriftKind::eigenfunction)
                throw std::invalid_argument("mc_tail: eigenfunction drift applies to the L2 KL route only");
            if (drift_ == DriftKind::endpoint) {
                drift_path_.resize(grid_.times.size());
                for (std::size_t k = 0; k < grid_.times.size(); ++k)
                    drift_path_[k] = a_ * kernel_value(spec_, grid_.times[k], 1.0) / k11_;
            }
        }
    }

    double run(const RngStream& rs, std::uint64_t path, std::vector<double>& scratch,
               double& weight) const {
        weight = 1.0;
        if (use_kl_) {
            sample_kl_coefficients(*sp_, kl_terms_, rs, path, scratch);
            if (drift_ == DriftKind::eigenfunction) {
                const double s = sign_draw(rs, path);
                scratch[0] += s * a_;
                weight = std::exp(a_ * a_ / (2.0 * lambda1_) -
                                  log_cosh(a_ * scratch[0] / lambda1_));
            }
            return kl_l2_norm(scratch);
        }
        sample_path_exact(*plan_, rs, path, scratch);
        if (drift_ == DriftKind::endpoint) {
            const double s = sign_draw(rs, path);
            for (std::size_t k = 0; k < scratch.size(); ++k) scratch[k] += s * drift_path_[k];
            weight = std::exp(a_ * a_ / (2.0 * k11_) - log_cosh(a_ * scratch.back() / k11_));
        }
        return grid_norm(norm_, grid_, scratch);
    }

  private:
    static double sign_draw(const RngStream& rs, std::uint64_t path) {
        NormalStream aux(rs, path, kChannelAux);
        return aux.next_uniform() < 0.5 ? -1.0 : 1.0;
    }

    ProcessSpec spec_;
    NormSpec norm_;
    DriftKind drift_;
    double a_;
    bool use_kl_ = false;
    const Spectrum* sp_ = nullptr;
    int kl_terms_ = 0;
    double lambda1_ = 0.0;
    TimeGrid grid_;
    std::optional<StepPlan> plan_;
    double k11_ = 0.0;
    std::vector<double> drift_path_;
};

struct ChunkStats {
    KahanSum w_ind, w_ind_sq, w_sum, w_sq;
};

}  // namespace detail

inline TailEstimate mc_tail(const ProcessSpec& spec, const NormSpec& norm, double r, long long n,
                            const RngStream& stream, const ISConfig& is, const McOptions& opts) {
    if (!(r > 0.0)) throw std::domain_error("mc_tail: r must be positive");
    if (n < 1000) throw std::invalid_argument("mc_tail: need at least 1000 paths");
    const double a = (is.kind == DriftKind::none) ? 0.0 : (is.shift < 0.0 ? r : is.shift);
    const detail::PathEngine engine(spec, norm, is, a, opts);

    const long long n_chunks = (n + detail::kChunk - 1) / detail::kChunk;
    std::vector<detail::ChunkStats> parts(static_cast<std::size_t>(n_chunks));
    detail::for_chunks(n, opts.threads, [&](long long c, long long lo, long long hi) {
        detail::ChunkStats st;
        std::vector<double> scratch;
        for (long long i = lo; i < hi; ++i) {
            double w;
            const double x = engine.run(stream, static_cast<std::uint64_t>(i), scratch, w);
            const double wi = (x > r) ? w : 0.0;
            st.w_ind.add(wi);
            st.w_ind_sq.add(wi * wi);
            st.w_sum.add(w);
            st.w_sq.add(w * w);
        }
        parts[static_cast<std::size_t>(c)] = st;
    });
    detail::ChunkStats tot;
    for (const auto& st : parts) {
        tot.w_ind.merge(st.w_ind);
        tot.w_ind_sq.merge(st.w_ind_sq);
        tot.w_sum.merge(st.w_sum);
        tot.w_sq.merge(st.w_sq);
    }

    TailEstimate te;
    te.m = spec.m;
    te.norm = norm;
    te.r = r;
    te.n = n;
    te.importance = is.kind != DriftKind::none;
    te.shift = a;
    te.seed = stream.seed;
    te.stream = stream.stream_id;
    const double dn = static_cast<double>(n);
    te.estimate = tot.w_ind.value() / dn;
    te.std_error = std::sqrt(std::max(0.0, tot.w_ind_sq.value() / dn - te.estimate * te.estimate) / dn);
    te.weight_mean = tot.w_sum.value() / dn;
    te.weight_std_error =
        std::sqrt(std::max(0.0, tot.w_sq.value() / dn - te.weight_mean * te.weight_mean) / dn);
    const double wsq = tot.w_sq.value();
    te.ess = (wsq > 0.0) ? tot.w_sum.value() * tot.w_sum.value() / wsq : 0.0;
    te.ess_warning = te.ess < opts.ess_floor;
    return te;
}

// Plain (untilted) norms of n independent paths, in path-index order.
inline std::vector<double> sample_norms(const ProcessSpec& spec, const NormSpec& norm,
                                        long long n, const RngStream& stream,
                                        const McOptions& opts) {
    if (n < 1) throw std::invalid_argument("sample_norms: need at least 1 path");
    const detail::PathEngine engine(spec, norm, ISConfig{}, 0.0, opts);
    std::vector<double> bank(static_cast<std::size_t>(n));
    detail::for_chunks(n, opts.threads, [&](long long, long long lo, long long hi) {
        std::vector<double> scratch;
        for (long long i = lo; i < hi; ++i) {
            double w;
            bank[static_cast<std::size_t>(i)] =
                engine.run(stream, static_cast<std::uint64_t>(i), scratch, w);
        }
    });
    return bank;
}

inline MeanEstimate mean_of(const std::vector<double>& bank) {
    MeanEstimate me;
    me.n = static_cast<long long>(bank.size());
    KahanSum s, s2;
    for (double x : bank) {
        s.add(x);
        s2.add(x * x);
    }
    const double dn = static_cast<double>(me.n);
    me.mean = s.value() / dn;
    me.std_error = std::sqrt(std::max(0.0, s2.value() / dn - me.mean * me.mean) / dn);
    return me;
}

inline MeanEstimate mean_norm(const ProcessSpec& spec, const NormSpec& norm, long long n,
                              const RngStream& stream, const McOptions& opts) {
    return mean_of(sample_norms(spec, norm, n, stream, opts));
}

// P{norm <= eps} over a ladder of eps, plus the fitted slope of
// log(-log P) against log eps. Points with P <= 10/n (too rare to trust)
// or P >= 1 (no information) are excluded from the fit.
inline SmallBallCurve small_ball_fit(const std::vector<double>& bank,
                                     const std::vector<double>& eps_list) {
    for (double e : eps_list)
        if (!(e > 0.0)) throw std::domain_error("small_ball_curve: eps must be positive");
    if (eps_list.empty()) throw std::invalid_argument("small_ball_curve: empty eps list");
    const long long n = static_cast<long long>(bank.size());
    if (n < 100) throw std::invalid_argument("small_ball_curve: need at least 100 paths");

    SmallBallCurve sb;
    sb.eps = eps_list;
    sb.n = n;
    sb.p_hat.resize(eps_list.size());
    sb.included.resize(eps_list.size(), 0);
    const double floor = 10.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < eps_list.size(); ++j) {
        long long cnt = 0;
        for (double x : bank) cnt += (x <= eps_list[j]) ? 1 : 0;
        const double p = static_cast<double>(cnt) / static_cast<double>(n);
        sb.p_hat[j] = p;
        if (p > floor && p < 1.0) {
            sb.included[j] = 1;
            ++sb.n_included;
        }
    }
    if (sb.n_included < 3)
        throw std::runtime_error("small_ball_curve: fewer than 3 admissible points; fit refused");

    // Least squares of y = log(-log p) on x = log eps.
    KahanSum sx, sy, sxx, sxy;
    for (std::size_t j = 0; j < eps_list.size(); ++j) {
        if (!sb.included[j]) continue;
        const double x = std::log(eps_list[j]);
        const double y = std::log(-std::log(sb.p_hat[j]));
        sx.add(x);
        sy.add(y);
        sxx.add(x * x);
        sxy.add(x * y);
    }
    const double k = sb.n_included;
    sb.slope = (k * sxy.value() - sx.value() * sy.value()) /
               (k * sxx.value() - sx.value() * sx.value());
    return sb;
}

inline SmallBallCurve small_ball_curve(const ProcessSpec& spec, const NormSpec& norm,
                                       const std::vector<double>& eps_list, long long n,
                                       const RngStream& stream, const McOptions& opts) {
    if (n < 100) throw std::invalid_argument("small_ball_curve: need at least 100 paths");
    return small_ball_fit(sample_norms(spec, norm, n, stream, opts), eps_list);
}

namespace detail {

template <class F>
inline double adaptive_simpson(const F& f, double a, double b, double fa, double fm, double fb,
                               double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
inline double integrate(const F& f, double a, double b, double tol) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace detail

// E exp{r norm^theta}, either as a direct sample mean (sensible for small r
// only) or by splicing the empirical tail to the Theorem-1 asymptotic:
//   E g(X) = E g(min(X, x*)) + int_{x*}^inf g'(x) P{X > x} dx,
// with P replaced by the asymptotic beyond the crossover x*, chosen as the
// 100th largest sample so the last empirical estimate still has ~10%
// relative error. The integral is evaluated in log space around its peak.
inline LaplaceEstimate laplace_estimate(const ProcessSpec& spec, const NormSpec& norm, double r,
                                        double theta, LaplaceMethod method, long long n,
                                        const RngStream& stream, const McOptions& opts) {
    if (!(theta >= 1.0 && theta < 2.0))
        throw std::domain_error("laplace_estimate: theta must lie in [1, 2)");
    if (r < 0.0) throw std::domain_error("laplace_estimate: r must be nonnegative");
    LaplaceEstimate le;
    le.method = method;
    le.r = r;
    le.theta = theta;
    le.n = n;
    if (r == 0.0) {
        le.value = 1.0;
        return le;
    }
    if (n < 1000) throw std::invalid_argument("laplace_estimate: need at least 1000 paths");

    const std::vector<double> bank = sample_norms(spec, norm, n, stream, opts);
    const double dn = static_cast<double>(n);

    if (method == LaplaceMethod::direct_mc) {
        KahanSum s, s2;
        for (double x : bank) {
            const double g = std::exp(r * std::pow(x, theta));
            s.add(g);
            s2.add(g * g);
        }
        le.value = s.value() / dn;
        le.std_error = std::sqrt(std::max(0.0, s2.value() / dn - le.value * le.value) / dn);
        return le;
    }

    // Tail-integral route. Needs a sharp asymptotic for this norm.
    std::function<double(double)> log_tail;
    ZolotarevConstants zc;
    if (norm.is_sup) {
        log_tail = [&spec](double x) { return asymptotic_tail_sup(spec, x).log_value; };
    } else if (norm.p == 2.0) {
        if (opts.spectrum == nullptr)
            throw std::invalid_argument("laplace_estimate: tail-integral for L2 requires a Spectrum");
        zc = zolotarev_constants(*opts.spectrum, 1e-6);
        log_tail = [zc](double x) { return std::log(zc.c_lambda) - std::log(x) - x * x / (2.0 * zc.lambda1); };
    } else {
        throw std::invalid_argument(
            "laplace_estimate: tail-integral needs a sharp asymptotic (sup or L2 norms only)");
    }

    std::vector<double> sorted(bank);
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    const double x_star = sorted[99];
    le.crossover = x_star;
    le.spliced = true;
    const double p_star = 100.0 / dn;
    const double ratio = std::exp(log_tail(x_star)) / p_star;
    if (!(ratio > 0.5 && ratio < 2.0))
        throw std::runtime_error(
            "laplace_estimate: asymptotic and empirical tails disagree at the splice point "
            "(ratio " + std::to_string(ratio) + "); no overlap");

    KahanSum s;
    for (double x : bank) s.add(std::exp(r * std::pow(std::min(x, x_star), theta)));
    const double part1 = s.value() / dn;

    // log integrand of int_{x*}^inf  r theta x^(theta-1) e^{r x^theta} P{X > x} dx.
    const auto ell = [&](double x) {
        return std::log(r * theta) + (theta - 1.0) * std::log(x) + r * std::pow(x, theta) +
               log_tail(x);
    };
    // Locate the peak: ell is unimodal (Gaussian decay beats the exp growth
    // since theta < 2).
    double hi = x_star;
    const auto dell = [&](double x) {
        const double h = 1e-6 * x;
        return (ell(x + h) - ell(x - h)) / (2.0 * h);
    };
    int guard = 0;
    while (dell(hi) > 0.0 && guard++ < 200) hi *= 1.5;
    double lo = x_star, peak = x_star;
    if (guard > 0) {
        double a = (hi / 1.5 > x_star) ? hi / 1.5 : x_star, b = hi;
        for (int it = 0; it < 100; ++it) {
            const double m = 0.5 * (a + b);
            (dell(m) > 0.0 ? a : b) = m;
        }
        peak = 0.5 * (a + b);
    }
    const double ell_max = std::max(ell(peak), ell(x_star));
    double b_cut = std::max(peak, x_star);
    guard = 0;
    while (ell(b_cut) > ell_max - 46.0 && guard++ < 400) b_cut *= 1.25;
    const auto f = [&](double x) { return std::exp(ell(x) - ell_max); };
    const double integral = detail::integrate(f, lo, b_cut, 1e-10 * (b_cut - lo));
    le.value = part1 + std::exp(ell_max) * integral;
    return le;
}

}  // namespace itbm
