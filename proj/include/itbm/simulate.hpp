#pragma once

// Path samplers for X_m on a finite grid.
//
// Three routes, cross-checking one another:
//   * exact Gauss-Markov state transition on the (m+1)-dimensional state
//     (X_0, ..., X_m) -- exact in distribution at the grid points, O(n) per
//     path after an O(1) plan;
//   * dense Cholesky of the kernel Gram matrix -- exact, O(n^2) per path,
//     capped at small grids, used as an independent oracle;
//   * truncated Karhunen-Loeve in the Nystrom eigenbasis -- exact for the
//     L2 norm of the truncation, sum c_n f_n on a grid otherwise.
//
// Every sampler draws from a NormalStream addressed by (seed, stream_id,
// path, channel), so path i is the same bytes no matter how work is split
// across threads.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "itbm/process.hpp"
#include "itbm/rng.hpp"
#include "itbm/spectrum.hpp"

namespace itbm {

struct TimeGrid {
    std::vector<double> times;

    TimeGrid() = default;
    explicit TimeGrid(std::vector<double> t) : times(std::move(t)) { validate(); }

    static TimeGrid uniform(int n) {
        if (n < 1) throw std::invalid_argument("TimeGrid::uniform: need at least 1 point");
        std::vector<double> t(static_cast<std::size_t>(n));
        for (int i = 1; i <= n; ++i) t[static_cast<std::size_t>(i - 1)] = static_cast<double>(i) / n;
        t.back() = 1.0;
        return TimeGrid(std::move(t));
    }

    int size() const { return static_cast<int>(times.size()); }

    void validate() const {
        if (times.empty()) throw std::invalid_argument("TimeGrid: empty grid");
        double prev = 0.0;
        for (double t : times) {
            if (!(t > prev && t <= 1.0))
                throw std::invalid_argument("TimeGrid: points must be strictly increasing in (0, 1]");
            prev = t;
        }
        if (times.back() != 1.0) throw std::invalid_argument("TimeGrid: last point must be 1");
    }
};

enum class Method { exact_transition, cholesky, kl };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::exact_transition: return "exact";
        case Method::cholesky: return "cholesky";
        case Method::kl: return "kl";
    }
    return "?";
}

// Per-grid plan for the state-transition sampler. Steps sharing the same h
// (every step of a uniform grid) share one factorization.
class StepPlan {
  public:
    StepPlan(const ProcessSpec& spec, TimeGrid grid) : spec_(spec), grid_(std::move(grid)) {
        step_index_.reserve(grid_.times.size());
        double prev = 0.0;
        for (double t : grid_.times) {
            const double h = t - prev;
            int idx = -1;
            for (std::size_t i = 0; i < steps_.size(); ++i)
                if (steps_[i].h == h) { idx = static_cast<int>(i); break; }
            if (idx < 0) {
                steps_.push_back(state_transition(spec_, h));
                idx = static_cast<int>(steps_.size()) - 1;
            }
            step_index_.push_back(idx);
            prev = t;
        }
    }

    const ProcessSpec& spec() const { return spec_; }
    const TimeGrid& grid() const { return grid_; }

    // Fills out[k] = X_m(t_k); consumes (m+1) normals per step from the
    // path's normals channel.
    void run(NormalStream& ns, std::vector<double>& out) const {
        const int d = spec_.m + 1;
        Eigen::VectorXd y = Eigen::VectorXd::Zero(d);
        Eigen::VectorXd z(d), ty(d);
        out.resize(grid_.times.size());
        for (std::size_t k = 0; k < grid_.times.size(); ++k) {
            const StateTransition& st = steps_[static_cast<std::size_t>(step_index_[k])];
            for (int i = 0; i < d; ++i) z(i) = ns.next_normal();
            ty.noalias() = st.transition * y;
            ty.noalias() += st.noise_chol * z;
            y = ty;
            out[k] = y(d - 1);
        }
    }

    // Full-state variant: states(k, j) = X_j(t_k). Same draws as run().
    void run_states(NormalStream& ns, Eigen::MatrixXd& states) const {
        const int d = spec_.m + 1;
        Eigen::VectorXd y = Eigen::VectorXd::Zero(d);
        Eigen::VectorXd z(d), ty(d);
        states.resize(static_cast<Eigen::Index>(grid_.times.size()), d);
        for (std::size_t k = 0; k < grid_.times.size(); ++k) {
            const StateTransition& st = steps_[static_cast<std::size_t>(step_index_[k])];
            for (int i = 0; i < d; ++i) z(i) = ns.next_normal();
            ty.noalias() = st.transition * y;
            ty.noalias() += st.noise_chol * z;
            y = ty;
            states.row(static_cast<Eigen::Index>(k)) = y.transpose();
        }
    }

  private:
    ProcessSpec spec_;
    TimeGrid grid_;
    std::vector<StateTransition> steps_;
    std::vector<int> step_index_;
};

inline void sample_path_exact(const StepPlan& plan, const RngStream& stream,
                              std::uint64_t path_index, std::vector<double>& out) {
    NormalStream ns(stream, path_index, kChannelNormals);
    plan.run(ns, out);
}

// Dense sampler from the Cholesky factor of the kernel Gram matrix.
class CholeskySampler {
  public:
    static constexpr int kMaxPoints = 1024;

    CholeskySampler(const ProcessSpec& spec, TimeGrid grid) : spec_(spec), grid_(std::move(grid)) {
        const int n = grid_.size();
        if (n > kMaxPoints)
            throw std::invalid_argument("CholeskySampler: grid exceeds " +
                                        std::to_string(kMaxPoints) + " points");
        Eigen::MatrixXd sigma(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j) {
                const double v = kernel_value(spec_, grid_.times[static_cast<std::size_t>(i)],
                                              grid_.times[static_cast<std::size_t>(j)]);
                sigma(i, j) = v;
                sigma(j, i) = v;
            }
        const int pivot = detail::llt_lower(sigma);
        if (pivot >= 0)
            throw std::runtime_error("CholeskySampler: Gram matrix not positive definite at pivot " +
                                     std::to_string(pivot));
        chol_ = std::move(sigma);
    }

    const TimeGrid& grid() const { return grid_; }

    void run(NormalStream& ns, std::vector<double>& out) const {
        const int n = grid_.size();
        Eigen::VectorXd z(n);
        for (int i = 0; i < n; ++i) z(i) = ns.next_normal();
        Eigen::VectorXd x = chol_.triangularView<Eigen::Lower>() * z;
        out.assign(x.data(), x.data() + n);
    }

  private:
    ProcessSpec spec_;
    TimeGrid grid_;
    Eigen::MatrixXd chol_;  // lower triangle
};

inline void sample_path_cholesky(const CholeskySampler& s, const RngStream& stream,
                                 std::uint64_t path_index, std::vector<double>& out) {
    NormalStream ns(stream, path_index, kChannelNormals);
    s.run(ns, out);
}

// Karhunen-Loeve coefficients c_n = sqrt(l_n) Z_n, n = 0..n_terms-1.
// Eigenvalues that are not positive (possible in the far numerical tail)
// contribute zero; the normal draw is consumed either way so the stream
// layout does not depend on the spectrum.
inline void sample_kl_coefficients(const Spectrum& sp, int n_terms, const RngStream& stream,
                                   std::uint64_t path_index, std::vector<double>& coeff) {
    if (n_terms < 1 || n_terms > static_cast<int>(sp.eigenvalues.size()))
        throw std::invalid_argument("sample_kl_coefficients: n_terms out of range");
    NormalStream ns(stream, path_index, kChannelNormals);
    coeff.resize(static_cast<std::size_t>(n_terms));
    for (int n = 0; n < n_terms; ++n) {
        const double z = ns.next_normal();
        const double l = sp.eigenvalues[static_cast<std::size_t>(n)];
        coeff[static_cast<std::size_t>(n)] = (l > 0.0) ? std::sqrt(l) * z : 0.0;
    }
}

// Evaluates truncated KL paths on a grid: values = F c with
// F(i, n) = f_n(t_i) by Nystrom interpolation.
class KlEvaluator {
  public:
    KlEvaluator(const ProcessSpec& spec, const Spectrum& sp, TimeGrid grid, int n_terms)
        : grid_(std::move(grid)), n_terms_(n_terms) {
        basis_ = evaluate_eigenfunctions_at(spec, sp, grid_.times, n_terms);
    }

    const TimeGrid& grid() const { return grid_; }
    int n_terms() const { return n_terms_; }

    void evaluate(const std::vector<double>& coeff, std::vector<double>& out) const {
        if (static_cast<int>(coeff.size()) != n_terms_)
            throw std::invalid_argument("KlEvaluator: coefficient count mismatch");
        Eigen::Map<const Eigen::VectorXd> c(coeff.data(), n_terms_);
        Eigen::VectorXd v = basis_ * c;
        out.assign(v.data(), v.data() + grid_.size());
    }

  private:
    TimeGrid grid_;
    int n_terms_;
    Eigen::MatrixXd basis_;
};

}  // namespace itbm
