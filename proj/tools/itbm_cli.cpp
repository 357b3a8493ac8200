// Batch driver: every quantitative object in the library behind one
// reproducible command-line. Each run writes one primary output (JSON or
// CSV), a manifest carrying the full config and wall time, and a short
// summary to stdout. Identical flags reproduce identical primary bytes.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "itbm/estimators.hpp"
#include "itbm/formulas.hpp"
#include "itbm/io.hpp"
#include "itbm/norms.hpp"
#include "itbm/process.hpp"
#include "itbm/quadrature.hpp"
#include "itbm/simulate.hpp"
#include "itbm/spectrum.hpp"
#include "itbm/verify.hpp"
#include "itbm/version.hpp"

namespace {

using itbm::fmt_g17;
using itbm::json;

std::uint64_t default_seed() {
    if (const char* env = std::getenv("ITBM_SEED")) {
        try {
            return std::stoull(env);
        } catch (...) {
            throw std::invalid_argument("ITBM_SEED is not a valid integer");
        }
    }
    return 12345;
}

struct Common {
    std::uint64_t seed = 12345;
    std::uint64_t stream = 0;
    int threads = 1;
    std::string out;
    std::string format;  // "json" or "csv"
};

void add_common(CLI::App* sub, Common& c, const std::string& default_format) {
    c.format = default_format;
    sub->add_option("--seed", c.seed, "random seed (env ITBM_SEED overrides the default)")
        ->capture_default_str();
    sub->add_option("--stream", c.stream, "base stream id")->capture_default_str();
    sub->add_option("--threads", c.threads, "worker threads")
        ->check(CLI::Range(1, 256))
        ->capture_default_str();
    sub->add_option("--out", c.out, "primary output path");
    sub->add_option("--format", c.format, "output format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
}

std::string default_out(const std::string& cmd, const std::string& format) {
    return "itbm_" + cmd + (format == "json" ? ".json" : ".csv");
}

itbm::NormSpec parse_norm(const std::string& name, const std::optional<double>& p) {
    if (name == "sup") return itbm::NormSpec::sup();
    if (name == "l2") return itbm::NormSpec::lp(2.0);
    if (!p) throw std::invalid_argument("--norm lp requires --p");
    return itbm::NormSpec::lp(*p);
}

// Primary-output writer: embeds provenance, appends the manifest.
class Emitter {
  public:
    Emitter(std::string command, const Common& c, json config)
        : command_(std::move(command)), common_(c), config_(std::move(config)),
          t0_(std::chrono::steady_clock::now()) {
        config_["command"] = command_;
        hash_ = itbm::hex64(itbm::fnv1a64(config_.dump()));
    }

    const std::string& config_hash() const { return hash_; }

    std::string out_path() const {
        return common_.out.empty() ? default_out(command_, common_.format) : common_.out;
    }

    void write_json(json payload) const {
        payload["seed"] = common_.seed;
        payload["config_hash"] = hash_;
        itbm::atomic_write_file(out_path(), payload.dump(2) + "\n");
        write_manifest();
    }

    void write_csv(const std::string& header, const std::vector<std::string>& rows) const {
        std::ostringstream ss;
        ss << "# seed=" << common_.seed << " config_hash=" << hash_ << "\n" << header << "\n";
        for (const auto& r : rows) ss << r << "\n";
        itbm::atomic_write_file(out_path(), ss.str());
        write_manifest();
    }

  private:
    void write_manifest() const {
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
        const json manifest{{"command", command_},
                            {"config", config_},
                            {"config_hash", hash_},
                            {"seed", common_.seed},
                            {"versions", json{{"itbm", itbm::version()}, {"format", 1}}},
                            {"wall_time_s", wall}};
        itbm::atomic_write_file(out_path() + ".manifest.json", manifest.dump(2) + "\n");
    }

    std::string command_;
    const Common& common_;
    json config_;
    std::string hash_;
    std::chrono::steady_clock::time_point t0_;
};

// ---- kernel ----------------------------------------------------------------

struct KernelArgs {
    Common common;
    int m = 0;
    double s = 0.0, t = 0.0;
};

int run_kernel(const KernelArgs& a) {
    const itbm::ProcessSpec spec(a.m);
    const double v = itbm::kernel_value(spec, a.s, a.t);
    Emitter em("kernel", a.common,
               json{{"m", a.m}, {"s", a.s}, {"t", a.t}, {"format", a.common.format}});
    if (a.common.format == "json") {
        em.write_json(json{{"m", a.m},
                           {"s", a.s},
                           {"t", a.t},
                           {"value", v},
                           {"variance_s", itbm::variance(spec, a.s)},
                           {"variance_t", itbm::variance(spec, a.t)}});
    } else {
        em.write_csv("m,s,t,value", {std::to_string(a.m) + ',' + fmt_g17(a.s) + ',' +
                                     fmt_g17(a.t) + ',' + fmt_g17(v)});
    }
    std::cout << "K_" << a.m << "(" << fmt_g17(a.s) << ", " << fmt_g17(a.t) << ") = " << fmt_g17(v)
              << "\n";
    return 0;
}

// ---- spectrum --------------------------------------------------------------

struct SpectrumArgs {
    Common common;
    int m = 0;
    int nodes = 256;
};

int run_spectrum(const SpectrumArgs& a) {
    const itbm::ProcessSpec spec(a.m);
    const itbm::Spectrum sp = itbm::nystrom_spectrum(spec, a.nodes);
    const itbm::EigenBoundReport bounds = itbm::check_eigen_bounds(spec, sp);
    Emitter em("spectrum", a.common,
               json{{"m", a.m}, {"nodes", a.nodes}, {"format", a.common.format}});
    json payload = itbm::spectrum_to_json(sp);
    payload["bounds"] = itbm::eigen_bounds_to_json(bounds);
    try {
        payload["zolotarev"] = itbm::zolotarev_to_json(itbm::zolotarev_constants(sp, 1e-6));
    } catch (const std::exception& e) {
        payload["zolotarev_error"] = e.what();
    }
    if (a.common.format == "json") {
        em.write_json(std::move(payload));
    } else {
        std::vector<std::string> rows;
        rows.reserve(sp.eigenvalues.size());
        for (std::size_t i = 0; i < sp.eigenvalues.size(); ++i)
            rows.push_back(std::to_string(i + 1) + ',' + fmt_g17(sp.eigenvalues[i]));
        em.write_csv("n,eigenvalue", rows);
    }
    std::cout << "m=" << a.m << " nodes=" << a.nodes << " lambda_1=" << fmt_g17(sp.eigenvalues[0])
              << " trace_check=" << fmt_g17(sp.trace_check) << " gap=" << fmt_g17(sp.gap) << "\n";
    return 0;
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
    Common common;
    int m = 0;
    int grid = 16;
    long long paths = 1;
    std::string method = "exact";
    int nodes = 256;
    int kl_terms = 400;
};

int run_simulate(const SimulateArgs& a) {
    const itbm::ProcessSpec spec(a.m);
    const itbm::TimeGrid grid = itbm::TimeGrid::uniform(a.grid);
    const itbm::RngStream rs{a.common.seed, a.common.stream};
    Emitter em("simulate", a.common,
               json{{"m", a.m},
                    {"grid", a.grid},
                    {"paths", a.paths},
                    {"method", a.method},
                    {"nodes", a.nodes},
                    {"kl_terms", a.kl_terms},
                    {"format", a.common.format}});

    // Gather per-path columns: the full state for the exact sampler, X_m
    // alone for the other two.
    const bool full_state = a.method == "exact";
    std::vector<Eigen::MatrixXd> blocks;
    blocks.reserve(static_cast<std::size_t>(a.paths));
    if (a.method == "exact") {
        const itbm::StepPlan plan(spec, grid);
        for (long long i = 0; i < a.paths; ++i) {
            itbm::NormalStream ns(rs, static_cast<std::uint64_t>(i), itbm::kChannelNormals);
            Eigen::MatrixXd st;
            plan.run_states(ns, st);
            blocks.push_back(std::move(st));
        }
    } else if (a.method == "cholesky") {
        const itbm::CholeskySampler sampler(spec, grid);
        std::vector<double> x;
        for (long long i = 0; i < a.paths; ++i) {
            itbm::sample_path_cholesky(sampler, rs, static_cast<std::uint64_t>(i), x);
            Eigen::MatrixXd st(grid.size(), 1);
            for (int k = 0; k < grid.size(); ++k) st(k, 0) = x[static_cast<std::size_t>(k)];
            blocks.push_back(std::move(st));
        }
    } else {  // kl
        const itbm::Spectrum sp = itbm::nystrom_spectrum(spec, a.nodes);
        const int terms = std::min({a.kl_terms, itbm::reliable_terms(sp),
                                    static_cast<int>(sp.eigenvalues.size())});
        const itbm::KlEvaluator kl(spec, sp, grid, terms);
        std::vector<double> coeff, x;
        for (long long i = 0; i < a.paths; ++i) {
            itbm::sample_kl_coefficients(sp, terms, rs, static_cast<std::uint64_t>(i), coeff);
            kl.evaluate(coeff, x);
            Eigen::MatrixXd st(grid.size(), 1);
            for (int k = 0; k < grid.size(); ++k) st(k, 0) = x[static_cast<std::size_t>(k)];
            blocks.push_back(std::move(st));
        }
    }

    if (a.common.format == "csv") {
        std::string header = "t";
        if (full_state)
            for (int j = 0; j <= a.m; ++j) header += ",x" + std::to_string(j);
        else
            header += ",x" + std::to_string(a.m);
        std::vector<std::string> rows;
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            rows.push_back("# path " + std::to_string(b));
            for (int k = 0; k < grid.size(); ++k) {
                std::string row = fmt_g17(grid.times[static_cast<std::size_t>(k)]);
                for (Eigen::Index j = 0; j < blocks[b].cols(); ++j)
                    row += ',' + fmt_g17(blocks[b](k, j));
                rows.push_back(std::move(row));
            }
        }
        em.write_csv(header, rows);
    } else {
        json paths = json::array();
        for (const auto& blk : blocks) {
            json rows = json::array();
            for (int k = 0; k < grid.size(); ++k) {
                json row = json::array();
                row.push_back(grid.times[static_cast<std::size_t>(k)]);
                for (Eigen::Index j = 0; j < blk.cols(); ++j) row.push_back(blk(k, j));
                rows.push_back(std::move(row));
            }
            paths.push_back(std::move(rows));
        }
        em.write_json(json{{"m", a.m}, {"method", a.method}, {"paths", paths}});
    }
    std::cout << "wrote " << a.paths << " path(s), method=" << a.method << ", grid=" << a.grid
              << "\n";
    return 0;
}

// ---- tail ------------------------------------------------------------------

struct TailArgs {
    Common common;
    int m = 0;
    std::string norm = "sup";
    std::optional<double> p;
    std::vector<double> r;
    long long n = 100000;
    std::string is_kind = "none";
    double shift = -1.0;
    int grid = 4096;
    int kl_terms = 400;
    int nodes = 256;
    bool l2_grid = false;
};

int run_tail(const TailArgs& a) {
    const itbm::ProcessSpec spec(a.m);
    const itbm::NormSpec norm = parse_norm(a.norm, a.p);
    if (a.r.empty()) throw std::invalid_argument("tail: at least one --r is required");

    itbm::McOptions mo;
    mo.grid_points = a.grid;
    mo.kl_terms = a.kl_terms;
    mo.threads = a.common.threads;
    mo.l2_grid_route = a.l2_grid;
    std::optional<itbm::Spectrum> sp;
    std::optional<itbm::ZolotarevConstants> zc;
    const bool l2_kl = !norm.is_sup && norm.p == 2.0 && !a.l2_grid;
    if (l2_kl || a.is_kind == "eigen") {
        sp.emplace(itbm::nystrom_spectrum(spec, std::max(a.nodes, a.kl_terms)));
        mo.spectrum = &*sp;
        zc = itbm::zolotarev_constants(*sp, 1e-6);
    }
    itbm::ISConfig is;
    is.kind = a.is_kind == "endpoint" ? itbm::DriftKind::endpoint
              : a.is_kind == "eigen"  ? itbm::DriftKind::eigenfunction
                                      : itbm::DriftKind::none;
    is.shift = a.shift;

    Emitter em("tail", a.common,
               json{{"m", a.m},       {"norm", a.norm},     {"p", a.p ? json(*a.p) : json()},
                    {"r", a.r},       {"n", a.n},           {"is", a.is_kind},
                    {"shift", a.shift}, {"grid", a.grid},   {"kl_terms", a.kl_terms},
                    {"nodes", a.nodes}, {"l2_grid", a.l2_grid}, {"format", a.common.format}});

    std::vector<std::string> rows;
    json items = json::array();
    for (std::size_t i = 0; i < a.r.size(); ++i) {
        const itbm::RngStream rs{a.common.seed, a.common.stream + i};
        const itbm::TailEstimate te = itbm::mc_tail(spec, norm, a.r[i], a.n, rs, is, mo);
        rows.push_back(itbm::tail_csv_row(te));
        items.push_back(itbm::tail_to_json(te));

        // Reference value from the matching sharp asymptotic, where one exists.
        std::string ref = "n/a";
        if (norm.is_sup) {
            const itbm::AsymptoticValue av = itbm::asymptotic_tail_sup(spec, a.r[i]);
            ref = fmt_g17(av.value) + (av.regime_warning ? " (regime warning)" : "");
        } else if (zc) {
            const itbm::AsymptoticValue av = itbm::asymptotic_tail_l2(*sp, *zc, a.r[i]);
            ref = fmt_g17(av.value) + (av.regime_warning ? " (regime warning)" : "");
        } else if (a.m == 0 && !norm.is_sup) {
            ref = fmt_g17(itbm::asymptotic_tail_lp_bm(norm.p, a.r[i]).value);
        }
        std::cout << "r=" << fmt_g17(a.r[i]) << " estimate=" << fmt_g17(te.estimate)
                  << " stderr=" << fmt_g17(te.std_error) << " asymptotic=" << ref
                  << (te.ess_warning ? " [low ESS]" : "") << "\n";
    }
    if (a.common.format == "csv")
        em.write_csv(itbm::tail_csv_header(), rows);
    else
        em.write_json(json{{"estimates", items}});
    return 0;
}

// ---- smallball ---------------------------------------------------------------

struct SmallballArgs {
    Common common;
    int m = 0;
    std::string norm = "sup";
    std::optional<double> p;
    std::vector<double> eps;
    long long n = 100000;
    int grid = 4096;
    int kl_terms = 400;
    int nodes = 256;
};

int run_smallball(const SmallballArgs& a) {
    const itbm::ProcessSpec spec(a.m);
    const itbm::NormSpec norm = parse_norm(a.norm, a.p);
    if (a.eps.empty()) throw std::invalid_argument("smallball: at least one --eps is required");

    itbm::McOptions mo;
    mo.grid_points = a.grid;
    mo.kl_terms = a.kl_terms;
    mo.threads = a.common.threads;
    std::optional<itbm::Spectrum> sp;
    if (!norm.is_sup && norm.p == 2.0) {
        sp.emplace(itbm::nystrom_spectrum(spec, std::max(a.nodes, a.kl_terms)));
        mo.spectrum = &*sp;
    }
    Emitter em("smallball", a.common,
               json{{"m", a.m}, {"norm", a.norm}, {"p", a.p ? json(*a.p) : json()},
                    {"eps", a.eps}, {"n", a.n}, {"grid", a.grid}, {"kl_terms", a.kl_terms},
                    {"nodes", a.nodes}, {"format", a.common.format}});

    const itbm::SmallBallCurve sb = itbm::small_ball_curve(
        spec, norm, a.eps, a.n, itbm::RngStream{a.common.seed, a.common.stream}, mo);
    if (a.common.format == "json") {
        em.write_json(itbm::small_ball_to_json(sb));
    } else {
        std::vector<std::string> rows;
        for (std::size_t j = 0; j < sb.eps.size(); ++j)
            rows.push_back(fmt_g17(sb.eps[j]) + ',' + fmt_g17(sb.p_hat[j]) + ',' +
                           std::to_string(sb.included[j]) + ',' + fmt_g17(sb.slope));
        em.write_csv("eps,p_hat,included,slope", rows);
    }
    std::cout << "fitted slope = " << fmt_g17(sb.slope) << " over " << sb.n_included
              << " points (theory: " << fmt_g17(-2.0 / (2.0 * a.m + 1.0)) << ")\n";
    return 0;
}

// ---- laplace -----------------------------------------------------------------

struct LaplaceArgs {
    Common common;
    int m = 0;
    std::string norm = "sup";
    std::optional<double> p;
    double r = 1.0;
    double theta = 1.0;
    std::string method = "direct";
    long long n = 100000;
    int grid = 4096;
    int kl_terms = 400;
    int nodes = 256;
};

int run_laplace(const LaplaceArgs& a) {
    const itbm::ProcessSpec spec(a.m);
    const itbm::NormSpec norm = parse_norm(a.norm, a.p);
    itbm::McOptions mo;
    mo.grid_points = a.grid;
    mo.kl_terms = a.kl_terms;
    mo.threads = a.common.threads;
    std::optional<itbm::Spectrum> sp;
    if (!norm.is_sup && norm.p == 2.0) {
        sp.emplace(itbm::nystrom_spectrum(spec, std::max(a.nodes, a.kl_terms)));
        mo.spectrum = &*sp;
    }
    const itbm::LaplaceMethod method = a.method == "direct" ? itbm::LaplaceMethod::direct_mc
                                                            : itbm::LaplaceMethod::tail_integral;
    Emitter em("laplace", a.common,
               json{{"m", a.m}, {"norm", a.norm}, {"p", a.p ? json(*a.p) : json()},
                    {"r", a.r}, {"theta", a.theta}, {"method", a.method}, {"n", a.n},
                    {"grid", a.grid}, {"kl_terms", a.kl_terms}, {"nodes", a.nodes},
                    {"format", a.common.format}});

    const itbm::LaplaceEstimate le = itbm::laplace_estimate(
        spec, norm, a.r, a.theta, method, a.n, itbm::RngStream{a.common.seed, a.common.stream},
        mo);
    if (a.common.format == "json") {
        em.write_json(itbm::laplace_to_json(le));
    } else {
        em.write_csv("r,theta,method,value,stderr,crossover",
                     {fmt_g17(le.r) + ',' + fmt_g17(le.theta) + ',' + a.method + ',' +
                      fmt_g17(le.value) + ',' + fmt_g17(le.std_error) + ',' +
                      (le.spliced ? fmt_g17(le.crossover) : std::string())});
    }
    std::cout << "E exp{r ||X||^theta} = " << fmt_g17(le.value)
              << (le.spliced ? " (spliced at " + fmt_g17(le.crossover) + ")" : "") << "\n";
    return 0;
}

// ---- compare -----------------------------------------------------------------

struct CompareArgs {
    Common common;
    int m = 0;
    std::string norm = "sup";
    std::vector<double> r;
    long long n = 100000;
    std::string is_kind = "auto";
    int grid = 4096;
    int kl_terms = 400;
    int nodes = 256;
    double c1 = 1.0, c2 = 1.0;
};

int run_compare(const CompareArgs& a) {
    const itbm::ProcessSpec spec(a.m);
    if (a.norm != "sup" && a.norm != "l2")
        throw std::invalid_argument("compare: --norm must be sup or l2");
    const itbm::NormSpec norm = a.norm == "sup" ? itbm::NormSpec::sup() : itbm::NormSpec::lp(2.0);
    if (a.r.empty()) throw std::invalid_argument("compare: at least one --r is required");

    itbm::McOptions mo;
    mo.grid_points = a.grid;
    mo.kl_terms = a.kl_terms;
    mo.threads = a.common.threads;
    std::optional<itbm::Spectrum> sp;
    std::optional<itbm::ZolotarevConstants> zc;
    if (!norm.is_sup) {
        sp.emplace(itbm::nystrom_spectrum(spec, std::max(a.nodes, a.kl_terms)));
        mo.spectrum = &*sp;
        zc = itbm::zolotarev_constants(*sp, 1e-6);
    }
    itbm::ISConfig is;
    if (a.is_kind == "none")
        is.kind = itbm::DriftKind::none;
    else if (a.is_kind == "endpoint" || (a.is_kind == "auto" && norm.is_sup))
        is.kind = itbm::DriftKind::endpoint;
    else
        is.kind = itbm::DriftKind::eigenfunction;

    Emitter em("compare", a.common,
               json{{"m", a.m}, {"norm", a.norm}, {"r", a.r}, {"n", a.n}, {"is", a.is_kind},
                    {"grid", a.grid}, {"kl_terms", a.kl_terms}, {"nodes", a.nodes},
                    {"c1", a.c1}, {"c2", a.c2}, {"format", a.common.format}});

    // Mean norm for the Borell bound, from an independent stream.
    const long long n_mean = std::max<long long>(10000, a.n / 10);
    const double mean =
        itbm::mean_norm(spec, norm, n_mean, itbm::RngStream{a.common.seed, a.common.stream + 1000},
                        mo)
            .mean;
    const double sigma_sq = norm.is_sup ? itbm::variance(spec, 1.0) : sp->eigenvalues[0];

    std::vector<std::string> rows;
    json items = json::array();
    for (std::size_t i = 0; i < a.r.size(); ++i) {
        const double r = a.r[i];
        const itbm::TailEstimate te =
            itbm::mc_tail(spec, norm, r, a.n, itbm::RngStream{a.common.seed, a.common.stream + i},
                          is, mo);
        const double asym = norm.is_sup ? itbm::asymptotic_tail_sup(spec, r).value
                                        : itbm::asymptotic_tail_l2(*sp, *zc, r).value;
        const std::string borell =
            r > mean ? fmt_g17(itbm::borell_bound(r, mean, sigma_sq)) : std::string();
        const std::string thm2 =
            norm.is_sup ? std::string()
                        : fmt_g17(itbm::thm2_bound(spec, 2.0, r, a.c1, a.c2, sp->eigenvalues[0]).value);
        rows.push_back(fmt_g17(r) + ',' + fmt_g17(te.estimate) + ',' + fmt_g17(te.std_error) +
                       ',' + fmt_g17(asym) + ',' + borell + ',' + thm2 + ',' +
                       fmt_g17(te.estimate / asym));
        items.push_back(json{{"r", r},
                             {"mc_estimate", te.estimate},
                             {"mc_stderr", te.std_error},
                             {"asymptotic", asym},
                             {"borell", r > mean ? json(itbm::borell_bound(r, mean, sigma_sq)) : json()},
                             {"thm2", norm.is_sup ? json() : json(itbm::thm2_bound(spec, 2.0, r, a.c1, a.c2, sp->eigenvalues[0]).value)},
                             {"ratio_mc_asym", te.estimate / asym}});
        std::cout << "r=" << fmt_g17(r) << " mc=" << fmt_g17(te.estimate)
                  << " asym=" << fmt_g17(asym) << " ratio=" << fmt_g17(te.estimate / asym) << "\n";
    }
    if (a.common.format == "csv")
        em.write_csv(itbm::compare_csv_header(), rows);
    else
        em.write_json(json{{"rows", items}, {"mean_norm", mean}, {"sigma_sq", sigma_sq}});
    return 0;
}

// ---- verify ------------------------------------------------------------------

struct VerifyArgs {
    Common common;
    std::string profile = "full";
};

int run_verify_cmd(const VerifyArgs& a) {
    itbm::VerifyOptions vo;
    vo.quick = a.profile == "quick";
    vo.seed = a.common.seed;
    vo.threads = a.common.threads;
    Emitter em("verify", a.common,
               json{{"profile", a.profile}, {"format", a.common.format}});
    const std::filesystem::path out(a.common.out.empty() ? default_out("verify", "json")
                                                         : a.common.out);
    if (!vo.quick) {
        std::error_code ec;
        const auto self = std::filesystem::read_symlink("/proc/self/exe", ec);
        if (!ec) vo.cli_path = self.string();
        vo.work_dir = (out.has_parent_path() ? out.parent_path() : std::filesystem::path("."))
                          .string() +
                      "/verify-scratch";
    }
    const itbm::VerifyReport rep = itbm::run_verify(vo);
    itbm::print_verify_table(rep, std::cout);
    em.write_json(itbm::verify_report_to_json(rep));
    return rep.all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"m-times integrated Brownian motion: spectra, tails, bounds"};
    app.require_subcommand(1);

    std::uint64_t env_seed;
    try {
        env_seed = default_seed();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    KernelArgs ka;
    ka.common.seed = env_seed;
    auto* sc_kernel = app.add_subcommand("kernel", "evaluate the covariance kernel K_m(s,t)");
    sc_kernel->add_option("--m", ka.m, "integration order")->check(CLI::Range(0, 20))->required();
    sc_kernel->add_option("--s", ka.s, "first time")->required();
    sc_kernel->add_option("--t", ka.t, "second time")->required();
    add_common(sc_kernel, ka.common, "json");

    SpectrumArgs sa;
    sa.common.seed = env_seed;
    auto* sc_spectrum = app.add_subcommand("spectrum", "Nystrom spectrum of the covariance operator");
    sc_spectrum->add_option("--m", sa.m, "integration order")->check(CLI::Range(0, 20))->required();
    sc_spectrum->add_option("--nodes", sa.nodes, "quadrature nodes")
        ->check(CLI::Range(8, 8192))
        ->capture_default_str();
    add_common(sc_spectrum, sa.common, "json");

    SimulateArgs ma;
    ma.common.seed = env_seed;
    auto* sc_simulate = app.add_subcommand("simulate", "sample paths and dump them");
    sc_simulate->add_option("--m", ma.m, "integration order")->check(CLI::Range(0, 20))->required();
    sc_simulate->add_option("--grid", ma.grid, "uniform grid points")
        ->check(CLI::Range(1, 1 << 20))
        ->capture_default_str();
    sc_simulate->add_option("--paths", ma.paths, "number of paths")
        ->check(CLI::Range(1LL, 1000000LL))
        ->capture_default_str();
    sc_simulate->add_option("--method", ma.method, "sampler")
        ->check(CLI::IsMember({"exact", "cholesky", "kl"}))
        ->capture_default_str();
    sc_simulate->add_option("--nodes", ma.nodes, "spectrum nodes (kl method)")
        ->check(CLI::Range(8, 8192))
        ->capture_default_str();
    sc_simulate->add_option("--kl-terms", ma.kl_terms, "KL truncation (kl method)")
        ->check(CLI::Range(1, 8192))
        ->capture_default_str();
    add_common(sc_simulate, ma.common, "csv");

    TailArgs ta;
    ta.common.seed = env_seed;
    auto* sc_tail = app.add_subcommand("tail", "estimate P{norm > r}");
    sc_tail->add_option("--m", ta.m, "integration order")->check(CLI::Range(0, 20))->required();
    sc_tail->add_option("--norm", ta.norm, "norm")
        ->check(CLI::IsMember({"sup", "l2", "lp"}))
        ->capture_default_str();
    sc_tail->add_option("--p", ta.p, "p for --norm lp");
    sc_tail->add_option("--r", ta.r, "threshold(s)")->required();
    sc_tail->add_option("--n", ta.n, "paths per estimate")
        ->check(CLI::Range(1000LL, 2000000000LL))
        ->capture_default_str();
    sc_tail->add_option("--is", ta.is_kind, "importance drift")
        ->check(CLI::IsMember({"none", "endpoint", "eigen"}))
        ->capture_default_str();
    sc_tail->add_option("--a", ta.shift, "drift magnitude (default: r)");
    sc_tail->add_option("--grid", ta.grid, "grid points for grid norms")
        ->check(CLI::Range(2, 1 << 20))
        ->capture_default_str();
    sc_tail->add_option("--kl-terms", ta.kl_terms, "KL truncation for L2")
        ->check(CLI::Range(1, 8192))
        ->capture_default_str();
    sc_tail->add_option("--nodes", ta.nodes, "spectrum nodes")
        ->check(CLI::Range(8, 8192))
        ->capture_default_str();
    sc_tail->add_flag("--l2-grid", ta.l2_grid, "use grid quadrature for the L2 norm");
    add_common(sc_tail, ta.common, "csv");

    SmallballArgs ba;
    ba.common.seed = env_seed;
    auto* sc_smallball = app.add_subcommand("smallball", "estimate P{norm <= eps} and fit the exponent");
    sc_smallball->add_option("--m", ba.m, "integration order")->check(CLI::Range(0, 20))->required();
    sc_smallball->add_option("--norm", ba.norm, "norm")
        ->check(CLI::IsMember({"sup", "l2", "lp"}))
        ->capture_default_str();
    sc_smallball->add_option("--p", ba.p, "p for --norm lp");
    sc_smallball->add_option("--eps", ba.eps, "ball radii")->required();
    sc_smallball->add_option("--n", ba.n, "paths")
        ->check(CLI::Range(100LL, 2000000000LL))
        ->capture_default_str();
    sc_smallball->add_option("--grid", ba.grid, "grid points for grid norms")
        ->check(CLI::Range(2, 1 << 20))
        ->capture_default_str();
    sc_smallball->add_option("--kl-terms", ba.kl_terms, "KL truncation for L2")
        ->check(CLI::Range(1, 8192))
        ->capture_default_str();
    sc_smallball->add_option("--nodes", ba.nodes, "spectrum nodes")
        ->check(CLI::Range(8, 8192))
        ->capture_default_str();
    add_common(sc_smallball, ba.common, "json");

    LaplaceArgs la;
    la.common.seed = env_seed;
    auto* sc_laplace = app.add_subcommand("laplace", "estimate E exp{r norm^theta}");
    sc_laplace->add_option("--m", la.m, "integration order")->check(CLI::Range(0, 20))->required();
    sc_laplace->add_option("--norm", la.norm, "norm")
        ->check(CLI::IsMember({"sup", "l2", "lp"}))
        ->capture_default_str();
    sc_laplace->add_option("--p", la.p, "p for --norm lp");
    sc_laplace->add_option("--r", la.r, "transform argument")->required();
    sc_laplace->add_option("--theta", la.theta, "exponent in [1,2)")->capture_default_str();
    sc_laplace->add_option("--method", la.method, "estimator")
        ->check(CLI::IsMember({"direct", "tail-integral"}))
        ->capture_default_str();
    sc_laplace->add_option("--n", la.n, "paths")
        ->check(CLI::Range(1000LL, 2000000000LL))
        ->capture_default_str();
    sc_laplace->add_option("--grid", la.grid, "grid points for grid norms")
        ->check(CLI::Range(2, 1 << 20))
        ->capture_default_str();
    sc_laplace->add_option("--kl-terms", la.kl_terms, "KL truncation for L2")
        ->check(CLI::Range(1, 8192))
        ->capture_default_str();
    sc_laplace->add_option("--nodes", la.nodes, "spectrum nodes")
        ->check(CLI::Range(8, 8192))
        ->capture_default_str();
    add_common(sc_laplace, la.common, "json");

    CompareArgs ca;
    ca.common.seed = env_seed;
    auto* sc_compare = app.add_subcommand("compare", "MC vs asymptotics and bounds over r");
    sc_compare->add_option("--m", ca.m, "integration order")->check(CLI::Range(0, 20))->required();
    sc_compare->add_option("--norm", ca.norm, "norm")
        ->check(CLI::IsMember({"sup", "l2"}))
        ->capture_default_str();
    sc_compare->add_option("--r", ca.r, "threshold(s)")->required();
    sc_compare->add_option("--n", ca.n, "paths per estimate")
        ->check(CLI::Range(1000LL, 2000000000LL))
        ->capture_default_str();
    sc_compare->add_option("--is", ca.is_kind, "importance drift")
        ->check(CLI::IsMember({"auto", "none", "endpoint", "eigen"}))
        ->capture_default_str();
    sc_compare->add_option("--grid", ca.grid, "grid points for grid norms")
        ->check(CLI::Range(2, 1 << 20))
        ->capture_default_str();
    sc_compare->add_option("--kl-terms", ca.kl_terms, "KL truncation for L2")
        ->check(CLI::Range(1, 8192))
        ->capture_default_str();
    sc_compare->add_option("--nodes", ca.nodes, "spectrum nodes")
        ->check(CLI::Range(8, 8192))
        ->capture_default_str();
    sc_compare->add_option("--c1", ca.c1, "Theorem-2 c1")->capture_default_str();
    sc_compare->add_option("--c2", ca.c2, "Theorem-2 c2")->capture_default_str();
    add_common(sc_compare, ca.common, "csv");

    VerifyArgs va;
    va.common.seed = env_seed;
    auto* sc_verify = app.add_subcommand("verify", "run the acceptance battery");
    sc_verify->add_option("--profile", va.profile, "battery profile")
        ->check(CLI::IsMember({"quick", "full"}))
        ->capture_default_str();
    add_common(sc_verify, va.common, "json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (sc_kernel->parsed()) return run_kernel(ka);
        if (sc_spectrum->parsed()) return run_spectrum(sa);
        if (sc_simulate->parsed()) return run_simulate(ma);
        if (sc_tail->parsed()) return run_tail(ta);
        if (sc_smallball->parsed()) return run_smallball(ba);
        if (sc_laplace->parsed()) return run_laplace(la);
        if (sc_compare->parsed()) return run_compare(ca);
        if (sc_verify->parsed()) return run_verify_cmd(va);
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
