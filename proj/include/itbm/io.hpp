#pragma once

// Serialization plumbing: JSON/CSV encoders for the result records, FNV-1a
// config hashing, and atomic (temp-then-rename) file writes so readers never
// observe a partial output.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "itbm/estimators.hpp"
#include "itbm/norms.hpp"
#include "itbm/spectrum.hpp"
#include "itbm/version.hpp"

namespace itbm {

using json = nlohmann::json;

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Shortest exact decimal form of a double.
inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline json norm_to_json(const NormSpec& ns) {
    json j;
    j["kind"] = ns.kind_name();
    if (!ns.is_sup) j["p"] = ns.p;
    return j;
}

inline json spectrum_to_json(const Spectrum& sp) {
    return json{{"m", sp.m},
                {"n_nodes", sp.n_nodes},
                {"eigenvalues", sp.eigenvalues},
                {"trace_check", sp.trace_check},
                {"gap", sp.gap}};
}

inline json tail_to_json(const TailEstimate& te) {
    json j;
    j["m"] = te.m;
    j["norm"] = norm_to_json(te.norm);
    j["r"] = te.r;
    j["method"] = te.importance ? "importance" : "plain";
    j["estimate"] = te.estimate;
    j["stderr"] = te.std_error;
    j["n"] = te.n;
    j["seed"] = te.seed;
    j["stream"] = te.stream;
    if (te.importance) {
        j["shift"] = te.shift;
        j["ess"] = te.ess;
        j["ess_warning"] = te.ess_warning;
        j["weight_mean"] = te.weight_mean;
        j["weight_stderr"] = te.weight_std_error;
    }
    return j;
}

inline std::string tail_csv_header() { return "m,norm,p,r,method,estimate,stderr,n,seed"; }

inline std::string tail_csv_row(const TailEstimate& te) {
    std::ostringstream ss;
    ss << te.m << ',' << te.norm.kind_name() << ',' << (te.norm.is_sup ? "" : fmt_g17(te.norm.p))
       << ',' << fmt_g17(te.r) << ',' << (te.importance ? "importance" : "plain") << ','
       << fmt_g17(te.estimate) << ',' << fmt_g17(te.std_error) << ',' << te.n << ',' << te.seed;
    return ss.str();
}

inline std::string compare_csv_header() {
    return "r,mc_estimate,mc_stderr,asymptotic,borell,thm2,ratio_mc_asym";
}

inline json small_ball_to_json(const SmallBallCurve& sb) {
    json pts = json::array();
    for (std::size_t j = 0; j < sb.eps.size(); ++j)
        pts.push_back(json{{"eps", sb.eps[j]},
                           {"p_hat", sb.p_hat[j]},
                           {"included", sb.included[j] != 0}});
    return json{{"points", pts},
                {"slope", sb.slope},
                {"n_included", sb.n_included},
                {"n", sb.n}};
}

inline json laplace_to_json(const LaplaceEstimate& le) {
    json j;
    j["value"] = le.value;
    j["method"] = le.method == LaplaceMethod::direct_mc ? "direct-mc" : "tail-integral";
    j["r"] = le.r;
    j["theta"] = le.theta;
    j["n"] = le.n;
    if (le.method == LaplaceMethod::direct_mc) j["stderr"] = le.std_error;
    j["spliced"] = le.spliced;
    if (le.spliced) j["crossover"] = le.crossover;
    return j;
}

inline json zolotarev_to_json(const ZolotarevConstants& zc) {
    return json{{"c_bar", zc.c_bar},
                {"c_lambda", zc.c_lambda},
                {"lambda1", zc.lambda1},
                {"n_terms", zc.n_terms},
                {"truncation_error_bound", zc.truncation_error_bound}};
}

inline json eigen_bounds_to_json(const EigenBoundReport& rep) {
    return json{{"lower", rep.lower},
                {"upper", rep.upper},
                {"lambda1", rep.lambda1},
                {"margin", rep.margin},
                {"pass", rep.pass}};
}

}  // namespace itbm
