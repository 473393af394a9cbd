// gtrie: G-tries over random M-ary tree labelings.
//
// Subcommands: analyze, moments, simulate, build, verify-clt, transfer.
// Config is plain JSON; flags override config values.  Exit codes:
//   0 success, 2 validation error, 3 cap exceeded, 4 failed verdict.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gtrie/asymptotics.hpp"
#include "gtrie/errors.hpp"
#include "gtrie/model.hpp"
#include "gtrie/montecarlo.hpp"
#include "gtrie/recurrence.hpp"
#include "gtrie/trie.hpp"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitCap = 3;
constexpr int kExitVerdict = 4;

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

double parse_probability(const json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {  // exact fractions like "1/3" keep periodic inputs exact
        const std::string s = v.get<std::string>();
        const auto slash = s.find('/');
        if (slash == std::string::npos) return std::stod(s);
        const double num = std::stod(s.substr(0, slash));
        const double den = std::stod(s.substr(slash + 1));
        if (den == 0.0) throw gtrie::NotAProbabilityVector("fraction with zero denominator");
        return num / den;
    }
    throw gtrie::NotAProbabilityVector("probability entries must be numbers or \"a/b\" strings");
}

struct Config {
    json root = json::object();

    static Config load(const std::string& path) {
        Config cfg;
        if (path.empty()) return cfg;
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config file: " + path);
        in >> cfg.root;
        return cfg;
    }

    void check_keys(std::initializer_list<const char*> allowed) const {
        for (const auto& [key, value] : root.items()) {
            bool ok = false;
            for (const char* a : allowed) ok = ok || key == a;
            if (!ok) throw std::runtime_error("unknown config key: " + key);
        }
        for (const char* section : {"moments", "simulate", "build", "verify_clt", "transfer"})
            if (root.contains(section) && !root[section].is_object())
                throw std::runtime_error(std::string("config section must be an object: ") +
                                         section);
    }

    gtrie::ModelParams model() const {
        if (!root.contains("M") || !root.contains("p"))
            throw gtrie::NotAProbabilityVector("config must provide \"M\" and \"p\"");
        std::vector<double> p;
        for (const auto& v : root.at("p")) p.push_back(parse_probability(v));
        return gtrie::validate_params(std::move(p), root.at("M").get<int>());
    }

    template <typename T>
    T section_or(const char* section, const char* key, T fallback) const {
        if (root.contains(section) && root[section].contains(key))
            return root[section][key].get<T>();
        return fallback;
    }
};

void write_output(const std::string& out_path, const std::string& payload) {
    if (out_path.empty() || out_path == "-") {
        std::cout << payload;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + out_path);
    out << payload;
}

// Simulation guard for large-n batches: depth 64 is routinely reached by
// genuine tries past n ~ 10^3, so the Monte Carlo paths guard with a wider
// ceiling that still halts runaway (near-explosive) instances.
constexpr gtrie::CapLimits kSimCaps{256, 100'000'000};

int threads_from(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("GTRIE_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

// ---------------------------------------------------------------------------

int run_analyze(const Config& cfg, int root_k, const std::string& out) {
    const auto params = cfg.model();
    const int k = root_k >= 0 ? root_k : cfg.root.value("root_k", gtrie::kDefaultRootRange);
    const auto report = gtrie::analyze(params, k);

    json doc;
    doc["rho"] = report.rho;
    doc["periodic"] = report.periodic;
    doc["a"] = report.base;
    doc["roots"] = json::array();
    for (const auto& beta : report.roots) doc["roots"].push_back({beta.real(), beta.imag()});
    doc["c"] = report.c ? json(*report.c) : json(nullptr);
    doc["leading_mean_amplitude"] = report.leading_mean_amplitude;
    doc["fluctuation_min"] = report.fluctuation_min;
    doc["fluctuation_max"] = report.fluctuation_max;
    doc["variance_exponent"] = report.variance_exponent;
    write_output(out, doc.dump(2) + "\n");
    return kExitOk;
}

int run_moments(const Config& cfg, std::int64_t n_max, std::int64_t n2_max,
                const std::string& out) {
    const auto params = cfg.model();
    if (n_max < 0)
        n_max = cfg.section_or<std::int64_t>("moments", "n_max", gtrie::kDefaultMeanRange);
    if (n2_max < 0)
        n2_max = cfg.section_or<std::int64_t>(
            "moments", "n2_max", std::min<std::int64_t>(n_max, gtrie::kDefaultVarRange));
    const auto table = gtrie::build_moment_table(params, n_max, n2_max);

    std::ostringstream os;
    os << "n,mean,var\n";
    for (std::int64_t n = 0; n <= n_max; ++n) {
        os << n << ',' << format_double(table.mean[static_cast<std::size_t>(n)]) << ',';
        if (n <= n2_max) os << format_double(table.var[static_cast<std::size_t>(n)]);
        os << '\n';
    }
    write_output(out, os.str());
    return kExitOk;
}

int run_simulate(const Config& cfg, std::int64_t n, std::int64_t trials,
                 std::uint64_t seed, bool aggregate, int threads, const std::string& out) {
    const auto params = cfg.model();
    if (n < 0) n = cfg.section_or<std::int64_t>("simulate", "n", 256);
    if (trials < 0) trials = cfg.section_or<std::int64_t>("simulate", "trials", 1000);
    if (seed == 0) seed = cfg.section_or<std::uint64_t>("simulate", "seed", 1);

    if (!aggregate) {
        const gtrie::SizeSimulator simulator(params);
        std::ostringstream os;
        os << "trial,value\n";
        for (std::int64_t t = 0; t < trials; ++t) {
            auto rng = gtrie::trial_stream(seed, 0, static_cast<std::uint64_t>(t));
            os << t << ',' << simulator.simulate(rng, n, kSimCaps) << '\n';
        }
        write_output(out, os.str());
        return kExitOk;
    }
    const auto table = gtrie::build_moment_table(
        params, std::max<std::int64_t>(n, 2),
        std::min<std::int64_t>(std::max<std::int64_t>(n, 2), 4096));
    const auto roots = gtrie::roots_on_critical_line(params);
    std::optional<gtrie::UniformVarianceFit> fit;
    if ((params.uniform() || params.rho <= 1.0 + 1e-9) && !table.covers_var(n))
        fit = gtrie::fit_uniform_variance(params, table.var);
    const auto stats =
        gtrie::batch_stats(params, n, trials, seed, gtrie::Standardization::ExactTable,
                           table, roots, fit ? &*fit : nullptr, threads, 0, kSimCaps);
    json doc;
    doc["n"] = stats.n;
    doc["trials"] = stats.trials;
    doc["capped"] = stats.capped;
    doc["mean"] = stats.sample_mean;
    doc["var"] = stats.sample_var;
    doc["skew"] = stats.skewness;
    doc["exkurt"] = stats.excess_kurtosis;
    doc["ks"] = stats.ks_distance;
    doc["standardization"] =
        stats.used == gtrie::Standardization::ExactTable ? "exact" : "asymptotic";
    write_output(out, doc.dump(2) + "\n");
    return kExitOk;
}

int run_build(const Config& cfg, std::int64_t n, std::uint64_t seed, int depth_cap,
              std::int64_t node_cap, const std::string& dot_path, const std::string& out) {
    const auto params = cfg.model();
    if (n < 0) n = cfg.section_or<std::int64_t>("build", "n", 8);
    if (seed == 0) seed = cfg.section_or<std::uint64_t>("build", "seed", 1);
    gtrie::CapLimits caps;
    caps.depth_cap = depth_cap > 0 ? depth_cap
                                   : cfg.section_or<int>("build", "depth_cap", caps.depth_cap);
    caps.node_cap = node_cap > 0 ? static_cast<std::uint64_t>(node_cap)
                                 : cfg.section_or<std::uint64_t>("build", "node_cap",
                                                                 caps.node_cap);

    const auto keys =
        gtrie::make_seeded_labelings(params, static_cast<std::uint32_t>(n), seed);
    const auto trie = gtrie::build_gtrie(params, keys, caps);
    const auto counters = gtrie::count_stats(trie);
    if (!dot_path.empty()) write_output(dot_path, gtrie::export_dot(trie));

    json doc;
    doc["n"] = n;
    doc["seed"] = seed;
    doc["S"] = counters.internal;
    doc["L"] = counters.leaves;
    doc["K"] = counters.key_externals;
    doc["R"] = counters.empty_externals;
    write_output(out, doc.dump(2) + "\n");
    return kExitOk;
}

int run_verify_clt(const Config& cfg, std::vector<std::int64_t> ladder, std::int64_t trials,
                   std::uint64_t seed, double skew_max, double exkurt_max, double ks_max,
                   int threads, const std::string& out) {
    const auto params = cfg.model();
    if (ladder.empty()) {
        if (cfg.root.contains("verify_clt") && cfg.root["verify_clt"].contains("ladder"))
            ladder = cfg.root["verify_clt"]["ladder"].get<std::vector<std::int64_t>>();
        else
            ladder = {256, 1024, 4096};
    }
    if (trials < 0) trials = cfg.section_or<std::int64_t>("verify_clt", "trials", 10000);
    if (seed == 0) seed = cfg.section_or<std::uint64_t>("verify_clt", "seed", 1);
    gtrie::CltThresholds thresholds;
    thresholds.skew_max =
        skew_max > 0 ? skew_max : cfg.section_or<double>("verify_clt", "skew_max", 0.1);
    thresholds.exkurt_max =
        exkurt_max > 0 ? exkurt_max : cfg.section_or<double>("verify_clt", "exkurt_max", 0.3);
    thresholds.ks_max =
        ks_max > 0 ? ks_max : cfg.section_or<double>("verify_clt", "ks_max", 0.02);

    const std::int64_t top = *std::max_element(ladder.begin(), ladder.end());
    const auto table = gtrie::build_moment_table(
        params, std::max<std::int64_t>(top, gtrie::kDefaultMeanRange),
        std::min<std::int64_t>(top, 4096));
    const auto roots = gtrie::roots_on_critical_line(params);
    std::optional<gtrie::UniformVarianceFit> fit;
    if ((params.uniform() || params.rho <= 1.0 + 1e-9) && !table.covers_var(top))
        fit = gtrie::fit_uniform_variance(params, table.var);

    const auto report =
        gtrie::clt_report(params, ladder, trials, seed, thresholds, table, roots,
                          fit ? &*fit : nullptr, threads, kSimCaps);

    json doc;
    doc["master_seed"] = report.master_seed;
    doc["thresholds"] = {{"skew_max", thresholds.skew_max},
                         {"exkurt_max", thresholds.exkurt_max},
                         {"ks_max", thresholds.ks_max},
                         {"note", "finite-n thresholds are design choices, not paper limits"}};
    doc["rungs"] = json::array();
    for (const auto& rung : report.rungs) {
        doc["rungs"].push_back(
            {{"n", rung.stats.n},
             {"trials", rung.stats.trials},
             {"mean", rung.stats.sample_mean},
             {"var", rung.stats.sample_var},
             {"skew", rung.stats.skewness},
             {"exkurt", rung.stats.excess_kurtosis},
             {"ks", rung.stats.ks_distance},
             {"standardization", rung.stats.used == gtrie::Standardization::ExactTable
                                     ? "exact"
                                     : "asymptotic"},
             {"verdict", rung.pass ? "pass" : "fail"}});
    }
    doc["ks_decreasing"] = report.ks_decreasing;
    doc["verdict"] = report.pass ? "pass" : "fail";
    write_output(out, doc.dump(2) + "\n");
    return report.pass ? kExitOk : kExitVerdict;
}

int run_transfer(const Config& cfg, double alpha, double alpha_offset, std::int64_t n_max,
                 double tol, const std::string& out) {
    const auto params = cfg.model();
    if (n_max < 0) n_max = cfg.section_or<std::int64_t>("transfer", "n_max", 16384);
    if (tol < 0) tol = cfg.section_or<double>("transfer", "tol", 0.05);
    if (alpha <= 0) {
        const double offset =
            alpha_offset > 0 ? alpha_offset
                             : cfg.section_or<double>("transfer", "alpha_offset", 0.5);
        alpha = params.rho + offset;
    }
    const auto report = gtrie::transfer_check(params, alpha, n_max);

    bool decreasing = true;
    for (std::size_t i = 1; i < report.ratio_at.size(); ++i)
        decreasing = decreasing && std::abs(report.ratio_at[i].second - 1.0) <
                                       std::abs(report.ratio_at[i - 1].second - 1.0);
    const double final_gap = std::abs(report.ratio_at.back().second - 1.0);
    const bool pass = decreasing && final_gap <= tol;

    json doc;
    doc["alpha"] = report.alpha;
    doc["p_alpha"] = report.p_alpha;
    doc["ratios"] = json::array();
    for (const auto& [n, ratio] : report.ratio_at)
        doc["ratios"].push_back({{"n", n}, {"ratio", ratio}});
    doc["gap_decreasing"] = decreasing;
    doc["final_gap"] = final_gap;
    doc["tol"] = tol;
    doc["verdict"] = pass ? "pass" : "fail";
    write_output(out, doc.dump(2) + "\n");
    return pass ? kExitOk : kExitVerdict;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"G-tries from random M-ary tree labelings: exact moment recurrences, "
                 "asymptotic predictions, and statistical verification of the size CLT"};
    app.require_subcommand(1);
    app.fallthrough();  // allow global flags after the subcommand name

    std::string config_path, out_path;
    int threads_flag = 0;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--out", out_path, "output file (default: stdout)");
    app.add_option("--threads", threads_flag, "worker threads (or GTRIE_THREADS)");

    auto* analyze = app.add_subcommand("analyze", "asymptotic report (rho, roots, constants)");
    int root_k = -1;
    analyze->add_option("--root-k", root_k, "critical-line root range |k| <= K");

    auto* moments = app.add_subcommand("moments", "exact mean/variance tables as CSV");
    std::int64_t n_max = -1, n2_max = -1;
    moments->add_option("--n-max", n_max, "mean table range");
    moments->add_option("--n2-max", n2_max, "variance table range");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo draws of the size S_n");
    std::int64_t sim_n = -1, sim_trials = -1;
    std::uint64_t sim_seed = 0;
    bool aggregate = false;
    simulate->add_option("--n", sim_n, "number of labelings");
    simulate->add_option("--trials", sim_trials, "number of independent draws");
    simulate->add_option("--seed", sim_seed, "master seed");
    simulate->add_flag("--aggregate", aggregate, "emit summary JSON instead of CSV");

    auto* build = app.add_subcommand("build", "construct one G-trie from seeded labelings");
    std::int64_t build_n = -1, node_cap = -1;
    std::uint64_t build_seed = 0;
    int depth_cap = -1;
    std::string dot_path;
    build->add_option("--n", build_n, "number of labelings");
    build->add_option("--seed", build_seed, "master seed");
    build->add_option("--depth-cap", depth_cap, "construction depth cap");
    build->add_option("--node-cap", node_cap, "construction node cap");
    build->add_option("--dot", dot_path, "write DOT export here");

    auto* verify = app.add_subcommand("verify-clt", "statistical CLT suite over an n-ladder");
    std::vector<std::int64_t> ladder;
    std::int64_t clt_trials = -1;
    std::uint64_t clt_seed = 0;
    double skew_max = -1, exkurt_max = -1, ks_max = -1;
    verify->add_option("--ladder", ladder, "increasing n values");
    verify->add_option("--trials", clt_trials, "trials per rung");
    verify->add_option("--seed", clt_seed, "master seed");
    verify->add_option("--skew-max", skew_max, "skewness threshold");
    verify->add_option("--exkurt-max", exkurt_max, "excess kurtosis threshold");
    verify->add_option("--ks-max", ks_max, "KS distance threshold");

    auto* transfer = app.add_subcommand("transfer", "large-toll asymptotic transfer check");
    double alpha = -1, alpha_offset = -1, transfer_tol = -1;
    std::int64_t transfer_n_max = -1;
    transfer->add_option("--alpha", alpha, "toll exponent (must exceed rho)");
    transfer->add_option("--alpha-offset", alpha_offset, "use alpha = rho + offset");
    transfer->add_option("--n-max", transfer_n_max, "table range");
    transfer->add_option("--tol", transfer_tol, "final ratio gap tolerance");

    CLI11_PARSE(app, argc, argv);

    try {
        const Config cfg = Config::load(config_path);
        cfg.check_keys({"M", "p", "root_k", "moments", "simulate", "build", "verify_clt",
                        "transfer"});
        const int threads = threads_from(threads_flag);
        if (analyze->parsed()) return run_analyze(cfg, root_k, out_path);
        if (moments->parsed()) return run_moments(cfg, n_max, n2_max, out_path);
        if (simulate->parsed())
            return run_simulate(cfg, sim_n, sim_trials, sim_seed, aggregate, threads, out_path);
        if (build->parsed())
            return run_build(cfg, build_n, build_seed, depth_cap, node_cap, dot_path, out_path);
        if (verify->parsed())
            return run_verify_clt(cfg, ladder, clt_trials, clt_seed, skew_max, exkurt_max,
                                  ks_max, threads, out_path);
        if (transfer->parsed())
            return run_transfer(cfg, alpha, alpha_offset, transfer_n_max, transfer_tol,
                                out_path);
        std::cerr << "no subcommand\n";
        return kExitValidation;
    } catch (const gtrie::CapExceeded& e) {
        std::cerr << "cap exceeded: " << e.what() << '\n';
        return kExitCap;
    } catch (const gtrie::Error& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
}
