#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gtrie/asymptotics.hpp"
#include "gtrie/model.hpp"
#include "gtrie/recurrence.hpp"
#include "gtrie/trie.hpp"

namespace gtrie {

// xoshiro256** stream; each trial owns one, derived purely from
// (master_seed, stream ids), so results do not depend on scheduling.
class RngStream {
  public:
    using result_type = std::uint64_t;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    explicit RngStream(std::uint64_t seed);
    result_type operator()();
    double uniform();  // [0, 1)

  private:
    std::uint64_t s_[4];
};

RngStream trial_stream(std::uint64_t master_seed, std::uint64_t rung, std::uint64_t trial);

// Multinomial(n, p) by sequential conditional binomials.
std::vector<std::int64_t> sample_multinomial(RngStream& rng, std::int64_t n,
                                             std::span<const double> p);

// One S_n draw from the distributional recurrence with an explicit work
// stack; n <= 1 gives 0.
std::int64_t simulate_size(RngStream& rng, const ModelParams& params, std::int64_t n,
                           CapLimits caps = {});

// Joint draw of (S, K, R, L) with the §-style initial conditions
// (n=0 -> R=1, n=1 -> K=1); a node is a leaf iff every split count is <= 1.
StatCounters simulate_counters(RngStream& rng, const ModelParams& params, std::int64_t n,
                               CapLimits caps = {});

// Distribution-identical fast sampler of S_n: node populations are kept per
// subtree-count and split layer by layer, aggregating i.i.d. slot outcomes of
// equal count into single multinomial draws over offspring classes.
class SizeSimulator {
  public:
    explicit SizeSimulator(const ModelParams& params);
    std::int64_t simulate(RngStream& rng, std::int64_t n, CapLimits caps = {}) const;

  private:
    struct SplitClass {
        std::vector<std::uint16_t> parts;  // offspring counts >= 2
        double prob = 0.0;
    };
    struct CountTable {
        std::vector<SplitClass> classes;
        std::vector<std::uint32_t> alias;      // Walker alias table
        std::vector<std::uint64_t> threshold;  // fixed-point acceptance
        std::uint32_t draw(RngStream& rng) const;
    };

    const ModelParams* params_;
    std::vector<CountTable> tables_;  // index = subtree count, 2..max_tabled
    int max_tabled_ = 1;
};

enum class Standardization { ExactTable, Asymptotic, Sample };

struct SummaryStats {
    std::int64_t n = 0;
    std::int64_t trials = 0;
    std::int64_t capped = 0;
    double sample_mean = 0.0;
    double sample_var = 0.0;
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    double ks_distance = 0.0;
    double std_mean = 0.0;  // (sample_mean - mu_ref) / sd_ref
    double std_var = 0.0;   // sample_var / sd_ref^2
    double mu_ref = 0.0;
    double sd_ref = 0.0;
    Standardization used = Standardization::Sample;
};

// Reference moments for standardization: exact table when it covers n,
// otherwise the asymptotic predictions.
struct MomentRef {
    double mean = 0.0;
    double sd = 1.0;
    Standardization source = Standardization::Sample;
};
MomentRef reference_moments(const ModelParams& params, const RootSet& roots,
                            const MomentTable& table, const UniformVarianceFit* fit,
                            std::int64_t n);

// Runs `trials` independent draws of S_n (streams keyed by trial index),
// excludes capped trials, and fails the batch once they exceed 0.1%.
SummaryStats batch_stats(const ModelParams& params, std::int64_t n, std::int64_t trials,
                         std::uint64_t master_seed, Standardization prefer,
                         const MomentTable& table, const RootSet& roots,
                         const UniformVarianceFit* fit = nullptr, int threads = 1,
                         std::uint64_t rung = 0, CapLimits caps = {});

struct CltThresholds {
    double skew_max = 0.1;
    double exkurt_max = 0.3;
    double ks_max = 0.02;
};

struct CltRung {
    SummaryStats stats;
    bool pass = false;
};

struct CltReport {
    std::uint64_t master_seed = 0;
    CltThresholds thresholds;
    std::vector<CltRung> rungs;
    bool ks_decreasing = false;
    bool pass = false;
};

CltReport clt_report(const ModelParams& params, std::span<const std::int64_t> ladder,
                     std::int64_t trials, std::uint64_t master_seed,
                     const CltThresholds& thresholds, const MomentTable& table,
                     const RootSet& roots, const UniformVarianceFit* fit = nullptr,
                     int threads = 1, CapLimits caps = {});

}  // namespace gtrie
