#include "gtrie/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <thread>

#include "gtrie/binomial.hpp"
#include "gtrie/errors.hpp"

namespace gtrie {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

std::int64_t draw_binomial(RngStream& rng, std::int64_t n, double p) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    std::binomial_distribution<std::int64_t> dist(n, p);
    return dist(rng);
}

constexpr double kPhiNorm = 0.70710678118654752440;  // 1/sqrt(2)

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kPhiNorm); }

}  // namespace

RngStream::RngStream(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : s_) w = x = splitmix64(x);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

RngStream::result_type RngStream::operator()() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double RngStream::uniform() {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

RngStream trial_stream(std::uint64_t master_seed, std::uint64_t rung, std::uint64_t trial) {
    std::uint64_t h = splitmix64(master_seed);
    h = splitmix64(h ^ (0xA0761D6478BD642FULL * (rung + 1)));
    h = splitmix64(h ^ (0xE7037ED1A0B428DBULL * (trial + 1)));
    return RngStream(h);
}

std::vector<std::int64_t> sample_multinomial(RngStream& rng, std::int64_t n,
                                             std::span<const double> p) {
    std::vector<std::int64_t> counts(p.size(), 0);
    std::int64_t remaining = n;
    double mass = 1.0;
    for (std::size_t j = 0; j + 1 < p.size(); ++j) {
        if (remaining == 0) break;
        const double q = std::min(1.0, std::max(0.0, p[j] / mass));
        counts[j] = draw_binomial(rng, remaining, q);
        remaining -= counts[j];
        mass -= p[j];
    }
    counts.back() += remaining;
    return counts;
}

std::int64_t simulate_size(RngStream& rng, const ModelParams& params, std::int64_t n,
                           CapLimits caps) {
    if (n < 2) return 0;
    struct Item {
        std::int64_t count;
        int depth;
    };
    std::int64_t size = 0;
    std::vector<Item> stack{{n, 0}};
    std::vector<std::int64_t> split;
    while (!stack.empty()) {
        const Item item = stack.back();
        stack.pop_back();
        if (item.depth > caps.depth_cap)
            throw CapExceeded(CapExceeded::Kind::Depth, "simulation exceeded depth_cap");
        if (static_cast<std::uint64_t>(++size) > caps.node_cap)
            throw CapExceeded(CapExceeded::Kind::Nodes, "simulation exceeded node_cap");
        for (int dir = 0; dir < params.M; ++dir) {
            split = sample_multinomial(rng, item.count, params.p);
            for (std::int64_t b : split)
                if (b >= 2) stack.push_back({b, item.depth + 1});
        }
    }
    return size;
}

StatCounters simulate_counters(RngStream& rng, const ModelParams& params, std::int64_t n,
                               CapLimits caps) {
    StatCounters counters;
    if (n == 0) {
        counters.empty_externals = 1;
        return counters;
    }
    if (n == 1) {
        counters.key_externals = 1;
        return counters;
    }
    struct Item {
        std::int64_t count;
        int depth;
    };
    std::vector<Item> stack{{n, 0}};
    std::vector<std::int64_t> split;
    while (!stack.empty()) {
        const Item item = stack.back();
        stack.pop_back();
        if (item.depth > caps.depth_cap)
            throw CapExceeded(CapExceeded::Kind::Depth, "simulation exceeded depth_cap");
        if (++counters.internal > caps.node_cap)
            throw CapExceeded(CapExceeded::Kind::Nodes, "simulation exceeded node_cap");
        bool leaf = true;
        for (int dir = 0; dir < params.M; ++dir) {
            split = sample_multinomial(rng, item.count, params.p);
            for (std::int64_t b : split) {
                if (b >= 2) {
                    stack.push_back({b, item.depth + 1});
                    leaf = false;
                } else if (b == 1) {
                    ++counters.key_externals;
                } else {
                    ++counters.empty_externals;
                }
            }
        }
        if (leaf) ++counters.leaves;
    }
    return counters;
}

// ---------------------------------------------------------------------------
// SizeSimulator
// ---------------------------------------------------------------------------

namespace {

// subtree counts up to this bound get a precomputed offspring-class table
constexpr int kMaxTabledCount = 128;
// counts up to this bound may also be drawn as one batched multinomial per layer
constexpr int kMaxBatchedCount = 16;
// composition enumeration budget for the tables
constexpr std::uint64_t kTableBudget = 4'000'000;

}  // namespace

std::uint32_t SizeSimulator::CountTable::draw(RngStream& rng) const {
    // one 64-bit draw: high product bits select the slot, the low bits are an
    // independent uniform for the accept/alias test
    const unsigned __int128 prod =
        static_cast<unsigned __int128>(rng()) * threshold.size();
    const auto m = static_cast<std::uint32_t>(prod >> 64);
    const auto frac = static_cast<std::uint64_t>(prod);
    return frac <= threshold[m] ? m : alias[m];
}

SizeSimulator::SizeSimulator(const ModelParams& params) : params_(&params) {
    const int A = params.alphabet_size();
    const auto& lf = log_factorials(kMaxTabledCount + 1);
    std::vector<double> lp(params.p.size());
    for (std::size_t j = 0; j < lp.size(); ++j) lp[j] = std::log(params.p[j]);

    std::uint64_t budget = kTableBudget;
    max_tabled_ = 1;
    tables_.resize(kMaxTabledCount + 1);
    for (int c = 2; c <= kMaxTabledCount; ++c) {
        // enumerate all composition vectors (k_1..k_A) of c and accumulate the
        // pmf onto the multiset of parts >= 2
        std::vector<SplitClass>& classes = tables_[static_cast<std::size_t>(c)].classes;
        std::map<std::vector<std::uint16_t>, double> accum;
        std::vector<std::uint16_t> parts;
        std::uint64_t visited = 0;
        auto descend = [&](auto&& self, int letter, int remaining, double log_w) -> void {
            if (letter + 1 == A) {
                ++visited;
                const int k = remaining;
                const double w = std::exp(log_w - lf(k) + k * lp[static_cast<std::size_t>(letter)]);
                if (k >= 2) parts.push_back(static_cast<std::uint16_t>(k));
                std::vector<std::uint16_t> sorted = parts;
                std::sort(sorted.begin(), sorted.end());
                if (k >= 2) parts.pop_back();
                accum[std::move(sorted)] += w;
                return;
            }
            for (int k = 0; k <= remaining; ++k) {
                if (k >= 2) parts.push_back(static_cast<std::uint16_t>(k));
                self(self, letter + 1, remaining - k,
                     log_w - lf(k) + k * lp[static_cast<std::size_t>(letter)]);
                if (k >= 2) parts.pop_back();
            }
        };
        descend(descend, 0, c, lf(c));
        for (auto& [key, prob] : accum) classes.push_back({key, prob});
        if (visited > budget) {
            tables_.resize(static_cast<std::size_t>(c));
            break;
        }
        budget -= visited;
        max_tabled_ = c;

        // Walker alias table in 64-bit fixed point
        auto& table = tables_[static_cast<std::size_t>(c)];
        std::sort(table.classes.begin(), table.classes.end(),
                  [](const SplitClass& a, const SplitClass& b) { return a.prob > b.prob; });
        const std::size_t m = table.classes.size();
        table.alias.assign(m, 0);
        table.threshold.assign(m, ~std::uint64_t{0});
        std::vector<double> scaled(m);
        for (std::size_t i = 0; i < m; ++i) scaled[i] = table.classes[i].prob * m;
        std::vector<std::uint32_t> small, large;
        for (std::size_t i = 0; i < m; ++i)
            (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
        const auto to_fixed = [](double x) {
            if (x >= 1.0) return ~std::uint64_t{0};
            const double y = x * 0x1.0p64;
            return y >= 0x1.0p64 ? ~std::uint64_t{0} : static_cast<std::uint64_t>(y);
        };
        while (!small.empty() && !large.empty()) {
            const std::uint32_t s = small.back();
            small.pop_back();
            const std::uint32_t l = large.back();
            table.threshold[s] = to_fixed(scaled[s]);
            table.alias[s] = l;
            scaled[l] -= 1.0 - scaled[s];
            if (scaled[l] < 1.0) {
                large.pop_back();
                small.push_back(l);
            }
        }
    }
}

std::int64_t SizeSimulator::simulate(RngStream& rng, std::int64_t n, CapLimits caps) const {
    if (n < 2) return 0;
    const ModelParams& params = *params_;
    const auto M = static_cast<std::uint64_t>(params.M);

    struct Layer {
        std::vector<std::uint64_t> tabled;  // population per subtree count
        std::vector<std::int64_t> big;
        bool empty() const {
            if (!big.empty()) return false;
            for (std::uint64_t c : tabled)
                if (c) return false;
            return true;
        }
    };
    Layer cur, next;
    cur.tabled.assign(static_cast<std::size_t>(max_tabled_) + 1, 0);
    next.tabled.assign(static_cast<std::size_t>(max_tabled_) + 1, 0);
    if (n <= max_tabled_)
        cur.tabled[static_cast<std::size_t>(n)] = 1;
    else
        cur.big.push_back(n);

    const auto add = [&](std::int64_t count, std::uint64_t copies) {
        if (count <= max_tabled_)
            next.tabled[static_cast<std::size_t>(count)] += copies;
        else
            for (std::uint64_t i = 0; i < copies; ++i) next.big.push_back(count);
    };

    std::int64_t size = 0;
    std::vector<std::int64_t> split;
    for (int depth = 0; !cur.empty(); ++depth) {
        if (depth > caps.depth_cap)
            throw CapExceeded(CapExceeded::Kind::Depth, "simulation exceeded depth_cap");
        for (std::size_t i = 0; i < next.tabled.size(); ++i) next.tabled[i] = 0;
        next.big.clear();

        for (int c = 2; c <= max_tabled_; ++c) {
            const std::uint64_t population = cur.tabled[static_cast<std::size_t>(c)];
            if (population == 0) continue;
            size += static_cast<std::int64_t>(population);
            const auto& table = tables_[static_cast<std::size_t>(c)];
            const std::uint64_t slots = M * population;
            if (c <= kMaxBatchedCount && slots >= 4 * table.classes.size()) {
                // one multinomial over the offspring classes for every slot
                std::uint64_t rem = slots;
                double mass = 1.0;
                for (std::size_t ci = 0; ci + 1 < table.classes.size() && rem > 0; ++ci) {
                    const auto& cls = table.classes[ci];
                    const double q = std::min(1.0, std::max(0.0, cls.prob / mass));
                    const auto taken = static_cast<std::uint64_t>(
                        draw_binomial(rng, static_cast<std::int64_t>(rem), q));
                    rem -= taken;
                    mass -= cls.prob;
                    if (taken)
                        for (std::uint16_t part : cls.parts) add(part, taken);
                }
                if (rem > 0 && !table.classes.empty())
                    for (std::uint16_t part : table.classes.back().parts) add(part, rem);
            } else {
                for (std::uint64_t s = 0; s < slots; ++s) {
                    const auto& cls = table.classes[table.draw(rng)];
                    for (std::uint16_t part : cls.parts) add(part, 1);
                }
            }
        }
        for (std::int64_t c : cur.big) {
            ++size;
            for (std::uint64_t dir = 0; dir < M; ++dir) {
                split = sample_multinomial(rng, c, params.p);
                for (std::int64_t b : split)
                    if (b >= 2) add(b, 1);
            }
        }
        if (static_cast<std::uint64_t>(size) > caps.node_cap)
            throw CapExceeded(CapExceeded::Kind::Nodes, "simulation exceeded node_cap");
        std::swap(cur, next);
    }
    return size;
}

// ---------------------------------------------------------------------------
// batch statistics
// ---------------------------------------------------------------------------

MomentRef reference_moments(const ModelParams& params, const RootSet& roots,
                            const MomentTable& table, const UniformVarianceFit* fit,
                            std::int64_t n) {
    MomentRef ref;
    const bool exact = table.covers_mean(n) && table.covers_var(n);
    if (exact) {
        ref.mean = table.mean[static_cast<std::size_t>(n)];
        ref.sd = std::sqrt(table.var[static_cast<std::size_t>(n)]);
        ref.source = Standardization::ExactTable;
        return ref;
    }
    ref.mean = table.covers_mean(n) ? table.mean[static_cast<std::size_t>(n)]
                                    : predicted_mean(params, roots, static_cast<double>(n));
    ref.sd = std::sqrt(predicted_variance(params, roots, static_cast<double>(n), fit));
    ref.source = Standardization::Asymptotic;
    return ref;
}

SummaryStats batch_stats(const ModelParams& params, std::int64_t n, std::int64_t trials,
                         std::uint64_t master_seed, Standardization prefer,
                         const MomentTable& table, const RootSet& roots,
                         const UniformVarianceFit* fit, int threads, std::uint64_t rung,
                         CapLimits caps) {
    if (trials < 2) throw std::logic_error("batch needs at least two trials");
    const SizeSimulator simulator(params);

    std::vector<double> samples(static_cast<std::size_t>(trials));
    std::atomic<std::int64_t> cursor{0};
    std::atomic<std::int64_t> capped{0};
    const int workers = std::max(1, threads);
    auto work = [&] {
        for (;;) {
            const std::int64_t t = cursor.fetch_add(1);
            if (t >= trials) return;
            RngStream rng = trial_stream(master_seed, rung, static_cast<std::uint64_t>(t));
            try {
                samples[static_cast<std::size_t>(t)] =
                    static_cast<double>(simulator.simulate(rng, n, caps));
            } catch (const CapExceeded&) {
                samples[static_cast<std::size_t>(t)] =
                    std::numeric_limits<double>::quiet_NaN();
                capped.fetch_add(1);
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    const std::int64_t n_capped = capped.load();
    if (n_capped * 1000 > trials)
        throw CapExceeded(CapExceeded::Kind::Nodes,
                          "more than 0.1% of the trials hit a cap; batch rejected");
    if (n_capped > 0)
        samples.erase(std::remove_if(samples.begin(), samples.end(),
                                     [](double x) { return std::isnan(x); }),
                      samples.end());

    SummaryStats stats;
    stats.n = n;
    stats.trials = static_cast<std::int64_t>(samples.size());
    stats.capped = n_capped;

    // two-pass central moments with compensated accumulation
    long double acc = 0.0L;
    for (double x : samples) acc += x;
    const double mean = static_cast<double>(acc / samples.size());
    long double m2 = 0.0L, m3 = 0.0L, m4 = 0.0L;
    for (double x : samples) {
        const long double d = x - mean;
        const long double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    const auto count = static_cast<long double>(samples.size());
    const double var_unbiased = static_cast<double>(m2 / (count - 1.0L));
    const double var_pop = static_cast<double>(m2 / count);
    stats.sample_mean = mean;
    stats.sample_var = var_unbiased;
    stats.skewness = static_cast<double>(m3 / count) / std::pow(var_pop, 1.5);
    stats.excess_kurtosis =
        static_cast<double>(m4 / count) / (var_pop * var_pop) - 3.0;

    MomentRef ref;
    if (prefer == Standardization::Sample) {
        ref.mean = mean;
        ref.sd = std::sqrt(var_unbiased);
        ref.source = Standardization::Sample;
    } else {
        ref = reference_moments(params, roots, table, fit, n);
    }
    stats.used = ref.source;
    stats.mu_ref = ref.mean;
    stats.sd_ref = ref.sd;
    stats.std_mean = (mean - ref.mean) / ref.sd;
    stats.std_var = var_unbiased / (ref.sd * ref.sd);

    std::vector<double> z(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) z[i] = (samples[i] - ref.mean) / ref.sd;
    std::sort(z.begin(), z.end());
    double ks = 0.0;
    const auto zn = static_cast<double>(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double cdf = normal_cdf(z[i]);
        ks = std::max(ks, std::abs(static_cast<double>(i + 1) / zn - cdf));
        ks = std::max(ks, std::abs(cdf - static_cast<double>(i) / zn));
    }
    stats.ks_distance = ks;
    return stats;
}

CltReport clt_report(const ModelParams& params, std::span<const std::int64_t> ladder,
                     std::int64_t trials, std::uint64_t master_seed,
                     const CltThresholds& thresholds, const MomentTable& table,
                     const RootSet& roots, const UniformVarianceFit* fit, int threads,
                     CapLimits caps) {
    for (std::size_t i = 1; i < ladder.size(); ++i)
        if (ladder[i] <= ladder[i - 1]) throw std::logic_error("ladder must be increasing");

    CltReport report;
    report.master_seed = master_seed;
    report.thresholds = thresholds;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        CltRung rung;
        rung.stats = batch_stats(params, ladder[i], trials, master_seed,
                                 Standardization::ExactTable, table, roots, fit, threads,
                                 static_cast<std::uint64_t>(i), caps);
        rung.pass = std::abs(rung.stats.skewness) <= thresholds.skew_max &&
                    std::abs(rung.stats.excess_kurtosis) <= thresholds.exkurt_max &&
                    rung.stats.ks_distance <= thresholds.ks_max;
        report.rungs.push_back(std::move(rung));
    }
    report.ks_decreasing = true;
    for (std::size_t i = 1; i < report.rungs.size(); ++i)
        report.ks_decreasing = report.ks_decreasing &&
                               report.rungs[i].stats.ks_distance <
                                   report.rungs[i - 1].stats.ks_distance;
    report.pass = report.ks_decreasing;
    for (const auto& rung : report.rungs) report.pass = report.pass && rung.pass;
    return report;
}

}  // namespace gtrie
