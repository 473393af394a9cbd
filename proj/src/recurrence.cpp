#include "gtrie/recurrence.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "gtrie/binomial.hpp"
#include "gtrie/errors.hpp"

namespace gtrie {

namespace {

// exp(x) below this is zero against every accumulator in this module
constexpr double kLogFloor = -780.0;

double self_term_denominator(const ModelParams& params, std::int64_t n) {
    double acc = 0.0;
    for (double pj : params.p) acc += std::exp(static_cast<double>(n) * std::log(pj));
    return 1.0 - params.M * acc;
}

// sum_{k=2..k_hi} C(n,k) q^k (1-q)^{n-k} values[k], assembled in log-space
double binom_weighted_sum(const LogFactorials& lf, std::int64_t n, double q,
                          std::span<const double> values, std::int64_t k_hi) {
    if (q >= 1.0 - 1e-15) {  // Binomial(n, 1) is the point mass at n
        return n <= k_hi && n < static_cast<std::int64_t>(values.size())
                   ? values[static_cast<std::size_t>(n)]
                   : 0.0;
    }
    const double lq = std::log(q), l1q = std::log1p(-q);
    const double base = lf(n) + static_cast<double>(n) * l1q;
    const double d = lq - l1q;
    double acc = 0.0;
    for (std::int64_t k = 2; k <= k_hi; ++k) {
        const double L = base - lf(k) - lf(n - k) + static_cast<double>(k) * d;
        if (L > kLogFloor) acc += std::exp(L) * values[static_cast<std::size_t>(k)];
    }
    return acc;
}

}  // namespace

TollSpec TollSpec::constant_one() {
    return {Kind::ConstantOne, [](std::int64_t) { return 1.0; }};
}

TollSpec TollSpec::power(double alpha, double scale) {
    return {Kind::Power, [alpha, scale](std::int64_t n) {
                return scale * std::exp(alpha * std::log(static_cast<double>(n)));
            }};
}

TollSpec TollSpec::delta_squared(const ModelParams& params, std::span<const double> mean) {
    return {Kind::DeltaSquared, [&params, mean](std::int64_t n) {
                return exact_delta_second(params, mean, n);
            }};
}

TollSpec TollSpec::custom(std::function<double(std::int64_t)> fn) {
    return {Kind::Custom, std::move(fn)};
}

double binomial_mix_solve(const ModelParams& params, std::span<const double> prefix,
                          double toll_n, std::int64_t n) {
    if (n < 2) throw std::logic_error("binomial_mix_solve needs n >= 2");
    if (static_cast<std::int64_t>(prefix.size()) < n)
        throw std::logic_error("binomial_mix_solve needs the full prefix a_0..a_{n-1}");
    const auto& lf = log_factorials(n);
    double mix = 0.0;
    for (double pj : params.p) {
        const double lq = std::log(pj), l1q = std::log1p(-pj);
        const double base = lf(n) + static_cast<double>(n) * l1q;
        const double d = lq - l1q;
        double acc = 0.0;
        for (std::int64_t k = 2; k < n; ++k) {  // a_0 = a_1 = 0
            const double L = base - lf(k) - lf(n - k) + static_cast<double>(k) * d;
            if (L > kLogFloor) acc += std::exp(L) * prefix[static_cast<std::size_t>(k)];
        }
        mix += acc;
    }
    return (params.M * mix + toll_n) / self_term_denominator(params, n);
}

std::vector<double> mix_solve_table(const ModelParams& params, const TollSpec& toll,
                                    std::int64_t n_max) {
    if (n_max < 2) throw std::logic_error("table needs n_max >= 2");
    log_factorials(n_max);
    std::vector<double> a(static_cast<std::size_t>(n_max) + 1, 0.0);
    for (std::int64_t n = 2; n <= n_max; ++n)
        a[static_cast<std::size_t>(n)] = binomial_mix_solve(params, a, toll(n), n);
    return a;
}

std::vector<double> exact_mean_table(const ModelParams& params, std::int64_t n_max) {
    return mix_solve_table(params, TollSpec::constant_one(), n_max);
}

double exact_delta_second(const ModelParams& params, std::span<const double> mean,
                          std::int64_t n) {
    if (n < 2) throw std::logic_error("Delta^2 toll starts at n = 2");
    if (static_cast<std::int64_t>(mean.size()) <= n)
        throw std::logic_error("mean table must cover 0..n");
    const auto& lf = log_factorials(n);
    const int A = params.alphabet_size();
    const double M = params.M;

    // Per direction, T = sum_j mu_{B_j}; directions are i.i.d.
    double t1 = 0.0;  // E T
    double t2 = 0.0;  // E T^2
    for (int j = 0; j < A; ++j) {
        t1 += binom_weighted_sum(lf, n, params.p[j], mean, n);
        double sq = 0.0;
        {
            const double q = params.p[j];
            const double lq = std::log(q), l1q = std::log1p(-q);
            const double base = lf(n) + static_cast<double>(n) * l1q;
            const double d = lq - l1q;
            for (std::int64_t k = 2; k <= n; ++k) {
                const double L = base - lf(k) - lf(n - k) + static_cast<double>(k) * d;
                const double mu = mean[static_cast<std::size_t>(k)];
                if (L > kLogFloor) sq += std::exp(L) * mu * mu;
            }
        }
        t2 += sq;
        for (int jp = j + 1; jp < A; ++jp) {
            // E[mu_{B_j} mu_{B_jp}] over the trinomial (B_j, B_jp, rest)
            const double pj = params.p[j], pp = params.p[jp];
            const double rest = 1.0 - pj - pp;
            double pair = 0.0;
            if (rest <= 1e-15) {  // two-letter alphabet: B_jp = n - B_j
                const double lq = std::log(pj), l1q = std::log(pp);
                for (std::int64_t k = 2; k <= n - 2; ++k) {
                    const double L = lf(n) - lf(k) - lf(n - k) +
                                     static_cast<double>(k) * lq +
                                     static_cast<double>(n - k) * l1q;
                    if (L > kLogFloor)
                        pair += std::exp(L) * mean[static_cast<std::size_t>(k)] *
                                mean[static_cast<std::size_t>(n - k)];
                }
            } else {
                const double lj = std::log(pj), lp = std::log(pp), lr = std::log(rest);
                for (std::int64_t k = 2; k + 2 <= n; ++k) {
                    const double Lk = lf(n) - lf(k) + static_cast<double>(k) * lj;
                    for (std::int64_t l = 2; k + l <= n; ++l) {
                        const double L = Lk - lf(l) - lf(n - k - l) +
                                         static_cast<double>(l) * lp +
                                         static_cast<double>(n - k - l) * lr;
                        if (L > kLogFloor)
                            pair += std::exp(L) * mean[static_cast<std::size_t>(k)] *
                                    mean[static_cast<std::size_t>(l)];
                    }
                }
            }
            t2 += 2.0 * pair;
        }
    }
    const long double C = 1.0L - mean[static_cast<std::size_t>(n)];
    const long double b = C * C + 2.0L * C * M * t1 + M * t2 + M * (M - 1.0) * t1 * t1;
    return static_cast<double>(b);
}

std::vector<double> exact_variance_table(const ModelParams& params,
                                         std::span<const double> mean,
                                         std::int64_t n2_max) {
    if (n2_max < 2) throw std::logic_error("table needs n2_max >= 2");
    if (static_cast<std::int64_t>(mean.size()) <= n2_max)
        throw std::logic_error("mean table must cover 0..n2_max");
    const auto& lf = log_factorials(n2_max);
    const int A = params.alphabet_size();
    const double M = params.M;

    // cond[j][jp][m] = E mu_{Binomial(m, p_jp / (1 - p_j))}: the distribution
    // of B_jp given B_j = n - m under the shared multinomial split.
    std::vector<std::vector<double>> cond(static_cast<std::size_t>(A) * A);
    for (int j = 0; j < A; ++j) {
        for (int jp = 0; jp < A; ++jp) {
            if (jp == j) continue;
            const double q = params.p[jp] / (1.0 - params.p[j]);
            auto& t = cond[static_cast<std::size_t>(j) * A + jp];
            t.assign(static_cast<std::size_t>(n2_max) + 1, 0.0);
            for (std::int64_t m = 2; m <= n2_max; ++m)
                t[static_cast<std::size_t>(m)] = binom_weighted_sum(lf, m, q, mean, m);
        }
    }

    std::vector<double> var(static_cast<std::size_t>(n2_max) + 1, 0.0);
    std::vector<double> prod(static_cast<std::size_t>(n2_max) + 1, 0.0);
    for (std::int64_t n = 2; n <= n2_max; ++n) {
        double t1 = 0.0, t2 = 0.0;
        for (int j = 0; j < A; ++j) {
            const double q = params.p[j];
            const double lq = std::log(q), l1q = std::log1p(-q);
            const double base = lf(n) + static_cast<double>(n) * l1q;
            const double d = lq - l1q;
            double first = 0.0, second = 0.0;
            for (std::int64_t k = 2; k <= n; ++k) {
                const double L = base - lf(k) - lf(n - k) + static_cast<double>(k) * d;
                if (L <= kLogFloor) continue;
                const double w = std::exp(L);
                const double mu = mean[static_cast<std::size_t>(k)];
                first += w * mu;
                second += w * mu * mu;
            }
            t1 += first;
            t2 += second;
            for (int jp = j + 1; jp < A; ++jp) {
                const auto& g = cond[static_cast<std::size_t>(j) * A + jp];
                for (std::int64_t k = 2; k <= n; ++k)
                    prod[static_cast<std::size_t>(k)] =
                        mean[static_cast<std::size_t>(k)] * g[static_cast<std::size_t>(n - k)];
                t2 += 2.0 * binom_weighted_sum(lf, n, q, prod, n);
            }
        }
        const long double C = 1.0L - mean[static_cast<std::size_t>(n)];
        const long double toll = C * C + 2.0L * C * M * t1 + M * t2 + M * (M - 1.0) * t1 * t1;
        var[static_cast<std::size_t>(n)] =
            binomial_mix_solve(params, var, static_cast<double>(toll), n);
    }
    return var;
}

MomentTable build_moment_table(const ModelParams& params, std::int64_t n_max,
                               std::int64_t n2_max) {
    if (n2_max > n_max) throw std::logic_error("variance range cannot exceed mean range");
    MomentTable table;
    table.n_max = n_max;
    table.var_n_max = n2_max;
    table.mean = exact_mean_table(params, n_max);
    table.var = exact_variance_table(params, table.mean, n2_max);
    return table;
}

namespace {

// Level sums of the series solution: enumerate compositions (k_1..k_A) of l
// and accumulate M^l C(l;k) * inner(p^k).
class SeriesAccumulator {
  public:
    SeriesAccumulator(const ModelParams& params, const TollSpec& toll, std::int64_t n)
        : params_(params), lf_(log_factorials(std::max<std::int64_t>(n, 256))), n_(n) {
        toll_values_.resize(static_cast<std::size_t>(n) + 1, 0.0);
        for (std::int64_t i = 2; i <= n; ++i) {
            toll_values_[static_cast<std::size_t>(i)] = toll(i);
            toll_max_ = std::max(toll_max_, std::abs(toll_values_[static_cast<std::size_t>(i)]));
        }
        log_p_.reserve(params.p.size());
        for (double pj : params.p) log_p_.push_back(std::log(pj));
    }

    double level_sum(std::int64_t level) {
        lf_.grow(level);
        level_acc_ = 0.0;
        descend(level, 0, lf_(level) + level * std::log(static_cast<double>(params_.M)), 0.0);
        return level_acc_;
    }

    double toll_max() const { return toll_max_; }
    std::uint64_t compositions_visited() const { return visited_; }

  private:
    // adds exp(log_weight) * sum_{i=2..n} C(n,i) (1-q)^{n-i} q^i b_i, with the
    // composition weight folded into the log-space terms so neither side
    // overflows on its own
    void add_inner(double log_q, double log_weight) {
        if (log_q >= 0.0) {  // q = 1: point mass at i = n
            level_acc_ += std::exp(log_weight) * toll_values_[static_cast<std::size_t>(n_)];
            return;
        }
        const double l1q = std::log1p(-std::exp(log_q));
        const double base = log_weight + lf_(n_) + static_cast<double>(n_) * l1q;
        const double d = log_q - l1q;
        double acc = 0.0;
        for (std::int64_t i = 2; i <= n_; ++i) {
            const double L = base - lf_(i) - lf_(n_ - i) + static_cast<double>(i) * d;
            if (L > kLogFloor) acc += std::exp(L) * toll_values_[static_cast<std::size_t>(i)];
        }
        level_acc_ += acc;
    }

    void descend(std::int64_t remaining, std::size_t letter, double log_mult, double log_q) {
        if (letter + 1 == params_.p.size()) {
            ++visited_;
            add_inner(log_q + remaining * log_p_[letter], log_mult - lf_(remaining));
            return;
        }
        for (std::int64_t k = 0; k <= remaining; ++k)
            descend(remaining - k, letter + 1, log_mult - lf_(k), log_q + k * log_p_[letter]);
    }

    const ModelParams& params_;
    LogFactorials lf_;
    std::int64_t n_;
    std::vector<double> toll_values_;
    std::vector<double> log_p_;
    double toll_max_ = 0.0;
    double level_acc_ = 0.0;
    std::uint64_t visited_ = 0;
};

}  // namespace

double series_solution(const ModelParams& params, const TollSpec& toll, std::int64_t n,
                       double epsilon) {
    if (n < 2) throw std::logic_error("series_solution needs n >= 2");
    if (!(epsilon > 0.0)) throw std::logic_error("epsilon must be positive");
    constexpr std::int64_t kLevelCap = 2000;
    constexpr std::uint64_t kCompositionBudget = 50'000'000;

    SeriesAccumulator acc(params, toll, n);
    const double r = params.M * params.q2;  // geometric decay of the level sums
    const double prefactor =
        0.5 * static_cast<double>(n) * static_cast<double>(n) * acc.toll_max() / (1.0 - r);

    double total = 0.0;
    double tail = prefactor;  // bound for levels > l is prefactor * r^{l+1}
    for (std::int64_t level = 0; level <= kLevelCap; ++level) {
        total += acc.level_sum(level);
        tail *= r;
        if (tail <= epsilon) return total;
        if (acc.compositions_visited() > kCompositionBudget)
            throw TruncationNotCertified("composition budget exhausted before the tail bound met epsilon");
    }
    throw TruncationNotCertified("series tail bound still above epsilon at the level cap");
}

TransferReport transfer_check(const ModelParams& params, double alpha, std::int64_t n_max,
                              std::span<const std::int64_t> checkpoints) {
    if (alpha <= params.rho)
        throw AlphaTooSmall("transfer asymptotics require alpha > rho");
    std::vector<std::int64_t> points(checkpoints.begin(), checkpoints.end());
    if (points.empty())
        for (std::int64_t n = 256; n <= n_max; n *= 4) points.push_back(n);

    TransferReport report;
    report.alpha = alpha;
    report.p_alpha = p_func(params, alpha).real();
    const auto table = mix_solve_table(params, TollSpec::power(alpha), n_max);
    for (std::int64_t n : points) {
        if (n < 2 || n > n_max) throw std::logic_error("checkpoint outside the table range");
        const double ratio = table[static_cast<std::size_t>(n)] * report.p_alpha /
                             std::exp(alpha * std::log(static_cast<double>(n)));
        report.ratio_at.emplace_back(n, ratio);
    }
    return report;
}

}  // namespace gtrie
