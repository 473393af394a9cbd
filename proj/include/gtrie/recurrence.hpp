#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gtrie/model.hpp"

namespace gtrie {

// Toll sequence b_n feeding the binomial-mixture recurrence; defined for
// n >= 2 (a_0 = a_1 = 0 by convention).
struct TollSpec {
    enum class Kind { ConstantOne, DeltaSquared, Power, Custom };

    static TollSpec constant_one();
    static TollSpec power(double alpha, double scale = 1.0);
    // E(Delta_n^2), the exact variance toll, evaluated against a mean table.
    static TollSpec delta_squared(const ModelParams& params, std::span<const double> mean);
    static TollSpec custom(std::function<double(std::int64_t)> fn);

    double operator()(std::int64_t n) const { return fn_(n); }
    Kind kind() const { return kind_; }

  private:
    TollSpec(Kind k, std::function<double(std::int64_t)> fn) : kind_(k), fn_(std::move(fn)) {}
    Kind kind_;
    std::function<double(std::int64_t)> fn_;
};

// One step of a_n = M sum_j sum_{k<=n} C(n,k) p_j^k (1-p_j)^{n-k} a_k + b_n:
// the k = n self-term is moved to the left, so
//   a_n = (M sum_j sum_{k<n} w a_k + b_n) / (1 - M sum_j p_j^n).
// The denominator stays positive for n >= 2 in the non-explosive case.
double binomial_mix_solve(const ModelParams& params, std::span<const double> prefix,
                          double toll_n, std::int64_t n);

// Full table a_0..a_N for an arbitrary toll.
std::vector<double> mix_solve_table(const ModelParams& params, const TollSpec& toll,
                                    std::int64_t n_max);

// mu_n = E(S_n): the mixture recurrence with constant-one toll.
std::vector<double> exact_mean_table(const ModelParams& params, std::int64_t n_max);

// E(Delta_n^2) where Delta = 1 - mu_n + sum_{i,j} mu_{B_j^(i)}, expanded into
// single-binomial first/second moments, same-direction trinomial pair terms
// and independent cross-direction products.  O(n^2) per letter pair.
double exact_delta_second(const ModelParams& params, std::span<const double> mean,
                          std::int64_t n);

// Var(S_n) table via the mixture recurrence with the Delta^2 toll.  The toll
// is evaluated through conditional-binomial factorization of the same pair
// sums (O(A^2 N^2) total); exact_delta_second is the direct reference form.
std::vector<double> exact_variance_table(const ModelParams& params,
                                         std::span<const double> mean, std::int64_t n2_max);

struct MomentTable {
    std::int64_t n_max = 0;
    std::int64_t var_n_max = 0;
    std::vector<double> mean;  // 0..n_max
    std::vector<double> var;   // 0..var_n_max
    bool covers_mean(std::int64_t n) const { return n <= n_max; }
    bool covers_var(std::int64_t n) const { return n <= var_n_max; }
};

inline constexpr std::int64_t kDefaultMeanRange = 16384;
inline constexpr std::int64_t kDefaultVarRange = 256;

MomentTable build_moment_table(const ModelParams& params,
                               std::int64_t n_max = kDefaultMeanRange,
                               std::int64_t n2_max = kDefaultVarRange);

// Direct evaluation of the level series
//   a_n = sum_l M^l sum_{|k|=l} C(l;k) sum_{i=2..n} C(n,i)(1-p^k)^{n-i}(p^k)^i b_i,
// truncated once the certified geometric tail bound
//   (n^2/2) max|b| (M sum p_j^2)^{l+1} / (1 - M sum p_j^2)
// drops below epsilon.  Throws TruncationNotCertified past the level cap.
double series_solution(const ModelParams& params, const TollSpec& toll, std::int64_t n,
                       double epsilon);

struct TransferReport {
    double alpha = 0.0;
    double p_alpha = 0.0;  // P(alpha)
    std::vector<std::pair<std::int64_t, double>> ratio_at;  // (n, a_n P(alpha) / n^alpha)
};

// Tabulates the recurrence with toll n^alpha (alpha > rho) and reports the
// normalized ratios, which approach 1.  Throws AlphaTooSmall.
TransferReport transfer_check(const ModelParams& params, double alpha, std::int64_t n_max,
                              std::span<const std::int64_t> checkpoints = {});

}  // namespace gtrie
