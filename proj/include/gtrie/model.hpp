#pragma once

#include <complex>
#include <span>
#include <vector>

namespace gtrie {

// Classification of the critical-line root structure of P(s) = 1 - M sum p_j^s.
// Periodic iff every ratio log p_i / log p_j is rational; then p_j = base^-exponents[j]
// with gcd(exponents) = 1.  Aperiodic keeps the convention base = e.
struct PeriodicityInfo {
    bool periodic = false;
    double base = 2.718281828459045235;  // 'a'
    std::vector<long> exponents;         // empty when aperiodic
};

// A validated problem instance: branching factor M of the underlying tree and
// letter probabilities p (renormalized to sum exactly 1), with the derived
// quantities cached.  Immutable after construction; safe to share.
struct ModelParams {
    int M = 1;
    std::vector<double> p;
    double q2 = 0.0;   // sum p_j^2
    double rho = 1.0;  // unique real root of M sum p_j^rho = 1
    PeriodicityInfo periodicity;

    int alphabet_size() const { return static_cast<int>(p.size()); }
    bool uniform() const;
};

// Roots of P(s) on the critical line Re s = rho.  Periodic case: the lattice
// rho + 2k*pi*i/log(a) for |k| <= k_range; aperiodic case: {rho} only.
struct RootSet {
    double rho = 1.0;
    double log_base = 1.0;
    int k_range = 0;
    std::vector<std::complex<double>> betas;
};

inline constexpr int kDefaultRootRange = 10;

// Validates p (entries in (0,1), sum 1 within 1e-9, at least two letters),
// renormalizes, rejects explosive instances, and caches q2, rho and the
// periodicity classification.
// Throws NotAProbabilityVector or Explosive.
ModelParams validate_params(std::vector<double> p, int M);

// Bisection on [1,2) for the root of M sum p_j^s = 1; the objective is
// strictly decreasing in s, so convergence is unconditional.
double solve_rho(int M, std::span<const double> p);
double solve_rho(const ModelParams& params);

// P(s) = 1 - M sum_j p_j^s.
std::complex<double> p_func(const ModelParams& params, std::complex<double> s);

// Rational-ratio detection via continued fractions with denominators <= 64
// and error <= 1e-9; a candidate base is accepted only if |p_j - a^-e_j| <= 1e-9
// holds for every letter.
PeriodicityInfo detect_periodicity(std::span<const double> p);
PeriodicityInfo detect_periodicity(const ModelParams& params);

// Throws std::logic_error if any produced root fails |P(beta)| <= 1e-9.
RootSet roots_on_critical_line(const ModelParams& params, int k_range = kDefaultRootRange);

}  // namespace gtrie
