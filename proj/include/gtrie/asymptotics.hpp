#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gtrie/model.hpp"
#include "gtrie/recurrence.hpp"

namespace gtrie {

// G_E(s) = (1-s)Gamma(-s) / (M sum_j p_j^s log p_j), evaluated through the
// pole-free identity (1-s)Gamma(-s) = -Gamma(2-s)/s.  Throws PoleAt for s = 0.
std::complex<double> g_e(const ModelParams& params, std::complex<double> s);

// sum over the critical-line roots of G_E(beta) n^beta; the imaginary part
// cancels by conjugate pairing and is exposed for the residue checks.
std::complex<double> predicted_mean_cx(const ModelParams& params, const RootSet& roots,
                                       double n);
double predicted_mean(const ModelParams& params, const RootSet& roots, double n);

// Kernel of the mean fluctuation's Poisson representation,
// f(t) = 1 - (t+1)e^{-t}; a series branch keeps small t accurate.
double poisson_mean_kernel(double t);

// The 1-periodic mean fluctuation P_E, as a truncated Fourier series over the
// root lattice and as the Poisson-summation lattice sum of
// f(t) = 1 - (t+1)e^{-t}.  The aperiodic case degenerates to the constant
// G_E(rho); the Poisson side then evaluates the continuous integral.
double p_e_fourier(const ModelParams& params, const RootSet& roots, double x);
double p_e_poisson(const ModelParams& params, double x, int window = -1);

// Q with sum_beta beta G_E(beta) n^{beta-1} = Q(log_a n) n^{rho-1}; Fourier
// coefficients Gamma(2-beta), Poisson kernel exp(-e^u).
double q_fourier(const ModelParams& params, const RootSet& roots, double x);
double q_poisson(const ModelParams& params, double x, int window = -1);

// c = (M-1)/(M P(2 rho - 1)) - 1, cross-checked against the pairwise form
// sum_{j1<j2} p_j1 p_j2 (p_j1^{rho-1} - p_j2^{rho-1})^2 to 1e-10.
// Throws UniformCase for uniform probabilities.
double nonuniform_variance_constant(const ModelParams& params);

// Periodic amplitude of Var(S_n)/n^rho fitted from an exact variance table;
// used where no closed-form variance amplitude is available (uniform case and
// the classical rho = 1 case).
struct UniformVarianceFit {
    double log_base = 1.0;
    std::vector<double> coeff;  // c0, a1, b1, a2, b2, ...
    double at(double x) const;
};

UniformVarianceFit fit_uniform_variance(const ModelParams& params,
                                        std::span<const double> var_table,
                                        int harmonics = 2);

// Non-uniform with rho > 1: c Q(log_a n)^2 n^{2 rho - 1}.  Otherwise the
// empirically fitted amplitude times n^rho.
double predicted_variance(const ModelParams& params, const RootSet& roots, double n,
                          const UniformVarianceFit* fit = nullptr);

// m-th moment of the standard normal: m!/(2^{m/2}(m/2)!) for even m, 0 odd.
double gaussian_moment(int m);

struct AsymptoticReport {
    double rho = 1.0;
    bool periodic = false;
    double base = 0.0;
    std::vector<std::complex<double>> roots;
    std::optional<double> c;  // non-uniform variance constant
    double leading_mean_amplitude = 0.0;  // G_E(rho)
    double fluctuation_min = 0.0;         // min of P_E over one period
    double fluctuation_max = 0.0;
    double variance_exponent = 1.0;  // rho (uniform) or 2 rho - 1
};

AsymptoticReport analyze(const ModelParams& params, int k_range = kDefaultRootRange,
                         int grid = 1024);

}  // namespace gtrie
