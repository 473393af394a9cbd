#include "gtrie/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gtrie/errors.hpp"
#include "gtrie/gamma.hpp"

namespace gtrie {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

// M * (-sum_j p_j^rho log p_j): the common positive denominator of the
// fluctuation coefficients.
double entropy_denominator(const ModelParams& params) {
    double acc = 0.0;
    for (double pj : params.p) acc -= std::pow(pj, params.rho) * std::log(pj);
    return params.M * acc;
}

}  // namespace

// f(t) = 1 - (t+1)e^{-t}; series for small t to dodge the cancellation.
double poisson_mean_kernel(double t) {
    if (t >= 1.0) return 1.0 - (t + 1.0) * std::exp(-t);
    // sum_{m>=2} (-1)^m (m-1)/m! t^m
    double term = 0.5 * t * t;  // m = 2
    double acc = term;
    for (int m = 3; m < 40; ++m) {
        term *= -t / static_cast<double>(m);
        const double add = term * static_cast<double>(m - 1);
        acc += add;
        if (std::abs(add) < 1e-18 * std::abs(acc)) break;
    }
    return acc;
}

namespace {

// Lattice sum (log a) sum_v kernel((x - v) log a), expanded outward from
// v = floor(x) until the terms drop below 1e-16 of the running total.
template <typename Kernel>
double poisson_lattice_sum(double x, double log_a, int window, Kernel kernel) {
    const auto term = [&](long v) { return kernel((x - static_cast<double>(v)) * log_a); };
    const long v0 = static_cast<long>(std::floor(x));
    double acc = term(v0);
    if (window >= 0) {
        for (long v = 1; v <= window; ++v) acc += term(v0 + v) + term(v0 - v);
        return log_a * acc;
    }
    for (long v = 1; v < 4096; ++v) {
        const double add = term(v0 + v) + term(v0 - v);
        acc += add;
        if (std::abs(add) <= 1e-16 * std::abs(acc) && v >= 4) break;
    }
    return log_a * acc;
}

// Integral of kernel(u) over the real line by the trapezoidal rule; both
// kernels here decay exponentially in |u|, so a fixed fine grid is exact to
// machine precision.
template <typename Kernel>
double real_line_integral(Kernel kernel, double lo, double hi) {
    const double h = 1.0 / 64.0;
    const long steps = static_cast<long>((hi - lo) / h);
    double acc = 0.5 * (kernel(lo) + kernel(lo + h * static_cast<double>(steps)));
    for (long i = 1; i < steps; ++i) acc += kernel(lo + h * static_cast<double>(i));
    return acc * h;
}

}  // namespace

std::complex<double> g_e(const ModelParams& params, std::complex<double> s) {
    if (std::abs(s) < 1e-12) throw PoleAt("G_E has a pole at s = 0");
    std::complex<double> denom = 0.0;
    for (double pj : params.p)
        denom += std::exp(s * std::log(pj)) * std::log(pj);
    denom *= static_cast<double>(params.M);
    return -complex_gamma(2.0 - s) / (s * denom);
}

std::complex<double> predicted_mean_cx(const ModelParams& params, const RootSet& roots,
                                       double n) {
    const double ln_n = std::log(n);
    std::complex<double> acc = 0.0;
    for (const auto& beta : roots.betas) acc += g_e(params, beta) * std::exp(beta * ln_n);
    return acc;
}

double predicted_mean(const ModelParams& params, const RootSet& roots, double n) {
    return predicted_mean_cx(params, roots, n).real();
}

double p_e_fourier(const ModelParams& params, const RootSet& roots, double x) {
    const double denom = entropy_denominator(params);
    const double rho = params.rho;
    double acc = (complex_gamma({2.0 - rho, 0.0}).real()) / (denom * rho);
    if (params.periodicity.periodic) {
        const double step = kTwoPi / roots.log_base;
        for (int k = 1; k <= roots.k_range; ++k) {
            const std::complex<double> chi{0.0, step * static_cast<double>(k)};
            const std::complex<double> ck =
                complex_gamma(2.0 - rho - chi) / (denom * (rho + chi));
            const std::complex<double> phase =
                std::exp(std::complex<double>{0.0, kTwoPi * k * x});
            acc += 2.0 * (ck * phase).real();
        }
    }
    return acc;
}

double p_e_poisson(const ModelParams& params, double x, int window) {
    const double denom = entropy_denominator(params);
    const double rho = params.rho;
    const auto kernel = [rho](double u) {
        return poisson_mean_kernel(std::exp(u)) * std::exp(-rho * u);
    };
    if (!params.periodicity.periodic) {
        // continuous limit: the k = 0 coefficient Gamma(2-rho)/rho as an integral
        return real_line_integral(kernel, -46.0 / (2.0 - rho), 46.0 / rho + 8.0) / denom;
    }
    const double log_a = std::log(params.periodicity.base);
    return poisson_lattice_sum(x, log_a, window, kernel) / denom;
}

double q_fourier(const ModelParams& params, const RootSet& roots, double x) {
    const double denom = entropy_denominator(params);
    const double rho = params.rho;
    double acc = complex_gamma({2.0 - rho, 0.0}).real() / denom;
    if (params.periodicity.periodic) {
        const double step = kTwoPi / roots.log_base;
        for (int k = 1; k <= roots.k_range; ++k) {
            const std::complex<double> chi{0.0, step * static_cast<double>(k)};
            const std::complex<double> ck = complex_gamma(2.0 - rho - chi) / denom;
            const std::complex<double> phase =
                std::exp(std::complex<double>{0.0, kTwoPi * k * x});
            acc += 2.0 * (ck * phase).real();
        }
    }
    return acc;
}

double q_poisson(const ModelParams& params, double x, int window) {
    const double denom = entropy_denominator(params);
    const double rho = params.rho;
    // Gamma(2 - rho - chi) = int exp(-e^u) e^{(2-rho-chi) u} du
    const auto kernel = [rho](double u) {
        return std::exp(-std::exp(u)) * std::exp((2.0 - rho) * u);
    };
    if (!params.periodicity.periodic)
        return real_line_integral(kernel, -46.0 / (2.0 - rho), 8.0) / denom;
    const double log_a = std::log(params.periodicity.base);
    return poisson_lattice_sum(x, log_a, window, kernel) / denom;
}

double nonuniform_variance_constant(const ModelParams& params) {
    if (params.uniform())
        throw UniformCase("variance constant c is defined for non-uniform probabilities only");
    const double rho = params.rho;
    const double M = params.M;
    const double P = p_func(params, {2.0 * rho - 1.0, 0.0}).real();
    const double c = (M - 1.0) / (M * P) - 1.0;

    // dual algebraic route: (M - 1 - M P(2 rho - 1)) / M^2 equals the
    // pairwise-difference coefficient
    const double direct = (M - 1.0 - M * P) / (M * M);
    double pairwise = 0.0;
    const int A = params.alphabet_size();
    for (int j1 = 0; j1 < A; ++j1)
        for (int j2 = j1 + 1; j2 < A; ++j2) {
            const double d = std::pow(params.p[j1], rho - 1.0) -
                             std::pow(params.p[j2], rho - 1.0);
            pairwise += params.p[j1] * params.p[j2] * d * d;
        }
    if (std::abs(direct - pairwise) > 1e-10 * std::max(1.0, std::abs(direct)))
        throw std::logic_error("variance-constant dual routes disagree beyond 1e-10");
    return c;
}

double UniformVarianceFit::at(double x) const {
    double acc = coeff.empty() ? 0.0 : coeff[0];
    for (std::size_t h = 1; h <= coeff.size() / 2; ++h) {
        const double arg = kTwoPi * static_cast<double>(h) * x;
        acc += coeff[2 * h - 1] * std::cos(arg) + coeff[2 * h] * std::sin(arg);
    }
    return acc;
}

UniformVarianceFit fit_uniform_variance(const ModelParams& params,
                                        std::span<const double> var_table, int harmonics) {
    const auto n2 = static_cast<std::int64_t>(var_table.size()) - 1;
    if (n2 < 32) throw std::logic_error("variance table too short to fit an amplitude");
    const std::int64_t n_lo = std::max<std::int64_t>(16, n2 / 4);

    UniformVarianceFit fit;
    fit.log_base = params.periodicity.periodic ? std::log(params.periodicity.base) : 1.0;
    const int dim = 1 + 2 * harmonics;
    std::vector<double> ata(static_cast<std::size_t>(dim) * dim, 0.0);
    std::vector<double> atb(static_cast<std::size_t>(dim), 0.0);
    std::vector<double> row(static_cast<std::size_t>(dim));
    for (std::int64_t n = n_lo; n <= n2; ++n) {
        const double x = std::log(static_cast<double>(n)) / fit.log_base;
        const double y =
            var_table[static_cast<std::size_t>(n)] / std::pow(static_cast<double>(n), params.rho);
        row[0] = 1.0;
        for (int h = 1; h <= harmonics; ++h) {
            row[static_cast<std::size_t>(2 * h - 1)] = std::cos(kTwoPi * h * x);
            row[static_cast<std::size_t>(2 * h)] = std::sin(kTwoPi * h * x);
        }
        for (int i = 0; i < dim; ++i) {
            atb[static_cast<std::size_t>(i)] += row[static_cast<std::size_t>(i)] * y;
            for (int j = 0; j < dim; ++j)
                ata[static_cast<std::size_t>(i) * dim + j] +=
                    row[static_cast<std::size_t>(i)] * row[static_cast<std::size_t>(j)];
        }
    }
    // gaussian elimination with partial pivoting on the normal equations
    for (int col = 0; col < dim; ++col) {
        int pivot = col;
        for (int r = col + 1; r < dim; ++r)
            if (std::abs(ata[static_cast<std::size_t>(r) * dim + col]) >
                std::abs(ata[static_cast<std::size_t>(pivot) * dim + col]))
                pivot = r;
        for (int j = 0; j < dim; ++j)
            std::swap(ata[static_cast<std::size_t>(col) * dim + j],
                      ata[static_cast<std::size_t>(pivot) * dim + j]);
        std::swap(atb[static_cast<std::size_t>(col)], atb[static_cast<std::size_t>(pivot)]);
        const double diag = ata[static_cast<std::size_t>(col) * dim + col];
        if (std::abs(diag) < 1e-14) throw std::logic_error("degenerate amplitude fit");
        for (int r = 0; r < dim; ++r) {
            if (r == col) continue;
            const double f = ata[static_cast<std::size_t>(r) * dim + col] / diag;
            for (int j = 0; j < dim; ++j)
                ata[static_cast<std::size_t>(r) * dim + j] -=
                    f * ata[static_cast<std::size_t>(col) * dim + j];
            atb[static_cast<std::size_t>(r)] -= f * atb[static_cast<std::size_t>(col)];
        }
    }
    fit.coeff.resize(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i)
        fit.coeff[static_cast<std::size_t>(i)] =
            atb[static_cast<std::size_t>(i)] / ata[static_cast<std::size_t>(i) * dim + i];
    return fit;
}

double predicted_variance(const ModelParams& params, const RootSet& roots, double n,
                          const UniformVarianceFit* fit) {
    const double rho = params.rho;
    if (!params.uniform() && rho > 1.0 + 1e-9) {
        const double c = nonuniform_variance_constant(params);
        const double x = std::log(n) / roots.log_base;
        const double q = q_fourier(params, roots, x);
        return c * q * q * std::exp((2.0 * rho - 1.0) * std::log(n));
    }
    if (fit == nullptr)
        throw std::logic_error(
            "uniform/classical variance prediction needs a fitted amplitude");
    const double x = std::log(n) / fit->log_base;
    return fit->at(x) * std::exp(rho * std::log(n));
}

double gaussian_moment(int m) {
    if (m < 0) throw std::logic_error("moment order must be >= 0");
    if (m % 2 == 1) return 0.0;
    double acc = 1.0;  // (m-1)!! = m!/(2^{m/2}(m/2)!)
    for (int k = m - 1; k >= 3; k -= 2) acc *= static_cast<double>(k);
    return acc;
}

AsymptoticReport analyze(const ModelParams& params, int k_range, int grid) {
    AsymptoticReport report;
    report.rho = params.rho;
    report.periodic = params.periodicity.periodic;
    report.base = params.periodicity.base;
    const RootSet roots = roots_on_critical_line(params, k_range);
    report.roots = roots.betas;
    if (!params.uniform() && params.rho > 1.0 + 1e-9)
        report.c = nonuniform_variance_constant(params);
    report.leading_mean_amplitude = g_e(params, {params.rho, 0.0}).real();
    report.fluctuation_min = report.fluctuation_max = p_e_fourier(params, roots, 0.0);
    for (int i = 1; i < grid; ++i) {
        const double v = p_e_fourier(params, roots, static_cast<double>(i) / grid);
        report.fluctuation_min = std::min(report.fluctuation_min, v);
        report.fluctuation_max = std::max(report.fluctuation_max, v);
    }
    report.variance_exponent =
        params.uniform() || params.rho <= 1.0 + 1e-9 ? params.rho : 2.0 * params.rho - 1.0;
    return report;
}

}  // namespace gtrie
