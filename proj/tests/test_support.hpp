#pragma once

// Shared helpers for the test suites: independent oracles (Stirling gamma,
// brute-force rational search, bisection) and small statistics utilities
// (chi-square tails, two-sample tests).  Everything here stays independent of
// the implementation paths it is used to check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace testsupport {

// --------------------------------------------------------------------------
// Independent complex gamma oracle: Stirling series after shifting the
// argument by recurrence until Re(z) >= 12.
// --------------------------------------------------------------------------
inline std::complex<double> stirling_gamma(std::complex<double> z) {
    static const double bern[] = {1.0 / 6,   -1.0 / 30,    1.0 / 42,  -1.0 / 30,
                                  5.0 / 66,  -691.0 / 2730, 7.0 / 6};
    std::complex<double> shift_log = 0.0;
    while (z.real() < 12.0) {
        shift_log += std::log(z);
        z += 1.0;
    }
    std::complex<double> lg =
        (z - 0.5) * std::log(z) - z + 0.5 * std::log(2.0 * M_PI);
    std::complex<double> zp = z;
    for (int i = 0; i < 7; ++i) {
        const double twon = 2.0 * (i + 1);
        lg += bern[i] / (twon * (twon - 1.0) * zp);
        zp *= z * z;
    }
    return std::exp(lg - shift_log);
}

// --------------------------------------------------------------------------
// Brute-force rational approximation search (oracle for periodicity).
// --------------------------------------------------------------------------
inline bool has_rational_approx(double x, long max_den, double tol) {
    for (long q = 1; q <= max_den; ++q) {
        const double p = std::round(x * static_cast<double>(q));
        if (std::abs(x - p / static_cast<double>(q)) <= tol) return true;
    }
    return false;
}

// --------------------------------------------------------------------------
// Bisection oracle for rho on the raw objective.
// --------------------------------------------------------------------------
inline double bisect_rho(int M, std::span<const double> p) {
    auto f = [&](double s) {
        double acc = 0.0;
        for (double x : p) acc += std::pow(x, s);
        return M * acc - 1.0;
    };
    if (M == 1) return 1.0;
    double lo = 1.0, hi = 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// --------------------------------------------------------------------------
// Regularized upper incomplete gamma Q(a, x), for chi-square p-values.
// --------------------------------------------------------------------------
inline double upper_gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) return 1.0;
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) {  // series for P, return 1 - P
        double term = 1.0 / a, sum = term;
        for (int n = 1; n < 500; ++n) {
            term *= x / (a + n);
            sum += term;
            if (term < sum * 1e-16) break;
        }
        return 1.0 - sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    // Lentz continued fraction for Q
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::abs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

inline double chi_square_pvalue(double stat, int dof) {
    return upper_gamma_q(0.5 * dof, 0.5 * stat);
}

// --------------------------------------------------------------------------
// Two-sample chi-square test on integer-valued samples: pools value bins
// until every pooled bin has a combined count of at least 10 and returns the
// p-value of homogeneity.
// --------------------------------------------------------------------------
inline double two_sample_chi_square(std::span<const std::int64_t> a,
                                    std::span<const std::int64_t> b) {
    std::map<std::int64_t, std::pair<double, double>> hist;
    for (auto x : a) hist[x].first += 1.0;
    for (auto x : b) hist[x].second += 1.0;

    std::vector<std::pair<double, double>> bins;
    double acc_a = 0.0, acc_b = 0.0;
    for (const auto& [value, counts] : hist) {
        acc_a += counts.first;
        acc_b += counts.second;
        if (acc_a + acc_b >= 10.0) {
            bins.emplace_back(acc_a, acc_b);
            acc_a = acc_b = 0.0;
        }
    }
    if (acc_a + acc_b > 0.0) {
        if (bins.empty())
            bins.emplace_back(acc_a, acc_b);
        else {
            bins.back().first += acc_a;
            bins.back().second += acc_b;
        }
    }
    if (bins.size() < 2) return 1.0;

    const double n_a = static_cast<double>(a.size());
    const double n_b = static_cast<double>(b.size());
    double stat = 0.0;
    for (const auto& [ca, cb] : bins) {
        const double total = ca + cb;
        const double ea = total * n_a / (n_a + n_b);
        const double eb = total * n_b / (n_a + n_b);
        stat += (ca - ea) * (ca - ea) / ea + (cb - eb) * (cb - eb) / eb;
    }
    return chi_square_pvalue(stat, static_cast<int>(bins.size()) - 1);
}

// one-sample chi-square of observed counts against expected probabilities
inline double goodness_of_fit_pvalue(std::span<const std::int64_t> counts,
                                     std::span<const double> probs) {
    double total = 0.0;
    for (auto c : counts) total += static_cast<double>(c);
    double stat = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double e = total * probs[i];
        const double d = static_cast<double>(counts[i]) - e;
        stat += d * d / e;
    }
    return chi_square_pvalue(stat, static_cast<int>(counts.size()) - 1);
}

}  // namespace testsupport
