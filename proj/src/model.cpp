#include "gtrie/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "gtrie/errors.hpp"

namespace gtrie {

namespace {

constexpr double kSumTol = 1e-9;
constexpr double kRatioTol = 1e-9;
constexpr long kMaxDenominator = 64;
constexpr long kMaxExponent = 1'000'000;

// Best rational approximation n/d with d <= max_den via continued fractions.
// Returns false if no convergent with denominator <= max_den lands within tol.
bool rational_approx(double x, long max_den, double tol, long& num, long& den) {
    long h0 = 1, h1 = static_cast<long>(std::floor(x));
    long k0 = 0, k1 = 1;
    double frac = x - std::floor(x);
    for (int it = 0; it < 64; ++it) {
        if (std::abs(x - static_cast<double>(h1) / static_cast<double>(k1)) <= tol) {
            num = h1;
            den = k1;
            return true;
        }
        if (frac == 0.0) break;
        double inv = 1.0 / frac;
        long a = static_cast<long>(std::floor(inv));
        frac = inv - std::floor(inv);
        long h2 = a * h1 + h0;
        long k2 = a * k1 + k0;
        if (k2 > max_den || k2 <= 0) break;
        h0 = h1; h1 = h2;
        k0 = k1; k1 = k2;
    }
    if (std::abs(x - static_cast<double>(h1) / static_cast<double>(k1)) <= tol) {
        num = h1;
        den = k1;
        return true;
    }
    return false;
}

}  // namespace

bool ModelParams::uniform() const {
    const double u = 1.0 / static_cast<double>(p.size());
    return std::all_of(p.begin(), p.end(),
                       [u](double x) { return std::abs(x - u) <= 1e-12; });
}

ModelParams validate_params(std::vector<double> p, int M) {
    if (M < 1) throw NotAProbabilityVector("branching factor M must be >= 1");
    if (p.size() < 2) throw NotAProbabilityVector("alphabet needs at least two letters");
    double sum = 0.0;
    for (double x : p) {
        if (!(x > 0.0 && x < 1.0))
            throw NotAProbabilityVector("probabilities must lie strictly in (0,1)");
        sum += x;
    }
    if (std::abs(sum - 1.0) > kSumTol) {
        std::ostringstream os;
        os << "probabilities sum to " << sum << ", expected 1";
        throw NotAProbabilityVector(os.str());
    }
    for (double& x : p) x /= sum;  // renormalize exactly

    ModelParams params;
    params.M = M;
    params.p = std::move(p);
    params.q2 = 0.0;
    for (double x : params.p) params.q2 += x * x;
    if (params.q2 * M >= 1.0) {
        std::ostringstream os;
        os << "explosive instance: sum p_j^2 = " << params.q2 << " >= 1/M = "
           << 1.0 / M << "; the non-explosive condition sum p_j^2 < 1/M is required";
        throw Explosive(os.str());
    }
    params.rho = solve_rho(M, params.p);
    params.periodicity = detect_periodicity(params.p);
    return params;
}

double solve_rho(int M, std::span<const double> p) {
    auto residual = [&](double s) {
        double acc = 0.0;
        for (double x : p) acc += std::pow(x, s);
        return static_cast<double>(M) * acc - 1.0;
    };
    if (M == 1) return 1.0;  // sum p_j = 1 exactly after renormalization
    double lo = 1.0, hi = 2.0;
    // residual(lo) = M - 1 > 0, residual(hi) = M*q2 - 1 < 0 in the
    // non-explosive case; bisect until the interval is below 1e-14.
    for (int it = 0; it < 120 && hi - lo > 1e-15; ++it) {
        double mid = 0.5 * (lo + hi);
        if (residual(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double solve_rho(const ModelParams& params) { return solve_rho(params.M, params.p); }

std::complex<double> p_func(const ModelParams& params, std::complex<double> s) {
    std::complex<double> acc = 0.0;
    for (double x : params.p) acc += std::exp(s * std::log(x));
    return 1.0 - static_cast<double>(params.M) * acc;
}

PeriodicityInfo detect_periodicity(std::span<const double> p) {
    PeriodicityInfo info;
    const std::size_t A = p.size();
    const double lp0 = std::log(p[0]);

    // ratios r_j = log p_j / log p_1 = e_j / e_1
    std::vector<long> num(A), den(A);
    for (std::size_t j = 0; j < A; ++j) {
        const double r = std::log(p[j]) / lp0;
        if (!rational_approx(r, kMaxDenominator, kRatioTol, num[j], den[j]))
            return info;  // aperiodic
        if (num[j] <= 0) return info;
    }
    long lcm = 1;
    for (std::size_t j = 0; j < A; ++j) {
        lcm = std::lcm(lcm, den[j]);
        if (lcm > kMaxExponent) return info;
    }
    std::vector<long> e(A);
    long g = 0;
    for (std::size_t j = 0; j < A; ++j) {
        e[j] = num[j] * (lcm / den[j]);
        if (e[j] <= 0 || e[j] > kMaxExponent) return info;
        g = std::gcd(g, e[j]);
    }
    for (long& x : e) x /= g;

    const double base = std::pow(p[0], -1.0 / static_cast<double>(e[0]));
    if (!(base > 1.0)) return info;
    for (std::size_t j = 0; j < A; ++j) {
        const double back = std::pow(base, -static_cast<double>(e[j]));
        if (std::abs(p[j] - back) > kRatioTol) return info;  // not certified
    }
    info.periodic = true;
    info.base = base;
    info.exponents = std::move(e);
    return info;
}

PeriodicityInfo detect_periodicity(const ModelParams& params) {
    return detect_periodicity(params.p);
}

RootSet roots_on_critical_line(const ModelParams& params, int k_range) {
    if (k_range < 0) throw std::logic_error("k_range must be >= 0");
    RootSet roots;
    roots.rho = params.rho;
    roots.k_range = k_range;
    roots.betas.push_back({params.rho, 0.0});
    if (params.periodicity.periodic) {
        roots.log_base = std::log(params.periodicity.base);
        const double step = 2.0 * M_PI / roots.log_base;
        for (int k = 1; k <= k_range; ++k) {
            roots.betas.push_back({params.rho, step * k});
            roots.betas.push_back({params.rho, -step * k});
        }
    } else {
        roots.log_base = 1.0;  // a = e
    }
    for (const auto& beta : roots.betas) {
        if (std::abs(p_func(params, beta)) > 1e-9)
            throw std::logic_error("critical-line root fails the residual check |P(beta)| <= 1e-9");
    }
    return roots;
}

}  // namespace gtrie
