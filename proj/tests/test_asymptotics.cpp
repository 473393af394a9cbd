#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "gtrie/asymptotics.hpp"
#include "gtrie/errors.hpp"
#include "gtrie/recurrence.hpp"
#include "test_support.hpp"

using namespace gtrie;
using cd = std::complex<double>;

namespace {
const ModelParams cfg_u = validate_params({1.0 / 3, 1.0 / 3, 1.0 / 3}, 2);
const ModelParams cfg_n = validate_params({0.5, 0.3, 0.2}, 2);
const ModelParams cfg_d = validate_params({0.5, 0.25, 0.25}, 2);
const ModelParams classical = validate_params({0.5, 0.5}, 1);
}  // namespace

TEST_CASE("G_E closed values") {
    // classical binary trie constant 1/log 2 via the pole-free form at s = 1
    CHECK(g_e(classical, {1.0, 0.0}).real() ==
          doctest::Approx(1.4426950408889634).epsilon(1e-12));
    CHECK(g_e(cfg_u, {cfg_u.rho, 0.0}).real() ==
          doctest::Approx(1.3449425510702038).epsilon(1e-12));
    CHECK(g_e(cfg_n, {cfg_n.rho, 0.0}).real() ==
          doctest::Approx(1.8875486537887277).epsilon(1e-11));
    CHECK_THROWS_AS(g_e(cfg_u, {0.0, 0.0}), PoleAt);
}

TEST_CASE("G_E conjugate symmetry and oracle cross-check") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> re(0.6, 1.9), im(-30.0, 30.0);
    for (int i = 0; i < 50; ++i) {
        const cd s{re(gen), im(gen)};
        CHECK(std::abs(g_e(cfg_n, std::conj(s)) - std::conj(g_e(cfg_n, s))) <=
              1e-12 * std::abs(g_e(cfg_n, s)));
        // independent gamma route
        cd denom = 0.0;
        for (double pj : cfg_n.p) denom += std::exp(s * std::log(pj)) * std::log(pj);
        const cd want = -testsupport::stirling_gamma(2.0 - s) / (s * 2.0 * denom);
        CHECK(std::abs(g_e(cfg_n, s) - want) <= 1e-10 * std::abs(want));
    }
}

TEST_CASE("predicted mean") {
    const auto roots_n = roots_on_critical_line(cfg_n, 10);
    const double manual = g_e(cfg_n, {cfg_n.rho, 0.0}).real() * std::pow(500.0, cfg_n.rho);
    CHECK(predicted_mean(cfg_n, roots_n, 500.0) == doctest::Approx(manual).epsilon(1e-12));

    const auto roots_u = roots_on_critical_line(cfg_u, 10);
    for (double n : {100.0, 1000.0, 4096.0}) {
        const auto full = predicted_mean_cx(cfg_u, roots_u, n);
        CHECK(std::abs(full.imag()) <= 1e-9 * std::abs(full.real()));
    }

    // truncation stability: K = 10 vs K = 20
    const auto roots_u20 = roots_on_critical_line(cfg_u, 20);
    for (double n : {64.0, 512.0, 4096.0}) {
        const double a = predicted_mean(cfg_u, roots_u, n);
        const double b = predicted_mean(cfg_u, roots_u20, n);
        CHECK(std::abs(a - b) <= 1e-9 * std::abs(b));
    }
}

TEST_CASE("classical trie mean constant") {
    const auto roots = roots_on_critical_line(classical, 10);
    const double n = 4096.0;
    CHECK(predicted_mean(classical, roots, n) / n ==
          doctest::Approx(1.4426950408889634).epsilon(1e-3));
}

TEST_CASE("P_E: duality, positivity, periodicity") {
    for (const auto* params : {&cfg_u, &cfg_d}) {
        const auto roots = roots_on_critical_line(*params, 10);
        for (int i = 0; i <= 128; ++i) {
            const double x = static_cast<double>(i) / 128.0;
            const double f = p_e_fourier(*params, roots, x);
            const double p = p_e_poisson(*params, x);
            CHECK(std::abs(f - p) <= 1e-8);
            CHECK(f > 0.0);
            CHECK(std::abs(p_e_fourier(*params, roots, x + 1.0) - f) <= 1e-10);
        }
    }
    // aperiodic case: the constant equals both routes
    const auto roots_n = roots_on_critical_line(cfg_n, 10);
    const double c0 = p_e_fourier(cfg_n, roots_n, 0.37);
    CHECK(c0 == doctest::Approx(g_e(cfg_n, {cfg_n.rho, 0.0}).real()).epsilon(1e-12));
    CHECK(p_e_poisson(cfg_n, 0.0) == doctest::Approx(c0).epsilon(1e-8));
}

TEST_CASE("Q: duality, positivity, aperiodic constant") {
    for (const auto* params : {&cfg_u, &cfg_d}) {
        const auto roots = roots_on_critical_line(*params, 10);
        for (int i = 0; i <= 128; ++i) {
            const double x = static_cast<double>(i) / 128.0;
            const double f = q_fourier(*params, roots, x);
            const double p = q_poisson(*params, x);
            CHECK(std::abs(f - p) <= 1e-8);
            CHECK(f > 0.0);
            CHECK(std::abs(q_fourier(*params, roots, x + 1.0) - f) <= 1e-10);
        }
    }
    const auto roots_n = roots_on_critical_line(cfg_n, 10);
    const double q0 = q_fourier(cfg_n, roots_n, 0.2);
    CHECK(q0 == doctest::Approx(cfg_n.rho * g_e(cfg_n, {cfg_n.rho, 0.0}).real()).epsilon(1e-12));
    CHECK(q0 == doctest::Approx(3.2158909498650619).epsilon(1e-11));
    CHECK(q_poisson(cfg_n, 0.0) == doctest::Approx(q0).epsilon(1e-8));
}

TEST_CASE("variance constant c") {
    CHECK(nonuniform_variance_constant(cfg_n) ==
          doctest::Approx(0.060892914940434568).epsilon(1e-10));
    CHECK_THROWS_AS(nonuniform_variance_constant(cfg_u), UniformCase);

    // dual-route identity holds across random non-uniform instances
    std::mt19937_64 gen(99);
    std::uniform_int_distribution<int> pick_m(2, 3), pick_a(2, 4);
    std::uniform_real_distribution<double> unit(0.05, 1.0);
    int checked = 0;
    while (checked < 100) {
        const int M = pick_m(gen), A = pick_a(gen);
        std::vector<double> p(A);
        double sum = 0.0;
        for (double& x : p) sum += x = unit(gen);
        double q2 = 0.0;
        for (double& x : p) {
            x /= sum;
            q2 += x * x;
        }
        if (q2 * M >= 0.98) continue;
        const auto params = validate_params(p, M);
        if (params.uniform()) continue;
        CHECK(nonuniform_variance_constant(params) > 0.0);  // throws if routes disagree
        ++checked;
    }
}

TEST_CASE("predicted variance") {
    SUBCASE("aperiodic non-uniform power law") {
        const auto roots = roots_on_critical_line(cfg_n, 10);
        const double v1 = predicted_variance(cfg_n, roots, 100.0);
        const double v2 = predicted_variance(cfg_n, roots, 700.0);
        CHECK(v2 / v1 == doctest::Approx(std::pow(7.0, 2.0 * cfg_n.rho - 1.0)).epsilon(1e-10));
    }
    SUBCASE("uniform case runs through the fitted amplitude") {
        const auto mu = exact_mean_table(cfg_u, 256);
        const auto var = exact_variance_table(cfg_u, mu, 256);
        const auto fit = fit_uniform_variance(cfg_u, var);
        const auto roots = roots_on_critical_line(cfg_u, 10);
        // the fit reproduces the table on its upper range
        for (std::int64_t n = 160; n <= 256; n += 16) {
            const double predicted = predicted_variance(cfg_u, roots, static_cast<double>(n), &fit);
            CHECK(predicted ==
                  doctest::Approx(var[static_cast<std::size_t>(n)]).epsilon(0.05));
        }
        CHECK_THROWS(predicted_variance(cfg_u, roots, 100.0, nullptr));
    }
    SUBCASE("uniform variance band is positive and settles") {
        const auto mu = exact_mean_table(cfg_u, 256);
        const auto var = exact_variance_table(cfg_u, mu, 256);
        double lo = 1e300, hi = 0.0;
        for (std::int64_t n = 64; n <= 256; ++n) {
            const double ratio = var[static_cast<std::size_t>(n)] /
                                 std::pow(static_cast<double>(n), cfg_u.rho);
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
        CHECK(lo > 0.0);
        CHECK((hi - lo) / lo < 0.25);
    }
}

TEST_CASE("gaussian moments") {
    CHECK(gaussian_moment(0) == 1.0);
    CHECK(gaussian_moment(1) == 0.0);
    CHECK(gaussian_moment(2) == 1.0);
    CHECK(gaussian_moment(3) == 0.0);
    CHECK(gaussian_moment(4) == 3.0);
    CHECK(gaussian_moment(5) == 0.0);
    CHECK(gaussian_moment(6) == 15.0);
    CHECK(gaussian_moment(8) == 105.0);
    CHECK(gaussian_moment(10) == 945.0);
    CHECK(gaussian_moment(20) == 654729075.0);
}

TEST_CASE("analyze report") {
    const auto report = analyze(cfg_n, 10, 256);
    CHECK(report.rho == doctest::Approx(cfg_n.rho));
    CHECK_FALSE(report.periodic);
    REQUIRE(report.c.has_value());
    CHECK(*report.c > 0.0);
    CHECK(report.variance_exponent == doctest::Approx(2.0 * cfg_n.rho - 1.0));
    CHECK(report.fluctuation_min > 0.0);

    const auto report_u = analyze(cfg_u, 10, 256);
    CHECK(report_u.periodic);
    CHECK(report_u.base == doctest::Approx(3.0));
    CHECK_FALSE(report_u.c.has_value());
    CHECK(report_u.variance_exponent == doctest::Approx(cfg_u.rho));
    CHECK(report_u.fluctuation_min > 0.0);
    CHECK(report_u.fluctuation_max >= report_u.fluctuation_min);
}

TEST_CASE("poisson kernel f") {
    // vanishes at 0+, positive beyond, series branch matches t^2/2 - t^3/3 + ...
    CHECK(poisson_mean_kernel(0.0) == 0.0);
    CHECK(poisson_mean_kernel(1e-12) == doctest::Approx(0.5e-24).epsilon(1e-10));
    for (double t : {1e-8, 1e-4, 0.01, 0.5, 0.999, 1.001, 2.0, 10.0})
        CHECK(poisson_mean_kernel(t) > 0.0);
    // seamless switchover at t = 1 and agreement with the direct formula
    for (double t : {0.2, 0.7, 0.95, 0.9999}) {
        const double direct = 1.0 - (t + 1.0) * std::exp(-t);
        CHECK(poisson_mean_kernel(t) == doctest::Approx(direct).epsilon(1e-12));
    }
    const double tiny = 1e-6;
    CHECK(poisson_mean_kernel(tiny) ==
          doctest::Approx(tiny * tiny / 2 - tiny * tiny * tiny / 3).epsilon(1e-12));
}
