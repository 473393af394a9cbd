#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "gtrie/errors.hpp"
#include "gtrie/model.hpp"
#include "test_support.hpp"

using namespace gtrie;

TEST_CASE("validate_params accepts and caches") {
    const auto params = validate_params({0.5, 0.3, 0.2}, 2);
    CHECK(params.q2 == doctest::Approx(0.38).epsilon(1e-14));  // 0.25+0.09+0.04
    CHECK(params.M == 2);
    CHECK(params.alphabet_size() == 3);
    double sum = 0.0;
    for (double x : params.p) sum += x;
    CHECK(sum == 1.0);  // renormalized exactly
}

TEST_CASE("validate_params rejects the explosive boundary") {
    CHECK_THROWS_AS(validate_params({0.5, 0.5}, 2), Explosive);
    try {
        validate_params({0.5, 0.5}, 2);
    } catch (const Explosive& e) {
        CHECK(std::string(e.what()).find("1/M") != std::string::npos);
    }
}

TEST_CASE("classical binary trie is accepted with M = 1") {
    const auto params = validate_params({0.5, 0.5}, 1);
    CHECK(params.q2 == doctest::Approx(0.5));
    CHECK(params.rho == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("validate_params rejects malformed vectors") {
    CHECK_THROWS_AS(validate_params({0.5, 0.6}, 2), NotAProbabilityVector);
    CHECK_THROWS_AS(validate_params({1.0, 0.0}, 2), NotAProbabilityVector);
    CHECK_THROWS_AS(validate_params({0.7}, 2), NotAProbabilityVector);
    CHECK_THROWS_AS(validate_params({-0.1, 1.1}, 2), NotAProbabilityVector);
}

TEST_CASE("solve_rho closed forms and oracle") {
    SUBCASE("M = 1 forces rho = 1") {
        CHECK(solve_rho(1, std::vector<double>{0.5, 0.5}) == 1.0);
    }
    SUBCASE("uniform alphabet: rho = 1 + log_A M") {
        const auto params = validate_params({1.0 / 3, 1.0 / 3, 1.0 / 3}, 2);
        CHECK(params.rho == doctest::Approx(1.0 + std::log(2.0) / std::log(3.0)).epsilon(1e-12));
        CHECK(params.rho == doctest::Approx(1.6309297535714574).epsilon(1e-12));
    }
    SUBCASE("non-uniform instance against the independent bisection oracle") {
        const auto params = validate_params({0.5, 0.3, 0.2}, 2);
        const double oracle = testsupport::bisect_rho(2, params.p);
        CHECK(params.rho == doctest::Approx(oracle).epsilon(1e-13));
        CHECK(params.rho == doctest::Approx(1.7037393676767258).epsilon(1e-12));
        double resid = 0.0;
        for (double x : params.p) resid += std::pow(x, params.rho);
        CHECK(std::abs(2.0 * resid - 1.0) <= 1e-12);
    }
}

TEST_CASE("p_func identities") {
    const auto cfg_u = validate_params({1.0 / 3, 1.0 / 3, 1.0 / 3}, 2);
    CHECK(std::abs(p_func(cfg_u, {cfg_u.rho, 0.0})) <= 1e-12);
    CHECK(p_func(cfg_u, {2.0 * cfg_u.rho - 1.0, 0.0}).real() ==
          doctest::Approx(0.5).epsilon(1e-12));  // 1 - 2*2^-2
    const auto cfg_n = validate_params({0.5, 0.3, 0.2}, 2);
    CHECK(p_func(cfg_n, {1.0, 0.0}).real() == doctest::Approx(1.0 - 2.0).epsilon(1e-12));

    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> re(0.5, 2.5), im(-20.0, 20.0);
    for (int i = 0; i < 50; ++i) {
        const std::complex<double> s{re(gen), im(gen)};
        const auto lhs = p_func(cfg_n, std::conj(s));
        const auto rhs = std::conj(p_func(cfg_n, s));
        CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(rhs)));
    }
}

TEST_CASE("sum p^s decreases on [1,2]") {
    const auto params = validate_params({0.5, 0.3, 0.2}, 2);
    double prev = 1e300;
    for (double s = 1.0; s <= 2.0; s += 1.0 / 64) {
        double acc = 0.0;
        for (double x : params.p) acc += std::pow(x, s);
        CHECK(acc < prev);
        prev = acc;
    }
}

TEST_CASE("detect_periodicity") {
    SUBCASE("exact dyadic ratios") {
        const std::vector<double> p{0.5, 0.25};
        const auto info = detect_periodicity(p);
        REQUIRE(info.periodic);
        CHECK(info.base == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(info.exponents == std::vector<long>{1, 2});
    }
    SUBCASE("uniform") {
        const std::vector<double> p{1.0 / 3, 1.0 / 3, 1.0 / 3};
        const auto info = detect_periodicity(p);
        REQUIRE(info.periodic);
        CHECK(info.base == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(info.exponents == std::vector<long>{1, 1, 1});
    }
    SUBCASE("dyadic three-letter") {
        const std::vector<double> p{0.5, 0.25, 0.25};
        const auto info = detect_periodicity(p);
        REQUIRE(info.periodic);
        CHECK(info.base == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(info.exponents == std::vector<long>{1, 2, 2});
    }
    SUBCASE("aperiodic instance, cross-checked by brute force") {
        const std::vector<double> p{0.5, 0.3, 0.2};
        const auto info = detect_periodicity(p);
        CHECK_FALSE(info.periodic);
        CHECK(info.base == doctest::Approx(std::exp(1.0)));
        // oracle: log .3 / log .5 has no rational approx with denominator <= 64
        const double r = std::log(0.3) / std::log(0.5);
        CHECK_FALSE(testsupport::has_rational_approx(r, 64, 1e-9));
    }
    SUBCASE("permutation invariance") {
        const std::vector<double> a{0.5, 0.25, 0.25};
        const std::vector<double> b{0.25, 0.5, 0.25};
        const auto ia = detect_periodicity(a);
        const auto ib = detect_periodicity(b);
        CHECK(ia.periodic == ib.periodic);
        CHECK(ia.base == doctest::Approx(ib.base).epsilon(1e-12));
        CHECK(ib.exponents == std::vector<long>{2, 1, 2});
        const std::vector<double> c{0.2, 0.3, 0.5};
        CHECK_FALSE(detect_periodicity(c).periodic);
    }
}

TEST_CASE("periodic certificates hold") {
    for (const auto& p :
         {std::vector<double>{0.5, 0.25, 0.25}, std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}}) {
        const auto info = detect_periodicity(p);
        REQUIRE(info.periodic);
        long g = 0;
        for (long e : info.exponents) g = std::gcd(g, e);
        CHECK(g == 1);
        for (std::size_t j = 0; j < p.size(); ++j)
            CHECK(std::abs(p[j] - std::pow(info.base, -static_cast<double>(info.exponents[j]))) <=
                  1e-9);
    }
}

TEST_CASE("roots_on_critical_line") {
    SUBCASE("aperiodic: single root regardless of K") {
        const auto params = validate_params({0.5, 0.3, 0.2}, 2);
        const auto roots = roots_on_critical_line(params, 10);
        CHECK(roots.betas.size() == 1);
        CHECK(roots.betas[0] == std::complex<double>{params.rho, 0.0});
        CHECK(roots.log_base == 1.0);
    }
    SUBCASE("uniform lattice with base A") {
        const auto params = validate_params({1.0 / 3, 1.0 / 3, 1.0 / 3}, 2);
        const auto roots = roots_on_critical_line(params, 1);
        REQUIRE(roots.betas.size() == 3);
        const double step = 2.0 * M_PI / std::log(3.0);
        CHECK(roots.betas[1].imag() == doctest::Approx(step).epsilon(1e-12));
        CHECK(roots.betas[2].imag() == doctest::Approx(-step).epsilon(1e-12));
        for (const auto& beta : roots.betas) CHECK(std::abs(p_func(params, beta)) <= 1e-9);
    }
    SUBCASE("K = 0 gives just rho") {
        const auto params = validate_params({0.5, 0.25, 0.25}, 2);
        CHECK(roots_on_critical_line(params, 0).betas.size() == 1);
    }
    SUBCASE("conjugate closure") {
        const auto params = validate_params({0.5, 0.25, 0.25}, 2);
        const auto roots = roots_on_critical_line(params, 5);
        for (std::size_t k = 1; k < roots.betas.size(); k += 2)
            CHECK(roots.betas[k] == std::conj(roots.betas[k + 1]));
    }
}

TEST_CASE("random valid instances satisfy the rho identity") {
    std::mt19937_64 gen(20240811);
    std::uniform_int_distribution<int> pick_m(1, 3), pick_a(2, 4);
    std::uniform_real_distribution<double> unit(0.05, 1.0);
    int built = 0;
    while (built < 100) {
        const int M = pick_m(gen), A = pick_a(gen);
        std::vector<double> p(A);
        double sum = 0.0;
        for (double& x : p) sum += x = unit(gen);
        double q2 = 0.0;
        for (double& x : p) {
            x /= sum;
            q2 += x * x;
        }
        if (q2 * M >= 0.98) continue;  // keep clear of the explosive boundary
        const auto params = validate_params(p, M);
        double acc = 0.0;
        for (double x : params.p) acc += std::pow(x, params.rho);
        CHECK(std::abs(params.M * acc - 1.0) <= 1e-10);
        CHECK(params.rho >= 1.0);
        CHECK(params.rho < 2.0);
        ++built;
    }
}
