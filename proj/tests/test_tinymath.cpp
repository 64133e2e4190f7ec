#include "doctest.h"

#include <cmath>

#include "test_util.hpp"
#include "tinyzone/error.hpp"
#include "tinyzone/tinymath.hpp"

using namespace tinyzone;
using testutil::rel_err;

TEST_CASE("t_sqrt basics") {
    CHECK(t_sqrt(4.0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(t_sqrt(0.0) == 0.0);
    CHECK(rel_err(t_sqrt(2.0), 1.4142135624) < 1e-6);
    CHECK_THROWS_AS(t_sqrt(-1.0), MathDomainError);
}

TEST_CASE("t_exp basics") {
    CHECK(t_exp(0.0) == 1.0);
    CHECK(rel_err(t_exp(1.0), 2.718281828) < 1e-6);
    CHECK(rel_err(t_exp(-1.0), 0.367879441) < 1e-6);
    CHECK_THROWS_AS(t_exp(701.0), MathDomainError);
    CHECK_THROWS_AS(t_exp(-701.0), MathDomainError);
}

TEST_CASE("t_log basics") {
    CHECK(t_log(1.0) == 0.0);
    CHECK(rel_err(t_log(2.718281828459045), 1.0) < 1e-6);
    CHECK(rel_err(t_log(10.0), 2.302585093) < 1e-6);
    CHECK_THROWS_AS(t_log(0.0), MathDomainError);
    CHECK_THROWS_AS(t_log(-3.0), MathDomainError);
}

TEST_CASE("t_sin basics") {
    CHECK(t_sin(0.0) == 0.0);
    CHECK(std::abs(t_sin(3.14159265358979323846 / 6.0) - 0.5) < 1e-6);
    // Frozen from the reference oracle: sin(100 rad).
    CHECK(std::abs(t_sin(100.0) - (-0.5063656411097588)) < 1e-6);
    CHECK_THROWS_AS(t_sin(1.1e4), MathDomainError);
}

TEST_CASE("t_floor basics") {
    CHECK(t_floor(2.7) == 2.0);
    CHECK(t_floor(-2.5) == -3.0);
    CHECK(t_floor(3.0) == 3.0);
    CHECK(t_floor(-0.0) == 0.0);
}

TEST_CASE("t_pow is exp of log") {
    CHECK(rel_err(t_pow(2.0, 10.0), 1024.0) < 1e-9);
    CHECK(rel_err(t_pow(195.0, -0.82), std::pow(195.0, -0.82)) < 1e-9);
    CHECK(t_pow(0.0, 3.0) == 0.0);
    CHECK(t_pow(0.0, 0.0) == 1.0);
    CHECK_THROWS_AS(t_pow(-2.0, 2.0), MathDomainError);
    CHECK_THROWS_AS(t_pow(0.0, -1.0), MathDomainError);
}

// Oracle sweeps: 1e5 points per function against the host math library.
TEST_CASE("oracle sweep sqrt/exp/log/sin") {
    const int n = 100000;

    double worst_sqrt = 0, worst_exp = 0, worst_log = 0, worst_sin = 0;
    for (int i = 0; i < n; ++i) {
        double t = static_cast<double>(i) / (n - 1);

        // log-spaced over [1e-30, 1e30]
        double x = std::pow(10.0, -30.0 + 60.0 * t);
        worst_sqrt = std::max(worst_sqrt, rel_err(t_sqrt(x), std::sqrt(x)));
        worst_log = std::max(worst_log, rel_err(t_log(x), std::log(x)));

        double xe = -700.0 + 1400.0 * t;
        worst_exp = std::max(worst_exp, rel_err(t_exp(xe), std::exp(xe)));

        double xs = -1.0e4 + 2.0e4 * t;
        worst_sin = std::max(worst_sin, std::abs(t_sin(xs) - std::sin(xs)));
    }
    CHECK(worst_sqrt < 1e-6);
    CHECK(worst_exp < 1e-6);
    CHECK(worst_log < 1e-6);
    CHECK(worst_sin < 1e-6);
}

TEST_CASE("identities") {
    for (double x : {1e-3, 0.1, 1.0, 7.5, 42.0, 1e3}) {
        CHECK(rel_err(t_exp(t_log(x)), x) < 1e-5);
        double s = t_sqrt(x);
        CHECK(rel_err(s * s, x) < 1e-6);
    }
    // odd symmetry is structural, so it holds exactly
    for (double x : {0.5, 3.0, 99.9, 5000.0}) CHECK(t_sin(-x) == -t_sin(x));
}
