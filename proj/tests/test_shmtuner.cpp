#include "doctest.h"

#include <cmath>
#include <random>

#include "driver_util.hpp"
#include "test_util.hpp"
#include "tinyzone/shmtuner.hpp"

using namespace tinyzone;
using testutil::rel_err;

TEST_CASE("fit_power_law recovers exact power laws") {
    // y = 2 * x^-1 at x in {1, 2, 4}
    std::vector<SweepPoint> points = {{1, 2.0}, {2, 1.0}, {4, 0.5}};
    FitResult fit = fit_power_law(points);
    CHECK(rel_err(fit.alpha, 2.0) < 1e-9);
    CHECK(std::abs(fit.beta - (-1.0)) < 1e-9);
    CHECK(std::abs(fit.r_squared - 1.0) < 1e-12);

    // noise-free recovery across a realistic grid
    for (double alpha : {0.5, 10.0, 179.42}) {
        for (double beta : {-0.3, -0.82, -1.5}) {
            std::vector<SweepPoint> pts;
            for (std::uint64_t u = 1; u <= 1024; u *= 4)
                pts.push_back({u, alpha * std::pow(static_cast<double>(u), beta)});
            FitResult f = fit_power_law(pts);
            CHECK(rel_err(f.alpha, alpha) < 1e-9);
            CHECK(std::abs(f.beta - beta) < 1e-9);
            CHECK(std::abs(f.r_squared - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("fit_power_law error cases") {
    CHECK_THROWS_AS(fit_power_law({{1, 2.0}}), FitError);
    CHECK_THROWS_AS(fit_power_law({{1, 2.0}, {2, 0.0}}), FitError);
    CHECK_THROWS_AS(fit_power_law({{2, 1.0}, {2, 1.0}}), FitError);
    // constant delays: beta = 0, no decreasing trend
    CHECK_THROWS_AS(fit_power_law({{1, 3.0}, {2, 3.0}, {4, 3.0}}), FitError);
}

TEST_CASE("fit recovery under 1% multiplicative noise") {
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> noise(-0.01, 0.01);
    int ok = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<SweepPoint> pts;
        for (std::uint64_t u = 1; u <= 4096; u *= 2)
            pts.push_back({u, 179.42 * std::pow(static_cast<double>(u), -0.82) * (1.0 + noise(rng))});
        FitResult fit = fit_power_law(pts);
        if (rel_err(fit.alpha, 179.42) < 0.05 && std::abs(fit.beta - (-0.82)) < 0.02) ++ok;
    }
    CHECK(ok >= 95);
}

TEST_CASE("optimal_shm_size closed-form solutions") {
    SUBCASE("published fit lands within a unit of 776 KB") {
        OptimalShm opt = optimal_shm_size({179.42, -0.82, 1.0}, -0.01);
        CHECK(opt.units_exact == doctest::Approx(195.06).epsilon(1e-3));
        CHECK(opt.units == 195);
        CHECK(opt.bytes == 195 * 4096);
        CHECK(opt.bytes >= 776 * 1024);
        CHECK(opt.bytes <= 780 * 1024);
        CHECK(rel_err(opt.predicted_delay_s, 2.387) < 0.01);
    }
    SUBCASE("alpha=2 beta=-1 gives sqrt(200) units") {
        OptimalShm opt = optimal_shm_size({2.0, -1.0, 1.0}, -0.01);
        CHECK(opt.units_exact == doctest::Approx(std::sqrt(200.0)).epsilon(1e-9));
        CHECK(opt.units == 14);
        CHECK(opt.bytes == 57344);
    }
    SUBCASE("derivative already below threshold clamps to one unit") {
        OptimalShm opt = optimal_shm_size({0.0001, -1.0, 1.0}, -0.01);
        CHECK(opt.units == 1);
        CHECK(opt.bytes == 4096);
    }
    SUBCASE("domain errors") {
        CHECK_THROWS_AS(optimal_shm_size({2.0, 0.5, 1.0}, -0.01), DomainError);
        CHECK_THROWS_AS(optimal_shm_size({2.0, -1.0, 1.0}, 0.01), DomainError);
    }
}

TEST_CASE("optimal size scales consistently with alpha") {
    FitResult base{3.0, -0.7, 1.0};
    OptimalShm a = optimal_shm_size(base, -0.01);
    for (double c : {2.0, 10.0, 0.5}) {
        FitResult scaled{base.alpha * c, base.beta, 1.0};
        OptimalShm b = optimal_shm_size(scaled, -0.01);
        double expected = a.units_exact * std::pow(c, 1.0 / (1.0 - base.beta));
        CHECK(rel_err(b.units_exact, expected) < 1e-9);
    }
}

TEST_CASE("derivative at the chosen size brackets the threshold") {
    auto derivative = [](const FitResult& f, double x) {
        return f.alpha * f.beta * std::pow(x, f.beta - 1.0);
    };
    for (double alpha : {5.0, 50.0, 179.42}) {
        for (double beta : {-0.4, -0.82, -1.2}) {
            FitResult fit{alpha, beta, 1.0};
            OptimalShm opt = optimal_shm_size(fit, -0.01);
            if (opt.units == 1) continue;  // clamped
            double lo = std::abs(derivative(fit, static_cast<double>(opt.units + 1)));
            double hi = std::abs(derivative(fit, static_cast<double>(opt.units > 1 ? opt.units - 1 : 1)));
            CHECK(lo <= 0.01 + 1e-12);
            CHECK(hi >= 0.01 - 1e-3);
        }
    }
}

TEST_CASE("sweep_transfer over simulated sessions") {
    GeneratedModel gen = gen_model(606, 3);
    std::uint64_t key = 12;
    EncryptedBlob blob = testutil::encrypt_model(gen, key, 5);
    InvokeCostModel model;

    SessionFactory factory = [&](std::uint64_t shm_bytes) {
        return open_session(testutil::make_plan(shm_bytes), model,
                            SessionOptions{false, key, false});
    };

    SUBCASE("single point") {
        auto points = sweep_transfer(factory, gen.spec, blob, {1});
        REQUIRE(points.size() == 1);
        CHECK(points[0].shm_units == 1);
        CHECK(points[0].delay_s > 0.0);
    }
    SUBCASE("delay matches the closed-form cost and never rises with size") {
        std::vector<std::uint64_t> units = {1, 2, 4, 8, 16};
        auto points = sweep_transfer(factory, gen.spec, blob, units);
        std::uint64_t total = blob_to_bytes(blob).size();
        for (std::size_t i = 0; i < points.size(); ++i) {
            double expected = simulate_transfer_delay_s(model, total, units[i] * kShmUnitBytes);
            CHECK(points[i].delay_s == doctest::Approx(expected).epsilon(1e-9));
            if (i > 0) CHECK(points[i].delay_s <= points[i - 1].delay_s + 1e-12);
        }
    }
    SUBCASE("unit list validation") {
        CHECK_THROWS_AS(sweep_transfer(factory, gen.spec, blob, {}), DomainError);
        CHECK_THROWS_AS(sweep_transfer(factory, gen.spec, blob, {4, 2}), DomainError);
        CHECK_THROWS_AS(sweep_transfer(factory, gen.spec, blob, {0, 2}), DomainError);
    }
}

TEST_CASE("simulate_transfer_delay_s matches the worked example") {
    // 10 MB at 1 MB chunks: 10 invokes of (1 ms fixed + 10 ms copy) = 0.11 s
    InvokeCostModel model{1.0, 0.0, 100.0e6};
    double delay = simulate_transfer_delay_s(model, 10'000'000, 1'000'000);
    CHECK(delay == doctest::Approx(0.11).epsilon(1e-12));
}
