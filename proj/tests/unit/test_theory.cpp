#include "doctest.h"

#include "collapse/error.hpp"
#include "collapse/theory.hpp"

#include <cmath>
#include <numbers>

using namespace collapse;

TEST_CASE("sample schedule") {
    CHECK_THROWS_AS(SampleSchedule({10, 1}), Error);
    auto q = SampleSchedule::polynomial(100, 2.0, 4);
    CHECK(q.sizes() == std::vector<std::uint64_t>{100, 400, 900, 1600});
    CHECK(q.prefix(2).sizes() == std::vector<std::uint64_t>{100, 400});
}

TEST_CASE("predicted_variance") {
    CHECK(predicted_variance(3.0, SampleSchedule{}) == 3.0);
    CHECK(predicted_variance(1.0, SampleSchedule::constant(100, 50)) == doctest::Approx(1.5));
    CHECK(predicted_variance(2.0, SampleSchedule({10, 20})) == doctest::Approx(2.3));
    CHECK_THROWS_AS(predicted_variance(-1.0, SampleSchedule{}), Error);
}

TEST_CASE("predicted_risk_mean") {
    CHECK(predicted_risk_mean(1.0, SampleSchedule::constant(100, 10)) == doctest::Approx(0.15));
    CHECK(predicted_risk_mean(1.0, SampleSchedule{}) == 0.0);
    CHECK(predicted_risk_mean(4.0, SampleSchedule({2, 2})) == doctest::Approx(6.0));

    SUBCASE("monotone in n") {
        auto s = SampleSchedule::polynomial(3, 1.3, 200);
        double prev = 0;
        for (std::size_t n = 0; n <= s.size(); ++n) {
            const double v = predicted_risk_mean(1.0, s.prefix(n));
            CHECK(v >= prev);
            prev = v;
        }
    }
    SUBCASE("constant schedules diverge, quadratic ones converge") {
        const std::size_t n = 1'000'000;
        const double constant = predicted_risk_mean(1.0, SampleSchedule::constant(100, n));
        CHECK(constant == doctest::Approx(1.5 * n / 100.0));
        const double quad = predicted_risk_mean(1.0, SampleSchedule::polynomial(100, 2.0, n));
        CHECK(quad < 1.5 * std::numbers::pi * std::numbers::pi / 6.0 / 100.0);
        CHECK(quad > 1.5 * (std::numbers::pi * std::numbers::pi / 6.0 - 1e-5) / 100.0);
    }
}

TEST_CASE("predicted_risk_variance") {
    CHECK(predicted_risk_variance(1.0, SampleSchedule({100})) == doctest::Approx(1.5e-4));
    CHECK(predicted_risk_variance(1.0, SampleSchedule{}) == 0.0);
    CHECK(predicted_risk_variance(1.0, SampleSchedule({100, 100})) == doctest::Approx(7e-4));
    CHECK(predicted_risk_variance(2.0, SampleSchedule({100})) == doctest::Approx(6e-4));
    // Brute force over ordered pairs i ≠ j.
    SampleSchedule s({10, 20, 40, 80});
    double diag = 0, cross = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        diag += 3.0 / (double(s[i]) * double(s[i]));
        for (std::size_t j = 0; j < s.size(); ++j)
            if (i != j) cross += 4.0 / (double(s[i]) * double(s[j]));
    }
    CHECK(predicted_risk_variance(1.0, s) == doctest::Approx(0.5 * (diag + cross)).epsilon(1e-14));
}

TEST_CASE("noisy_lower_bound") {
    CHECK(noisy_lower_bound(2.0, SampleSchedule({10, 10}), {0.0, 0.0}) == doctest::Approx(0.4));
    CHECK(noisy_lower_bound(2.0, SampleSchedule({10, 10}), {0.01, 0.01}) == doctest::Approx(0.42));
    CHECK_THROWS_AS(noisy_lower_bound(2.0, SampleSchedule({10, 10}), {0.01}), Error);

    SUBCASE("quadratic schedule partial sums stay under the Basel bound") {
        auto s = SampleSchedule::polynomial(100, 2.0, 10'000);
        std::vector<double> zero(s.size(), 0.0);
        for (std::size_t n : {1u, 10u, 100u, 1000u, 10000u}) {
            std::vector<double> z(n, 0.0);
            CHECK(noisy_lower_bound(1.0, s.prefix(n), z) <= std::numbers::pi * std::numbers::pi / 6.0 / 100.0);
        }
    }
}

TEST_CASE("noisy_lower_bound_bounded") {
    SampleSchedule s({100, 100, 100});
    std::vector<double> eps{0.001, 0.002, 0.003};
    auto zero_k = noisy_lower_bound_bounded(2.0, s, eps, 0.0, 2);
    CHECK(zero_k.back() == doctest::Approx(noisy_lower_bound(2.0, s, eps)));
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(zero_k[i] == doctest::Approx(noisy_lower_bound(2.0, s.prefix(i + 1), {eps.begin(), eps.begin() + i + 1})));

    // TrΣ = 1, N = 1, K = 1, M = 100: correction 2/1000 per step.
    auto one = noisy_lower_bound_bounded(1.0, SampleSchedule({100}), {0.0}, 1.0, 1);
    CHECK(one[0] == doctest::Approx(0.01 - 0.002));

    auto weak = noisy_lower_bound_bounded(1.0, SampleSchedule({2, 2, 2}), {0, 0, 0}, 100.0, 4);
    CHECK(weak[1] < weak[0]);
    CHECK(std::isfinite(weak[2]));
}

TEST_CASE("construction_sample") {
    RngStream rng(31);
    SUBCASE("n = 0 is plain normal sampling") {
        ConstructionDraws draws;
        auto d = construction_sample(1.0, 2.0, SampleSchedule{}, 100'000, rng, &draws);
        CHECK(draws.z_shared.empty());
        double mean = 0, var = 0;
        for (double v : d.values()) mean += v;
        mean /= d.size();
        for (double v : d.values()) var += (v - mean) * (v - mean);
        var /= d.size() - 1;
        CHECK(std::abs(mean - 1.0) < 3 * 2.0 / std::sqrt(1e5));
        CHECK(std::abs(var - 4.0) < 3 * 4.0 * std::sqrt(2.0 / 1e5));
    }
    SUBCASE("scaled gamma factors have mean one") {
        for (std::uint64_t m : {5u, 100u}) {
            double sum = 0, sum_sq = 0;
            const int n = 100'000;
            for (int i = 0; i < n; ++i) {
                const double s = draw_scaled_gamma(m, rng);
                CHECK(s > 0);
                sum += s;
                sum_sq += s * s;
            }
            const double mean = sum / n;
            const double sd = std::sqrt(sum_sq / n - mean * mean);
            CHECK(std::abs(mean - 1.0) < 3 * sd / std::sqrt(n));
            // Var[S] = 2/(M−1)
            CHECK(sd * sd == doctest::Approx(2.0 / (m - 1)).epsilon(0.05));
        }
    }
    SUBCASE("one generation: mean μ and variance σ²(1 + 1/M_0)") {
        const int trajectories = 100'000;
        SampleSchedule s({10});
        double sum = 0, sum_sq = 0;
        for (int t = 0; t < trajectories; ++t) {
            const double x = construction_sample(0.5, 1.0, s, 1, rng).values()[0];
            sum += x;
            sum_sq += x * x;
        }
        const double mean = sum / trajectories;
        const double var = sum_sq / trajectories - mean * mean;
        const double predicted = predicted_variance(1.0, s);
        CHECK(std::abs(mean - 0.5) < 3 * std::sqrt(predicted / trajectories));
        // Var of the sample variance ≈ 2σ⁴/n for near-normal data; allow the
        // heavier variance-gamma tails a factor 1.5.
        CHECK(std::abs(var - predicted) < 3 * 1.5 * predicted * std::sqrt(2.0 / trajectories));
    }
    SUBCASE("shared terms are common to every emitted value") {
        ConstructionDraws draws;
        auto d = construction_sample(0.0, 1.0, SampleSchedule({50, 50, 50}), 20'000, rng, &draws);
        CHECK(draws.z_shared.size() == 3);
        CHECK(draws.s_factors.size() == 3);
        double shift = 0, sp = 1;
        for (std::size_t i = 0; i < 3; ++i) {
            shift += std::sqrt(sp / 50.0) * draws.z_shared[i];
            sp *= draws.s_factors[i];
        }
        double mean = 0;
        for (double v : d.values()) mean += v;
        mean /= d.size();
        CHECK(std::abs(mean - shift) < 4 * std::sqrt(sp / 20'000.0));
        CHECK(d.generation() == 3);
    }
}
