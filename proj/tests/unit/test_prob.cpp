#include "doctest.h"

#include "collapse/error.hpp"
#include "collapse/prob.hpp"

#include <cmath>
#include <numeric>

using namespace collapse;

namespace {

double sample_mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("discrete distribution invariants") {
    CHECK_NOTHROW(DiscreteDistribution({0.25, 0.75}));
    CHECK_THROWS_AS(DiscreteDistribution({}), Error);
    CHECK_THROWS_AS(DiscreteDistribution({0.5, 0.6}), Error);
    CHECK_THROWS_AS(DiscreteDistribution({-0.1, 1.1}), Error);
    CHECK(DiscreteDistribution({0.0, 1.0, 0.0}).delta_state() == 1u);
    CHECK_FALSE(DiscreteDistribution({0.5, 0.5}).delta_state().has_value());
}

TEST_CASE("sample_discrete") {
    RngStream rng(7);
    SUBCASE("single state") { CHECK(sample_discrete(DiscreteDistribution({1.0}), 5, rng).counts() == std::vector<std::uint64_t>{5}); }
    SUBCASE("zero-mass state never sampled") {
        CHECK(sample_discrete(DiscreteDistribution({0.0, 1.0}), 7, rng).counts() == std::vector<std::uint64_t>{0, 7});
    }
    SUBCASE("fair coin at 1e6 draws within the binomial 3 sigma band") {
        auto c = sample_discrete(DiscreteDistribution({0.5, 0.5}), 1'000'000, rng);
        CHECK(c.total() == 1'000'000u);
        // 3·√(0.25/1e6) = 0.0015
        CHECK(std::abs(static_cast<double>(c[0]) / 1e6 - 0.5) < 0.002);
    }
    SUBCASE("m = 0 rejected") {
        try {
            sample_discrete(DiscreteDistribution({1.0}), 0, rng);
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::invalid_argument);
        }
    }
}

TEST_CASE("fit_discrete") {
    CHECK(fit_discrete(SampleCounts({3, 1})).probs() == std::vector<double>{0.75, 0.25});
    auto delta = fit_discrete(SampleCounts({5, 0}));
    CHECK(delta.probs() == std::vector<double>{1.0, 0.0});
    CHECK(delta.delta_state() == 0u);
    auto third = fit_discrete(SampleCounts({2, 2, 2}));
    for (double p : third.probs()) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(fit_discrete(SampleCounts({0, 0})), Error);
}

TEST_CASE("fit of sampled histogram converges") {
    const DiscreteDistribution d({0.1, 0.2, 0.3, 0.4});
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        RngStream rng(seed);
        auto fitted = fit_discrete(sample_discrete(d, 1'000'000, rng));
        for (std::size_t i = 0; i < d.size(); ++i) CHECK(std::abs(fitted[i] - d[i]) < 5e-3);
    }
}

TEST_CASE("tail_cutoff") {
    CHECK(tail_cutoff(DiscreteDistribution({0.5, 0.5}), 10).probs() == std::vector<double>{0.5, 0.5});
    CHECK(tail_cutoff(DiscreteDistribution({0.9, 0.05, 0.05}), 10).probs() == std::vector<double>{1.0, 0.0, 0.0});
    SUBCASE("m = 1 keeps only an existing delta") {
        CHECK(tail_cutoff(DiscreteDistribution({0.0, 1.0}), 1).probs() == std::vector<double>{0.0, 1.0});
        try {
            tail_cutoff(DiscreteDistribution({0.5, 0.5}), 1);
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::degenerate_cutoff);
        }
    }
    SUBCASE("strict threshold keeps probability exactly 1/m") {
        CHECK(tail_cutoff(DiscreteDistribution({0.25, 0.75}), 4).probs() == std::vector<double>{0.25, 0.75});
    }
    SUBCASE("idempotent") {
        RngStream rng(11);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<double> p(8);
            for (double& v : p) v = rng.uniform() * rng.uniform();
            double s = std::accumulate(p.begin(), p.end(), 0.0);
            for (double& v : p) v /= s;
            p.back() = 1.0 - std::accumulate(p.begin(), p.end() - 1, 0.0);
            if (p.back() < 0) continue;
            const std::uint64_t m = 2 + rng.uniform_index(30);
            DiscreteDistribution d(p);
            try {
                auto once = tail_cutoff(d, m);
                auto twice = tail_cutoff(once, m);
                for (std::size_t i = 0; i < p.size(); ++i) CHECK(twice[i] == doctest::Approx(once[i]).epsilon(1e-14));
            } catch (const Error& e) {
                CHECK(e.code() == ErrorCode::degenerate_cutoff);
            }
        }
    }
}

TEST_CASE("discretized heavy-tailed source") {
    auto t = discretize([](double x) { return 0.5 * student_t_pdf(x, -4, 1, 3) + 0.5 * student_t_pdf(x, 4, 1, 3); },
                        -20, 20, 200);
    auto g = discretize([](double x) { return std::exp(-0.5 * (x + 4) * (x + 4)) + std::exp(-0.5 * (x - 4) * (x - 4)); },
                        -20, 20, 200);
    // Mass beyond |x| > 10 is much larger for the Student-t mixture.
    double tail_t = 0, tail_g = 0;
    for (std::size_t b = 0; b < 50; ++b) {
        tail_t += t[b] + t[199 - b];
        tail_g += g[b] + g[199 - b];
    }
    CHECK(tail_t > 100 * tail_g);
    // Both lose their far tails to the same cutoff.
    auto ct = tail_cutoff(t, 100);
    auto cg = tail_cutoff(g, 100);
    CHECK(ct[0] == 0.0);
    CHECK(cg[0] == 0.0);
    CHECK(student_t_pdf(0, 0, 1, 1) == doctest::Approx(1.0 / M_PI).epsilon(1e-14));
}

TEST_CASE("fit_gaussian1d") {
    auto c = fit_gaussian1d(Dataset::scalar({5, 5, 5}));
    CHECK(c.mean == 5.0);
    CHECK(c.variance == 0.0);
    auto h = fit_gaussian1d(Dataset::scalar({1, 2, 3}));
    CHECK(h.mean == doctest::Approx(2.0));
    CHECK(h.variance == doctest::Approx(1.0));
    try {
        fit_gaussian1d(Dataset::scalar({1.0}));
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::insufficient_data);
    }
    CHECK_THROWS_AS(fit_gaussian1d(Dataset(2, {0, 0, 1, 1})), Error);
}

TEST_CASE("single-Gaussian estimation error") {
    RngStream rng(2023);
    SUBCASE("1e7 draws from N(0,1): |mean| < 1e-3") {
        auto fit = fit_gaussian1d(sample_gaussian1d({0.0, 1.0}, 10'000'000, rng));
        CHECK(std::abs(fit.mean) < 1e-3);
        CHECK(std::abs(fit.variance - 1.0) < 3e-3);
    }
    SUBCASE("std of the mean estimator scales as 1/sqrt(M)") {
        // Reduced-scale version of the 1e7-draw, 1e4-repeat experiment:
        // M = 1e4, 2000 repeats; expected 0.01 with ~1.6% relative MC error.
        std::vector<double> means;
        for (int r = 0; r < 2000; ++r) means.push_back(fit_gaussian1d(sample_gaussian1d({0.0, 1.0}, 10'000, rng)).mean);
        const double mu = sample_mean(means);
        double var = 0;
        for (double m : means) var += (m - mu) * (m - mu);
        var /= means.size() - 1;
        CHECK(std::sqrt(var) == doctest::Approx(0.01).epsilon(0.06));
    }
}

TEST_CASE("fit_gaussian1d is unbiased") {
    RngStream rng(99);
    const int reps = 10'000;
    double mean_sum = 0, var_sum = 0;
    for (int r = 0; r < reps; ++r) {
        auto f = fit_gaussian1d(sample_gaussian1d({3.0, 4.0}, 10, rng));
        mean_sum += f.mean;
        var_sum += f.variance;
    }
    CHECK(std::abs(mean_sum / reps - 3.0) < 3.0 * (2.0 / std::sqrt(10.0 * reps)));
    CHECK(std::abs(var_sum / reps - 4.0) < 0.4);
}

TEST_CASE("sample_gaussian1d") {
    RngStream rng(5);
    CHECK(sample_gaussian1d({0.0, 0.0}, 3, rng).values() == std::vector<double>{0, 0, 0});
    auto d = sample_gaussian1d({2.0, 1.0}, 100'000, rng);
    CHECK(std::abs(sample_mean(d.values()) - 2.0) < 0.01);
    RngStream a(42), b(42);
    CHECK(sample_gaussian1d({1.0, 2.0}, 1000, a) == sample_gaussian1d({1.0, 2.0}, 1000, b));
    CHECK_THROWS_AS(sample_gaussian1d({0.0, -1.0}, 3, rng), Error);
}

TEST_CASE("fit_gaussian_nd") {
    auto two = fit_gaussian_nd(Dataset(2, {0, 0, 2, 2}));
    CHECK(two.mean.isApprox(Vector::Constant(2, 1.0)));
    Matrix expected(2, 2);
    expected << 2, 2, 2, 2;
    CHECK(two.covariance.isApprox(expected));
    auto flat = fit_gaussian_nd(Dataset(2, {1, 3, 1, 3, 1, 3}));
    CHECK(flat.covariance.isZero());
    CHECK_THROWS_AS(fit_gaussian_nd(Dataset(2, {1, 3})), Error);

    RngStream rng(17);
    GaussianND standard{Vector::Zero(2), Matrix::Identity(2, 2)};
    auto fit = fit_gaussian_nd(sample_gaussian_nd(standard, 100'000, rng));
    CHECK(fit.mean.norm() < 0.02);
    CHECK((fit.covariance - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.03);
}

TEST_CASE("sample_gaussian_nd") {
    RngStream rng(3);
    GaussianND point{Vector::Constant(3, 1.5), Matrix::Zero(3, 3)};
    auto d = sample_gaussian_nd(point, 4, rng);
    for (double v : d.values()) CHECK(v == 1.5);

    SUBCASE("singular covariance samples on its support") {
        Matrix cov(2, 2);
        cov << 1, 1, 1, 1;
        auto s = sample_gaussian_nd({Vector::Zero(2), cov}, 1000, rng);
        for (std::size_t j = 0; j < s.size(); ++j) CHECK(s.point(j)[0] == doctest::Approx(s.point(j)[1]).epsilon(1e-9));
    }
    SUBCASE("identity covariance component variances") {
        auto s = sample_gaussian_nd({Vector::Zero(2), Matrix::Identity(2, 2)}, 100'000, rng);
        auto f = fit_gaussian_nd(s);
        CHECK(std::abs(f.covariance(0, 0) - 1.0) < 0.03);
        CHECK(std::abs(f.covariance(1, 1) - 1.0) < 0.03);
    }
    SUBCASE("non-PSD covariance rejected") {
        Matrix cov(2, 2);
        cov << 1, 2, 2, 1;
        try {
            sample_gaussian_nd({Vector::Zero(2), cov}, 3, rng);
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::invalid_model);
        }
    }
    SUBCASE("determinism") {
        Matrix cov(2, 2);
        cov << 2, 0.5, 0.5, 1;
        RngStream a(9), b(9);
        CHECK(sample_gaussian_nd({Vector::Ones(2), cov}, 500, a) == sample_gaussian_nd({Vector::Ones(2), cov}, 500, b));
    }
}

TEST_CASE("rng substreams") {
    RngStream root(1);
    RngStream s1 = root.substream(1), s1b = root.substream(1), s2 = root.substream(2);
    CHECK(s1.seed() == s1b.seed());
    CHECK(s1.seed() != s2.seed());
    CHECK(s1.normal() == s1b.normal());
    // Deriving a substream leaves the parent untouched.
    RngStream x(5), y(5);
    (void)x.substream(3);
    CHECK(x.uniform() == y.uniform());
}
