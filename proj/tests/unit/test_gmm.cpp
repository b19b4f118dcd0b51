#include "doctest.h"

#include "collapse/error.hpp"
#include "collapse/gmm.hpp"

#include <cmath>
#include <numbers>

using namespace collapse;

namespace {

GaussianND g1(double mean, double var) { return {Vector::Constant(1, mean), Matrix::Constant(1, 1, var)}; }

double normal_pdf(double x, double mu, double var) {
    return std::exp(-0.5 * (x - mu) * (x - mu) / var) / std::sqrt(2 * std::numbers::pi * var);
}

GmmModel two_clusters() { return {{0.5, 0.5}, {g1(-4, 1), g1(4, 1)}}; }

}  // namespace

TEST_CASE("gmm_pdf") {
    const double zero = 0.0;
    CHECK(gmm_pdf(single_component(g1(0, 1)), {&zero, 1}) == doctest::Approx(1.0 / std::sqrt(2 * std::numbers::pi)));
    // 0.5·N(0; −4, 1) + 0.5·N(0; 4, 1) = N(4; 0, 1)
    CHECK(gmm_pdf(two_clusters(), {&zero, 1}) == doctest::Approx(normal_pdf(4, 0, 1)).epsilon(1e-12));
    CHECK(normal_pdf(4, 0, 1) == doctest::Approx(0.000134).epsilon(0.01));

    GmmModel ignore_second{{1.0, 0.0}, {g1(0, 1), g1(100, 5)}};
    for (double x : {-2.0, 0.3, 1.7})
        CHECK(gmm_pdf(ignore_second, {&x, 1}) == doctest::Approx(normal_pdf(x, 0, 1)).epsilon(1e-12));

    SUBCASE("integrates to one on [-15, 15]") {
        const int n = 30001;
        const double h = 30.0 / (n - 1);
        double sum = 0;
        for (int i = 0; i < n; ++i) {
            const double x = -15 + i * h;
            sum += ((i == 0 || i == n - 1) ? 0.5 : 1.0) * gmm_pdf(two_clusters(), {&x, 1});
        }
        CHECK(std::abs(sum * h - 1.0) < 1e-4);
    }
    SUBCASE("singular component evaluated with floored covariance") {
        const double x = 0.0;
        const double p = gmm_pdf(single_component(g1(0, 0)), {&x, 1});
        CHECK(std::isfinite(p));
        CHECK(p == doctest::Approx(1.0 / std::sqrt(2 * std::numbers::pi * kCovarianceFloor)));
    }
    SUBCASE("2-D density matches product of marginals for diagonal covariance") {
        Matrix cov(2, 2);
        cov << 1, 0, 0, 4;
        GmmModel m = single_component({Vector::Zero(2), cov});
        const double pt[2] = {0.5, -1.0};
        CHECK(gmm_pdf(m, pt) == doctest::Approx(normal_pdf(0.5, 0, 1) * normal_pdf(-1.0, 0, 4)).epsilon(1e-12));
    }
}

TEST_CASE("gmm validation") {
    GmmModel bad{{0.4, 0.4}, {g1(0, 1), g1(1, 1)}};
    CHECK_THROWS_AS(bad.validate(), Error);
    GmmModel mixed{{0.5, 0.5}, {g1(0, 1), {Vector::Zero(2), Matrix::Identity(2, 2)}}};
    CHECK_THROWS_AS(mixed.validate(), Error);
    CHECK_NOTHROW(two_clusters().validate());
    CHECK(two_clusters().mixture_covariance()(0, 0) == doctest::Approx(17.0));
}

TEST_CASE("gmm_fit_em") {
    RngStream rng(2024);
    const Dataset data = sample_gmm(two_clusters(), 1000, rng);

    SUBCASE("recovers well-separated clusters from means ±1") {
        GmmModel init{{0.5, 0.5}, {g1(-1, 1), g1(1, 1)}};
        auto res = gmm_fit_em(data, init, {200, 1e-10});
        CHECK(res.converged);
        double lo = std::min(res.model.components[0].mean[0], res.model.components[1].mean[0]);
        double hi = std::max(res.model.components[0].mean[0], res.model.components[1].mean[0]);
        CHECK(std::abs(lo + 4) < 0.1);
        CHECK(std::abs(hi - 4) < 0.1);
    }
    SUBCASE("single component equals the closed-form ML fit") {
        auto res = gmm_fit_em(data, single_component(g1(0, 1)), {5, 0.0});
        auto unbiased = fit_gaussian_nd(data);
        const double m = static_cast<double>(data.size());
        CHECK(res.model.components[0].mean[0] == doctest::Approx(unbiased.mean[0]).epsilon(1e-12));
        CHECK(res.model.components[0].covariance(0, 0) ==
              doctest::Approx(unbiased.covariance(0, 0) * (m - 1) / m).epsilon(1e-10));
    }
    SUBCASE("max_iters = 0 returns init") {
        GmmModel init{{0.3, 0.7}, {g1(-1, 2), g1(1, 3)}};
        auto res = gmm_fit_em(data, init, {0, 1e-6});
        CHECK(res.iterations == 0);
        CHECK(res.model.weights == init.weights);
        CHECK(res.model.components[0].mean == init.components[0].mean);
        CHECK(res.model.components[1].covariance == init.components[1].covariance);
    }
    SUBCASE("log-likelihood never decreases") {
        GmmModel init{{0.5, 0.5}, {g1(-0.5, 4), g1(0.5, 4)}};
        double prev = -1e300;
        for (int it = 1; it <= 20; ++it) {
            auto res = gmm_fit_em(data, init, {it, -1e300});
            CHECK(res.mean_log_likelihood >= prev - 1e-12);
            prev = res.mean_log_likelihood;
        }
    }
    SUBCASE("empty component is retained and flagged") {
        GmmModel init{{0.5, 0.5}, {g1(0, 1), g1(1e6, 1e-6)}};
        auto res = gmm_fit_em(data, init, {10, 1e-8});
        REQUIRE(res.empty_components.size() == 2);
        CHECK(res.empty_components[1]);
        CHECK(res.model.weights[1] == 0.0);
        CHECK(res.model.components[1].mean[0] == 1e6);
        CHECK(res.model.components[1].covariance(0, 0) >= kCovarianceFloor);
        CHECK_NOTHROW(res.model.validate());
    }
    SUBCASE("too few points") {
        try {
            gmm_fit_em(Dataset::scalar({1.0}), two_clusters());
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::insufficient_data);
        }
    }
}

TEST_CASE("sample_gmm follows the weights") {
    RngStream rng(8);
    GmmModel m{{0.2, 0.8}, {g1(-10, 1), g1(10, 1)}};
    auto d = sample_gmm(m, 50'000, rng);
    std::size_t left = 0;
    for (double v : d.values()) left += v < 0;
    // 3σ = 3·√(0.16/5e4) ≈ 0.0054
    CHECK(std::abs(left / 5e4 - 0.2) < 0.0054);
    GmmModel zero_first{{0.0, 1.0}, {g1(-10, 1), g1(10, 1)}};
    for (double v : sample_gmm(zero_first, 1000, rng).values()) CHECK(v > 0);
}
