#include "doctest.h"

#include "collapse/error.hpp"
#include "collapse/metrics.hpp"

#include <cmath>
#include <numbers>

using namespace collapse;

namespace {

GaussianND g1(double mean, double var) { return {Vector::Constant(1, mean), Matrix::Constant(1, 1, var)}; }

Matrix random_spd(RngStream& rng, int n) {
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
    return a * a.transpose() + 0.01 * Matrix::Identity(n, n);
}

// Independent route: Tr((A^{1/2} B A^{1/2})^{1/2}) = Σ √λ(AB), since AB is
// similar to A^{1/2} B A^{1/2}.
double gelbrich_via_product_eigenvalues(const GaussianND& a, const GaussianND& b) {
    Eigen::EigenSolver<Matrix> es(a.covariance * b.covariance);
    double root_trace = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) root_trace += std::sqrt(std::max(es.eigenvalues()[i].real(), 0.0));
    return (a.mean - b.mean).squaredNorm() + a.covariance.trace() + b.covariance.trace() - 2 * root_trace;
}

// ∫ N(x; μa, Σa) N(x; μb, Σb) dx = N(μa; μb, Σa + Σb)
double gaussian_overlap(const GaussianND& a, const GaussianND& b) {
    const Matrix s = a.covariance + b.covariance;
    const Vector d = a.mean - b.mean;
    const double n = static_cast<double>(d.size());
    return std::exp(-0.5 * d.dot(s.ldlt().solve(d))) / std::sqrt(std::pow(2 * std::numbers::pi, n) * s.determinant());
}

double l2_closed_form(const GmmModel& a, const GmmModel& b) {
    auto cross = [](const GmmModel& x, const GmmModel& y) {
        double s = 0;
        for (std::size_t i = 0; i < x.size(); ++i)
            for (std::size_t j = 0; j < y.size(); ++j)
                s += x.weights[i] * y.weights[j] * gaussian_overlap(x.components[i], y.components[j]);
        return s;
    };
    return std::sqrt(std::max(cross(a, a) + cross(b, b) - 2 * cross(a, b), 0.0));
}

GmmModel random_mixture(RngStream& rng) {
    double w = 0.2 + 0.6 * rng.uniform();
    return {{w, 1 - w}, {g1(-3 + 6 * rng.uniform(), 0.5 + rng.uniform()), g1(-3 + 6 * rng.uniform(), 0.5 + rng.uniform())}};
}

}  // namespace

TEST_CASE("w2_gaussian1d") {
    CHECK(w2_gaussian1d({0, 1}, {0, 1}).w2_squared == 0.0);
    CHECK(w2_gaussian1d({0, 1}, {1, 1}).w2_squared == doctest::Approx(1.0));
    auto r = w2_gaussian1d({0, 4}, {0, 1});
    CHECK(r.w2_squared == doctest::Approx(1.0));
    CHECK(r.sigma_error_sq == doctest::Approx(1.0));
    CHECK(r.mean_error_sq == 0.0);
    RngStream rng(1);
    for (int i = 0; i < 100; ++i) {
        auto s = w2_gaussian1d({rng.normal(), rng.uniform() * 3}, {rng.normal(), rng.uniform() * 3});
        CHECK(std::abs(s.w2_squared - (s.mean_error_sq + s.sigma_error_sq)) < 1e-12);
    }
}

TEST_CASE("gelbrich_lower_bound") {
    GaussianND a{Vector::Zero(2), Matrix::Identity(2, 2)};
    CHECK(gelbrich_lower_bound(a, a) == doctest::Approx(0.0));

    Matrix d14(2, 2);
    d14 << 1, 0, 0, 4;
    // 7 − 2·(1 + 2) = 1
    CHECK(gelbrich_lower_bound({Vector::Zero(2), d14}, a) == doctest::Approx(1.0).epsilon(1e-12));

    RngStream rng(4);
    SUBCASE("N = 1 reduces to exact W2²") {
        for (int i = 0; i < 200; ++i) {
            Gaussian1D x{rng.normal(), 3 * rng.uniform()}, y{rng.normal(), 3 * rng.uniform()};
            CHECK(std::abs(gelbrich_lower_bound(g1(x.mean, x.variance), g1(y.mean, y.variance)) -
                           w2_gaussian1d(x, y).w2_squared) < 1e-9);
        }
    }
    SUBCASE("matches the product-eigenvalue route, symmetric, above the mean term") {
        for (int i = 0; i < 200; ++i) {
            const int n = 1 + static_cast<int>(rng.uniform_index(4));
            GaussianND x{Vector::Random(n), random_spd(rng, n)}, y{Vector::Random(n), random_spd(rng, n)};
            const double ab = gelbrich_lower_bound(x, y);
            CHECK(ab == doctest::Approx(gelbrich_via_product_eigenvalues(x, y)).epsilon(1e-8));
            CHECK(std::abs(ab - gelbrich_lower_bound(y, x)) < 1e-9);
            CHECK(ab >= (x.mean - y.mean).squaredNorm());
        }
    }
    SUBCASE("singular covariances stay well-defined") {
        GaussianND p{Vector::Zero(2), Matrix::Zero(2, 2)};
        CHECK(gelbrich_lower_bound(p, a) == doctest::Approx(2.0));
    }
    SUBCASE("errors") {
        Matrix bad(2, 2);
        bad << 1, 3, 3, 1;
        try {
            gelbrich_lower_bound({Vector::Zero(2), bad}, a);
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::invalid_model);
        }
        CHECK_THROWS_AS(gelbrich_lower_bound(g1(0, 1), a), Error);
    }
}

TEST_CASE("l2_distance_gmm") {
    const GmmModel a = single_component(g1(0, 1));
    const GmmModel far = single_component(g1(10, 1));
    GridSpec grid{Vector::Constant(1, -20), Vector::Constant(1, 30), 4001};

    CHECK(l2_distance_gmm(a, a, grid) < 1e-12);
    // Negligible overlap: √(2·1/(2√π))
    const double expected = std::sqrt(2.0 / (2.0 * std::sqrt(std::numbers::pi)));
    CHECK(std::abs(l2_distance_gmm(a, far, grid) - expected) < 1e-3);
    CHECK(std::abs(l2_distance_gmm(a, far, grid) - l2_closed_form(a, far)) < 1e-9);

    SUBCASE("refinement changes the result by less than 1e-4") {
        GridSpec fine = grid;
        fine.points_per_dim = 8001;
        CHECK(std::abs(l2_distance_gmm(a, far, grid) - l2_distance_gmm(a, far, fine)) < 1e-4);
    }
    SUBCASE("grid that truncates mass is rejected") {
        GridSpec small{Vector::Constant(1, -2), Vector::Constant(1, 2), 101};
        try {
            l2_distance_gmm(a, a, small);
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::grid_too_small);
        }
    }
    SUBCASE("default grid agrees with the closed form and the triangle inequality holds") {
        RngStream rng(12);
        for (int t = 0; t < 20; ++t) {
            auto x = random_mixture(rng), y = random_mixture(rng), z = random_mixture(rng);
            const double xy = l2_distance_gmm(x, y, default_l2_grid(x, y));
            const double yz = l2_distance_gmm(y, z, default_l2_grid(y, z));
            const double xz = l2_distance_gmm(x, z, default_l2_grid(x, z));
            CHECK(std::abs(xy - l2_closed_form(x, y)) < 1e-6);
            CHECK(xz <= xy + yz + 1e-6);
        }
    }
    SUBCASE("two-dimensional grid") {
        Matrix cov = Matrix::Identity(2, 2);
        GmmModel p = single_component({Vector::Zero(2), cov});
        GmmModel q = single_component({Vector::Constant(2, 1.0), cov});
        GridSpec g2{Vector::Constant(2, -8), Vector::Constant(2, 9), 301};
        CHECK(l2_distance_gmm(p, q, g2) == doctest::Approx(l2_closed_form(p, q)).epsilon(1e-6));
    }
    SUBCASE("default grid resolves a narrow component") {
        GmmModel narrow = single_component(g1(0.3, 1e-4));
        const double d = l2_distance_gmm(a, narrow, default_l2_grid(a, narrow));
        CHECK(d == doctest::Approx(l2_closed_form(a, narrow)).epsilon(1e-6));
    }
}

TEST_CASE("lost_state_fraction") {
    CHECK(lost_state_fraction(DiscreteDistribution({0.5, 0.5}), SampleCounts({1, 3})) == 0.0);
    CHECK(lost_state_fraction(DiscreteDistribution({0.9, 0.1}), SampleCounts({5, 0})) == doctest::Approx(0.1));
    CHECK_THROWS_AS(lost_state_fraction(DiscreteDistribution({1.0}), SampleCounts({1, 0})), Error);

    // Uniform over 100 states, m = 10: E = Σ p(1−p)^m = 0.99^10
    const DiscreteDistribution uniform(std::vector<double>(100, 0.01));
    const double closed = 100 * 0.01 * std::pow(0.99, 10);
    CHECK(closed == doctest::Approx(0.904).epsilon(1e-3));
    RngStream rng(21);
    double sum = 0, sum_sq = 0;
    const int draws = 10'000;
    for (int i = 0; i < draws; ++i) {
        const double f = lost_state_fraction(uniform, sample_discrete(uniform, 10, rng));
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
        sum += f;
        sum_sq += f * f;
    }
    const double mean = sum / draws;
    const double se = std::sqrt((sum_sq / draws - mean * mean) / draws);
    CHECK(std::abs(mean - closed) < 3 * se);
}

TEST_CASE("risk_stats") {
    auto r = risk_stats({{0, 0, 0, 0}, {0, 2, 0, 0}, {1, 3, 0, 0}, {1, 3, 0, 0}});
    REQUIRE(r.size() == 2);
    CHECK(r[0].generation == 0);
    CHECK(r[0].mean == doctest::Approx(1.0));
    CHECK(r[0].variance == doctest::Approx(2.0));
    CHECK(r[1].variance == 0.0);
    CHECK_THROWS_AS(risk_stats({{0, 1, 0, 0}}), Error);
    CHECK_THROWS_AS(risk_stats({}), Error);
}

TEST_CASE("total_variation") {
    CHECK(total_variation(DiscreteDistribution({1, 0}), DiscreteDistribution({0, 1})) == 1.0);
    CHECK(total_variation(DiscreteDistribution({0.5, 0.5}), DiscreteDistribution({0.5, 0.5})) == 0.0);
}
