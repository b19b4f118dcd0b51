#include "doctest.h"

#include "collapse/error.hpp"
#include "collapse/verify.hpp"

using namespace collapse;

TEST_CASE("measure kinds") {
    CHECK(measure("a", 1.05, 1.0, 0.1, "abs").passed);
    CHECK_FALSE(measure("a", 1.2, 1.0, 0.1, "abs").passed);
    CHECK(measure("r", 110, 100, 0.1, "rel").passed);
    CHECK_FALSE(measure("r", 111, 100, 0.1, "rel").passed);
    CHECK(measure("m", 0.9, 1.0, 0.1, "min").passed);
    CHECK_FALSE(measure("m", 0.8, 1.0, 0.1, "min").passed);
    CHECK(measure("x", 1.1, 1.0, 0.1, "max").passed);
    CHECK_FALSE(measure("x", 1.2, 1.0, 0.1, "max").passed);
    CHECK(measure("f", 1, 1, 0, "flag").passed);
    CHECK_FALSE(measure("f", 0, 1, 0, "flag").passed);
    CHECK_FALSE(measure("n", std::nan(""), 0, 1, "abs").passed);
    CHECK_THROWS_AS(measure("bad", 0, 0, 0, "between"), Error);
}

TEST_CASE("zero tolerance keeps deterministic checks and fails statistical ones") {
    VerifyConfig cfg;
    cfg.tolerance_scale = 0.0;
    cfg.replicate_scale = 0.1;
    cfg.checks = {"markov_small", "gelbrich", "variance_growth", "risk_mean", "tail_cutoff"};
    const auto report = run_verification(cfg);
    REQUIRE(report.checks.size() == 5);
    CHECK(report.checks[0].passed());
    CHECK(report.checks[1].passed());
    CHECK_FALSE(report.checks[2].passed());
    CHECK_FALSE(report.checks[3].passed());
    // The exact part of tail_cutoff passes; the Monte Carlo part cannot.
    const auto& tail = report.checks[4];
    CHECK(tail.measurements[0].passed);
    CHECK(tail.measurements[1].passed);
    CHECK_FALSE(tail.measurements[2].passed);
    CHECK_FALSE(report.all_passed());
}

TEST_CASE("report rendering") {
    VerifyConfig cfg;
    cfg.checks = {"markov_small"};
    const auto report = run_verification(cfg);
    CHECK(report.all_passed());
    const auto text = report.render_text();
    CHECK(text.rfind("PASS markov_small", 0) == 0);
    CHECK(text.find("1/1 checks passed") != std::string::npos);
    CHECK(report.render_json().find("\"all_passed\": true") != std::string::npos);
    CHECK_THROWS_AS(run_check("nonsense", cfg), Error);
}
