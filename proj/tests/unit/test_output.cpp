#include "doctest.h"

#include "collapse/config.hpp"
#include "collapse/error.hpp"
#include "collapse/output.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace collapse;

namespace {

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

ExperimentConfig small_config(std::size_t replicates) {
    auto cfg = parse_experiment_config(R"(schema_version: 1
family: gaussian1d
original: {mean: 0, variance: 1}
schedule: {generations: 5, sample_size: 40}
)");
    cfg.replicates = replicates;
    cfg.refresh_digest();
    return cfg;
}

}  // namespace

TEST_CASE("csv_field quoting") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_field("two\nlines") == "\"two\nlines\"");
}

TEST_CASE("format_number round-trips") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0, 123456789.125}) {
        CAPTURE(v);
        CHECK(std::stod(format_number(v)) == v);
    }
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(3.0) == "3");
}

TEST_CASE("parameter columns per family") {
    CHECK(param_columns(Gaussian1D{0, 1}) == std::vector<std::string>{"mean", "variance"});
    CHECK(param_columns(DiscreteDistribution({0.5, 0.5})) == std::vector<std::string>{"p_0", "p_1"});
    GaussianND g{Vector::Zero(2), Matrix::Identity(2, 2)};
    CHECK(param_columns(g) == std::vector<std::string>{"mean_0", "mean_1", "cov_0_0", "cov_0_1", "cov_1_1"});
    GmmModel m{{0.5, 0.5}, {g, g}};
    const auto cols = param_columns(m);
    CHECK(cols.size() == 2 + 2 * 5);
    CHECK(cols[0] == "weight_0");
    CHECK(cols[2] == "mean_0_0");
    CHECK(cols[7] == "mean_1_0");
    CHECK(cols.back() == "cov_1_1_1");
    g.covariance(0, 1) = g.covariance(1, 0) = 0.25;
    CHECK(flatten_params(g) == std::vector<double>{0, 0, 1, 0.25, 1});
}

TEST_CASE("trajectory rendering") {
    const auto cfg = small_config(3);
    const auto results = run_experiment(cfg.engine, cfg.replicates, cfg.master_seed);
    const auto csv = lines(render_trajectories(cfg, results, OutputFormat::csv));
    REQUIRE(csv.size() == 1 + 3 * 6);
    CHECK(csv[0] == "replicate,generation,sample_size,fit_size,mean,variance,risk,lost_mass,collapse_flag,"
                    "total_variance,min_eigenvalue,noise_norm_sq,em_iterations,em_empty_component\r");
    CHECK(csv[1].rfind("0,0,40,40,", 0) == 0);
    CHECK(csv[18].rfind("2,5,40,40,", 0) == 0);

    const auto json = nlohmann::json::parse(render_trajectories(cfg, results, OutputFormat::json));
    REQUIRE(json.size() == 18);
    CHECK(json[7]["replicate"] == 1);
    CHECK(json[7]["generation"] == 1);
    CHECK(json[7]["risk"].get<double>() == results[1].records[1].risk);
}

TEST_CASE("summary oracle columns") {
    const auto cfg = small_config(50);
    const auto results = run_experiment(cfg.engine, cfg.replicates, cfg.master_seed);
    const auto rows = summarize(cfg, results);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].replicates == 50);
    CHECK(*rows[0].predicted_variance == doctest::Approx(1.0));
    CHECK(*rows[3].predicted_variance == doctest::Approx(1.0 + 3.0 / 40));
    CHECK(*rows[3].predicted_risk_mean == doctest::Approx(1.5 * 4.0 / 40));
    CHECK(*rows[3].risk_lower_bound == doctest::Approx(4.0 / 40));
    double mean = 0;
    for (const auto& r : results) mean += r.records[3].risk;
    CHECK(rows[3].risk_mean == doctest::Approx(mean / 50));
    CHECK(rows[3].risk_variance.has_value());

    auto pooled = cfg;
    pooled.engine.policy = {AccumulationMode::pool_all, 0};
    const auto prow = summarize(pooled, run_experiment(pooled.engine, 1, 1));
    CHECK_FALSE(prow[2].predicted_risk_mean.has_value());
    CHECK_FALSE(prow[2].risk_variance.has_value());
    const auto text = render_summary(prow, OutputFormat::csv);
    CHECK(lines(text)[3].find(",,,,,") != std::string::npos);
}

TEST_CASE("metadata and atomic writes") {
    const auto dir = std::filesystem::temp_directory_path() / "collapse_output_test";
    std::filesystem::remove_all(dir);
    auto cfg = small_config(2);
    cfg.output.dir = (dir / "nested").string();
    cfg.output.prefix = "t";
    const auto results = run_experiment(cfg.engine, cfg.replicates, cfg.master_seed);
    const auto paths = write_outputs(cfg, results);
    CHECK(std::filesystem::exists(paths.trajectories));
    CHECK(std::filesystem::exists(paths.summary));
    std::size_t files = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir / "nested")) {
        CHECK(e.path().string().find(".tmp.") == std::string::npos);
        ++files;
    }
    CHECK(files == 3);

    std::ifstream in(paths.metadata);
    const auto meta = nlohmann::json::parse(in);
    CHECK(meta["config_digest"] == cfg.digest());
    CHECK(meta["rng_algorithm"] == std::string(kRngAlgorithm));
    CHECK(meta["tool_version"] == kToolVersion);
    CHECK(meta["trajectory_columns"].size() == trajectory_columns(cfg.engine.original).size());

    CHECK_THROWS_AS(write_file_atomic((dir / "nested" / "t_summary.csv" / "x").string(), "x"), Error);
    std::filesystem::remove_all(dir);
}
