// collapse: command-line front end over the C API.
#include "collapse.h"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

struct StringDeleter {
    void operator()(char* s) const { collapse_string_free(s); }
};
using CString = std::unique_ptr<char, StringDeleter>;

struct Failure {
    collapse_status status;
    std::string message;
};

void check(collapse_status status) {
    if (status != COLLAPSE_OK) throw Failure{status, collapse_last_error()};
}

CString take(char* s) { return CString(s); }

struct RunOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicates;
    std::optional<std::size_t> threads;
    std::optional<std::string> out;
    std::optional<std::string> format;
};

int run(const RunOptions& opt) {
    collapse_experiment* raw = nullptr;
    check(collapse_experiment_load(opt.config.c_str(), &raw));
    std::unique_ptr<collapse_experiment, decltype(&collapse_experiment_free)> exp(raw, collapse_experiment_free);
    if (opt.seed) check(collapse_experiment_set_seed(exp.get(), *opt.seed));
    if (opt.replicates) check(collapse_experiment_set_replicates(exp.get(), *opt.replicates));
    if (opt.threads) check(collapse_experiment_set_threads(exp.get(), *opt.threads));
    if (opt.out) check(collapse_experiment_set_output_dir(exp.get(), opt.out->c_str()));
    if (opt.format) check(collapse_experiment_set_format(exp.get(), opt.format->c_str()));

    collapse_results* res_raw = nullptr;
    check(collapse_experiment_run(exp.get(), &res_raw));
    std::unique_ptr<collapse_results, decltype(&collapse_results_free)> res(res_raw, collapse_results_free);
    check(collapse_results_write(res.get()));

    char* digest = nullptr;
    check(collapse_experiment_digest(exp.get(), &digest));
    const auto d = take(digest);
    std::cout << "config digest: " << d.get() << '\n';
    for (auto kind : {COLLAPSE_OUTPUT_TRAJECTORIES, COLLAPSE_OUTPUT_SUMMARY, COLLAPSE_OUTPUT_METADATA}) {
        char* path = nullptr;
        check(collapse_experiment_output_path(exp.get(), kind, &path));
        std::cout << "wrote " << take(path).get() << '\n';
    }
    return kExitOk;
}

struct MarkovOptions {
    std::uint32_t m = 0;
    std::uint32_t k = 0;
    std::vector<std::uint32_t> initial;
    bool limit = false;
    std::string format = "text";
};

int markov_exact(const MarkovOptions& opt) {
    collapse_markov* raw = nullptr;
    check(collapse_markov_create(opt.m, opt.k, &raw));
    std::unique_ptr<collapse_markov, decltype(&collapse_markov_free)> chain(raw, collapse_markov_free);
    char* report = nullptr;
    check(collapse_markov_report(chain.get(), opt.initial.data(), opt.initial.size(), opt.format.c_str(),
                                 opt.limit ? 1 : 0, &report));
    std::cout << take(report).get();
    return kExitOk;
}

struct VerifyOptions {
    std::string config;
    std::string format = "text";
};

int verify_theory(const VerifyOptions& opt) {
    collapse_verify_report* raw = nullptr;
    check(collapse_verify_run_file(opt.config.c_str(), &raw));
    std::unique_ptr<collapse_verify_report, decltype(&collapse_verify_report_free)> report(
        raw, collapse_verify_report_free);
    char* text = nullptr;
    check(collapse_verify_report_render(report.get(), opt.format == "json" ? "json" : "text", &text));
    std::cout << take(text).get();
    return collapse_verify_report_passed(report.get()) ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generational fit/sample experiments, exact Markov analysis and theory checks", "collapse"};
    app.set_version_flag("--version", std::string(collapse_version()) + " (rng " + collapse_rng_algorithm() + ")");
    app.require_subcommand(1);

    RunOptions run_opt;
    auto* run_cmd = app.add_subcommand("run", "Run an experiment config and write trajectories, summary and metadata");
    run_cmd->add_option("--config", run_opt.config, "Experiment config (YAML)")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--seed", run_opt.seed, "Override master_seed");
    run_cmd->add_option("--replicates", run_opt.replicates, "Override replicates")->check(CLI::PositiveNumber);
    run_cmd->add_option("--threads", run_opt.threads, "Worker threads (0 = hardware concurrency)");
    run_cmd->add_option("--out", run_opt.out, "Output directory");
    run_cmd->add_option("--format", run_opt.format, "Output format")->check(CLI::IsMember({"csv", "json"}));

    MarkovOptions markov_opt;
    auto* markov_cmd = app.add_subcommand("markov-exact", "Exact absorption analysis of the discrete chain");
    markov_cmd->add_option("--m", markov_opt.m, "Samples per generation")->required();
    markov_cmd->add_option("--k", markov_opt.k, "Number of categories")->required();
    markov_cmd->add_option("--initial", markov_opt.initial, "Initial counts c1,c2,... summing to m")
        ->required()
        ->delimiter(',');
    markov_cmd->add_flag("--limit", markov_opt.limit, "Also print the limit matrix");
    markov_cmd->add_option("--format", markov_opt.format, "Output format")
        ->check(CLI::IsMember({"text", "csv", "json"}));

    VerifyOptions verify_opt;
    auto* verify_cmd = app.add_subcommand("verify-theory", "Run the acceptance checks named in a verify config");
    verify_cmd->add_option("--config", verify_opt.config, "Verify config (YAML)")->required()->check(CLI::ExistingFile);
    verify_cmd->add_option("--format", verify_opt.format, "Report format")
        ->check(CLI::IsMember({"text", "csv", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*run_cmd) return run(run_opt);
        if (*markov_cmd) return markov_exact(markov_opt);
        if (*verify_cmd) return verify_theory(verify_opt);
    } catch (const Failure& f) {
        std::cerr << "collapse: " << collapse_status_name(f.status) << ": " << f.message << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
