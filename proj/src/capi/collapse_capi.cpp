#include "collapse.h"

#include "collapse/config.hpp"
#include "collapse/error.hpp"
#include "collapse/markov.hpp"
#include "collapse/metrics.hpp"
#include "collapse/output.hpp"
#include "collapse/rng.hpp"
#include "collapse/theory.hpp"
#include "collapse/verify.hpp"

#include "json.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <new>
#include <sstream>
#include <string>

struct collapse_experiment {
    collapse::ExperimentConfig config;
};

struct collapse_results {
    collapse::ExperimentConfig config;
    std::vector<collapse::ExperimentResult> results;
};

struct collapse_markov {
    collapse::TransitionBlocks blocks;
    collapse::Matrix absorption;
    collapse::Vector times;
};

struct collapse_verify_report {
    collapse::VerifyReport report;
};

namespace {

thread_local std::string g_last_error;
const std::string g_rng_algorithm(collapse::kRngAlgorithm);

collapse_status from_code(collapse::ErrorCode code) {
    using collapse::ErrorCode;
    switch (code) {
        case ErrorCode::invalid_argument: return COLLAPSE_E_INVALID_ARGUMENT;
        case ErrorCode::insufficient_data: return COLLAPSE_E_INSUFFICIENT_DATA;
        case ErrorCode::invalid_model: return COLLAPSE_E_INVALID_MODEL;
        case ErrorCode::degenerate_cutoff: return COLLAPSE_E_DEGENERATE_CUTOFF;
        case ErrorCode::grid_too_small: return COLLAPSE_E_GRID_TOO_SMALL;
        case ErrorCode::too_large: return COLLAPSE_E_TOO_LARGE;
        case ErrorCode::numerical_failure: return COLLAPSE_E_NUMERICAL;
        case ErrorCode::config_error: return COLLAPSE_E_CONFIG;
        case ErrorCode::io_error: return COLLAPSE_E_IO;
    }
    return COLLAPSE_E_INTERNAL;
}

collapse_status fail(collapse_status status, std::string message) {
    g_last_error = std::move(message);
    return status;
}

template <class F>
collapse_status guard(F&& f) noexcept {
    try {
        return f();
    } catch (const collapse::Error& e) {
        return fail(from_code(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(COLLAPSE_E_OUT_OF_MEMORY, "out of memory");
    } catch (const std::exception& e) {
        return fail(COLLAPSE_E_INTERNAL, e.what());
    } catch (...) {
        return fail(COLLAPSE_E_INTERNAL, "unknown error");
    }
}

#define COLLAPSE_REQUIRE(ptr)                                                      \
    do {                                                                           \
        if ((ptr) == nullptr) return fail(COLLAPSE_E_NULL_POINTER, #ptr " is null"); \
    } while (0)

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

std::string render_kind(const collapse_results& r, collapse_output_kind kind) {
    switch (kind) {
        case COLLAPSE_OUTPUT_TRAJECTORIES:
            return collapse::render_trajectories(r.config, r.results, r.config.output.format);
        case COLLAPSE_OUTPUT_SUMMARY:
            return collapse::render_summary(collapse::summarize(r.config, r.results), r.config.output.format);
        case COLLAPSE_OUTPUT_METADATA: return collapse::render_metadata(r.config);
    }
    throw collapse::Error(collapse::ErrorCode::invalid_argument, "unknown output kind");
}

std::vector<std::uint32_t> to_counts(const uint32_t* counts, size_t k) { return {counts, counts + k}; }

// Row of the initial state in the absorption/time tables, or npos for an
// absorbing state. Throws when `counts` is not a state of the chain.
std::size_t transient_row(const collapse_markov& chain, const std::vector<std::uint32_t>& counts) {
    const auto& space = chain.blocks.space;
    if (counts.size() != space.k())
        throw collapse::Error(collapse::ErrorCode::invalid_argument,
                              "initial state needs " + std::to_string(space.k()) + " counts");
    const auto idx = space.index_of(counts);
    if (!idx)
        throw collapse::Error(collapse::ErrorCode::invalid_argument,
                              "initial counts must be non-negative and sum to m = " + std::to_string(space.m()));
    return space.is_absorbing(*idx) ? std::string::npos : *idx;
}

void absorption_for(const collapse_markov& chain, const std::vector<std::uint32_t>& counts, std::vector<double>& probs,
                    double& time) {
    const auto& space = chain.blocks.space;
    probs.assign(space.k(), 0.0);
    const std::size_t row = transient_row(chain, counts);
    if (row == std::string::npos) {
        probs[space.absorbing_target(*space.index_of(counts))] = 1.0;
        time = 0.0;
        return;
    }
    const std::size_t r = space.transient_count();
    for (std::size_t a = 0; a < space.absorbing_count(); ++a)
        probs[space.absorbing_target(r + a)] =
            chain.absorption(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(a));
    time = chain.times(static_cast<Eigen::Index>(row));
}

std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string state_label(const std::vector<std::uint32_t>& c) {
    std::string s = "(";
    for (std::size_t i = 0; i < c.size(); ++i) s += (i ? "," : "") + std::to_string(c[i]);
    return s + ")";
}

std::string markov_report(const collapse_markov& chain, const std::vector<std::uint32_t>& counts,
                          const std::string& format, bool include_limit) {
    using collapse::format_number;
    const auto& space = chain.blocks.space;
    std::vector<double> probs;
    double time = 0.0;
    absorption_for(chain, counts, probs, time);
    const collapse::Matrix limit = include_limit ? collapse::limit_matrix(chain.blocks) : collapse::Matrix();
    const std::size_t n = space.size();

    if (format == "json") {
        nlohmann::ordered_json j;
        j["m"] = space.m();
        j["k"] = space.k();
        j["initial"] = counts;
        j["initial_absorbing"] = transient_row(chain, counts) == std::string::npos;
        j["absorption_probabilities"] = probs;
        j["expected_absorption_time"] = time;
        if (include_limit) {
            nlohmann::ordered_json states = nlohmann::ordered_json::array();
            for (std::size_t i = 0; i < n; ++i) states.push_back(space.state(i));
            j["states"] = states;
            nlohmann::ordered_json rows = nlohmann::ordered_json::array();
            for (Eigen::Index i = 0; i < limit.rows(); ++i) {
                std::vector<double> row(static_cast<std::size_t>(limit.cols()));
                for (Eigen::Index c = 0; c < limit.cols(); ++c) row[static_cast<std::size_t>(c)] = limit(i, c);
                rows.push_back(row);
            }
            j["limit_matrix"] = rows;
        }
        return j.dump(2) + "\n";
    }
    if (format == "csv") {
        std::string out = "quantity,to,from,value\r\n";
        const std::string from = collapse::csv_field(state_label(counts));
        for (std::size_t j = 0; j < probs.size(); ++j)
            out += "absorption_probability," + std::to_string(j) + "," + from + "," + format_number(probs[j]) + "\r\n";
        out += "expected_absorption_time,," + from + "," + format_number(time) + "\r\n";
        if (include_limit)
            for (std::size_t to = 0; to < n; ++to)
                for (std::size_t f = 0; f < n; ++f)
                    out += "limit," + collapse::csv_field(state_label(space.state(to))) + "," +
                           collapse::csv_field(state_label(space.state(f))) + "," +
                           format_number(limit(static_cast<Eigen::Index>(to), static_cast<Eigen::Index>(f))) + "\r\n";
        return out;
    }
    if (format != "text")
        throw collapse::Error(collapse::ErrorCode::invalid_argument, "format must be text, csv or json");
    std::ostringstream os;
    os << "chain: m=" << space.m() << " k=" << space.k() << " states=" << n << " transient=" << space.transient_count()
       << " absorbing=" << space.absorbing_count() << '\n';
    os << "initial state: " << state_label(counts) << '\n';
    os << "absorption probabilities:\n";
    for (std::size_t j = 0; j < probs.size(); ++j) os << "  category " << j << ": " << short_number(probs[j]) << '\n';
    os << "expected generations to absorption: " << short_number(time) << '\n';
    if (include_limit) {
        os << "limit matrix (column = from, row = to):\n";
        for (std::size_t to = 0; to < n; ++to) {
            os << "  " << state_label(space.state(to)) << ':';
            for (std::size_t f = 0; f < n; ++f)
                os << ' ' << short_number(limit(static_cast<Eigen::Index>(to), static_cast<Eigen::Index>(f)));
            os << '\n';
        }
    }
    return os.str();
}

}  // namespace

extern "C" {

const char* collapse_version(void) { return collapse::kToolVersion; }

const char* collapse_rng_algorithm(void) { return g_rng_algorithm.c_str(); }

const char* collapse_status_name(collapse_status status) {
    switch (status) {
        case COLLAPSE_OK: return "ok";
        case COLLAPSE_E_NULL_POINTER: return "null-pointer";
        case COLLAPSE_E_OUT_OF_MEMORY: return "out-of-memory";
        case COLLAPSE_E_INTERNAL: return "internal-error";
        default: break;
    }
    if (status >= COLLAPSE_E_INVALID_ARGUMENT && status <= COLLAPSE_E_IO)
        return collapse::to_string(static_cast<collapse::ErrorCode>(status));
    return "unknown-status";
}

const char* collapse_last_error(void) { return g_last_error.c_str(); }

void collapse_string_free(char* s) { std::free(s); }

collapse_status collapse_experiment_load(const char* path, collapse_experiment** out) {
    COLLAPSE_REQUIRE(path);
    COLLAPSE_REQUIRE(out);
    return guard([&] {
        *out = new collapse_experiment{collapse::load_experiment_config(path)};
        return COLLAPSE_OK;
    });
}

collapse_status collapse_experiment_parse(const char* yaml_text, const char* source_name, collapse_experiment** out) {
    COLLAPSE_REQUIRE(yaml_text);
    COLLAPSE_REQUIRE(out);
    return guard([&] {
        *out = new collapse_experiment{
            collapse::parse_experiment_config(yaml_text, source_name ? source_name : "<config>")};
        return COLLAPSE_OK;
    });
}

void collapse_experiment_free(collapse_experiment* exp) { delete exp; }

collapse_status collapse_experiment_set_seed(collapse_experiment* exp, uint64_t seed) {
    COLLAPSE_REQUIRE(exp);
    exp->config.master_seed = seed;
    exp->config.refresh_digest();
    return COLLAPSE_OK;
}

collapse_status collapse_experiment_set_replicates(collapse_experiment* exp, size_t replicates) {
    COLLAPSE_REQUIRE(exp);
    if (replicates == 0) return fail(COLLAPSE_E_INVALID_ARGUMENT, "replicates must be ≥ 1");
    exp->config.replicates = replicates;
    exp->config.refresh_digest();
    return COLLAPSE_OK;
}

collapse_status collapse_experiment_set_threads(collapse_experiment* exp, size_t threads) {
    COLLAPSE_REQUIRE(exp);
    exp->config.threads = threads;
    return COLLAPSE_OK;
}

collapse_status collapse_experiment_set_output_dir(collapse_experiment* exp, const char* dir) {
    COLLAPSE_REQUIRE(exp);
    COLLAPSE_REQUIRE(dir);
    return guard([&] {
        exp->config.output.dir = dir;
        return COLLAPSE_OK;
    });
}

collapse_status collapse_experiment_set_format(collapse_experiment* exp, const char* format) {
    COLLAPSE_REQUIRE(exp);
    COLLAPSE_REQUIRE(format);
    return guard([&] {
        exp->config.output.format = collapse::parse_output_format(format);
        return COLLAPSE_OK;
    });
}

collapse_status collapse_experiment_digest(const collapse_experiment* exp, char** out) {
    COLLAPSE_REQUIRE(exp);
    COLLAPSE_REQUIRE(out);
    return guard([&] {
        *out = dup_string(exp->config.digest());
        return COLLAPSE_OK;
    });
}

collapse_status collapse_experiment_generations(const collapse_experiment* exp, size_t* out) {
    COLLAPSE_REQUIRE(exp);
    COLLAPSE_REQUIRE(out);
    *out = exp->config.engine.schedule.n_generations();
    return COLLAPSE_OK;
}

collapse_status collapse_experiment_output_path(const collapse_experiment* exp, collapse_output_kind kind, char** out) {
    COLLAPSE_REQUIRE(exp);
    COLLAPSE_REQUIRE(out);
    return guard([&] {
        const auto paths = collapse::output_paths(exp->config);
        switch (kind) {
            case COLLAPSE_OUTPUT_TRAJECTORIES: *out = dup_string(paths.trajectories); break;
            case COLLAPSE_OUTPUT_SUMMARY: *out = dup_string(paths.summary); break;
            case COLLAPSE_OUTPUT_METADATA: *out = dup_string(paths.metadata); break;
            default: return fail(COLLAPSE_E_INVALID_ARGUMENT, "unknown output kind");
        }
        return COLLAPSE_OK;
    });
}

collapse_status collapse_experiment_run(const collapse_experiment* exp, collapse_results** out) {
    COLLAPSE_REQUIRE(exp);
    COLLAPSE_REQUIRE(out);
    return guard([&] {
        auto res = std::make_unique<collapse_results>();
        res->config = exp->config;
        res->config.refresh_digest();
        res->results = collapse::run_experiment(res->config.engine, res->config.replicates, res->config.master_seed,
                                                res->config.threads);
        *out = res.release();
        return COLLAPSE_OK;
    });
}

void collapse_results_free(collapse_results* res) { delete res; }

collapse_status collapse_results_replicates(const collapse_results* res, size_t* out) {
    COLLAPSE_REQUIRE(res);
    COLLAPSE_REQUIRE(out);
    *out = res->results.size();
    return COLLAPSE_OK;
}

collapse_status collapse_results_risk(const collapse_results* res, size_t replicate, size_t generation, double* out) {
    COLLAPSE_REQUIRE(res);
    COLLAPSE_REQUIRE(out);
    if (replicate >= res->results.size() || generation >= res->results[replicate].records.size())
        return fail(COLLAPSE_E_INVALID_ARGUMENT, "replicate or generation out of range");
    *out = res->results[replicate].records[generation].risk;
    return COLLAPSE_OK;
}

collapse_status collapse_results_render(const collapse_results* res, collapse_output_kind kind, char** out) {
    COLLAPSE_REQUIRE(res);
    COLLAPSE_REQUIRE(out);
    return guard([&] {
        *out = dup_string(render_kind(*res, kind));
        return COLLAPSE_OK;
    });
}

collapse_status collapse_results_write(const collapse_results* res) {
    COLLAPSE_REQUIRE(res);
    return guard([&] {
        collapse::write_outputs(res->config, res->results);
        return COLLAPSE_OK;
    });
}

collapse_status collapse_markov_create(uint32_t m, uint32_t k, collapse_markov** out) {
    COLLAPSE_REQUIRE(out);
    return guard([&] {
        auto blocks = collapse::build_transition_matrix(m, k);
        auto absorption = collapse::absorption_probabilities(blocks);
        auto times = collapse::expected_absorption_time(blocks);
        *out = new collapse_markov{std::move(blocks), std::move(absorption), std::move(times)};
        return COLLAPSE_OK;
    });
}

void collapse_markov_free(collapse_markov* chain) { delete chain; }

size_t collapse_markov_state_count(const collapse_markov* chain) { return chain ? chain->blocks.space.size() : 0; }

size_t collapse_markov_transient_count(const collapse_markov* chain) {
    return chain ? chain->blocks.space.transient_count() : 0;
}

collapse_status collapse_markov_state_index(const collapse_markov* chain, const uint32_t* counts, size_t k, size_t* out) {
    COLLAPSE_REQUIRE(chain);
    COLLAPSE_REQUIRE(counts);
    COLLAPSE_REQUIRE(out);
    return guard([&] {
        const auto idx = chain->blocks.space.index_of(to_counts(counts, k));
        if (!idx) return fail(COLLAPSE_E_INVALID_ARGUMENT, "counts are not a state of this chain");
        *out = *idx;
        return COLLAPSE_OK;
    });
}

collapse_status collapse_markov_absorption(const collapse_markov* chain, const uint32_t* counts, size_t k, double* probs,
                                           double* expected_time) {
    COLLAPSE_REQUIRE(chain);
    COLLAPSE_REQUIRE(counts);
    return guard([&] {
        std::vector<double> p;
        double t = 0.0;
        absorption_for(*chain, to_counts(counts, k), p, t);
        if (probs) std::copy(p.begin(), p.end(), probs);
        if (expected_time) *expected_time = t;
        return COLLAPSE_OK;
    });
}

collapse_status collapse_markov_limit_matrix(const collapse_markov* chain, double* out, size_t len) {
    COLLAPSE_REQUIRE(chain);
    COLLAPSE_REQUIRE(out);
    return guard([&] {
        const std::size_t n = chain->blocks.space.size();
        if (len < n * n) return fail(COLLAPSE_E_INVALID_ARGUMENT, "output buffer needs state_count² entries");
        const auto limit = collapse::limit_matrix(chain->blocks);
        for (std::size_t to = 0; to < n; ++to)
            for (std::size_t from = 0; from < n; ++from)
                out[to * n + from] = limit(static_cast<Eigen::Index>(to), static_cast<Eigen::Index>(from));
        return COLLAPSE_OK;
    });
}

collapse_status collapse_markov_report(const collapse_markov* chain, const uint32_t* counts, size_t k,
                                       const char* format, int include_limit, char** out) {
    COLLAPSE_REQUIRE(chain);
    COLLAPSE_REQUIRE(counts);
    COLLAPSE_REQUIRE(out);
    return guard([&] {
        *out = dup_string(markov_report(*chain, to_counts(counts, k), format ? format : "text", include_limit != 0));
        return COLLAPSE_OK;
    });
}

collapse_status collapse_verify_check_names(char** out) {
    COLLAPSE_REQUIRE(out);
    return guard([&] {
        std::string names;
        for (const auto& n : collapse::available_checks()) names += n + "\n";
        *out = dup_string(names);
        return COLLAPSE_OK;
    });
}

collapse_status collapse_verify_run_file(const char* path, collapse_verify_report** out) {
    COLLAPSE_REQUIRE(path);
    COLLAPSE_REQUIRE(out);
    return guard([&] {
        *out = new collapse_verify_report{collapse::run_verification(collapse::load_verify_config(path))};
        return COLLAPSE_OK;
    });
}

collapse_status collapse_verify_run_text(const char* yaml_text, const char* source_name, collapse_verify_report** out) {
    COLLAPSE_REQUIRE(yaml_text);
    COLLAPSE_REQUIRE(out);
    return guard([&] {
        const auto cfg = collapse::parse_verify_config(yaml_text, source_name ? source_name : "<config>");
        *out = new collapse_verify_report{collapse::run_verification(cfg)};
        return COLLAPSE_OK;
    });
}

void collapse_verify_report_free(collapse_verify_report* report) { delete report; }

int collapse_verify_report_passed(const collapse_verify_report* report) {
    return report && report->report.all_passed() ? 1 : 0;
}

collapse_status collapse_verify_report_render(const collapse_verify_report* report, const char* format, char** out) {
    COLLAPSE_REQUIRE(report);
    COLLAPSE_REQUIRE(out);
    return guard([&] {
        const std::string f = format ? format : "text";
        if (f == "json") *out = dup_string(report->report.render_json());
        else if (f == "text" || f == "csv") *out = dup_string(report->report.render_text());
        else return fail(COLLAPSE_E_INVALID_ARGUMENT, "format must be text or json");
        return COLLAPSE_OK;
    });
}

collapse_status collapse_predicted_variance(double sigma_sq, const uint64_t* sizes, size_t n, double* out) {
    COLLAPSE_REQUIRE(out);
    if (n > 0) COLLAPSE_REQUIRE(sizes);
    return guard([&] {
        *out = collapse::predicted_variance(sigma_sq, collapse::SampleSchedule({sizes, sizes + n}));
        return COLLAPSE_OK;
    });
}

collapse_status collapse_predicted_risk_mean(double sigma_sq, const uint64_t* sizes, size_t n, double* out) {
    COLLAPSE_REQUIRE(out);
    if (n > 0) COLLAPSE_REQUIRE(sizes);
    return guard([&] {
        *out = collapse::predicted_risk_mean(sigma_sq, collapse::SampleSchedule({sizes, sizes + n}));
        return COLLAPSE_OK;
    });
}

collapse_status collapse_w2_gaussian1d(double mean_a, double var_a, double mean_b, double var_b, double* out) {
    COLLAPSE_REQUIRE(out);
    return guard([&] {
        *out = collapse::w2_gaussian1d({mean_a, var_a}, {mean_b, var_b}).w2_squared;
        return COLLAPSE_OK;
    });
}

}  // extern "C"
