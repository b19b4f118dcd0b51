#include "collapse/output.hpp"

#include "collapse/error.hpp"
#include "collapse/rng.hpp"

#include "json.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

namespace collapse {

namespace {

using nlohmann::ordered_json;

void gaussian_columns(std::vector<std::string>& out, const std::string& prefix, std::size_t dim) {
    for (std::size_t d = 0; d < dim; ++d) out.push_back("mean_" + prefix + std::to_string(d));
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = i; j < dim; ++j)
            out.push_back("cov_" + prefix + std::to_string(i) + "_" + std::to_string(j));
}

void gaussian_params(std::vector<double>& out, const GaussianND& g) {
    for (Eigen::Index d = 0; d < g.mean.size(); ++d) out.push_back(g.mean(d));
    for (Eigen::Index i = 0; i < g.covariance.rows(); ++i)
        for (Eigen::Index j = i; j < g.covariance.cols(); ++j) out.push_back(g.covariance(i, j));
}

ordered_json json_number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

template <class T>
ordered_json json_optional(const std::optional<T>& v) {
    if (!v) return nullptr;
    if constexpr (std::is_same_v<T, double>) return json_number(*v);
    else return *v;
}

template <class T>
std::string csv_optional(const std::optional<T>& v) {
    if (!v) return "";
    if constexpr (std::is_same_v<T, double>) return format_number(*v);
    else return *v ? "1" : "0";
}

std::string csv_line(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) line += ',';
        line += csv_field(fields[i]);
    }
    line += "\r\n";
    return line;
}

double original_trace(const Model& m) {
    if (const auto* g = std::get_if<Gaussian1D>(&m)) return g->variance;
    if (const auto* g = std::get_if<GaussianND>(&m)) return g->covariance.trace();
    return 0.0;
}

}  // namespace

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::string> param_columns(const Model& shape) {
    std::vector<std::string> out;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, DiscreteDistribution>) {
                for (std::size_t i = 0; i < m.size(); ++i) out.push_back("p_" + std::to_string(i));
            } else if constexpr (std::is_same_v<T, Gaussian1D>) {
                out = {"mean", "variance"};
            } else if constexpr (std::is_same_v<T, GaussianND>) {
                gaussian_columns(out, "", m.dim());
            } else {
                for (std::size_t c = 0; c < m.components.size(); ++c) out.push_back("weight_" + std::to_string(c));
                for (std::size_t c = 0; c < m.components.size(); ++c)
                    gaussian_columns(out, std::to_string(c) + "_", m.dim());
            }
        },
        shape);
    return out;
}

std::vector<double> flatten_params(const Model& model) {
    std::vector<double> out;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, DiscreteDistribution>) {
                out = m.probs();
            } else if constexpr (std::is_same_v<T, Gaussian1D>) {
                out = {m.mean, m.variance};
            } else if constexpr (std::is_same_v<T, GaussianND>) {
                gaussian_params(out, m);
            } else {
                out = m.weights;
                for (const auto& c : m.components) gaussian_params(out, c);
            }
        },
        model);
    return out;
}

std::vector<std::string> trajectory_columns(const Model& original) {
    std::vector<std::string> cols{"replicate", "generation", "sample_size", "fit_size"};
    for (auto& c : param_columns(original)) cols.push_back(std::move(c));
    for (const char* c : {"risk", "lost_mass", "collapse_flag", "total_variance", "min_eigenvalue", "noise_norm_sq",
                          "em_iterations", "em_empty_component"})
        cols.emplace_back(c);
    return cols;
}

std::vector<std::string> summary_columns() {
    return {"generation",          "sample_size",      "replicates",       "risk_mean",
            "risk_variance",       "predicted_variance", "predicted_risk_mean", "risk_lower_bound",
            "oracle_ok",           "collapsed_fraction"};
}

bool oracle_applies(const EngineConfig& config) noexcept {
    const Family f = config.family();
    if (f != Family::gaussian1d && f != Family::gaussian_nd) return false;
    if (config.policy.mode != AccumulationMode::fresh_only || config.noise.kind != NoiseKind::zero) return false;
    for (const auto& w : config.schedule.mix)
        if (w.alpha != 1.0) return false;
    return true;
}

std::vector<SummaryRow> summarize(const ExperimentConfig& config, const std::vector<ExperimentResult>& results) {
    const auto& engine = config.engine;
    const auto& sizes = engine.schedule.sizes;
    const std::size_t generations = sizes.size();
    const Family family = engine.family();
    const bool gaussian = family == Family::gaussian1d || family == Family::gaussian_nd;
    const bool closed_forms = oracle_applies(engine);
    bool bound_applies = gaussian && engine.policy.mode == AccumulationMode::fresh_only;
    for (const auto& w : engine.schedule.mix) bound_applies = bound_applies && w.alpha == 1.0;
    const double trace = original_trace(engine.original);

    std::vector<SummaryRow> rows;
    std::vector<double> eps_means;
    for (std::size_t g = 0; g < generations; ++g) {
        SummaryRow row;
        row.generation = static_cast<int>(g);
        row.sample_size = sizes[g];
        std::vector<double> risks;
        double eps = 0.0;
        std::size_t collapsed = 0;
        for (const auto& r : results) {
            if (g >= r.records.size()) continue;
            const auto& rec = r.records[g];
            risks.push_back(rec.risk);
            eps += rec.noise_norm_sq;
            if (rec.collapsed) ++collapsed;
        }
        row.replicates = risks.size();
        if (!risks.empty()) {
            double sum = 0.0;
            for (double x : risks) sum += x;
            row.risk_mean = sum / static_cast<double>(risks.size());
            if (risks.size() >= 2) {
                double ss = 0.0;
                for (double x : risks) ss += (x - row.risk_mean) * (x - row.risk_mean);
                row.risk_variance = ss / static_cast<double>(risks.size() - 1);
            }
            row.collapsed_fraction = static_cast<double>(collapsed) / static_cast<double>(risks.size());
            eps /= static_cast<double>(risks.size());
        }
        eps_means.push_back(eps);

        if (closed_forms) {
            row.predicted_variance = predicted_variance(trace, sizes.prefix(g));
            if (family == Family::gaussian1d) {
                row.predicted_risk_mean = predicted_risk_mean(trace, sizes.prefix(g + 1));
                row.oracle_ok = std::abs(row.risk_mean - *row.predicted_risk_mean) <=
                                config.oracle_tolerance * *row.predicted_risk_mean;
            }
        }
        if (bound_applies) row.risk_lower_bound = noisy_lower_bound(trace, sizes.prefix(g + 1), eps_means);
        rows.push_back(row);
    }
    return rows;
}

std::string render_trajectories(const ExperimentConfig& config, const std::vector<ExperimentResult>& results,
                                OutputFormat format) {
    const auto columns = trajectory_columns(config.engine.original);
    const std::size_t n_params = param_columns(config.engine.original).size();

    auto row_values = [&](const TrajectoryRecord& rec) {
        std::vector<double> params = flatten_params(rec.fitted_model);
        if (params.size() != n_params)
            throw Error(ErrorCode::numerical_failure, "fitted model shape differs from the original");
        return params;
    };

    if (format == OutputFormat::csv) {
        std::string out = csv_line(columns);
        for (const auto& r : results) {
            for (const auto& rec : r.records) {
                std::vector<std::string> f{std::to_string(r.replicate_id), std::to_string(rec.generation),
                                           std::to_string(rec.sample_size), std::to_string(rec.fit_size)};
                for (double p : row_values(rec)) f.push_back(format_number(p));
                f.push_back(format_number(rec.risk));
                f.push_back(format_number(rec.lost_mass));
                f.push_back(rec.collapsed ? "1" : "0");
                f.push_back(format_number(rec.total_variance));
                f.push_back(format_number(rec.raw_min_eigenvalue));
                f.push_back(format_number(rec.noise_norm_sq));
                f.push_back(std::to_string(rec.em_iterations));
                f.push_back(rec.em_empty_component ? "1" : "0");
                out += csv_line(f);
            }
        }
        return out;
    }

    ordered_json rows = ordered_json::array();
    for (const auto& r : results) {
        for (const auto& rec : r.records) {
            ordered_json row;
            std::size_t c = 0;
            row[columns[c++]] = r.replicate_id;
            row[columns[c++]] = rec.generation;
            row[columns[c++]] = rec.sample_size;
            row[columns[c++]] = rec.fit_size;
            for (double p : row_values(rec)) row[columns[c++]] = json_number(p);
            row[columns[c++]] = json_number(rec.risk);
            row[columns[c++]] = json_number(rec.lost_mass);
            row[columns[c++]] = rec.collapsed ? 1 : 0;
            row[columns[c++]] = json_number(rec.total_variance);
            row[columns[c++]] = json_number(rec.raw_min_eigenvalue);
            row[columns[c++]] = json_number(rec.noise_norm_sq);
            row[columns[c++]] = rec.em_iterations;
            row[columns[c++]] = rec.em_empty_component ? 1 : 0;
            rows.push_back(std::move(row));
        }
    }
    return rows.dump(1) + "\n";
}

std::string render_summary(const std::vector<SummaryRow>& rows, OutputFormat format) {
    const auto columns = summary_columns();
    if (format == OutputFormat::csv) {
        std::string out = csv_line(columns);
        for (const auto& r : rows) {
            out += csv_line({std::to_string(r.generation), std::to_string(r.sample_size), std::to_string(r.replicates),
                             format_number(r.risk_mean), csv_optional(r.risk_variance),
                             csv_optional(r.predicted_variance), csv_optional(r.predicted_risk_mean),
                             csv_optional(r.risk_lower_bound), csv_optional(r.oracle_ok),
                             format_number(r.collapsed_fraction)});
        }
        return out;
    }
    ordered_json out = ordered_json::array();
    for (const auto& r : rows) {
        ordered_json row;
        row["generation"] = r.generation;
        row["sample_size"] = r.sample_size;
        row["replicates"] = r.replicates;
        row["risk_mean"] = json_number(r.risk_mean);
        row["risk_variance"] = json_optional(r.risk_variance);
        row["predicted_variance"] = json_optional(r.predicted_variance);
        row["predicted_risk_mean"] = json_optional(r.predicted_risk_mean);
        row["risk_lower_bound"] = json_optional(r.risk_lower_bound);
        row["oracle_ok"] = json_optional(r.oracle_ok);
        row["collapsed_fraction"] = json_number(r.collapsed_fraction);
        out.push_back(std::move(row));
    }
    return out.dump(1) + "\n";
}

std::string render_metadata(const ExperimentConfig& config) {
    ordered_json j;
    j["tool"] = "collapse";
    j["tool_version"] = kToolVersion;
    j["output_schema_version"] = kOutputSchemaVersion;
    j["config_schema_version"] = kConfigSchemaVersion;
    j["config_digest"] = config.digest();
    j["rng_algorithm"] = kRngAlgorithm;
    j["master_seed"] = config.master_seed;
    j["replicates"] = config.replicates;
    j["family"] = to_string(config.engine.family());
    j["format"] = to_string(config.output.format);
    j["trajectory_columns"] = trajectory_columns(config.engine.original);
    j["summary_columns"] = summary_columns();
    j["config"] = ordered_json::parse(config.canonical_json());
    return j.dump(2) + "\n";
}

OutputPaths output_paths(const ExperimentConfig& config) {
    const std::filesystem::path dir(config.output.dir);
    const std::string ext = config.output.format == OutputFormat::csv ? ".csv" : ".json";
    const std::string& p = config.output.prefix;
    return {(dir / (p + "_trajectories" + ext)).string(), (dir / (p + "_summary" + ext)).string(),
            (dir / (p + "_metadata.json")).string()};
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    std::error_code ec;
    if (target.has_parent_path()) {
        fs::create_directories(target.parent_path(), ec);
        if (ec) throw Error(ErrorCode::io_error, path + ": cannot create directory: " + ec.message());
    }
    const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::io_error, tmp.string() + ": cannot open for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            out.close();
            fs::remove(tmp, ec);
            throw Error(ErrorCode::io_error, tmp.string() + ": write failed");
        }
    }
    fs::rename(tmp, target, ec);
    if (ec) {
        std::error_code ignored;
        fs::remove(tmp, ignored);
        throw Error(ErrorCode::io_error, path + ": rename failed: " + ec.message());
    }
}

OutputPaths write_outputs(const ExperimentConfig& config, const std::vector<ExperimentResult>& results) {
    const auto paths = output_paths(config);
    // Render everything first so a failure leaves no file half-updated.
    const auto traj = render_trajectories(config, results, config.output.format);
    const auto summary = render_summary(summarize(config, results), config.output.format);
    const auto meta = render_metadata(config);
    write_file_atomic(paths.trajectories, traj);
    write_file_atomic(paths.summary, summary);
    write_file_atomic(paths.metadata, meta);
    return paths;
}

}  // namespace collapse
