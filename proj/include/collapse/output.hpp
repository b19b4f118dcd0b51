#pragma once

#include "collapse/config.hpp"

#include <optional>
#include <string>
#include <vector>

namespace collapse {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kOutputSchemaVersion = 1;

/// Flattened parameter column names for a model's family and shape:
/// discrete p_i; gaussian1d mean, variance; gaussian_nd mean_d, cov_i_j
/// (i ≤ j); gmm weight_c, mean_c_d, cov_c_i_j.
std::vector<std::string> param_columns(const Model& shape);
std::vector<double> flatten_params(const Model& model);

/// Trajectory columns in file order.
std::vector<std::string> trajectory_columns(const Model& original);

/// Per-generation aggregate across replicates. Oracle fields are empty when
/// the closed forms do not apply to the configuration.
struct SummaryRow {
    int generation = 0;
    std::uint64_t sample_size = 0;
    std::size_t replicates = 0;
    double risk_mean = 0.0;
    std::optional<double> risk_variance;
    std::optional<double> predicted_variance;
    std::optional<double> predicted_risk_mean;
    std::optional<double> risk_lower_bound;
    std::optional<bool> oracle_ok;
    double collapsed_fraction = 0.0;
};

std::vector<std::string> summary_columns();

/// True when the configuration is the plain fresh-data Gaussian recursion
/// without fit noise, where the variance and risk closed forms hold.
bool oracle_applies(const EngineConfig& config) noexcept;

std::vector<SummaryRow> summarize(const ExperimentConfig& config, const std::vector<ExperimentResult>& results);

std::string render_trajectories(const ExperimentConfig& config, const std::vector<ExperimentResult>& results,
                                OutputFormat format);
std::string render_summary(const std::vector<SummaryRow>& rows, OutputFormat format);
std::string render_metadata(const ExperimentConfig& config);

struct OutputPaths {
    std::string trajectories;
    std::string summary;
    std::string metadata;
};

OutputPaths output_paths(const ExperimentConfig& config);

/// Renders and writes all three files, each through a temporary file and a
/// rename so an interrupted run never leaves a truncated file behind.
OutputPaths write_outputs(const ExperimentConfig& config, const std::vector<ExperimentResult>& results);

void write_file_atomic(const std::string& path, const std::string& content);

/// Shortest round-trip-safe text (%.17g, trimmed to the shortest exact form).
std::string format_number(double v);

/// RFC-4180 field quoting.
std::string csv_field(const std::string& s);

}  // namespace collapse
