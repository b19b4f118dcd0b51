#pragma once

#include "collapse/genloop.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace collapse {

inline constexpr int kConfigSchemaVersion = 1;

enum class OutputFormat { csv, json };

struct OutputSpec {
    std::string dir = "out";
    std::string prefix = "run";
    OutputFormat format = OutputFormat::csv;
};

struct ExperimentConfig {
    EngineConfig engine;
    std::size_t replicates = 1;
    std::uint64_t master_seed = 0;
    std::size_t threads = 0;
    OutputSpec output;
    /// Relative tolerance for the summary's oracle_ok column.
    double oracle_tolerance = 0.15;

    /// Canonical JSON of every field that affects results (output location
    /// and thread count excluded).
    std::string canonical_json() const;
    /// 16 hex digits of FNV-1a 64 over canonical_json().
    std::string digest() const;
    /// Recomputes the digest into engine.config_digest.
    void refresh_digest();
};

/// Parses a YAML experiment config. Errors are config_error with a message
/// of the form "<source>:<line>:<column>: <what>".
ExperimentConfig parse_experiment_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_experiment_config(const std::string& path);

struct VerifyConfig {
    std::vector<std::string> checks;
    /// Multiplies every statistical tolerance; deterministic tolerances are fixed.
    double tolerance_scale = 1.0;
    /// Multiplies every replicate and run count (minimum 2).
    double replicate_scale = 1.0;
    std::uint64_t seed = 20230527;
    std::size_t threads = 0;
};

VerifyConfig parse_verify_config(const std::string& text, const std::string& source = "<config>");
VerifyConfig load_verify_config(const std::string& path);

std::string fnv1a64_hex(const std::string& bytes);

OutputFormat parse_output_format(const std::string& s);
const char* to_string(OutputFormat f) noexcept;

}  // namespace collapse
