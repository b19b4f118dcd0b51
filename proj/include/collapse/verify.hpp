#pragma once

#include "collapse/config.hpp"

#include <string>
#include <vector>

namespace collapse {

/// One compared quantity. `kind` is "abs", "rel", "min" (observed ≥ expected
/// − tolerance), "max" (observed ≤ expected + tolerance) or "flag".
struct Measurement {
    std::string label;
    double observed = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    std::string kind = "abs";
    bool passed = false;
};

struct CheckResult {
    std::string name;
    std::string description;
    std::vector<Measurement> measurements;
    double seconds = 0.0;
    double budget_seconds = 0.0;
    std::string note;

    bool passed() const noexcept;
};

struct VerifyReport {
    std::uint64_t seed = 0;
    std::vector<CheckResult> checks;

    bool all_passed() const noexcept;
    /// One "PASS|FAIL <name>" line per check followed by indented measurements.
    std::string render_text() const;
    std::string render_json() const;
};

/// Names accepted in VerifyConfig::checks, in execution order.
std::vector<std::string> available_checks();

CheckResult run_check(const std::string& name, const VerifyConfig& config);
VerifyReport run_verification(const VerifyConfig& config);

/// Evaluates a measurement's pass flag from its kind.
Measurement measure(std::string label, double observed, double expected, double tolerance, std::string kind);

}  // namespace collapse
