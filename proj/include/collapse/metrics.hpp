#pragma once

#include "collapse/gmm.hpp"
#include "collapse/prob.hpp"

#include <vector>

namespace collapse {

/// Realized squared Wasserstein-2 risk split into its mean and scale parts.
struct RiskSample {
    int generation = 0;
    double w2_squared = 0.0;
    double mean_error_sq = 0.0;
    double sigma_error_sq = 0.0;
};

struct GridSpec {
    Vector lo;
    Vector hi;
    std::size_t points_per_dim = 4001;

    std::size_t dim() const noexcept { return static_cast<std::size_t>(lo.size()); }
    void validate() const;
};

RiskSample w2_gaussian1d(const Gaussian1D& a, const Gaussian1D& b);

/// ‖μ_a−μ_b‖² + Tr(Σ_a + Σ_b − 2(Σ_a^{1/2} Σ_b Σ_a^{1/2})^{1/2}), clamped so it
/// never drops below the mean term. Exact W2² between Gaussians, and a lower
/// bound on W2² for any pair of laws with these moments.
double gelbrich_lower_bound(const GaussianND& a, const GaussianND& b);

/// [min μ − 8 max σ, max μ + 8 max σ] per dimension over both mixtures, 4001
/// points. In one dimension the point count is raised until the spacing is at
/// most a tenth of the narrowest component's σ (capped at 400001 points).
GridSpec default_l2_grid(const GmmModel& a, const GmmModel& b);

/// √∫(p_a − p_b)² by the trapezoid rule on `grid` (dimension 1 or 2).
/// Throws grid_too_small when the grid leaves out more than 1e-6 of either
/// model's mass.
double l2_distance_gmm(const GmmModel& a, const GmmModel& b, const GridSpec& grid);

/// Mass outside the box [lo, hi], bounded by a per-dimension union of
/// Gaussian tails for each component.
double mass_outside(const GmmModel& model, const GridSpec& grid);

/// Original probability mass on states that received no samples.
double lost_state_fraction(const DiscreteDistribution& original, const SampleCounts& counts);

double total_variation(const DiscreteDistribution& a, const DiscreteDistribution& b);

struct RiskMoments {
    int generation = 0;
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;  // unbiased
};

/// Groups by generation (ascending) and returns mean and unbiased variance of
/// w2_squared. Each generation needs at least two samples.
std::vector<RiskMoments> risk_stats(const std::vector<RiskSample>& samples);

}  // namespace collapse
