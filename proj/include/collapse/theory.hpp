#pragma once

#include "collapse/prob.hpp"

#include <cstdint>
#include <vector>

namespace collapse {

/// Per-generation sample sizes M_0, M_1, ...; every entry ≥ 2.
class SampleSchedule {
public:
    SampleSchedule() = default;
    explicit SampleSchedule(std::vector<std::uint64_t> sizes);

    static SampleSchedule constant(std::uint64_t m, std::size_t count);
    /// M_i = base·(i+1)^power for i < count.
    static SampleSchedule polynomial(std::uint64_t base, double power, std::size_t count);

    const std::vector<std::uint64_t>& sizes() const noexcept { return sizes_; }
    std::size_t size() const noexcept { return sizes_.size(); }
    bool empty() const noexcept { return sizes_.empty(); }
    std::uint64_t operator[](std::size_t i) const { return sizes_.at(i); }

    /// First `count` entries.
    SampleSchedule prefix(std::size_t count) const;

private:
    std::vector<std::uint64_t> sizes_;
};

// The closed forms below are the second-order expansions in 1/M_i exactly as
// derived for the recursive Gaussian fit; no higher-order terms are added.

/// σ²·(1 + Σ_i 1/M_i) over every entry of `schedule` (M_0..M_{n-1} for X^n).
double predicted_variance(double sigma_sq, const SampleSchedule& schedule);

/// E[R_W2] = (3/2)·σ²·Σ_i 1/M_i over M_0..M_n.
double predicted_risk_mean(double sigma_sq, const SampleSchedule& schedule);

/// Var[R_W2] = (1/2)·σ⁴·(Σ_i 3/M_i² + Σ_{i≠j} 4/(M_i M_j)).
double predicted_risk_variance(double sigma_sq, const SampleSchedule& schedule);

/// TrΣ·Σ_{i=0}^{n} 1/M_i + Σ_{i=1}^{n+1} E‖ε_i‖². `eps_norms_sq` must have
/// one entry per schedule entry.
double noisy_lower_bound(double trace_sigma, const SampleSchedule& schedule,
                         const std::vector<double>& eps_norms_sq);

/// Cumulative bound under the bounded-noise assumption ‖ε_{i+1}‖ ≤ K/M_i:
/// entry i sums TrΣ/M_j + E‖ε_{j+1}‖² − 2K√N·√TrΣ / M_j^{3/2} for j ≤ i.
/// Increments are not clamped, so a large K can make entries decrease.
std::vector<double> noisy_lower_bound_bounded(double trace_sigma, const SampleSchedule& schedule,
                                              const std::vector<double>& eps_norms_sq, double k_bound,
                                              std::size_t dim);

/// Random variables behind one draw of the explicit construction.
struct ConstructionDraws {
    std::vector<double> z_shared;   // Z^1..Z^n
    std::vector<double> s_factors;  // S^1..S^n
};

/// S ~ Γ((M−1)/2, rate 1/2) / (M−1); mean 1.
double draw_scaled_gamma(std::uint64_t m, RngStream& rng);

/// Samples X^n_j directly from independent normals and scaled-gamma factors:
///   X^n_j = μ + σ/√M_0·Z^1 + σ/√M_1·√S^1·Z^2 + … + σ/√M_{n−1}·√(S^1⋯S^{n−1})·Z^n
///           + σ·√(S^1⋯S^n)·Z^n_j
/// with S^i built from M_{i−1}. n = schedule.size(); the shared terms are drawn
/// once and m_final private normals are emitted. `draws`, when given,
/// receives the shared variables.
Dataset construction_sample(double mu, double sigma, const SampleSchedule& schedule, std::size_t m_final,
                            RngStream& rng, ConstructionDraws* draws = nullptr);

}  // namespace collapse
