#pragma once

#include "collapse/prob.hpp"

#include <vector>

namespace collapse {

/// Eigenvalue floor applied to covariances whenever a density is evaluated.
/// Stored models keep the raw fitted covariance.
inline constexpr double kCovarianceFloor = 1e-9;

struct GmmModel {
    std::vector<double> weights;
    std::vector<GaussianND> components;

    std::size_t size() const noexcept { return components.size(); }
    std::size_t dim() const noexcept { return components.empty() ? 0 : components.front().dim(); }

    /// Weights non-negative summing to 1 within 1e-12, c ≥ 1, one dimension,
    /// every component a valid GaussianND.
    void validate() const;

    /// Σ w (Σ_c + μ_c μ_cᵀ) − μ̄ μ̄ᵀ using raw covariances.
    Matrix mixture_covariance() const;
    Vector mixture_mean() const;
};

GmmModel single_component(const GaussianND& g);

/// Density of a fixed mixture with factorizations computed once; use this
/// instead of gmm_pdf when evaluating many points.
class GmmDensity {
public:
    explicit GmmDensity(const GmmModel& model);

    double log_pdf(std::span<const double> x) const;
    double pdf(std::span<const double> x) const;
    /// Per-component log(w_c) + log N(x; μ_c, floor(Σ_c)) written to `out`.
    void weighted_log_terms(std::span<const double> x, std::span<double> out) const;

    std::size_t dim() const noexcept { return dim_; }

private:
    struct Component {
        Vector mean;
        Matrix precision;
        double log_weight_norm;  // log w + normalizing constant
    };
    std::vector<Component> components_;
    std::size_t dim_;
};

/// Σ_c w_c N(x; μ_c, floor(Σ_c)).
double gmm_pdf(const GmmModel& model, std::span<const double> x);
double gmm_log_pdf(const GmmModel& model, std::span<const double> x);

Dataset sample_gmm(const GmmModel& model, std::size_t m, RngStream& rng, int generation = 0);

struct EmOptions {
    int max_iters = 100;
    /// Stop when the mean per-point log-likelihood improves by less than this.
    double tol = 1e-6;
};

struct EmResult {
    GmmModel model;
    int iterations = 0;
    bool converged = false;
    double mean_log_likelihood = 0.0;
    /// Components whose total responsibility vanished in the last M step; they
    /// keep their previous mean and floored covariance with weight 0.
    std::vector<bool> empty_components;
};

EmResult gmm_fit_em(const Dataset& data, const GmmModel& init, const EmOptions& options = {});

}  // namespace collapse
