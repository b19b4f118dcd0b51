#pragma once

#include "collapse/linalg.hpp"
#include "collapse/rng.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace collapse {

using linalg::Matrix;
using linalg::Vector;

/// Probability vector over k ≥ 1 states. Entries are non-negative and sum to 1
/// within 1e-12; the constructor rejects anything else.
class DiscreteDistribution {
public:
    explicit DiscreteDistribution(std::vector<double> probs);

    const std::vector<double>& probs() const noexcept { return probs_; }
    std::size_t size() const noexcept { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }

    /// Index of the single state carrying all the mass, if any.
    std::optional<std::size_t> delta_state() const;

    bool operator==(const DiscreteDistribution&) const = default;

private:
    std::vector<double> probs_;
};

/// Observed counts per state; `total()` is the sample size M.
class SampleCounts {
public:
    explicit SampleCounts(std::vector<std::uint64_t> counts);

    const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
    std::uint64_t total() const noexcept { return total_; }
    std::size_t size() const noexcept { return counts_.size(); }
    std::uint64_t operator[](std::size_t i) const { return counts_[i]; }

    bool operator==(const SampleCounts&) const = default;

private:
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

struct Gaussian1D {
    double mean = 0.0;
    double variance = 1.0;

    double sigma() const;
    void validate() const;
};

struct GaussianND {
    Vector mean;
    Matrix covariance;

    std::size_t dim() const noexcept { return static_cast<std::size_t>(mean.size()); }
    /// Symmetry within 1e-10, eigenvalues ≥ -1e-10, matching sizes.
    void validate() const;
};

/// M points of dimension N stored row-major.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::size_t dim, std::vector<double> values, int generation = 0);

    static Dataset scalar(std::vector<double> values, int generation = 0) {
        return Dataset(1, std::move(values), generation);
    }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return dim_ == 0 ? 0 : values_.size() / dim_; }
    int generation() const noexcept { return generation_; }
    void set_generation(int g) noexcept { generation_ = g; }

    std::span<const double> point(std::size_t j) const {
        return {values_.data() + j * dim_, dim_};
    }
    const std::vector<double>& values() const noexcept { return values_; }

    void append(std::span<const double> point);
    void append(const Dataset& other);

    bool operator==(const Dataset&) const = default;

private:
    std::size_t dim_ = 1;
    std::vector<double> values_;
    int generation_ = 0;
};

// Discrete family ---------------------------------------------------------

/// Multinomial(m, probs) via sequential conditional binomials.
SampleCounts sample_discrete(const DiscreteDistribution& dist, std::uint64_t m, RngStream& rng);

/// Empirical frequencies; the exact maximum-likelihood histogram.
DiscreteDistribution fit_discrete(const SampleCounts& counts);

/// Zeroes states with probability strictly below 1/m and renormalizes.
/// Throws degenerate_cutoff when no state survives.
DiscreteDistribution tail_cutoff(const DiscreteDistribution& dist, std::uint64_t m);

/// Midpoint-rule histogram of `density` over `bins` equal bins of [lo, hi].
DiscreteDistribution discretize(const std::function<double(double)>& density, double lo, double hi,
                                std::size_t bins);

/// Location-scale Student-t density with `dof` degrees of freedom.
double student_t_pdf(double x, double location, double scale, double dof);

// Gaussian families -------------------------------------------------------

/// Unbiased sample mean and variance (divisor M-1). Requires M ≥ 2, N = 1.
Gaussian1D fit_gaussian1d(const Dataset& data);

Dataset sample_gaussian1d(const Gaussian1D& model, std::size_t m, RngStream& rng, int generation = 0);

/// Sample mean and symmetrized unbiased sample covariance. Requires M ≥ 2.
GaussianND fit_gaussian_nd(const Dataset& data);

/// Draws mean + Σ^{1/2} z with the symmetric (eigendecomposition) square root,
/// so singular covariances sample on their support.
Dataset sample_gaussian_nd(const GaussianND& model, std::size_t m, RngStream& rng, int generation = 0);

}  // namespace collapse
