#include "collapse/prob.hpp"

#include "collapse/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace collapse {

namespace {

constexpr double kSumTol = 1e-12;

void require_fit_size(const Dataset& data, const char* what) {
    if (data.size() < 2)
        throw Error(ErrorCode::insufficient_data,
                    std::string(what) + ": need at least 2 points, got " + std::to_string(data.size()));
}

}  // namespace

DiscreteDistribution::DiscreteDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty())
        throw Error(ErrorCode::invalid_argument, "discrete distribution needs at least one state");
    double sum = 0.0;
    for (double p : probs_) {
        if (!std::isfinite(p) || p < 0.0)
            throw Error(ErrorCode::invalid_argument, "discrete probabilities must be finite and non-negative");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTol)
        throw Error(ErrorCode::invalid_argument,
                    "discrete probabilities sum to " + std::to_string(sum) + ", expected 1");
}

std::optional<std::size_t> DiscreteDistribution::delta_state() const {
    std::optional<std::size_t> found;
    for (std::size_t i = 0; i < probs_.size(); ++i) {
        if (probs_[i] == 0.0) continue;
        if (found) return std::nullopt;
        found = i;
    }
    return found;
}

SampleCounts::SampleCounts(std::vector<std::uint64_t> counts) : counts_(std::move(counts)) {
    if (counts_.empty()) throw Error(ErrorCode::invalid_argument, "sample counts need at least one state");
    total_ = std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

double Gaussian1D::sigma() const { return std::sqrt(std::max(variance, 0.0)); }

void Gaussian1D::validate() const {
    if (!std::isfinite(mean) || !std::isfinite(variance) || variance < 0.0)
        throw Error(ErrorCode::invalid_model, "gaussian1d needs finite mean and non-negative variance");
}

void GaussianND::validate() const {
    if (mean.size() == 0) throw Error(ErrorCode::invalid_model, "gaussian_nd needs dimension ≥ 1");
    if (covariance.rows() != mean.size() || covariance.cols() != mean.size())
        throw Error(ErrorCode::invalid_model, "gaussian_nd mean and covariance dimensions disagree");
    if (!mean.allFinite()) throw Error(ErrorCode::invalid_model, "gaussian_nd mean is not finite");
    linalg::require_psd(covariance, "gaussian_nd");
}

Dataset::Dataset(std::size_t dim, std::vector<double> values, int generation)
    : dim_(dim), values_(std::move(values)), generation_(generation) {
    if (dim_ == 0) throw Error(ErrorCode::invalid_argument, "dataset dimension must be ≥ 1");
    if (values_.size() % dim_ != 0)
        throw Error(ErrorCode::invalid_argument, "dataset value count is not a multiple of its dimension");
    for (double v : values_)
        if (!std::isfinite(v)) throw Error(ErrorCode::invalid_argument, "dataset contains a non-finite value");
}

void Dataset::append(std::span<const double> point) {
    if (point.size() != dim_) throw Error(ErrorCode::invalid_argument, "point dimension mismatch");
    values_.insert(values_.end(), point.begin(), point.end());
}

void Dataset::append(const Dataset& other) {
    if (other.dim_ != dim_) throw Error(ErrorCode::invalid_argument, "dataset dimension mismatch");
    values_.insert(values_.end(), other.values_.begin(), other.values_.end());
}

SampleCounts sample_discrete(const DiscreteDistribution& dist, std::uint64_t m, RngStream& rng) {
    if (m == 0) throw Error(ErrorCode::invalid_argument, "sample_discrete: m must be ≥ 1");
    const auto& p = dist.probs();
    std::vector<std::uint64_t> counts(p.size(), 0);
    std::uint64_t remaining = m;
    double mass_left = 1.0;
    for (std::size_t i = 0; i + 1 < p.size() && remaining > 0; ++i) {
        if (p[i] > 0.0) {
            double q = mass_left > 0.0 ? std::min(1.0, p[i] / mass_left) : 1.0;
            counts[i] = rng.binomial(remaining, q);
            remaining -= counts[i];
        }
        mass_left -= p[i];
    }
    if (remaining > 0) {
        // Rounding can leave the tail with zero recorded mass; put the rest on
        // the last state that actually has mass.
        std::size_t last = p.size() - 1;
        while (last > 0 && p[last] == 0.0) --last;
        counts[last] += remaining;
    }
    return SampleCounts(std::move(counts));
}

DiscreteDistribution fit_discrete(const SampleCounts& counts) {
    if (counts.total() == 0) throw Error(ErrorCode::invalid_argument, "fit_discrete: total count is 0");
    std::vector<double> probs(counts.size());
    const double total = static_cast<double>(counts.total());
    for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = static_cast<double>(counts[i]) / total;
    return DiscreteDistribution(std::move(probs));
}

DiscreteDistribution tail_cutoff(const DiscreteDistribution& dist, std::uint64_t m) {
    if (m == 0) throw Error(ErrorCode::invalid_argument, "tail_cutoff: m must be ≥ 1");
    const double threshold = 1.0 / static_cast<double>(m);
    std::vector<double> kept(dist.probs());
    double sum = 0.0;
    for (double& p : kept) {
        if (p < threshold) p = 0.0;
        sum += p;
    }
    if (sum == 0.0)
        throw Error(ErrorCode::degenerate_cutoff, "tail_cutoff: every state is below 1/" + std::to_string(m));
    for (double& p : kept) p /= sum;
    return DiscreteDistribution(std::move(kept));
}

DiscreteDistribution discretize(const std::function<double(double)>& density, double lo, double hi,
                                std::size_t bins) {
    if (!(lo < hi) || bins == 0) throw Error(ErrorCode::invalid_argument, "discretize: need lo < hi and bins ≥ 1");
    const double width = (hi - lo) / static_cast<double>(bins);
    std::vector<double> mass(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        mass[b] = std::max(0.0, density(lo + (static_cast<double>(b) + 0.5) * width));
    }
    double sum = std::accumulate(mass.begin(), mass.end(), 0.0);
    if (!(sum > 0.0)) throw Error(ErrorCode::invalid_argument, "discretize: density has no mass on the bins");
    for (double& v : mass) v /= sum;
    return DiscreteDistribution(std::move(mass));
}

double student_t_pdf(double x, double location, double scale, double dof) {
    const double z = (x - location) / scale;
    const double log_norm = std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
                            0.5 * std::log(dof * std::numbers::pi) - std::log(scale);
    return std::exp(log_norm - 0.5 * (dof + 1.0) * std::log1p(z * z / dof));
}

Gaussian1D fit_gaussian1d(const Dataset& data) {
    if (data.dim() != 1) throw Error(ErrorCode::invalid_argument, "fit_gaussian1d: data must be scalar");
    require_fit_size(data, "fit_gaussian1d");
    const auto& x = data.values();
    const double m = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / m;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return {mean, ss / (m - 1.0)};
}

Dataset sample_gaussian1d(const Gaussian1D& model, std::size_t m, RngStream& rng, int generation) {
    model.validate();
    if (m == 0) throw Error(ErrorCode::invalid_argument, "sample_gaussian1d: m must be ≥ 1");
    std::vector<double> x(m, model.mean);
    const double s = model.sigma();
    if (s > 0.0)
        for (double& v : x) v += s * rng.normal();
    return Dataset(1, std::move(x), generation);
}

GaussianND fit_gaussian_nd(const Dataset& data) {
    require_fit_size(data, "fit_gaussian_nd");
    const std::size_t n = data.dim();
    const std::size_t m = data.size();
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
        data.values().data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    Vector mean = x.colwise().mean().transpose();
    Matrix centered = x.rowwise() - mean.transpose();
    Matrix cov = (centered.transpose() * centered) / static_cast<double>(m - 1);
    return {std::move(mean), linalg::symmetrize(cov)};
}

Dataset sample_gaussian_nd(const GaussianND& model, std::size_t m, RngStream& rng, int generation) {
    model.validate();
    if (m == 0) throw Error(ErrorCode::invalid_argument, "sample_gaussian_nd: m must be ≥ 1");
    const std::size_t n = model.dim();
    const Matrix root = linalg::psd_sqrt(model.covariance);
    std::vector<double> values(m * n);
    Vector z(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t c = 0; c < n; ++c) z[static_cast<Eigen::Index>(c)] = rng.normal();
        Vector x = model.mean + root * z;
        std::copy(x.data(), x.data() + n, values.begin() + static_cast<std::ptrdiff_t>(j * n));
    }
    return Dataset(n, std::move(values), generation);
}

}  // namespace collapse
