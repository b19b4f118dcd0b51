#include "collapse/metrics.hpp"

#include "collapse/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace collapse {

namespace {

constexpr double kMaxTruncatedMass = 1e-6;
constexpr std::size_t kMaxPoints1d = 400001;

double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

std::vector<double> axis(const GridSpec& grid, std::size_t d) {
    const auto i = static_cast<Eigen::Index>(d);
    std::vector<double> out(grid.points_per_dim);
    const double step = (grid.hi[i] - grid.lo[i]) / static_cast<double>(grid.points_per_dim - 1);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = grid.lo[i] + step * static_cast<double>(k);
    return out;
}

double trapezoid_weight(std::size_t k, std::size_t n) { return (k == 0 || k + 1 == n) ? 0.5 : 1.0; }

}  // namespace

void GridSpec::validate() const {
    if (lo.size() == 0 || lo.size() != hi.size())
        throw Error(ErrorCode::invalid_argument, "grid bounds must be non-empty and of equal length");
    if (!((hi - lo).array() > 0.0).all()) throw Error(ErrorCode::invalid_argument, "grid needs lo < hi");
    if (points_per_dim < 2) throw Error(ErrorCode::invalid_argument, "grid needs at least 2 points per dimension");
}

RiskSample w2_gaussian1d(const Gaussian1D& a, const Gaussian1D& b) {
    a.validate();
    b.validate();
    RiskSample r;
    r.mean_error_sq = (a.mean - b.mean) * (a.mean - b.mean);
    const double ds = a.sigma() - b.sigma();
    r.sigma_error_sq = ds * ds;
    r.w2_squared = r.mean_error_sq + r.sigma_error_sq;
    return r;
}

double gelbrich_lower_bound(const GaussianND& a, const GaussianND& b) {
    if (a.dim() != b.dim()) throw Error(ErrorCode::invalid_argument, "gelbrich_lower_bound: dimension mismatch");
    const Matrix sa = linalg::require_psd(a.covariance, "gelbrich_lower_bound");
    const Matrix sb = linalg::require_psd(b.covariance, "gelbrich_lower_bound");
    const double mean_term = (a.mean - b.mean).squaredNorm();
    const Matrix root_a = linalg::psd_sqrt(sa);
    const Matrix cross = linalg::psd_sqrt(root_a * sb * root_a);
    const double trace_term = (sa + sb - 2.0 * cross).trace();
    return mean_term + std::max(trace_term, 0.0);
}

GridSpec default_l2_grid(const GmmModel& a, const GmmModel& b) {
    if (a.dim() != b.dim()) throw Error(ErrorCode::invalid_argument, "default_l2_grid: dimension mismatch");
    const auto n = static_cast<Eigen::Index>(a.dim());
    Vector lo = Vector::Constant(n, std::numeric_limits<double>::infinity());
    Vector hi = -lo;
    double max_sigma = 0.0;
    double min_sigma = std::numeric_limits<double>::infinity();
    for (const GmmModel* model : {&a, &b}) {
        for (std::size_t c = 0; c < model->size(); ++c) {
            const auto& g = model->components[c];
            lo = lo.cwiseMin(g.mean);
            hi = hi.cwiseMax(g.mean);
            const Vector var = g.covariance.diagonal().cwiseMax(kCovarianceFloor);
            max_sigma = std::max(max_sigma, std::sqrt(var.maxCoeff()));
            if (model->weights[c] > 0.0) min_sigma = std::min(min_sigma, std::sqrt(var.minCoeff()));
        }
    }
    GridSpec grid{lo.array() - 8.0 * max_sigma, hi.array() + 8.0 * max_sigma, 4001};
    if (n == 1 && std::isfinite(min_sigma)) {
        const double span = grid.hi[0] - grid.lo[0];
        const double wanted = std::ceil(span / (0.1 * min_sigma)) + 1.0;
        grid.points_per_dim = static_cast<std::size_t>(
            std::clamp(wanted, 4001.0, static_cast<double>(kMaxPoints1d)));
    }
    return grid;
}

double mass_outside(const GmmModel& model, const GridSpec& grid) {
    double outside = 0.0;
    for (std::size_t c = 0; c < model.size(); ++c) {
        const auto& g = model.components[c];
        double tail = 0.0;
        for (Eigen::Index d = 0; d < g.mean.size(); ++d) {
            const double s = std::sqrt(std::max(g.covariance(d, d), kCovarianceFloor));
            tail += normal_upper_tail((grid.hi[d] - g.mean[d]) / s) + normal_upper_tail((g.mean[d] - grid.lo[d]) / s);
        }
        outside += model.weights[c] * std::min(tail, 1.0);
    }
    return outside;
}

double l2_distance_gmm(const GmmModel& a, const GmmModel& b, const GridSpec& grid) {
    grid.validate();
    if (a.dim() != b.dim() || a.dim() != grid.dim())
        throw Error(ErrorCode::invalid_argument, "l2_distance_gmm: dimension mismatch");
    if (grid.dim() > 2) throw Error(ErrorCode::invalid_argument, "l2_distance_gmm: only dimensions 1 and 2");
    if (mass_outside(a, grid) > kMaxTruncatedMass || mass_outside(b, grid) > kMaxTruncatedMass)
        throw Error(ErrorCode::grid_too_small, "l2_distance_gmm: grid excludes more than 1e-6 of the mass");

    const std::size_t n = grid.points_per_dim;
    const GmmDensity pa(a);
    const GmmDensity pb(b);
    double integral = 0.0;
    if (grid.dim() == 1) {
        const auto xs = axis(grid, 0);
        const double h = xs[1] - xs[0];
        for (std::size_t k = 0; k < n; ++k) {
            const double x = xs[k];
            const double diff = pa.pdf({&x, 1}) - pb.pdf({&x, 1});
            integral += trapezoid_weight(k, n) * diff * diff;
        }
        integral *= h;
    } else {
        const auto xs = axis(grid, 0);
        const auto ys = axis(grid, 1);
        const double area = (xs[1] - xs[0]) * (ys[1] - ys[0]);
        double pt[2];
        for (std::size_t i = 0; i < n; ++i) {
            pt[0] = xs[i];
            for (std::size_t j = 0; j < n; ++j) {
                pt[1] = ys[j];
                const double diff = pa.pdf(pt) - pb.pdf(pt);
                integral += trapezoid_weight(i, n) * trapezoid_weight(j, n) * diff * diff;
            }
        }
        integral *= area;
    }
    return std::sqrt(std::max(integral, 0.0));
}

double lost_state_fraction(const DiscreteDistribution& original, const SampleCounts& counts) {
    if (original.size() != counts.size())
        throw Error(ErrorCode::invalid_argument, "lost_state_fraction: state counts differ");
    double lost = 0.0;
    for (std::size_t i = 0; i < original.size(); ++i)
        if (counts[i] == 0) lost += original[i];
    return std::clamp(lost, 0.0, 1.0);
}

double total_variation(const DiscreteDistribution& a, const DiscreteDistribution& b) {
    if (a.size() != b.size()) throw Error(ErrorCode::invalid_argument, "total_variation: state counts differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return 0.5 * s;
}

std::vector<RiskMoments> risk_stats(const std::vector<RiskSample>& samples) {
    if (samples.empty()) throw Error(ErrorCode::invalid_argument, "risk_stats: no samples");
    std::map<int, std::vector<double>> groups;
    for (const auto& s : samples) groups[s.generation].push_back(s.w2_squared);
    std::vector<RiskMoments> out;
    out.reserve(groups.size());
    for (const auto& [gen, values] : groups) {
        if (values.size() < 2)
            throw Error(ErrorCode::invalid_argument,
                        "risk_stats: generation " + std::to_string(gen) + " has fewer than 2 samples");
        RiskMoments r{gen, values.size(), 0.0, 0.0};
        for (double v : values) r.mean += v;
        r.mean /= static_cast<double>(values.size());
        for (double v : values) r.variance += (v - r.mean) * (v - r.mean);
        r.variance /= static_cast<double>(values.size() - 1);
        out.push_back(r);
    }
    return out;
}

}  // namespace collapse
