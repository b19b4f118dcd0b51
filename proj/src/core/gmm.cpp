#include "collapse/gmm.hpp"

#include "collapse/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace collapse {

namespace {

constexpr double kEmptyResponsibility = 1e-10;

double log_sum_exp(std::span<const double> v) {
    double hi = -std::numeric_limits<double>::infinity();
    for (double x : v) hi = std::max(hi, x);
    if (!std::isfinite(hi)) return hi;
    double s = 0.0;
    for (double x : v) s += std::exp(x - hi);
    return hi + std::log(s);
}

}  // namespace

GmmDensity::GmmDensity(const GmmModel& model) : dim_(model.dim()) {
    const double n = static_cast<double>(dim_);
    components_.reserve(model.size());
    for (std::size_t c = 0; c < model.size(); ++c) {
        const auto& g = model.components[c];
        Eigen::SelfAdjointEigenSolver<Matrix> solver(linalg::symmetrize(g.covariance));
        Vector lambda = solver.eigenvalues().cwiseMax(kCovarianceFloor);
        const Matrix& v = solver.eigenvectors();
        const double log_w = model.weights[c] > 0.0 ? std::log(model.weights[c])
                                                    : -std::numeric_limits<double>::infinity();
        components_.push_back({g.mean, v * lambda.cwiseInverse().asDiagonal() * v.transpose(),
                               log_w - 0.5 * (n * std::log(2.0 * std::numbers::pi) + lambda.array().log().sum())});
    }
}

void GmmDensity::weighted_log_terms(std::span<const double> x, std::span<double> out) const {
    if (x.size() != dim_) throw Error(ErrorCode::invalid_argument, "gmm density: point dimension mismatch");
    for (std::size_t c = 0; c < components_.size(); ++c) {
        const auto& comp = components_[c];
        if (dim_ == 1) {
            const double d = x[0] - comp.mean[0];
            out[c] = comp.log_weight_norm - 0.5 * d * d * comp.precision(0, 0);
        } else {
            Eigen::Map<const Vector> xv(x.data(), static_cast<Eigen::Index>(dim_));
            const Vector d = xv - comp.mean;
            out[c] = comp.log_weight_norm - 0.5 * d.dot(comp.precision * d);
        }
    }
}

double GmmDensity::log_pdf(std::span<const double> x) const {
    double buf[16];
    std::vector<double> heap;
    std::span<double> terms;
    if (components_.size() <= 16) {
        terms = {buf, components_.size()};
    } else {
        heap.resize(components_.size());
        terms = heap;
    }
    weighted_log_terms(x, terms);
    return log_sum_exp(terms);
}

double GmmDensity::pdf(std::span<const double> x) const { return std::exp(log_pdf(x)); }

void GmmModel::validate() const {
    if (components.empty() || weights.size() != components.size())
        throw Error(ErrorCode::invalid_model, "gmm needs c ≥ 1 components with one weight each");
    double sum = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) throw Error(ErrorCode::invalid_model, "gmm weights must be non-negative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw Error(ErrorCode::invalid_model, "gmm weights must sum to 1");
    for (const auto& c : components) {
        c.validate();
        if (c.dim() != dim()) throw Error(ErrorCode::invalid_model, "gmm component dimensions disagree");
    }
}

Vector GmmModel::mixture_mean() const {
    Vector mu = Vector::Zero(static_cast<Eigen::Index>(dim()));
    for (std::size_t c = 0; c < size(); ++c) mu += weights[c] * components[c].mean;
    return mu;
}

Matrix GmmModel::mixture_covariance() const {
    const Vector mu = mixture_mean();
    Matrix cov = -mu * mu.transpose();
    for (std::size_t c = 0; c < size(); ++c) {
        const auto& g = components[c];
        cov += weights[c] * (g.covariance + g.mean * g.mean.transpose());
    }
    return linalg::symmetrize(cov);
}

GmmModel single_component(const GaussianND& g) { return GmmModel{{1.0}, {g}}; }

double gmm_log_pdf(const GmmModel& model, std::span<const double> x) { return GmmDensity(model).log_pdf(x); }

double gmm_pdf(const GmmModel& model, std::span<const double> x) { return std::exp(gmm_log_pdf(model, x)); }

Dataset sample_gmm(const GmmModel& model, std::size_t m, RngStream& rng, int generation) {
    model.validate();
    if (m == 0) throw Error(ErrorCode::invalid_argument, "sample_gmm: m must be ≥ 1");
    // Labels by inverse CDF on the weights; zero-weight components are never chosen.
    std::vector<std::size_t> labels(m);
    for (auto& l : labels) {
        double u = rng.uniform();
        std::size_t c = 0;
        while (c + 1 < model.size() && u >= model.weights[c]) {
            u -= model.weights[c];
            ++c;
        }
        while (model.weights[c] == 0.0 && c > 0) --c;
        l = c;
    }
    const std::size_t n = model.dim();
    std::vector<Matrix> roots;
    for (const auto& g : model.components) roots.push_back(linalg::psd_sqrt(g.covariance));
    std::vector<double> values(m * n);
    Vector z(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < m; ++j) {
        const auto& g = model.components[labels[j]];
        for (std::size_t d = 0; d < n; ++d) z[static_cast<Eigen::Index>(d)] = rng.normal();
        Vector x = g.mean + roots[labels[j]] * z;
        std::copy(x.data(), x.data() + n, values.begin() + static_cast<std::ptrdiff_t>(j * n));
    }
    return Dataset(n, std::move(values), generation);
}

EmResult gmm_fit_em(const Dataset& data, const GmmModel& init, const EmOptions& options) {
    init.validate();
    if (data.size() < 2) throw Error(ErrorCode::insufficient_data, "gmm_fit_em: need at least 2 points");
    if (data.dim() != init.dim()) throw Error(ErrorCode::invalid_argument, "gmm_fit_em: dimension mismatch");

    const std::size_t m = data.size();
    const std::size_t c_count = init.size();
    const auto n = static_cast<Eigen::Index>(init.dim());
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
        data.values().data(), static_cast<Eigen::Index>(m), n);

    EmResult result{init, 0, false, 0.0, std::vector<bool>(c_count, false)};
    GmmModel& model = result.model;

    Matrix resp(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(c_count));
    std::vector<double> terms(c_count);

    // E step on the current model; returns mean log-likelihood.
    auto expectation = [&]() {
        const GmmDensity dens(model);
        double total = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            dens.weighted_log_terms(data.point(j), terms);
            const double lse = log_sum_exp(terms);
            total += lse;
            for (std::size_t c = 0; c < c_count; ++c)
                resp(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = std::exp(terms[c] - lse);
        }
        return total / static_cast<double>(m);
    };

    double ll = expectation();
    result.mean_log_likelihood = ll;
    for (int it = 0; it < options.max_iters; ++it) {
        for (std::size_t c = 0; c < c_count; ++c) {
            const auto col = resp.col(static_cast<Eigen::Index>(c));
            const double nk = col.sum();
            auto& g = model.components[c];
            if (nk < kEmptyResponsibility) {
                model.weights[c] = 0.0;
                g.covariance = linalg::eigen_floor(g.covariance, kCovarianceFloor);
                result.empty_components[c] = true;
                continue;
            }
            result.empty_components[c] = false;
            model.weights[c] = nk / static_cast<double>(m);
            Vector mu = (x.transpose() * col) / nk;
            Matrix centered = x.rowwise() - mu.transpose();
            Matrix cov = centered.transpose() * col.asDiagonal() * centered / nk;
            g.mean = std::move(mu);
            g.covariance = linalg::symmetrize(cov);
        }
        double wsum = 0.0;
        for (double w : model.weights) wsum += w;
        for (double& w : model.weights) w /= wsum;

        result.iterations = it + 1;
        const double next = expectation();
        const double gain = next - ll;
        ll = next;
        result.mean_log_likelihood = ll;
        if (gain < options.tol) {
            result.converged = true;
            break;
        }
    }
    return result;
}

}  // namespace collapse
