#include "collapse/theory.hpp"

#include "collapse/error.hpp"

#include <cmath>
#include <string>

namespace collapse {

namespace {

double inverse_sum(const SampleSchedule& schedule) {
    double s = 0.0;
    for (auto m : schedule.sizes()) s += 1.0 / static_cast<double>(m);
    return s;
}

void require_non_negative(double v, const char* what) {
    if (!(v >= 0.0) || !std::isfinite(v))
        throw Error(ErrorCode::invalid_argument, std::string(what) + " must be finite and ≥ 0");
}

}  // namespace

SampleSchedule::SampleSchedule(std::vector<std::uint64_t> sizes) : sizes_(std::move(sizes)) {
    for (auto m : sizes_)
        if (m < 2) throw Error(ErrorCode::invalid_argument, "sample sizes must be ≥ 2");
}

SampleSchedule SampleSchedule::constant(std::uint64_t m, std::size_t count) {
    return SampleSchedule(std::vector<std::uint64_t>(count, m));
}

SampleSchedule SampleSchedule::polynomial(std::uint64_t base, double power, std::size_t count) {
    std::vector<std::uint64_t> sizes(count);
    for (std::size_t i = 0; i < count; ++i)
        sizes[i] = static_cast<std::uint64_t>(
            std::llround(static_cast<double>(base) * std::pow(static_cast<double>(i + 1), power)));
    return SampleSchedule(std::move(sizes));
}

SampleSchedule SampleSchedule::prefix(std::size_t count) const {
    if (count > sizes_.size()) throw Error(ErrorCode::invalid_argument, "schedule prefix longer than schedule");
    return SampleSchedule(std::vector<std::uint64_t>(sizes_.begin(), sizes_.begin() + static_cast<std::ptrdiff_t>(count)));
}

double predicted_variance(double sigma_sq, const SampleSchedule& schedule) {
    require_non_negative(sigma_sq, "sigma_sq");
    return sigma_sq * (1.0 + inverse_sum(schedule));
}

double predicted_risk_mean(double sigma_sq, const SampleSchedule& schedule) {
    require_non_negative(sigma_sq, "sigma_sq");
    return 1.5 * sigma_sq * inverse_sum(schedule);
}

double predicted_risk_variance(double sigma_sq, const SampleSchedule& schedule) {
    require_non_negative(sigma_sq, "sigma_sq");
    double inv_sq = 0.0;
    for (auto m : schedule.sizes()) inv_sq += 1.0 / (static_cast<double>(m) * static_cast<double>(m));
    // Σ_{i≠j} 1/(M_i M_j) = (Σ 1/M_i)² − Σ 1/M_i²
    const double inv = inverse_sum(schedule);
    const double cross = 4.0 * (inv * inv - inv_sq);
    return 0.5 * sigma_sq * sigma_sq * (3.0 * inv_sq + cross);
}

double noisy_lower_bound(double trace_sigma, const SampleSchedule& schedule,
                         const std::vector<double>& eps_norms_sq) {
    require_non_negative(trace_sigma, "trace_sigma");
    if (eps_norms_sq.size() != schedule.size())
        throw Error(ErrorCode::invalid_argument, "noisy_lower_bound: need one noise term per schedule entry");
    double noise = 0.0;
    for (double e : eps_norms_sq) {
        require_non_negative(e, "noise norm");
        noise += e;
    }
    return trace_sigma * inverse_sum(schedule) + noise;
}

std::vector<double> noisy_lower_bound_bounded(double trace_sigma, const SampleSchedule& schedule,
                                              const std::vector<double>& eps_norms_sq, double k_bound,
                                              std::size_t dim) {
    require_non_negative(trace_sigma, "trace_sigma");
    require_non_negative(k_bound, "k_bound");
    if (dim < 1) throw Error(ErrorCode::invalid_argument, "noisy_lower_bound_bounded: dim must be ≥ 1");
    if (eps_norms_sq.size() != schedule.size())
        throw Error(ErrorCode::invalid_argument, "noisy_lower_bound_bounded: need one noise term per schedule entry");
    const double coupling = 2.0 * k_bound * std::sqrt(static_cast<double>(dim)) * std::sqrt(trace_sigma);
    std::vector<double> out(schedule.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const double m = static_cast<double>(schedule[i]);
        acc += trace_sigma / m + eps_norms_sq[i] - coupling / (m * std::sqrt(m));
        out[i] = acc;
    }
    return out;
}

double draw_scaled_gamma(std::uint64_t m, RngStream& rng) {
    const double dof = static_cast<double>(m) - 1.0;
    // rate 1/2 is scale 2
    return rng.gamma(0.5 * dof, 2.0) / dof;
}

Dataset construction_sample(double mu, double sigma, const SampleSchedule& schedule, std::size_t m_final,
                            RngStream& rng, ConstructionDraws* draws) {
    require_non_negative(sigma, "sigma");
    if (m_final == 0) throw Error(ErrorCode::invalid_argument, "construction_sample: m_final must be ≥ 1");
    const std::size_t n = schedule.size();
    ConstructionDraws local;
    local.z_shared.resize(n);
    local.s_factors.resize(n);
    double shift = mu;
    double s_product = 1.0;  // S^1⋯S^{i−1}
    for (std::size_t i = 1; i <= n; ++i) {
        const double m_prev = static_cast<double>(schedule[i - 1]);
        const double z = rng.normal();
        shift += sigma / std::sqrt(m_prev) * std::sqrt(s_product) * z;
        const double s = draw_scaled_gamma(schedule[i - 1], rng);
        s_product *= s;
        local.z_shared[i - 1] = z;
        local.s_factors[i - 1] = s;
    }
    const double scale = sigma * std::sqrt(s_product);
    std::vector<double> x(m_final);
    for (double& v : x) v = shift + scale * rng.normal();
    if (draws) *draws = std::move(local);
    return Dataset(1, std::move(x), static_cast<int>(n));
}

}  // namespace collapse
