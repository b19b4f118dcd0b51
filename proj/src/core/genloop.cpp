#include "collapse/genloop.hpp"

#include "collapse/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>
#include <thread>

namespace collapse {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const Dataset& as_dataset(const Samples& s) {
    if (const auto* d = std::get_if<Dataset>(&s)) return *d;
    throw Error(ErrorCode::invalid_argument, "expected point data, got counts");
}

const SampleCounts& as_counts(const Samples& s) {
    if (const auto* c = std::get_if<SampleCounts>(&s)) return *c;
    throw Error(ErrorCode::invalid_argument, "expected counts, got point data");
}

double discrete_variance(const DiscreteDistribution& d) {
    double mean = 0.0;
    double second = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        mean += d[i] * static_cast<double>(i);
        second += d[i] * static_cast<double>(i) * static_cast<double>(i);
    }
    return std::max(second - mean * mean, 0.0);
}

GmmModel jittered_init(const GmmModel& original, double jitter, RngStream& rng) {
    GmmModel init = original;
    const double w = 1.0 / static_cast<double>(init.size());
    for (std::size_t c = 0; c < init.size(); ++c) {
        init.weights[c] = w;
        for (Eigen::Index d = 0; d < init.components[c].mean.size(); ++d)
            init.components[c].mean[d] += jitter * rng.normal();
    }
    return init;
}

double min_active_eigenvalue(const GmmModel& g) {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < g.size(); ++c)
        if (g.weights[c] > 0.0) lo = std::min(lo, linalg::symmetric_eigenvalues(g.components[c].covariance).minCoeff());
    return lo;
}

// Fits the family's estimator to `fit_set` and fills the metric fields of
// `rec` against `config.original`.
Model fit_and_measure(const EngineConfig& config, int generation, const Model& warm_start, const Samples& fit_set,
                      RngStream& rng, TrajectoryRecord& rec) {
    rec.fit_size = sample_count(fit_set);
    return std::visit(
        overloaded{
            [&](const DiscreteDistribution& original) -> Model {
                const auto& counts = as_counts(fit_set);
                DiscreteDistribution fitted = fit_discrete(counts);
                rec.risk = total_variation(fitted, original);
                rec.lost_mass = lost_state_fraction(original, counts);
                rec.total_variance = discrete_variance(fitted);
                rec.raw_min_eigenvalue = rec.total_variance;
                rec.collapsed = fitted.delta_state().has_value();
                return fitted;
            },
            [&](const Gaussian1D& original) -> Model {
                const auto& data = as_dataset(fit_set);
                Gaussian1D fitted = fit_gaussian1d(data);
                const Vector eps = noise_epsilon(data, Vector::Constant(1, fitted.mean),
                                                 Vector::Constant(1, fitted.variance), config.noise);
                fitted.mean += eps[0];
                rec.noise_norm_sq = eps[0] * eps[0];
                rec.w2 = w2_gaussian1d(fitted, original);
                rec.w2.generation = generation;
                rec.risk = rec.w2.w2_squared;
                rec.total_variance = fitted.variance;
                rec.raw_min_eigenvalue = fitted.variance;
                rec.collapsed = fitted.variance < kCollapseVariance;
                return fitted;
            },
            [&](const GaussianND& original) -> Model {
                const auto& data = as_dataset(fit_set);
                NoisyFit nf = noisy_fit_nd(data, config.noise);
                rec.noise_norm_sq = nf.epsilon.squaredNorm();
                rec.risk = gelbrich_lower_bound(nf.model, original);
                const Vector eig = linalg::symmetric_eigenvalues(nf.model.covariance);
                rec.total_variance = nf.model.covariance.trace();
                rec.raw_min_eigenvalue = eig.minCoeff();
                rec.collapsed = eig.maxCoeff() < kCollapseVariance;
                return std::move(nf.model);
            },
            [&](const GmmModel& original) -> Model {
                const auto& data = as_dataset(fit_set);
                GmmModel init = generation == 0 ? jittered_init(original, config.gmm_init_jitter, rng)
                                                : std::get<GmmModel>(warm_start);
                EmResult em = gmm_fit_em(data, init, config.em);
                rec.em_iterations = em.iterations;
                rec.em_empty_component =
                    std::any_of(em.empty_components.begin(), em.empty_components.end(), [](bool b) { return b; });
                rec.risk = l2_distance_gmm(original, em.model, default_l2_grid(original, em.model));
                const Matrix cov = em.model.mixture_covariance();
                rec.total_variance = cov.trace();
                rec.raw_min_eigenvalue = min_active_eigenvalue(em.model);
                rec.collapsed = linalg::symmetric_eigenvalues(cov).maxCoeff() < kCollapseVariance;
                return std::move(em.model);
            },
        },
        config.original);
}

}  // namespace

const char* to_string(Family f) noexcept {
    switch (f) {
        case Family::discrete: return "discrete";
        case Family::gaussian1d: return "gaussian1d";
        case Family::gaussian_nd: return "gaussian_nd";
        case Family::gmm: return "gmm";
    }
    return "unknown";
}

const char* to_string(AccumulationMode m) noexcept {
    switch (m) {
        case AccumulationMode::fresh_only: return "fresh_only";
        case AccumulationMode::pool_subsample: return "pool_subsample";
        case AccumulationMode::pool_all: return "pool_all";
    }
    return "unknown";
}

const char* to_string(NoiseKind k) noexcept {
    switch (k) {
        case NoiseKind::zero: return "zero";
        case NoiseKind::bounded_moment: return "bounded_moment";
    }
    return "unknown";
}

Family family_of(const Model& model) noexcept { return static_cast<Family>(model.index()); }

std::size_t sample_count(const Samples& s) noexcept {
    return std::visit(overloaded{[](const SampleCounts& c) { return static_cast<std::size_t>(c.total()); },
                                 [](const Dataset& d) { return d.size(); }},
                      s);
}

void MixWeights::validate() const {
    if (!(alpha >= 0.0 && beta >= 0.0 && gamma >= 0.0))
        throw Error(ErrorCode::invalid_argument, "mixing weights must be non-negative");
    if (std::abs(alpha + beta + gamma - 1.0) > 1e-12)
        throw Error(ErrorCode::invalid_argument, "mixing weights must sum to 1");
}

void GenerationSchedule::validate() const {
    if (sizes.empty()) throw Error(ErrorCode::invalid_argument, "schedule needs at least M_0");
    if (mix.size() != n_generations())
        throw Error(ErrorCode::invalid_argument, "schedule needs one set of mixing weights per generation");
    for (const auto& w : mix) w.validate();
}

GenerationSchedule GenerationSchedule::constant(std::uint64_t m, std::size_t n_generations, MixWeights w) {
    return {SampleSchedule::constant(m, n_generations + 1), std::vector<MixWeights>(n_generations, w)};
}

void AccumulationPolicy::validate() const {
    if (mode == AccumulationMode::pool_subsample && subsample_size < 2)
        throw Error(ErrorCode::invalid_argument, "pool_subsample needs subsample_size ≥ 2");
}

void NoiseModel::validate() const {
    if (!(k_bound >= 0.0) || !std::isfinite(k_bound))
        throw Error(ErrorCode::invalid_argument, "noise k_bound must be finite and ≥ 0");
}

std::string NoiseModel::descriptor() const {
    if (kind == NoiseKind::zero) return "zero: fitted mean is the sample mean";
    std::ostringstream os;
    os << "bounded_moment: mean += eps, eps along m3/s^2 per coordinate, |eps| <= min(K/M, |m3/s^2|), K=" << k_bound;
    return os.str();
}

void EngineConfig::validate() const {
    std::visit(overloaded{[](const DiscreteDistribution&) {}, [](const Gaussian1D& g) { g.validate(); },
                          [](const GaussianND& g) { g.validate(); }, [](const GmmModel& g) { g.validate(); }},
               original);
    schedule.validate();
    policy.validate();
    noise.validate();
    const Family f = family();
    if (noise.kind != NoiseKind::zero && f != Family::gaussian1d && f != Family::gaussian_nd)
        throw Error(ErrorCode::invalid_argument, "fit noise is only defined for the Gaussian families");
    if (f == Family::gmm && original.index() == 3 && std::get<GmmModel>(original).dim() > 2)
        throw Error(ErrorCode::invalid_argument, "gmm family supports dimension 1 or 2");
    if (em.max_iters < 0) throw Error(ErrorCode::invalid_argument, "em max_iters must be ≥ 0");
    if (!(gmm_init_jitter >= 0.0)) throw Error(ErrorCode::invalid_argument, "gmm init jitter must be ≥ 0");
}

Vector noise_epsilon(const Dataset& data, const Vector& mean, const Vector& variances, const NoiseModel& noise) {
    const auto n = static_cast<Eigen::Index>(data.dim());
    Vector eps = Vector::Zero(n);
    if (noise.kind != NoiseKind::bounded_moment || noise.k_bound == 0.0) return eps;
    const std::size_t m = data.size();
    Vector m3 = Vector::Zero(n);
    for (std::size_t j = 0; j < m; ++j) {
        auto p = data.point(j);
        for (Eigen::Index c = 0; c < n; ++c) {
            const double d = p[static_cast<std::size_t>(c)] - mean[c];
            m3[c] += d * d * d;
        }
    }
    m3 /= static_cast<double>(m);
    Vector raw = Vector::Zero(n);
    for (Eigen::Index c = 0; c < n; ++c)
        if (variances[c] > 0.0) raw[c] = m3[c] / variances[c];
    const double raw_norm = raw.norm();
    const double cap = noise.k_bound / static_cast<double>(m);
    if (raw_norm > 0.0) eps = raw * (std::min(cap, raw_norm) / raw_norm);
    return eps;
}

NoisyFit noisy_fit_nd(const Dataset& data, const NoiseModel& noise) {
    GaussianND fit = fit_gaussian_nd(data);
    Vector eps = noise_epsilon(data, fit.mean, fit.covariance.diagonal(), noise);
    fit.mean += eps;
    return {std::move(fit), std::move(eps)};
}

Samples sample_model(const Model& model, std::size_t m, RngStream& rng, int generation) {
    return std::visit(
        overloaded{
            [&](const DiscreteDistribution& d) -> Samples { return sample_discrete(d, m, rng); },
            [&](const Gaussian1D& g) -> Samples { return sample_gaussian1d(g, m, rng, generation); },
            [&](const GaussianND& g) -> Samples { return sample_gaussian_nd(g, m, rng, generation); },
            [&](const GmmModel& g) -> Samples { return sample_gmm(g, m, rng, generation); },
        },
        model);
}

Samples bootstrap(const Samples& data, std::size_t m, RngStream& rng) {
    if (m == 0) throw Error(ErrorCode::invalid_argument, "bootstrap: m must be ≥ 1");
    return std::visit(
        overloaded{
            [&](const SampleCounts& c) -> Samples { return sample_discrete(fit_discrete(c), m, rng); },
            [&](const Dataset& d) -> Samples {
                if (d.size() == 0) throw Error(ErrorCode::insufficient_data, "bootstrap: empty dataset");
                Dataset out(d.dim(), {}, d.generation());
                for (std::size_t j = 0; j < m; ++j) out.append(d.point(rng.uniform_index(d.size())));
                return out;
            },
        },
        data);
}

Samples subsample(const Samples& data, std::size_t m, RngStream& rng) {
    const std::size_t total = sample_count(data);
    if (m >= total) return data;
    std::vector<std::size_t> idx(total);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t j = 0; j < m; ++j) std::swap(idx[j], idx[j + rng.uniform_index(total - j)]);
    idx.resize(m);
    return std::visit(
        overloaded{
            [&](const SampleCounts& c) -> Samples {
                // Index i refers to the i-th sample in state order.
                std::vector<std::uint64_t> offsets(c.size() + 1, 0);
                for (std::size_t s = 0; s < c.size(); ++s) offsets[s + 1] = offsets[s] + c[s];
                std::vector<std::uint64_t> out(c.size(), 0);
                for (auto i : idx) {
                    auto it = std::upper_bound(offsets.begin(), offsets.end(), static_cast<std::uint64_t>(i));
                    ++out[static_cast<std::size_t>(it - offsets.begin()) - 1];
                }
                return SampleCounts(std::move(out));
            },
            [&](const Dataset& d) -> Samples {
                Dataset out(d.dim(), {}, d.generation());
                for (auto i : idx) out.append(d.point(i));
                return out;
            },
        },
        data);
}

void append_samples(Samples& into, const Samples& more) {
    if (into.index() != more.index()) throw Error(ErrorCode::invalid_argument, "cannot pool counts with points");
    if (auto* c = std::get_if<SampleCounts>(&into)) {
        const auto& other = std::get<SampleCounts>(more);
        if (other.size() != c->size()) throw Error(ErrorCode::invalid_argument, "state counts differ");
        std::vector<std::uint64_t> sum = c->counts();
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += other[i];
        into = SampleCounts(std::move(sum));
    } else {
        std::get<Dataset>(into).append(std::get<Dataset>(more));
    }
}

StepOutput run_generation_step(const EngineConfig& config, int generation, const Model& current_model,
                               const Samples& previous_data, Samples& pool, RngStream& rng) {
    const auto g = static_cast<std::size_t>(generation);
    if (generation < 1 || g > config.schedule.n_generations())
        throw Error(ErrorCode::invalid_argument, "generation outside the schedule");
    const std::uint64_t m = config.schedule.sizes[g];
    const MixWeights& w = config.schedule.mix[g - 1];

    // Source of each point is i.i.d. categorical(alpha, beta, gamma).
    const std::uint64_t from_model = rng.binomial(m, w.alpha);
    const double rest = w.beta + w.gamma;
    const std::uint64_t from_previous =
        rest > 0.0 ? rng.binomial(m - from_model, std::min(1.0, w.beta / rest)) : 0;
    const std::uint64_t from_original = m - from_model - from_previous;

    std::optional<Samples> next;
    auto add = [&](Samples part) {
        if (!next) next = std::move(part);
        else append_samples(*next, part);
    };
    if (from_model > 0) add(sample_model(current_model, from_model, rng, generation));
    if (from_previous > 0) add(bootstrap(previous_data, from_previous, rng));
    if (from_original > 0) add(sample_model(config.original, from_original, rng, generation));
    if (auto* d = std::get_if<Dataset>(&*next)) d->set_generation(generation);

    append_samples(pool, *next);
    Samples fit_set = [&]() -> Samples {
        switch (config.policy.mode) {
            case AccumulationMode::fresh_only: return *next;
            case AccumulationMode::pool_all: return pool;
            case AccumulationMode::pool_subsample: return subsample(pool, config.policy.subsample_size, rng);
        }
        return *next;
    }();
    if (sample_count(fit_set) < 2) throw Error(ErrorCode::insufficient_data, "fitting set has fewer than 2 points");

    TrajectoryRecord rec;
    rec.generation = generation;
    rec.sample_size = m;
    Model fitted = fit_and_measure(config, generation, current_model, fit_set, rng, rec);
    rec.fitted_model = fitted;
    return {std::move(fitted), std::move(*next), std::move(rec)};
}

ExperimentResult run_trajectory(const EngineConfig& config, const RngStream& rng) {
    config.validate();
    ExperimentResult result;
    result.config_digest = config.config_digest;
    const std::size_t n = config.schedule.n_generations();
    result.records.reserve(n + 1);

    RngStream g0 = rng.substream(0);
    const std::uint64_t m0 = config.schedule.sizes[0];
    Samples data = sample_model(config.original, m0, g0, 0);
    Samples pool = data;
    TrajectoryRecord rec0;
    rec0.generation = 0;
    rec0.sample_size = m0;
    Model model = fit_and_measure(config, 0, config.original, data, g0, rec0);
    rec0.fitted_model = model;
    result.records.push_back(std::move(rec0));

    for (std::size_t g = 1; g <= n; ++g) {
        RngStream gs = rng.substream(g);
        StepOutput step = run_generation_step(config, static_cast<int>(g), model, data, pool, gs);
        model = std::move(step.next_model);
        data = std::move(step.next_data);
        result.records.push_back(std::move(step.record));
    }
    if (config.keep_final_data) result.final_data = std::move(data);
    return result;
}

std::vector<ExperimentResult> run_experiment(const EngineConfig& config, std::size_t replicates,
                                             std::uint64_t master_seed, std::size_t threads) {
    if (replicates < 1) throw Error(ErrorCode::invalid_argument, "run_experiment: replicates must be ≥ 1");
    config.validate();
    std::vector<ExperimentResult> results(replicates);
    const RngStream master(master_seed);
    auto run_one = [&](std::size_t r) {
        results[r] = run_trajectory(config, master.substream(r));
        results[r].replicate_id = static_cast<int>(r);
        results[r].master_seed = master_seed;
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, replicates);
    if (threads <= 1) {
        for (std::size_t r = 0; r < replicates; ++r) run_one(r);
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t r = next++; r < replicates; r = next++) run_one(r);
            } catch (...) {
                errors[t] = std::current_exception();
                next = replicates;
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

}  // namespace collapse
