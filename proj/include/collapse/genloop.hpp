#pragma once

#include "collapse/gmm.hpp"
#include "collapse/metrics.hpp"
#include "collapse/prob.hpp"
#include "collapse/theory.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace collapse {

enum class Family { discrete, gaussian1d, gaussian_nd, gmm };

const char* to_string(Family f) noexcept;

/// A fitted (or original) model of any supported family.
using Model = std::variant<DiscreteDistribution, Gaussian1D, GaussianND, GmmModel>;

Family family_of(const Model& model) noexcept;

/// Samples of one generation: counts for the discrete family, points otherwise.
using Samples = std::variant<SampleCounts, Dataset>;

std::size_t sample_count(const Samples& s) noexcept;

/// Proportions of the next dataset drawn from the freshly fitted model
/// (alpha), from the previous generation's data (beta) and from the original
/// distribution (gamma).
struct MixWeights {
    double alpha = 1.0;
    double beta = 0.0;
    double gamma = 0.0;

    void validate() const;
    bool operator==(const MixWeights&) const = default;
};

/// sizes holds M_0..M_n; mix[i-1] holds the weights used to draw D_i.
struct GenerationSchedule {
    SampleSchedule sizes;
    std::vector<MixWeights> mix;

    std::size_t n_generations() const noexcept { return sizes.empty() ? 0 : sizes.size() - 1; }
    void validate() const;

    static GenerationSchedule constant(std::uint64_t m, std::size_t n_generations, MixWeights w = {});
};

enum class AccumulationMode { fresh_only, pool_subsample, pool_all };

const char* to_string(AccumulationMode m) noexcept;

struct AccumulationPolicy {
    AccumulationMode mode = AccumulationMode::fresh_only;
    std::size_t subsample_size = 0;  // pool_subsample only, ≥ 2

    void validate() const;
};

enum class NoiseKind { zero, bounded_moment };

const char* to_string(NoiseKind k) noexcept;

struct NoiseModel {
    NoiseKind kind = NoiseKind::zero;
    double k_bound = 0.0;

    void validate() const;
    std::string descriptor() const;
};

/// Collapse threshold on fitted variance (largest eigenvalue for N-D families).
inline constexpr double kCollapseVariance = 1e-12;

struct TrajectoryRecord {
    int generation = 0;
    Model fitted_model = Gaussian1D{};
    /// W2² to the original (Gaussian families), L2 distance (GMM) or total
    /// variation (discrete).
    double risk = 0.0;
    RiskSample w2;                 // gaussian1d only; zero otherwise
    std::uint64_t sample_size = 0;  // M_i drawn this generation
    std::uint64_t fit_size = 0;     // points the estimator saw
    double lost_mass = 0.0;         // discrete only
    double raw_min_eigenvalue = 0.0;
    double total_variance = 0.0;    // trace of the raw fitted covariance
    double noise_norm_sq = 0.0;     // ‖ε‖² added to the fitted mean
    bool collapsed = false;
    int em_iterations = 0;
    bool em_empty_component = false;
};

struct EngineConfig {
    Model original = Gaussian1D{};
    GenerationSchedule schedule;
    AccumulationPolicy policy;
    NoiseModel noise;
    EmOptions em;
    /// Standard deviation of the jitter added to the original component means
    /// to initialize generation-0 EM.
    double gmm_init_jitter = 0.5;
    /// Keep D_n (the last generated dataset) in the result.
    bool keep_final_data = false;
    std::string config_digest;

    Family family() const noexcept { return family_of(original); }
    void validate() const;
};

struct ExperimentResult {
    int replicate_id = 0;
    std::uint64_t master_seed = 0;
    std::vector<TrajectoryRecord> records;
    std::string config_digest;
    std::optional<Samples> final_data;
};

/// Mean after a noisy fit: sample mean plus ε, where ε is zero or, for
/// bounded_moment, points along the per-coordinate normalized third central
/// moment m3_c / s_c² with length min(K/M, ‖m3/s²‖). ε depends on the data
/// only. Covariance is the unbiased sample covariance.
struct NoisyFit {
    GaussianND model;
    Vector epsilon;
};

NoisyFit noisy_fit_nd(const Dataset& data, const NoiseModel& noise);

/// The ε of noisy_fit_nd for given sample mean and per-coordinate variances.
Vector noise_epsilon(const Dataset& data, const Vector& mean, const Vector& variances, const NoiseModel& noise);

/// One generation. Draws M_i points choosing each source i.i.d. with
/// probabilities (alpha, beta, gamma) over {current_model, bootstrap of
/// previous_data, original}; applies the accumulation policy to `pool`
/// (which this call extends with the new data); fits; records metrics
/// against the original.
struct StepOutput {
    Model next_model;
    Samples next_data;
    TrajectoryRecord record;
};

StepOutput run_generation_step(const EngineConfig& config, int generation, const Model& current_model,
                               const Samples& previous_data, Samples& pool, RngStream& rng);

/// Generation 0 fits M_0 draws from the original; generations 1..n follow
/// run_generation_step. Generation g draws from rng.substream(g).
ExperimentResult run_trajectory(const EngineConfig& config, const RngStream& rng);

/// Replicate r runs on RngStream(master_seed).substream(r). Results are
/// ordered by replicate and independent of `threads`.
std::vector<ExperimentResult> run_experiment(const EngineConfig& config, std::size_t replicates,
                                             std::uint64_t master_seed, std::size_t threads = 0);

// Model-generic helpers used by the engine.
Samples sample_model(const Model& model, std::size_t m, RngStream& rng, int generation = 0);
Samples bootstrap(const Samples& data, std::size_t m, RngStream& rng);
Samples subsample(const Samples& data, std::size_t m, RngStream& rng);
void append_samples(Samples& into, const Samples& more);

}  // namespace collapse
