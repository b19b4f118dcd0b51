#include "collapse/verify.hpp"

#include "collapse/error.hpp"
#include "collapse/markov.hpp"
#include "collapse/metrics.hpp"
#include "collapse/output.hpp"
#include "collapse/theory.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>

namespace collapse {

namespace {

struct Moments {
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    double m4 = 0.0;        // fourth central moment
    std::size_t n = 0;

    double se_mean() const { return std::sqrt(variance / static_cast<double>(n)); }
    double se_variance() const {
        return std::sqrt(std::max(m4 - variance * variance, 0.0) / static_cast<double>(n));
    }
};

Moments moments(const std::vector<double>& xs) {
    Moments m;
    m.n = xs.size();
    if (xs.empty()) return m;
    for (double x : xs) m.mean += x;
    m.mean /= static_cast<double>(xs.size());
    double s2 = 0.0, s4 = 0.0;
    for (double x : xs) {
        const double d = (x - m.mean) * (x - m.mean);
        s2 += d;
        s4 += d * d;
    }
    m.variance = xs.size() > 1 ? s2 / static_cast<double>(xs.size() - 1) : 0.0;
    m.m4 = s4 / static_cast<double>(xs.size());
    return m;
}

double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

class Context {
public:
    Context(const VerifyConfig& config, std::uint64_t tag)
        : config_(config), master_(RngStream(config.seed).substream(tag)) {}

    std::size_t count(std::size_t nominal) const {
        const double scaled = std::round(static_cast<double>(nominal) * config_.replicate_scale);
        return std::max<std::size_t>(2, static_cast<std::size_t>(scaled));
    }
    double stat_tol(double nominal) const { return nominal * config_.tolerance_scale; }
    std::uint64_t seed(std::uint64_t tag) const { return master_.substream(tag).seed(); }
    RngStream stream(std::uint64_t tag) const { return master_.substream(tag); }
    std::size_t threads() const { return config_.threads; }

private:
    const VerifyConfig& config_;
    RngStream master_;
};

EngineConfig gaussian1d_engine(std::uint64_t m, std::size_t generations) {
    EngineConfig e;
    e.original = Gaussian1D{0.0, 1.0};
    e.schedule = GenerationSchedule::constant(m, generations);
    return e;
}

std::vector<double> record_values(const std::vector<ExperimentResult>& results, std::size_t g,
                                  const std::function<double(const TrajectoryRecord&)>& f) {
    std::vector<double> out;
    out.reserve(results.size());
    for (const auto& r : results) out.push_back(f(r.records.at(g)));
    return out;
}

double fitted_mean(const TrajectoryRecord& rec) { return std::get<Gaussian1D>(rec.fitted_model).mean; }

void check_variance_growth(CheckResult& out, const Context& ctx) {
    auto e = gaussian1d_engine(100, 50);
    e.keep_final_data = true;
    const auto results = run_experiment(e, ctx.count(2000), ctx.seed(0), ctx.threads());
    std::vector<double> pooled;
    for (const auto& r : results) {
        const auto& d = std::get<Dataset>(*r.final_data);
        pooled.insert(pooled.end(), d.values().begin(), d.values().end());
    }
    const double expected = predicted_variance(1.0, e.schedule.sizes.prefix(50));
    out.measurements.push_back(measure("Var(X^50) over D_50", moments(pooled).variance, expected, ctx.stat_tol(0.10), "rel"));
}

void check_risk_mean(CheckResult& out, const Context& ctx) {
    const auto e = gaussian1d_engine(100, 20);
    const auto results = run_experiment(e, ctx.count(2000), ctx.seed(0), ctx.threads());
    double worst = 0.0;
    int worst_g = 0;
    for (std::size_t g = 0; g <= 20; ++g) {
        const double mean = moments(record_values(results, g, [](const auto& r) { return r.risk; })).mean;
        const double expected = predicted_risk_mean(1.0, e.schedule.sizes.prefix(g + 1));
        const double rel = std::abs(mean - expected) / expected;
        if (rel >= worst) {
            worst = rel;
            worst_g = static_cast<int>(g);
        }
    }
    out.measurements.push_back(measure("max relative error of E[R] over n<=20 (worst at record " +
                                           std::to_string(worst_g) + ")",
                                       worst, 0.0, ctx.stat_tol(0.15), "max"));
}

void check_risk_variance(CheckResult& out, const Context& ctx) {
    const auto e = gaussian1d_engine(100, 0);
    const auto results = run_experiment(e, ctx.count(10000), ctx.seed(0), ctx.threads());
    const double var = moments(record_values(results, 0, [](const auto& r) { return r.risk; })).variance;
    const double expected = predicted_risk_variance(1.0, e.schedule.sizes);
    out.measurements.push_back(measure("Var[R] single generation, M=100", var, expected, ctx.stat_tol(0.20), "rel"));
    out.note = "exact leading order is 2.5*sigma^4/M^2 = " + fmt(2.5e-4) + "; the closed form used here gives " +
               fmt(expected);
}

void check_fixation(CheckResult& out, const Context& ctx) {
    double worst = 0.0;
    for (std::uint32_t m = 2; m <= 12; ++m) {
        for (std::uint32_t k = 2; k <= 4; ++k) {
            const auto blocks = build_transition_matrix(m, k);
            const Matrix absorb = absorption_probabilities(blocks);
            const auto& space = blocks.space;
            const std::size_t r = space.transient_count();
            for (std::size_t t = 0; t < r; ++t) {
                const auto& c = space.state(t);
                for (std::size_t a = 0; a < space.absorbing_count(); ++a) {
                    const std::size_t target = space.absorbing_target(r + a);
                    const double expected = static_cast<double>(c[target]) / m;
                    worst = std::max(worst, std::abs(absorb(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(a)) - expected));
                }
            }
        }
    }
    out.measurements.push_back(measure("max |P(absorb at j) - c_j/m|, m<=12, k<=4", worst, 0.0, 1e-9, "max"));

    const auto mc = fixation_probability_mc(DiscreteDistribution({0.7, 0.3}), 10, ctx.count(10000),
                                            kDefaultMaxGenerations, ctx.stream(0));
    out.measurements.push_back(measure("MC fixation frequency of state 0, m=10, (0.7,0.3)",
                                       mc.fixation_frequency.at(0), 0.7, ctx.stat_tol(0.02), "abs"));
}

void check_markov_small(CheckResult& out, const Context&) {
    const auto blocks = build_transition_matrix(2, 2);
    const auto& space = blocks.space;
    const std::size_t t = *space.index_of({1, 1});
    const Matrix absorb = absorption_probabilities(blocks);
    const Vector times = expected_absorption_time(blocks);
    const Matrix limit = limit_matrix(blocks);
    for (std::size_t a = 0; a < space.absorbing_count(); ++a)
        out.measurements.push_back(measure("P(absorb at state " + std::to_string(space.absorbing_target(space.transient_count() + a)) +
                                               " | (1,1))",
                                           absorb(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(a)), 0.5,
                                           1e-10, "abs"));
    out.measurements.push_back(measure("expected time from (1,1)", times(static_cast<Eigen::Index>(t)), 2.0, 1e-10, "abs"));
    out.measurements.push_back(measure("max |L*L - L|", (limit * limit - limit).cwiseAbs().maxCoeff(), 0.0, 1e-10, "max"));
}

void check_construction(CheckResult& out, const Context& ctx) {
    constexpr std::size_t n = 5;
    const std::size_t trajectories = ctx.count(100000);
    auto e = gaussian1d_engine(100, n);
    e.keep_final_data = true;
    const auto results = run_experiment(e, trajectories, ctx.seed(0), ctx.threads());
    std::vector<double> recursion;
    recursion.reserve(trajectories);
    for (const auto& r : results) recursion.push_back(std::get<Dataset>(*r.final_data).values().at(0));

    const auto schedule = e.schedule.sizes.prefix(n);
    std::vector<double> construction;
    construction.reserve(trajectories);
    const RngStream base = ctx.stream(1);
    for (std::size_t i = 0; i < trajectories; ++i) {
        RngStream rng = base.substream(i);
        construction.push_back(construction_sample(0.0, 1.0, schedule, 1, rng).values().at(0));
    }
    const Moments a = moments(recursion), b = moments(construction);
    const double se_mean = std::hypot(a.se_mean(), b.se_mean());
    const double se_var = std::hypot(a.se_variance(), b.se_variance());
    out.measurements.push_back(measure("mean(construction) - mean(recursion)", b.mean - a.mean, 0.0,
                                       ctx.stat_tol(3.0 * se_mean), "abs"));
    out.measurements.push_back(measure("var(construction) - var(recursion)", b.variance - a.variance, 0.0,
                                       ctx.stat_tol(3.0 * se_var), "abs"));
    out.note = "var(recursion) = " + fmt(a.variance) + ", var(construction) = " + fmt(b.variance) +
               ", closed form = " + fmt(predicted_variance(1.0, schedule));
}

GaussianND random_gaussian(std::size_t dim, RngStream& rng) {
    GaussianND g;
    g.mean = Vector(static_cast<Eigen::Index>(dim));
    for (auto& x : g.mean) x = 3.0 * rng.normal();
    Matrix a(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (auto& x : a.reshaped()) x = rng.normal();
    g.covariance = a * a.transpose() + 0.01 * Matrix::Identity(a.rows(), a.cols());
    return g;
}

void check_gelbrich(CheckResult& out, const Context& ctx) {
    RngStream rng = ctx.stream(0);
    double worst_1d = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Gaussian1D a{3.0 * rng.normal(), 0.01 + 4.0 * rng.uniform()};
        const Gaussian1D b{3.0 * rng.normal(), 0.01 + 4.0 * rng.uniform()};
        GaussianND na{Vector::Constant(1, a.mean), Matrix::Constant(1, 1, a.variance)};
        GaussianND nb{Vector::Constant(1, b.mean), Matrix::Constant(1, 1, b.variance)};
        worst_1d = std::max(worst_1d, std::abs(gelbrich_lower_bound(na, nb) - w2_gaussian1d(a, b).w2_squared));
    }
    out.measurements.push_back(measure("max 1D |bound - exact W2^2| (1000 pairs)", worst_1d, 0.0, 1e-9, "max"));

    double worst_2d = 0.0;
    for (int i = 0; i < 200; ++i) {
        const double theta = 2.0 * std::numbers::pi * rng.uniform();
        Matrix u(2, 2);
        u << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
        const Vector da{{0.01 + 4.0 * rng.uniform(), 0.01 + 4.0 * rng.uniform()}};
        const Vector db{{0.01 + 4.0 * rng.uniform(), 0.01 + 4.0 * rng.uniform()}};
        GaussianND a{Vector{{rng.normal(), rng.normal()}}, u * da.asDiagonal() * u.transpose()};
        GaussianND b{Vector{{rng.normal(), rng.normal()}}, u * db.asDiagonal() * u.transpose()};
        const double closed = (a.mean - b.mean).squaredNorm() + (da.cwiseSqrt() - db.cwiseSqrt()).squaredNorm();
        worst_2d = std::max(worst_2d, std::abs(gelbrich_lower_bound(a, b) - closed));
    }
    out.measurements.push_back(measure("max 2D commuting |bound - closed form| (200 pairs)", worst_2d, 0.0, 1e-9, "max"));

    double worst_gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 600; ++i) {
        const std::size_t dim = 1 + static_cast<std::size_t>(i % 3);
        const auto a = random_gaussian(dim, rng);
        const auto b = random_gaussian(dim, rng);
        worst_gap = std::min(worst_gap, gelbrich_lower_bound(a, b) - (a.mean - b.mean).squaredNorm());
    }
    out.measurements.push_back(measure("min (bound - |mean difference|^2), dims 1-3", worst_gap, 0.0, 1e-12, "min"));
}

void check_noisy_bound(CheckResult& out, const Context& ctx) {
    constexpr std::size_t n = 20;
    constexpr double k_bound = 5.0;
    EngineConfig e;
    e.original = GaussianND{Vector::Zero(2), Matrix::Identity(2, 2)};
    e.schedule = GenerationSchedule::constant(100, n);
    e.noise = NoiseModel{NoiseKind::bounded_moment, k_bound};
    const auto results = run_experiment(e, ctx.count(2000), ctx.seed(0), ctx.threads());

    std::vector<double> eps;
    for (std::size_t g = 0; g <= n; ++g)
        eps.push_back(moments(record_values(results, g, [](const auto& r) { return r.noise_norm_sq; })).mean);
    const auto bounded = noisy_lower_bound_bounded(2.0, e.schedule.sizes, eps, k_bound, 2);

    double worst_bounded = std::numeric_limits<double>::infinity();
    double worst_plain = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g <= n; ++g) {
        const Moments risk = moments(record_values(results, g, [](const auto& r) { return r.risk; }));
        const std::vector<double> eps_prefix(eps.begin(), eps.begin() + static_cast<std::ptrdiff_t>(g + 1));
        const double plain = noisy_lower_bound(2.0, e.schedule.sizes.prefix(g + 1), eps_prefix);
        worst_bounded = std::min(worst_bounded, (risk.mean - bounded[g]) / risk.se_mean());
        worst_plain = std::min(worst_plain, (risk.mean - plain) / risk.se_mean());
    }
    out.measurements.push_back(measure("min over n<=20 of (E[R] - bounded-noise bound)/SE", worst_bounded, 0.0,
                                       ctx.stat_tol(2.0), "min"));
    out.measurements.push_back(measure("min over n<=20 of (E[R] - independent-noise bound)/SE", worst_plain, 0.0,
                                       ctx.stat_tol(2.0), "min"));
}

void check_gmm_collapse(CheckResult& out, const Context& ctx) {
    constexpr std::size_t n = 2000;
    GmmModel original;
    original.weights = {0.5, 0.5};
    original.components = {GaussianND{Vector::Constant(1, -4.0), Matrix::Identity(1, 1)},
                            GaussianND{Vector::Constant(1, 4.0), Matrix::Identity(1, 1)}};
    EngineConfig e;
    e.original = original;
    e.schedule = GenerationSchedule::constant(1000, n);
    const auto results = run_experiment(e, 5, ctx.seed(0), ctx.threads());

    double worst_ratio = 0.0;
    double worst_gain = std::numeric_limits<double>::infinity();
    for (const auto& r : results) {
        worst_ratio = std::max(worst_ratio, r.records[n].total_variance / r.records[0].total_variance);
        std::vector<double> first, last;
        for (std::size_t g = 0; g < 100; ++g) first.push_back(std::log(std::max(r.records[g].risk, 1e-300)));
        for (std::size_t g = n - 99; g <= n; ++g) last.push_back(std::log(std::max(r.records[g].risk, 1e-300)));
        worst_gain = std::min(worst_gain, median(last) - median(first));
    }
    out.measurements.push_back(measure("max over 5 seeds of total variance ratio (gen 2000 / gen 0)", worst_ratio, 0.25, 0.0, "max"));
    out.measurements.push_back(measure("min over 5 seeds of median log-L2 gain (last 100 vs first 100)", worst_gain, 1.0, 0.0, "min"));
}

void check_accumulation(CheckResult& out, const Context& ctx) {
    constexpr std::size_t n = 50;
    const std::size_t reps = ctx.count(500);
    auto variance_of_mean = [&](AccumulationPolicy policy) {
        auto e = gaussian1d_engine(100, n);
        e.policy = policy;
        const auto results = run_experiment(e, reps, ctx.seed(0), ctx.threads());
        return moments(record_values(results, n, fitted_mean)).variance;
    };
    const double fresh = variance_of_mean({AccumulationMode::fresh_only, 0});
    const double sub = variance_of_mean({AccumulationMode::pool_subsample, 100});
    const double all = variance_of_mean({AccumulationMode::pool_all, 0});
    out.measurements.push_back(measure("Var(mu_50) pool_all / pool_subsample", all / sub, 1.0, 0.0, "max"));
    out.measurements.push_back(measure("Var(mu_50) pool_subsample / fresh_only", sub / fresh, 1.0, 0.0, "max"));
    out.note = "Var(mu_50): fresh_only " + fmt(fresh) + ", pool_subsample(100) " + fmt(sub) + ", pool_all " + fmt(all);
}

void check_superlinear(CheckResult& out, const Context& ctx) {
    constexpr std::size_t n = 100;
    const std::size_t reps = ctx.count(20);
    auto mean_risk = [&](const SampleSchedule& sizes, std::uint64_t tag) {
        EngineConfig e;
        e.original = Gaussian1D{0.0, 1.0};
        e.schedule = GenerationSchedule{sizes, std::vector<MixWeights>(n)};
        const auto results = run_experiment(e, reps, ctx.seed(tag), ctx.threads());
        return moments(record_values(results, n, [](const auto& r) { return r.risk; })).mean;
    };
    const auto growing = SampleSchedule::polynomial(100, 2.0, n + 1);
    const double constant = mean_risk(SampleSchedule::constant(100, n + 1), 0);
    const double superlinear = mean_risk(growing, 1);
    out.measurements.push_back(measure("E[R_100] constant M / E[R_100] M_i=100(i+1)^2", constant / superlinear, 3.0, 0.0, "min"));

    // Partial sums of the risk closed form must stay below 1.5·σ²·ζ(2)/100.
    const double limit = 1.5 * (std::numbers::pi * std::numbers::pi / 6.0) / 100.0;
    double largest = 0.0;
    for (std::size_t g = 1; g <= growing.size(); ++g) largest = std::max(largest, predicted_risk_mean(1.0, growing.prefix(g)));
    out.measurements.push_back(measure("max partial sum 1.5*sum 1/M_i over i<=100", largest, limit, 0.0, "max"));
}

void check_tail_cutoff(CheckResult& out, const Context& ctx) {
    RngStream rng = ctx.stream(0);
    double worst = 0.0;
    bool exact_zeros = true;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 2 + rng.uniform_index(30);
        const std::uint64_t m = 2 + rng.uniform_index(60);
        std::vector<double> w(k);
        double total = 0.0;
        for (auto& x : w) total += (x = std::pow(rng.uniform(), 3.0));
        for (auto& x : w) x /= total;
        w[rng.uniform_index(k)] += 1.0;  // keep at least one bin above 1/m
        for (auto& x : w) x /= 2.0;
        double kept = 0.0;
        for (double x : w) kept += x >= 1.0 / static_cast<double>(m) ? x : 0.0;
        const DiscreteDistribution dist(w);
        const auto cut = tail_cutoff(dist, m);
        for (std::size_t i = 0; i < k; ++i) {
            const double p = dist[i];
            if (p < 1.0 / static_cast<double>(m)) {
                exact_zeros = exact_zeros && cut[i] == 0.0;
            } else {
                worst = std::max(worst, std::abs(cut[i] - p / kept));
            }
        }
    }
    out.measurements.push_back(measure("sub-1/M bins set to exactly zero", exact_zeros ? 1.0 : 0.0, 1.0, 0.0, "flag"));
    out.measurements.push_back(measure("max |kept bin - p/kept mass|", worst, 0.0, 1e-12, "max"));

    const DiscreteDistribution uniform(std::vector<double>(100, 0.01));
    constexpr std::uint64_t m = 10;
    std::vector<double> lost;
    const std::size_t draws = ctx.count(10000);
    const RngStream base = ctx.stream(1);
    for (std::size_t i = 0; i < draws; ++i) {
        RngStream r = base.substream(i);
        lost.push_back(lost_state_fraction(uniform, sample_discrete(uniform, m, r)));
    }
    double closed = 0.0;
    for (double p : uniform.probs()) closed += p * std::pow(1.0 - p, static_cast<double>(m));
    const Moments mo = moments(lost);
    out.measurements.push_back(measure("E[lost fraction], uniform-100, M=10", mo.mean, closed,
                                       ctx.stat_tol(3.0 * mo.se_mean()), "abs"));
}

struct CheckSpec {
    const char* name;
    const char* description;
    double budget_seconds;
    void (*run)(CheckResult&, const Context&);
};

const std::vector<CheckSpec>& registry() {
    static const std::vector<CheckSpec> checks{
        {"variance_growth", "Var(X^n) grows as sigma^2(1 + n/M): M=100, n=50, 2000 replicates", 30, check_variance_growth},
        {"risk_mean", "E[R_W2] tracks 1.5 sigma^2 (n+1)/M for n<=20, 2000 replicates", 60, check_risk_mean},
        {"risk_variance", "Var[R_W2] for one generation, M=100, 10^4 replicates", 30, check_risk_variance},
        {"fixation", "absorption probability equals initial proportion; MC fixation at (0.7,0.3)", 60, check_fixation},
        {"markov_small", "m=2, k=2 chain: absorption, expected time, idempotent limit", 1, check_markov_small},
        {"construction_equivalence", "explicit construction matches the recursion in mean and variance", 60, check_construction},
        {"gelbrich", "Gelbrich bound: exact in 1D and for commuting covariances, above the mean term", 5, check_gelbrich},
        {"noisy_bound", "bounded-moment noise: empirical E[R_W2] above the lower bounds for n<=20", 60, check_noisy_bound},
        {"gmm_collapse", "two-component GMM, M=1000, 2000 generations, 5 seeds", 600, check_gmm_collapse},
        {"accumulation", "Var(mu_50): pool_all < pool_subsample < fresh_only", 120, check_accumulation},
        {"superlinear", "M_i = 100(i+1)^2 cuts E[R_100] by >= 3x; partial sums bounded", 120, check_superlinear},
        {"tail_cutoff", "tail cutoff exactness and lost-state fraction vs sum p(1-p)^M", 10, check_tail_cutoff},
    };
    return checks;
}

}  // namespace

Measurement measure(std::string label, double observed, double expected, double tolerance, std::string kind) {
    Measurement m{std::move(label), observed, expected, tolerance, std::move(kind), false};
    if (std::isnan(observed)) return m;
    if (m.kind == "abs") m.passed = std::abs(observed - expected) <= tolerance;
    else if (m.kind == "rel") m.passed = std::abs(observed - expected) <= tolerance * std::abs(expected);
    else if (m.kind == "min") m.passed = observed >= expected - tolerance;
    else if (m.kind == "max") m.passed = observed <= expected + tolerance;
    else if (m.kind == "flag") m.passed = observed != 0.0;
    else throw Error(ErrorCode::invalid_argument, "measure: unknown kind '" + m.kind + "'");
    return m;
}

bool CheckResult::passed() const noexcept {
    if (measurements.empty()) return false;
    return std::all_of(measurements.begin(), measurements.end(), [](const Measurement& m) { return m.passed; });
}

bool VerifyReport::all_passed() const noexcept {
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed(); });
}

std::string VerifyReport::render_text() const {
    std::ostringstream os;
    for (const auto& c : checks) {
        os << (c.passed() ? "PASS " : "FAIL ") << c.name << "  " << c.description << '\n';
        for (const auto& m : c.measurements) {
            os << "    " << (m.passed ? "ok   " : "FAIL ") << m.label << ": observed " << fmt(m.observed);
            if (m.kind == "flag") {
                os << '\n';
                continue;
            }
            os << ", expected " << (m.kind == "min" ? ">= " : m.kind == "max" ? "<= " : "") << fmt(m.expected);
            if (m.tolerance != 0.0 || m.kind == "abs" || m.kind == "rel")
                os << (m.kind == "min" ? " - " : m.kind == "max" ? " + " : " +/- ") << fmt(m.tolerance)
                   << (m.kind == "rel" ? " (relative)" : "");
            os << '\n';
        }
        if (!c.note.empty()) os << "    note: " << c.note << '\n';
    }
    std::size_t passed = 0;
    for (const auto& c : checks) passed += c.passed() ? 1 : 0;
    os << passed << '/' << checks.size() << " checks passed\n";
    return os.str();
}

std::string VerifyReport::render_json() const {
    nlohmann::ordered_json j;
    j["seed"] = seed;
    j["all_passed"] = all_passed();
    j["checks"] = nlohmann::ordered_json::array();
    for (const auto& c : checks) {
        nlohmann::ordered_json cj;
        cj["name"] = c.name;
        cj["description"] = c.description;
        cj["passed"] = c.passed();
        cj["seconds"] = c.seconds;
        cj["budget_seconds"] = c.budget_seconds;
        cj["measurements"] = nlohmann::ordered_json::array();
        for (const auto& m : c.measurements) {
            auto num = [](double v) -> nlohmann::ordered_json {
                if (std::isfinite(v)) return v;
                return nullptr;
            };
            cj["measurements"].push_back({{"label", m.label},
                                          {"observed", num(m.observed)},
                                          {"expected", num(m.expected)},
                                          {"tolerance", num(m.tolerance)},
                                          {"kind", m.kind},
                                          {"passed", m.passed}});
        }
        if (!c.note.empty()) cj["note"] = c.note;
        j["checks"].push_back(std::move(cj));
    }
    return j.dump(2) + "\n";
}

std::vector<std::string> available_checks() {
    std::vector<std::string> names;
    for (const auto& c : registry()) names.emplace_back(c.name);
    return names;
}

CheckResult run_check(const std::string& name, const VerifyConfig& config) {
    const auto& checks = registry();
    const auto it = std::find_if(checks.begin(), checks.end(), [&](const CheckSpec& c) { return name == c.name; });
    if (it == checks.end()) throw Error(ErrorCode::invalid_argument, "unknown check '" + name + "'");

    CheckResult out;
    out.name = it->name;
    out.description = it->description;
    out.budget_seconds = it->budget_seconds;
    const Context ctx(config, static_cast<std::uint64_t>(it - checks.begin()));
    const auto start = std::chrono::steady_clock::now();
    it->run(out, ctx);
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.measurements.push_back(measure("runtime seconds", out.seconds, out.budget_seconds, 0.0, "max"));
    return out;
}

VerifyReport run_verification(const VerifyConfig& config) {
    VerifyReport report;
    report.seed = config.seed;
    for (const auto& name : config.checks) report.checks.push_back(run_check(name, config));
    return report;
}

}  // namespace collapse
