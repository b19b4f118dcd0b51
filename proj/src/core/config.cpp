#include "collapse/config.hpp"

#include "collapse/error.hpp"
#include "collapse/verify.hpp"

#include "json.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace collapse {

namespace {

using nlohmann::ordered_json;

class Parser {
public:
    explicit Parser(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& node, const std::string& what) const {
        const auto mark = node.Mark();
        std::ostringstream os;
        os << source_;
        if (mark.line >= 0) os << ':' << mark.line + 1 << ':' << mark.column + 1;
        os << ": " << what;
        throw Error(ErrorCode::config_error, os.str());
    }

    void allow_keys(const YAML::Node& map, std::initializer_list<const char*> keys, const std::string& where) const {
        if (!map.IsMap()) fail(map, where + " must be a mapping");
        std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& kv : map) {
            const auto key = kv.first.as<std::string>();
            if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + where);
        }
    }

    YAML::Node require(const YAML::Node& map, const char* key, const std::string& where) const {
        YAML::Node n = map[key];
        if (!n) fail(map, "missing required key '" + std::string(key) + "' in " + where);
        return n;
    }

    double real(const YAML::Node& n, const std::string& what) const {
        if (!n.IsScalar()) fail(n, what + " must be a number");
        try {
            const double v = n.as<double>();
            if (!std::isfinite(v)) fail(n, what + " must be finite");
            return v;
        } catch (const YAML::Exception&) {
            fail(n, what + " must be a number");
        }
    }

    std::uint64_t integer(const YAML::Node& n, const std::string& what, std::uint64_t min = 0) const {
        if (!n.IsScalar()) fail(n, what + " must be an integer");
        std::uint64_t v = 0;
        try {
            const auto text = n.as<std::string>();
            if (text.empty() || text[0] == '-') fail(n, what + " must be a non-negative integer");
            v = n.as<std::uint64_t>();
        } catch (const YAML::Exception&) {
            fail(n, what + " must be an integer");
        }
        if (v < min) fail(n, what + " must be ≥ " + std::to_string(min));
        return v;
    }

    std::string text(const YAML::Node& n, const std::string& what) const {
        if (!n.IsScalar()) fail(n, what + " must be a string");
        return n.as<std::string>();
    }

    std::vector<double> reals(const YAML::Node& n, const std::string& what) const {
        if (n.IsScalar()) return {real(n, what)};
        if (!n.IsSequence() || n.size() == 0) fail(n, what + " must be a non-empty list of numbers");
        std::vector<double> out;
        for (const auto& v : n) out.push_back(real(v, what));
        return out;
    }

    Vector vector(const YAML::Node& n, const std::string& what) const {
        auto v = reals(n, what);
        return Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    }

    Matrix matrix(const YAML::Node& n, std::size_t dim, const std::string& what) const {
        if (n.IsScalar()) {
            if (dim != 1) fail(n, what + " must be a " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
            return Matrix::Constant(1, 1, real(n, what));
        }
        if (!n.IsSequence() || n.size() != dim)
            fail(n, what + " must have " + std::to_string(dim) + " rows");
        Matrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        for (std::size_t i = 0; i < dim; ++i) {
            const YAML::Node row = n[i];
            auto values = reals(row, what);
            if (values.size() != dim) fail(row, what + " rows must have " + std::to_string(dim) + " entries");
            for (std::size_t j = 0; j < dim; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[j];
        }
        return m;
    }

    // Runs `f`, rethrowing library validation errors anchored at `node`.
    template <class F>
    auto anchored(const YAML::Node& node, F&& f) const {
        try {
            return f();
        } catch (const Error& e) {
            if (e.code() == ErrorCode::config_error) throw;
            fail(node, e.what());
        }
    }

private:
    std::string source_;
};

GaussianND parse_gaussian(const Parser& p, const YAML::Node& n, const std::string& where) {
    p.allow_keys(n, {"mean", "covariance", "variance"}, where);
    GaussianND g;
    g.mean = p.vector(p.require(n, "mean", where), where + ".mean");
    YAML::Node cov = n["covariance"] ? n["covariance"] : n["variance"];
    if (!cov) p.fail(n, "missing required key 'covariance' in " + where);
    g.covariance = p.matrix(cov, g.dim(), where + ".covariance");
    p.anchored(n, [&] { g.validate(); return 0; });
    return g;
}

Model parse_original(const Parser& p, Family family, const YAML::Node& n) {
    const std::string where = "original";
    switch (family) {
        case Family::discrete: {
            p.allow_keys(n, {"probs", "binned"}, where);
            if (n["probs"]) {
                auto probs = p.reals(n["probs"], "original.probs");
                return p.anchored(n["probs"], [&] { return DiscreteDistribution(probs); });
            }
            const YAML::Node b = p.require(n, "binned", where);
            p.allow_keys(b, {"shape", "means", "scale", "dof", "lo", "hi", "bins"}, "original.binned");
            const auto shape = p.text(p.require(b, "shape", "original.binned"), "original.binned.shape");
            const auto means = p.reals(p.require(b, "means", "original.binned"), "original.binned.means");
            const double scale = b["scale"] ? p.real(b["scale"], "original.binned.scale") : 1.0;
            const double dof = b["dof"] ? p.real(b["dof"], "original.binned.dof") : 3.0;
            const double lo = p.real(p.require(b, "lo", "original.binned"), "original.binned.lo");
            const double hi = p.real(p.require(b, "hi", "original.binned"), "original.binned.hi");
            const auto bins = p.integer(p.require(b, "bins", "original.binned"), "original.binned.bins", 1);
            if (!(scale > 0.0) || !(dof > 0.0)) p.fail(b, "original.binned scale and dof must be positive");
            std::function<double(double)> density;
            if (shape == "gaussian_mixture") {
                density = [means, scale](double x) {
                    double s = 0.0;
                    for (double m : means) s += std::exp(-0.5 * (x - m) * (x - m) / (scale * scale));
                    return s;
                };
            } else if (shape == "student_t_mixture") {
                density = [means, scale, dof](double x) {
                    double s = 0.0;
                    for (double m : means) s += student_t_pdf(x, m, scale, dof);
                    return s;
                };
            } else {
                p.fail(b["shape"], "original.binned.shape must be gaussian_mixture or student_t_mixture");
            }
            return p.anchored(b, [&] { return discretize(density, lo, hi, bins); });
        }
        case Family::gaussian1d: {
            p.allow_keys(n, {"mean", "variance"}, where);
            Gaussian1D g{p.real(p.require(n, "mean", where), "original.mean"),
                         p.real(p.require(n, "variance", where), "original.variance")};
            p.anchored(n, [&] { g.validate(); return 0; });
            return g;
        }
        case Family::gaussian_nd: return parse_gaussian(p, n, where);
        case Family::gmm: {
            p.allow_keys(n, {"weights", "components"}, where);
            GmmModel g;
            g.weights = p.reals(p.require(n, "weights", where), "original.weights");
            const YAML::Node comps = p.require(n, "components", where);
            if (!comps.IsSequence()) p.fail(comps, "original.components must be a list");
            for (std::size_t c = 0; c < comps.size(); ++c)
                g.components.push_back(parse_gaussian(p, comps[c], "original.components[" + std::to_string(c) + "]"));
            p.anchored(n, [&] { g.validate(); return 0; });
            if (g.dim() > 2) p.fail(n, "gmm family supports dimension 1 or 2");
            return g;
        }
    }
    p.fail(n, "unsupported family");
}

MixWeights parse_mix(const Parser& p, const YAML::Node& n) {
    p.allow_keys(n, {"alpha", "beta", "gamma"}, "schedule.mix");
    MixWeights w{n["alpha"] ? p.real(n["alpha"], "alpha") : 0.0, n["beta"] ? p.real(n["beta"], "beta") : 0.0,
                 n["gamma"] ? p.real(n["gamma"], "gamma") : 0.0};
    if (!n["alpha"] && !n["beta"] && !n["gamma"]) w.alpha = 1.0;
    p.anchored(n, [&] { w.validate(); return 0; });
    return w;
}

GenerationSchedule parse_schedule(const Parser& p, const YAML::Node& n) {
    p.allow_keys(n, {"generations", "sample_size", "sizes", "polynomial", "mix"}, "schedule");
    const int forms = (n["sample_size"] ? 1 : 0) + (n["sizes"] ? 1 : 0) + (n["polynomial"] ? 1 : 0);
    if (forms != 1) p.fail(n, "schedule needs exactly one of sample_size, sizes, polynomial");

    GenerationSchedule s;
    std::size_t generations = 0;
    if (n["sizes"]) {
        const YAML::Node sizes = n["sizes"];
        if (!sizes.IsSequence() || sizes.size() == 0) p.fail(sizes, "schedule.sizes must be a non-empty list");
        std::vector<std::uint64_t> v;
        for (const auto& x : sizes) v.push_back(p.integer(x, "schedule.sizes entry", 2));
        generations = v.size() - 1;
        if (n["generations"] && p.integer(n["generations"], "schedule.generations") != generations)
            p.fail(n["generations"], "schedule.generations disagrees with len(schedule.sizes) - 1");
        s.sizes = SampleSchedule(std::move(v));
    } else {
        generations = p.integer(p.require(n, "generations", "schedule"), "schedule.generations");
        if (n["sample_size"]) {
            s.sizes = SampleSchedule::constant(p.integer(n["sample_size"], "schedule.sample_size", 2), generations + 1);
        } else {
            const YAML::Node poly = n["polynomial"];
            p.allow_keys(poly, {"base", "power"}, "schedule.polynomial");
            const auto base = p.integer(p.require(poly, "base", "schedule.polynomial"), "schedule.polynomial.base", 2);
            const double power = p.real(p.require(poly, "power", "schedule.polynomial"), "schedule.polynomial.power");
            if (power < 0.0) p.fail(poly, "schedule.polynomial.power must be ≥ 0");
            s.sizes = SampleSchedule::polynomial(base, power, generations + 1);
        }
    }

    if (!n["mix"]) {
        s.mix.assign(generations, MixWeights{});
    } else if (n["mix"].IsSequence()) {
        if (n["mix"].size() != generations) p.fail(n["mix"], "schedule.mix list needs one entry per generation");
        for (const auto& m : n["mix"]) s.mix.push_back(parse_mix(p, m));
    } else {
        s.mix.assign(generations, parse_mix(p, n["mix"]));
    }
    return s;
}

Family parse_family(const Parser& p, const YAML::Node& n) {
    const auto f = p.text(n, "family");
    if (f == "discrete") return Family::discrete;
    if (f == "gaussian1d") return Family::gaussian1d;
    if (f == "gaussian_nd") return Family::gaussian_nd;
    if (f == "gmm") return Family::gmm;
    p.fail(n, "family must be one of discrete, gaussian1d, gaussian_nd, gmm");
}

YAML::Node load_yaml(const std::string& text, const std::string& source) {
    try {
        YAML::Node root = YAML::Load(text);
        if (!root.IsMap()) {
            Parser(source).fail(root, "config must be a mapping");
        }
        return root;
    } catch (const YAML::ParserException& e) {
        std::ostringstream os;
        os << source << ':' << e.mark.line + 1 << ':' << e.mark.column + 1 << ": " << e.msg;
        throw Error(ErrorCode::config_error, os.str());
    }
}

void check_schema_version(const Parser& p, const YAML::Node& root) {
    const auto v = p.integer(p.require(root, "schema_version", "config"), "schema_version");
    if (v != static_cast<std::uint64_t>(kConfigSchemaVersion))
        p.fail(root["schema_version"], "unsupported schema_version " + std::to_string(v) + " (expected " +
                                           std::to_string(kConfigSchemaVersion) + ")");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::config_error, path + ": cannot read config file");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

ordered_json model_json(const Model& model) {
    auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    auto mat = [&](const Matrix& m) {
        ordered_json rows = ordered_json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec(m.row(i).transpose()));
        return rows;
    };
    auto gaussian = [&](const GaussianND& g) { return ordered_json{{"mean", vec(g.mean)}, {"covariance", mat(g.covariance)}}; };
    return std::visit(
        [&](const auto& m) -> ordered_json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, DiscreteDistribution>) {
                return {{"probs", m.probs()}};
            } else if constexpr (std::is_same_v<T, Gaussian1D>) {
                return {{"mean", m.mean}, {"variance", m.variance}};
            } else if constexpr (std::is_same_v<T, GaussianND>) {
                return gaussian(m);
            } else {
                ordered_json comps = ordered_json::array();
                for (const auto& c : m.components) comps.push_back(gaussian(c));
                return {{"weights", m.weights}, {"components", comps}};
            }
        },
        model);
}

}  // namespace

std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

OutputFormat parse_output_format(const std::string& s) {
    if (s == "csv") return OutputFormat::csv;
    if (s == "json") return OutputFormat::json;
    throw Error(ErrorCode::config_error, "format must be csv or json, got '" + s + "'");
}

const char* to_string(OutputFormat f) noexcept { return f == OutputFormat::csv ? "csv" : "json"; }

std::string ExperimentConfig::canonical_json() const {
    const auto& e = engine;
    ordered_json sizes = e.schedule.sizes.sizes();
    ordered_json mix = ordered_json::array();
    for (const auto& w : e.schedule.mix) mix.push_back({w.alpha, w.beta, w.gamma});
    ordered_json j{
        {"schema_version", kConfigSchemaVersion},
        {"family", to_string(e.family())},
        {"original", model_json(e.original)},
        {"schedule", {{"sizes", sizes}, {"mix", mix}}},
        {"policy", {{"mode", to_string(e.policy.mode)}, {"subsample_size", e.policy.subsample_size}}},
        {"noise", {{"kind", to_string(e.noise.kind)}, {"k_bound", e.noise.k_bound}}},
        {"em", {{"max_iters", e.em.max_iters}, {"tol", e.em.tol}, {"init_jitter", e.gmm_init_jitter}}},
        {"replicates", replicates},
        {"master_seed", master_seed},
        {"oracle_tolerance", oracle_tolerance},
    };
    return j.dump();
}

std::string ExperimentConfig::digest() const { return fnv1a64_hex(canonical_json()); }

void ExperimentConfig::refresh_digest() { engine.config_digest = digest(); }

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& source) {
    const Parser p(source);
    const YAML::Node root = load_yaml(text, source);
    p.allow_keys(root,
                 {"schema_version", "family", "original", "schedule", "policy", "noise", "em", "replicates",
                  "master_seed", "threads", "output", "oracle_tolerance"},
                 "config");
    check_schema_version(p, root);

    ExperimentConfig cfg;
    const Family family = parse_family(p, p.require(root, "family", "config"));
    cfg.engine.original = parse_original(p, family, p.require(root, "original", "config"));
    cfg.engine.schedule = parse_schedule(p, p.require(root, "schedule", "config"));

    if (const YAML::Node pol = root["policy"]) {
        p.allow_keys(pol, {"mode", "subsample_size"}, "policy");
        const auto mode = p.text(p.require(pol, "mode", "policy"), "policy.mode");
        if (mode == "fresh_only") cfg.engine.policy.mode = AccumulationMode::fresh_only;
        else if (mode == "pool_subsample") cfg.engine.policy.mode = AccumulationMode::pool_subsample;
        else if (mode == "pool_all") cfg.engine.policy.mode = AccumulationMode::pool_all;
        else p.fail(pol["mode"], "policy.mode must be fresh_only, pool_subsample or pool_all");
        if (cfg.engine.policy.mode == AccumulationMode::pool_subsample)
            cfg.engine.policy.subsample_size =
                p.integer(p.require(pol, "subsample_size", "policy"), "policy.subsample_size", 2);
        else if (pol["subsample_size"])
            p.fail(pol["subsample_size"], "policy.subsample_size only applies to pool_subsample");
    }
    if (const YAML::Node noise = root["noise"]) {
        p.allow_keys(noise, {"kind", "k_bound"}, "noise");
        const auto kind = p.text(p.require(noise, "kind", "noise"), "noise.kind");
        if (kind == "zero") cfg.engine.noise.kind = NoiseKind::zero;
        else if (kind == "bounded_moment") cfg.engine.noise.kind = NoiseKind::bounded_moment;
        else p.fail(noise["kind"], "noise.kind must be zero or bounded_moment");
        if (noise["k_bound"]) cfg.engine.noise.k_bound = p.real(noise["k_bound"], "noise.k_bound");
        if (cfg.engine.noise.k_bound < 0.0) p.fail(noise["k_bound"], "noise.k_bound must be ≥ 0");
        if (cfg.engine.noise.kind != NoiseKind::zero && family != Family::gaussian1d && family != Family::gaussian_nd)
            p.fail(noise, "fit noise is only defined for the gaussian1d and gaussian_nd families");
    }
    if (const YAML::Node em = root["em"]) {
        p.allow_keys(em, {"max_iters", "tol", "init_jitter"}, "em");
        if (em["max_iters"]) cfg.engine.em.max_iters = static_cast<int>(p.integer(em["max_iters"], "em.max_iters"));
        if (em["tol"]) cfg.engine.em.tol = p.real(em["tol"], "em.tol");
        if (em["init_jitter"]) cfg.engine.gmm_init_jitter = p.real(em["init_jitter"], "em.init_jitter");
        if (cfg.engine.gmm_init_jitter < 0.0) p.fail(em["init_jitter"], "em.init_jitter must be ≥ 0");
    }
    if (root["replicates"]) cfg.replicates = p.integer(root["replicates"], "replicates", 1);
    if (root["master_seed"]) cfg.master_seed = p.integer(root["master_seed"], "master_seed");
    if (root["threads"]) cfg.threads = p.integer(root["threads"], "threads");
    if (root["oracle_tolerance"]) {
        cfg.oracle_tolerance = p.real(root["oracle_tolerance"], "oracle_tolerance");
        if (cfg.oracle_tolerance < 0.0) p.fail(root["oracle_tolerance"], "oracle_tolerance must be ≥ 0");
    }
    if (const YAML::Node out = root["output"]) {
        p.allow_keys(out, {"dir", "prefix", "format"}, "output");
        if (out["dir"]) cfg.output.dir = p.text(out["dir"], "output.dir");
        if (out["prefix"]) cfg.output.prefix = p.text(out["prefix"], "output.prefix");
        if (out["format"]) {
            const auto format = p.text(out["format"], "output.format");
            if (format != "csv" && format != "json") p.fail(out["format"], "output.format must be csv or json");
            cfg.output.format = parse_output_format(format);
        }
    }
    p.anchored(root, [&] { cfg.engine.validate(); return 0; });
    cfg.refresh_digest();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return parse_experiment_config(read_file(path), path);
}

VerifyConfig parse_verify_config(const std::string& text, const std::string& source) {
    const Parser p(source);
    const YAML::Node root = load_yaml(text, source);
    p.allow_keys(root, {"schema_version", "checks", "tolerance_scale", "replicate_scale", "seed", "threads"},
                 "verify config");
    check_schema_version(p, root);
    VerifyConfig cfg;
    const YAML::Node checks = p.require(root, "checks", "verify config");
    const auto known = available_checks();
    if (checks.IsScalar() && checks.as<std::string>() == "all") {
        cfg.checks = known;
    } else {
        if (!checks.IsSequence() || checks.size() == 0) p.fail(checks, "checks must be 'all' or a non-empty list");
        for (const auto& c : checks) {
            const auto name = p.text(c, "check name");
            if (std::find(known.begin(), known.end(), name) == known.end()) p.fail(c, "unknown check '" + name + "'");
            cfg.checks.push_back(name);
        }
    }
    if (root["tolerance_scale"]) {
        cfg.tolerance_scale = p.real(root["tolerance_scale"], "tolerance_scale");
        if (cfg.tolerance_scale < 0.0) p.fail(root["tolerance_scale"], "tolerance_scale must be ≥ 0");
    }
    if (root["replicate_scale"]) {
        cfg.replicate_scale = p.real(root["replicate_scale"], "replicate_scale");
        if (!(cfg.replicate_scale > 0.0)) p.fail(root["replicate_scale"], "replicate_scale must be > 0");
    }
    if (root["seed"]) cfg.seed = p.integer(root["seed"], "seed");
    if (root["threads"]) cfg.threads = p.integer(root["threads"], "threads");
    return cfg;
}

VerifyConfig load_verify_config(const std::string& path) { return parse_verify_config(read_file(path), path); }

}  // namespace collapse
