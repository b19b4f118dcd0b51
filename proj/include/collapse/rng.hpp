#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace collapse {

/// Identifier written into every output file.
inline constexpr std::string_view kRngAlgorithm =
    "mt19937_64/splitmix64-substreams/boost-random-distributions/v1";

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seedable stream of pseudo-random numbers.
///
/// Streams form a tree: `substream(tag)` returns a new, statistically
/// independent stream whose seed is a SplitMix64 mix of this stream's seed and
/// `tag`. Replicate r of an experiment with master seed S draws from
/// `RngStream(S).substream(r)`, generation g of that replicate from
/// `.substream(r).substream(g)`. Deriving a substream never advances the
/// parent, so results do not depend on the order in which replicates run.
///
/// Variates come from Boost.Random distributions, whose algorithms are fixed
/// by the Boost sources rather than by the standard library vendor.
class RngStream {
public:
    using engine_type = std::mt19937_64;

    explicit RngStream(std::uint64_t seed);

    std::uint64_t seed() const noexcept { return seed_; }
    RngStream substream(std::uint64_t tag) const;

    double uniform();                              // [0, 1)
    double normal();                               // N(0, 1)
    double gamma(double shape, double scale);      // density ∝ x^{shape-1} e^{-x/scale}
    std::uint64_t binomial(std::uint64_t n, double p);
    std::size_t uniform_index(std::size_t n);      // [0, n)

    engine_type& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    engine_type engine_;
};

}  // namespace collapse
