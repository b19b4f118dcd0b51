#include "collapse/rng.hpp"

#include <boost/random/binomial_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace collapse {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

RngStream RngStream::substream(std::uint64_t tag) const {
    return RngStream(splitmix64(seed_ ^ splitmix64(tag + 0x632be59bd9b4e019ULL)));
}

double RngStream::uniform() {
    return boost::random::uniform_01<double>()(engine_);
}

double RngStream::normal() {
    return boost::random::normal_distribution<double>(0.0, 1.0)(engine_);
}

double RngStream::gamma(double shape, double scale) {
    return boost::random::gamma_distribution<double>(shape, scale)(engine_);
}

std::uint64_t RngStream::binomial(std::uint64_t n, double p) {
    if (n == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    return static_cast<std::uint64_t>(
        boost::random::binomial_distribution<std::int64_t, double>(static_cast<std::int64_t>(n), p)(engine_));
}

std::size_t RngStream::uniform_index(std::size_t n) {
    return boost::random::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

}  // namespace collapse
