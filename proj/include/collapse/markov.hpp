#pragma once

#include "collapse/prob.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace collapse {

/// All count vectors of m samples over k states. Enumerated lexicographically,
/// then stably partitioned so the r transient states come first and the k
/// absorbing (single non-zero entry) states last.
class StateSpace {
public:
    StateSpace(std::uint32_t m, std::uint32_t k);

    std::uint32_t m() const noexcept { return m_; }
    std::uint32_t k() const noexcept { return k_; }
    std::size_t size() const noexcept { return states_.size(); }
    std::size_t transient_count() const noexcept { return states_.size() - k_; }
    std::size_t absorbing_count() const noexcept { return k_; }

    const std::vector<std::uint32_t>& state(std::size_t i) const { return states_.at(i); }
    std::optional<std::size_t> index_of(const std::vector<std::uint32_t>& counts) const;
    bool is_absorbing(std::size_t i) const noexcept { return i >= transient_count(); }
    /// Which of the k states an absorbing index is a delta on.
    std::size_t absorbing_target(std::size_t i) const;

    /// C(m+k−1, k−1) computed in floating point, for guards.
    static double count(std::uint32_t m, std::uint32_t k);

private:
    std::uint32_t m_;
    std::uint32_t k_;
    std::vector<std::vector<std::uint32_t>> states_;
};

/// Blocks of the column-stochastic transition matrix
///   T = [ Q  0 ]
///       [ R  I ]
/// where T(to, from) is the probability of moving from `from` to `to`,
/// Q is r×r (transient → transient) and R is s×r (transient → absorbing).
struct TransitionBlocks {
    StateSpace space;
    Matrix q;
    Matrix r_block;

    /// The full (r+s)×(r+s) matrix T.
    Matrix full() const;
};

inline constexpr std::uint32_t kMarkovMaxM = 12;
inline constexpr std::uint32_t kMarkovMaxK = 5;
inline constexpr double kMarkovMaxStates = 1e6;

/// Exact fit-then-resample transitions: from counts c the fitted histogram is
/// c/m and the next counts are Multinomial(m, c/m). Requires 2 ≤ m ≤ 12 and
/// 2 ≤ k ≤ 5.
TransitionBlocks build_transition_matrix(std::uint32_t m, std::uint32_t k);

/// r×s matrix: row t holds the probability of ending in each absorbing state
/// when starting from transient state t; the transpose of R(I−Q)⁻¹.
Matrix absorption_probabilities(const TransitionBlocks& blocks);

/// Expected generations until absorption from each transient state.
Vector expected_absorption_time(const TransitionBlocks& blocks);

/// lim T^k in the same column layout as `full()`.
Matrix limit_matrix(const TransitionBlocks& blocks);

struct FixationResult {
    std::vector<double> fixation_frequency;  // per state
    double unabsorbed_fraction = 0.0;
    std::uint64_t runs = 0;
    double mean_generations_to_absorption = 0.0;  // over absorbed runs
};

inline constexpr std::uint64_t kDefaultMaxGenerations = 1'000'000;

/// Runs the discrete fit-sample chain from `initial` until the fitted
/// histogram is a delta or `max_gens` generations have passed. Run i draws
/// from rng.substream(i).
FixationResult fixation_probability_mc(const DiscreteDistribution& initial, std::uint64_t m, std::uint64_t runs,
                                       std::uint64_t max_gens, const RngStream& rng);

}  // namespace collapse
