#include "collapse/markov.hpp"

#include "collapse/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace collapse {

namespace {

void enumerate(std::uint32_t remaining, std::uint32_t slot, std::vector<std::uint32_t>& current,
               std::vector<std::vector<std::uint32_t>>& out) {
    if (slot + 1 == current.size()) {
        current[slot] = remaining;
        out.push_back(current);
        return;
    }
    for (std::uint32_t v = 0; v <= remaining; ++v) {
        current[slot] = v;
        enumerate(remaining - v, slot + 1, current, out);
    }
}

bool single_nonzero(const std::vector<std::uint32_t>& c) {
    return std::count_if(c.begin(), c.end(), [](std::uint32_t v) { return v != 0; }) == 1;
}

// LU of (I − Q)ᵀ. In the column layout N = (I − Q)⁻¹ and both the
// absorption block and the expected times reduce to solves against (I − Q)ᵀ.
Eigen::PartialPivLU<Matrix> transposed_fundamental_lu(const TransitionBlocks& blocks) {
    const auto r = blocks.q.rows();
    Matrix a = (Matrix::Identity(r, r) - blocks.q).transpose();
    Eigen::PartialPivLU<Matrix> lu(a);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14) || !std::isfinite(rcond))
        throw Error(ErrorCode::numerical_failure, "I - Q is singular; the chain is not absorbing");
    return lu;
}

}  // namespace

StateSpace::StateSpace(std::uint32_t m, std::uint32_t k) : m_(m), k_(k) {
    if (m < 1 || k < 1) throw Error(ErrorCode::invalid_argument, "state space needs m ≥ 1 and k ≥ 1");
    if (count(m, k) > kMarkovMaxStates)
        throw Error(ErrorCode::too_large, "state space has more than 1e6 states");
    std::vector<std::uint32_t> current(k, 0);
    enumerate(m, 0, current, states_);
    std::stable_partition(states_.begin(), states_.end(), [](const auto& c) { return !single_nonzero(c); });
}

double StateSpace::count(std::uint32_t m, std::uint32_t k) {
    return std::round(std::exp(std::lgamma(m + k) - std::lgamma(k) - std::lgamma(m + 1.0)));
}

std::optional<std::size_t> StateSpace::index_of(const std::vector<std::uint32_t>& counts) const {
    auto it = std::find(states_.begin(), states_.end(), counts);
    if (it == states_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - states_.begin());
}

std::size_t StateSpace::absorbing_target(std::size_t i) const {
    if (!is_absorbing(i)) throw Error(ErrorCode::invalid_argument, "state is not absorbing");
    const auto& c = states_[i];
    return static_cast<std::size_t>(std::find_if(c.begin(), c.end(), [](auto v) { return v != 0; }) - c.begin());
}

Matrix TransitionBlocks::full() const {
    const auto r = q.rows();
    const auto s = r_block.rows();
    Matrix t = Matrix::Zero(r + s, r + s);
    t.topLeftCorner(r, r) = q;
    t.bottomLeftCorner(s, r) = r_block;
    t.bottomRightCorner(s, s) = Matrix::Identity(s, s);
    return t;
}

TransitionBlocks build_transition_matrix(std::uint32_t m, std::uint32_t k) {
    if (m < 2 || m > kMarkovMaxM || k < 2 || k > kMarkovMaxK) {
        if (StateSpace::count(m, k) > kMarkovMaxStates)
            throw Error(ErrorCode::too_large, "state space has more than 1e6 states");
        throw Error(ErrorCode::invalid_argument,
                    "markov analysis supports 2 ≤ m ≤ 12 and 2 ≤ k ≤ 5 (got m=" + std::to_string(m) +
                        ", k=" + std::to_string(k) + ")");
    }
    StateSpace space(m, k);
    const std::size_t total = space.size();
    const std::size_t r = space.transient_count();
    Matrix t = Matrix::Zero(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));

    const double log_m_fact = std::lgamma(m + 1.0);
    for (std::size_t from = 0; from < total; ++from) {
        const auto& c = space.state(from);
        for (std::size_t to = 0; to < total; ++to) {
            const auto& next = space.state(to);
            // Multinomial(m, c/m) probability of `next`.
            double log_p = log_m_fact;
            bool possible = true;
            for (std::size_t i = 0; i < k; ++i) {
                if (next[i] == 0) continue;
                if (c[i] == 0) {
                    possible = false;
                    break;
                }
                log_p += next[i] * std::log(static_cast<double>(c[i]) / m) - std::lgamma(next[i] + 1.0);
            }
            if (possible) t(static_cast<Eigen::Index>(to), static_cast<Eigen::Index>(from)) = std::exp(log_p);
        }
    }
    const auto ri = static_cast<Eigen::Index>(r);
    const auto si = static_cast<Eigen::Index>(k);
    return TransitionBlocks{std::move(space), t.topLeftCorner(ri, ri), t.bottomLeftCorner(si, ri)};
}

Matrix absorption_probabilities(const TransitionBlocks& blocks) {
    if (blocks.q.rows() == 0) return Matrix(0, blocks.r_block.rows());
    return transposed_fundamental_lu(blocks).solve(blocks.r_block.transpose());
}

Vector expected_absorption_time(const TransitionBlocks& blocks) {
    const auto r = blocks.q.rows();
    if (r == 0) return Vector(0);
    return transposed_fundamental_lu(blocks).solve(Vector::Ones(r));
}

Matrix limit_matrix(const TransitionBlocks& blocks) {
    const auto r = blocks.q.rows();
    const auto s = blocks.r_block.rows();
    Matrix l = Matrix::Zero(r + s, r + s);
    if (r > 0) l.bottomLeftCorner(s, r) = absorption_probabilities(blocks).transpose();
    l.bottomRightCorner(s, s) = Matrix::Identity(s, s);
    return l;
}

FixationResult fixation_probability_mc(const DiscreteDistribution& initial, std::uint64_t m, std::uint64_t runs,
                                       std::uint64_t max_gens, const RngStream& rng) {
    if (runs < 1) throw Error(ErrorCode::invalid_argument, "fixation_probability_mc: runs must be ≥ 1");
    if (m < 1) throw Error(ErrorCode::invalid_argument, "fixation_probability_mc: m must be ≥ 1");
    FixationResult result;
    result.runs = runs;
    result.fixation_frequency.assign(initial.size(), 0.0);
    std::uint64_t absorbed = 0;
    double generations = 0.0;
    for (std::uint64_t run = 0; run < runs; ++run) {
        RngStream stream = rng.substream(run);
        DiscreteDistribution current = initial;
        std::uint64_t gen = 0;
        auto delta = current.delta_state();
        while (!delta && gen < max_gens) {
            current = fit_discrete(sample_discrete(current, m, stream));
            ++gen;
            delta = current.delta_state();
        }
        if (delta) {
            result.fixation_frequency[*delta] += 1.0;
            generations += static_cast<double>(gen);
            ++absorbed;
        }
    }
    for (double& f : result.fixation_frequency) f /= static_cast<double>(runs);
    result.unabsorbed_fraction = static_cast<double>(runs - absorbed) / static_cast<double>(runs);
    result.mean_generations_to_absorption = absorbed > 0 ? generations / static_cast<double>(absorbed) : 0.0;
    return result;
}

}  // namespace collapse
