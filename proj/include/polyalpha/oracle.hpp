#pragma once

// Exact ground truth for small instances of the stake chain: forward
// dynamic programming over the law of the volume and of the full stake
// vector, one-step conditional means, and the share-moment recursions.
//
// Everything here either returns an exact (double precision) answer or
// throws ResourceLimit; nothing is truncated silently.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "polyalpha/chain.hpp"

namespace polyalpha {

template <class State>
struct DiscreteDistribution {
    std::vector<State> support;
    std::vector<double> probabilities;

    std::size_t size() const noexcept { return support.size(); }

    double total() const noexcept {
        double s = 0.0;
        for (double p : probabilities) s += p;
        return s;
    }

    /// Probability of `state`, zero when it is not in the support.
    double probability_of(const State& state) const {
        for (std::size_t i = 0; i < support.size(); ++i) {
            if (support[i] == state) return probabilities[i];
        }
        return 0.0;
    }
};

using VolumeDistribution = DiscreteDistribution<double>;
using JointDistribution = DiscreteDistribution<std::vector<double>>;

inline constexpr std::uint64_t kDefaultVolumeHorizonLimit = 10'000;
inline constexpr std::size_t kDefaultJointStateLimit = 1'000'000;

/// Exact law of N_t started from N_0 = n0. Zero-probability volumes are omitted.
VolumeDistribution volume_distribution(double n0, double alpha, std::uint64_t t,
                                       std::uint64_t horizon_limit = kDefaultVolumeHorizonLimit);

/// Exact law of the stake vector at round t. Support is ordered by the
/// vector of per-bidder win counts (lexicographic).
JointDistribution joint_distribution(const ProtocolParams& params, std::uint64_t t,
                                     std::size_t state_limit = kDefaultJointStateLimit);

/// Law of the volume implied by a joint law, in increasing volume order.
VolumeDistribution marginal_volume(const JointDistribution& joint);

/// The K+1 successor states of `state` with their probabilities
/// (winner 0, ..., winner K-1, no winner). Zero-probability outcomes are kept.
JointDistribution one_step_outcomes(const SystemState& state, double alpha);

/// E(pi_{k,t+1} | state) by the three-term expansion over "no winner",
/// "someone else wins" and "k wins". Equals pi_{k,t} (martingale).
double conditional_share_mean(const SystemState& state, std::size_t k, double alpha);

/// E(theta_{k,t+1} | state) = theta_k (1 - N^-alpha + (N+1)^-alpha) <= theta_k.
double conditional_power_mean(const SystemState& state, std::size_t k, double alpha);

/// Central moments of pi_{k,t} about pi_{k,0}.
struct MomentReport {
    std::uint64_t t = 0;
    std::size_t bidder = 0;
    double mean = 0.0;
    double variance = 0.0;
    double mu3 = 0.0;
    double mu4 = 0.0;
};

inline constexpr double kMomentAgreementTolerance = 1e-10;

/// Moments of pi_{k,t} computed directly from the joint law at t and, in
/// parallel, by stepping the one-round moment recursions with expectations
/// under the joint law at each round. Returns the direct values; throws
/// ConsistencyError if the two routes differ by more than 1e-10.
MomentReport exact_central_moments(const ProtocolParams& params, std::uint64_t t, std::size_t k,
                                   std::size_t state_limit = kDefaultJointStateLimit);

/// The recursion route alone, exposed so tests can compare both routes.
MomentReport recursive_central_moments(const ProtocolParams& params, std::uint64_t t,
                                       std::size_t k,
                                       std::size_t state_limit = kDefaultJointStateLimit);

}  // namespace polyalpha
