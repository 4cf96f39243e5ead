#pragma once

// Stake-evolution chain of the Poly(alpha) leader-election rule.
//
// Each round, bidder k wins one unit of stake with probability
// n_k / N^(1+alpha) (its voting power); with the remaining probability
// 1 - N^-alpha nobody is rewarded. N is the total stake (volume).

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "polyalpha/rng.hpp"

namespace polyalpha {

struct ProtocolParams {
    double alpha = 0.0;
    std::vector<double> initial_stakes;

    ProtocolParams() = default;
    ProtocolParams(double alpha, std::vector<double> initial_stakes);

    std::size_t num_bidders() const noexcept { return initial_stakes.size(); }
    double initial_volume() const noexcept;

    /// Throws InvalidState unless alpha >= 0, K >= 1, every stake > 0 and N_0 >= 1.
    void validate() const;
};

struct SystemState {
    std::uint64_t t = 0;
    std::vector<double> stakes;
    double volume = 0.0;

    static SystemState initial(const ProtocolParams& params);
    static SystemState from_stakes(std::vector<double> stakes, std::uint64_t t = 0);

    std::size_t num_bidders() const noexcept { return stakes.size(); }

    /// Throws InvalidState on negative stakes, zero volume or a volume that
    /// no longer matches the stake sum within 1e-12 relative.
    void validate() const;
};

struct StepOutcome {
    std::optional<std::size_t> winner;
};

/// pi_k = n_k / N.
std::vector<double> shares(const SystemState& state);

/// theta_k = n_k / N^(1+alpha); the theta_k sum to N^-alpha.
std::vector<double> voting_powers(const SystemState& state, double alpha);

/// Probability that the volume grows this round, N^-alpha.
double increment_probability(double volume, double alpha);

/// Outcome of one round for a given uniform draw u in [0,1). The cumulative
/// outcome vector is (winner 0, ..., winner K-1, none) with the "none" mass
/// taken as 1 - N^-alpha.
StepOutcome select_outcome(const SystemState& state, double alpha, double u);

/// Applies an outcome in place: t advances, and the winner (if any) gains one unit.
void apply_outcome(SystemState& state, const StepOutcome& outcome);

/// One round of the chain. Consumes exactly one uniform from `rng`.
StepOutcome step(SystemState& state, const ProtocolParams& params, Stream& rng);

struct TrajectoryRecord {
    std::uint64_t t = 0;
    double volume = 0.0;
    std::vector<double> stakes;

    bool operator==(const TrajectoryRecord&) const = default;
};

struct Trajectory {
    ProtocolParams params;
    std::uint64_t seed = 0;
    std::vector<TrajectoryRecord> records;
};

/// Runs `horizon` rounds from the initial state of `params` with a stream
/// seeded by `seed`, recording t = 0, every stride-th round, and the final round.
Trajectory simulate_trajectory(const ProtocolParams& params, std::uint64_t horizon,
                               std::uint64_t seed, std::uint64_t stride);

/// Same as simulate_trajectory but driven by a caller-owned stream.
Trajectory simulate_trajectory(const ProtocolParams& params, std::uint64_t horizon,
                               Stream& rng, std::uint64_t stride);

/// Event-driven simulation of the same chain: skips the idle rounds between
/// volume increments by drawing geometric waiting times with success
/// probability N^-alpha, then picks the winner with probability n_k / N.
/// Exact in law (not in stream usage) compared to repeated `step`.
///
/// Advances `state` to round `until` (no-op if state.t >= until). The
/// waiting time is memoryless, so calls can be chained across checkpoints.
void advance_jump_chain(SystemState& state, double alpha, std::uint64_t until, Stream& rng);

}  // namespace polyalpha
