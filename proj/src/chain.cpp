#include "polyalpha/chain.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "polyalpha/errors.hpp"

namespace polyalpha {

namespace {

double stake_sum(std::span<const double> stakes) {
    return std::accumulate(stakes.begin(), stakes.end(), 0.0);
}

void require_valid(const SystemState& state) {
    if (state.stakes.empty()) throw InvalidState("state has no bidders");
    if (!(state.volume > 0.0)) throw InvalidState("state volume must be positive");
}

}  // namespace

ProtocolParams::ProtocolParams(double a, std::vector<double> stakes)
    : alpha(a), initial_stakes(std::move(stakes)) {
    validate();
}

double ProtocolParams::initial_volume() const noexcept { return stake_sum(initial_stakes); }

void ProtocolParams::validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidState("alpha must be finite and >= 0");
    if (initial_stakes.empty()) throw InvalidState("at least one bidder is required");
    for (std::size_t k = 0; k < initial_stakes.size(); ++k) {
        if (!(initial_stakes[k] > 0.0) || !std::isfinite(initial_stakes[k])) {
            std::ostringstream os;
            os << "initial stake of bidder " << k << " must be positive, got " << initial_stakes[k];
            throw InvalidState(os.str());
        }
    }
    // N_0 >= 1 keeps the increment probability N^-alpha a probability.
    if (initial_volume() < 1.0) {
        std::ostringstream os;
        os << "total initial stake must be >= 1, got " << initial_volume();
        throw InvalidState(os.str());
    }
}

SystemState SystemState::initial(const ProtocolParams& params) {
    params.validate();
    return from_stakes(params.initial_stakes);
}

SystemState SystemState::from_stakes(std::vector<double> stakes, std::uint64_t t) {
    SystemState s;
    s.t = t;
    s.volume = stake_sum(stakes);
    s.stakes = std::move(stakes);
    return s;
}

void SystemState::validate() const {
    require_valid(*this);
    for (double n : stakes) {
        if (!(n >= 0.0)) throw InvalidState("stakes must be nonnegative");
    }
    const double sum = stake_sum(stakes);
    if (std::abs(sum - volume) > 1e-12 * volume) {
        std::ostringstream os;
        os.precision(17);
        os << "volume " << volume << " does not match stake sum " << sum;
        throw InvalidState(os.str());
    }
}

std::vector<double> shares(const SystemState& state) {
    require_valid(state);
    std::vector<double> out(state.stakes.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = state.stakes[k] / state.volume;
    return out;
}

std::vector<double> voting_powers(const SystemState& state, double alpha) {
    require_valid(state);
    if (!(alpha >= 0.0)) throw InvalidState("alpha must be >= 0");
    const double scale = std::pow(state.volume, 1.0 + alpha);
    std::vector<double> out(state.stakes.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = state.stakes[k] / scale;
    return out;
}

double increment_probability(double volume, double alpha) {
    return alpha == 0.0 ? 1.0 : std::pow(volume, -alpha);
}

StepOutcome select_outcome(const SystemState& state, double alpha, double u) {
    const double p_increment = increment_probability(state.volume, alpha);
    if (u >= p_increment) return {};
    const double scale = std::pow(state.volume, 1.0 + alpha);
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t k = 0; k < state.stakes.size(); ++k) {
        if (state.stakes[k] <= 0.0) continue;
        last_positive = k;
        cumulative += state.stakes[k] / scale;
        if (u < cumulative) return {k};
    }
    // u landed in the rounding sliver between the summed powers and N^-alpha.
    return {last_positive};
}

void apply_outcome(SystemState& state, const StepOutcome& outcome) {
    ++state.t;
    if (outcome.winner) {
        state.stakes[*outcome.winner] += 1.0;
        state.volume += 1.0;
    }
}

StepOutcome step(SystemState& state, const ProtocolParams& params, Stream& rng) {
    const StepOutcome outcome = select_outcome(state, params.alpha, rng.uniform());
    apply_outcome(state, outcome);
    return outcome;
}

Trajectory simulate_trajectory(const ProtocolParams& params, std::uint64_t horizon,
                               std::uint64_t seed, std::uint64_t stride) {
    Stream rng(seed);
    Trajectory out = simulate_trajectory(params, horizon, rng, stride);
    out.seed = seed;
    return out;
}

Trajectory simulate_trajectory(const ProtocolParams& params, std::uint64_t horizon, Stream& rng,
                               std::uint64_t stride) {
    if (stride == 0) throw InvalidState("recording stride must be >= 1");
    Trajectory traj;
    traj.params = params;
    SystemState state = SystemState::initial(params);
    traj.records.push_back({state.t, state.volume, state.stakes});
    for (std::uint64_t i = 0; i < horizon; ++i) {
        step(state, params, rng);
        if (state.t % stride == 0 || state.t == horizon) {
            traj.records.push_back({state.t, state.volume, state.stakes});
        }
    }
    return traj;
}

void advance_jump_chain(SystemState& state, double alpha, std::uint64_t until, Stream& rng) {
    require_valid(state);
    while (state.t < until) {
        const std::uint64_t wait = rng.geometric(increment_probability(state.volume, alpha));
        if (wait > until - state.t) {
            state.t = until;
            return;
        }
        state.t += wait;
        const double u = rng.uniform() * state.volume;
        double cumulative = 0.0;
        std::size_t winner = state.stakes.size();
        std::size_t last_positive = 0;
        for (std::size_t k = 0; k < state.stakes.size(); ++k) {
            if (state.stakes[k] <= 0.0) continue;
            last_positive = k;
            cumulative += state.stakes[k];
            if (u < cumulative) {
                winner = k;
                break;
            }
        }
        if (winner == state.stakes.size()) winner = last_positive;
        state.stakes[winner] += 1.0;
        state.volume += 1.0;
    }
}

}  // namespace polyalpha
