#include "polyalpha/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "polyalpha/errors.hpp"

namespace polyalpha {

namespace {

using WinCounts = std::vector<std::uint32_t>;

// Sparse law of the stake vector, keyed by per-bidder win counts.
class JointLaw {
public:
    explicit JointLaw(const ProtocolParams& params)
        : alpha_(params.alpha), initial_(params.initial_stakes),
          initial_volume_(params.initial_volume()) {
        law_.emplace(WinCounts(initial_.size(), 0), 1.0);
    }

    void step(std::size_t state_limit) {
        std::map<WinCounts, double> next;
        for (const auto& [wins, p] : law_) {
            const double volume = volume_of(wins);
            const double p_inc = increment_probability(volume, alpha_);
            if (p_inc < 1.0) next[wins] += p * (1.0 - p_inc);
            const double scale = std::pow(volume, 1.0 + alpha_);
            for (std::size_t k = 0; k < wins.size(); ++k) {
                const double n = initial_[k] + wins[k];
                if (n <= 0.0) continue;
                WinCounts succ = wins;
                ++succ[k];
                next[succ] += p * (n / scale);
            }
            if (next.size() > state_limit) {
                throw ResourceLimit("joint distribution exceeds the state limit of " +
                                        std::to_string(state_limit),
                                    next.size());
            }
        }
        law_ = std::move(next);
    }

    double volume_of(const WinCounts& wins) const {
        std::uint64_t total = 0;
        for (auto w : wins) total += w;
        return initial_volume_ + static_cast<double>(total);
    }

    double stake_of(const WinCounts& wins, std::size_t k) const { return initial_[k] + wins[k]; }

    const std::map<WinCounts, double>& law() const { return law_; }

    JointDistribution to_distribution() const {
        JointDistribution out;
        out.support.reserve(law_.size());
        out.probabilities.reserve(law_.size());
        for (const auto& [wins, p] : law_) {
            std::vector<double> stakes(initial_.size());
            for (std::size_t k = 0; k < stakes.size(); ++k) stakes[k] = stake_of(wins, k);
            out.support.push_back(std::move(stakes));
            out.probabilities.push_back(p);
        }
        return out;
    }

private:
    double alpha_;
    std::vector<double> initial_;
    double initial_volume_;
    std::map<WinCounts, double> law_;
};

void check_bidder(std::size_t k, std::size_t num_bidders) {
    if (k >= num_bidders) {
        throw InvalidState("bidder index " + std::to_string(k) + " out of range for " +
                           std::to_string(num_bidders) + " bidders");
    }
}

struct Moments {
    double mean = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
};

Moments direct_moments(const JointLaw& law, std::size_t k, double pi0) {
    Moments m;
    for (const auto& [wins, p] : law.law()) {
        const double pi = law.stake_of(wins, k) / law.volume_of(wins);
        const double d = pi - pi0;
        m.mean += p * pi;
        m.m2 += p * d * d;
        m.m3 += p * d * d * d;
        m.m4 += p * d * d * d * d;
    }
    return m;
}

}  // namespace

VolumeDistribution volume_distribution(double n0, double alpha, std::uint64_t t,
                                       std::uint64_t horizon_limit) {
    if (!(n0 >= 1.0)) throw InvalidState("initial volume must be >= 1");
    if (!(alpha >= 0.0)) throw InvalidState("alpha must be >= 0");
    if (t > horizon_limit) {
        throw ResourceLimit("volume distribution horizon exceeds the limit of " +
                                std::to_string(horizon_limit),
                            static_cast<std::size_t>(t) + 1);
    }
    // mass[j] = P(N_t = n0 + j)
    std::vector<double> mass(t + 1, 0.0);
    mass[0] = 1.0;
    for (std::uint64_t s = 0; s < t; ++s) {
        for (std::uint64_t j = s + 1; j-- > 0;) {
            if (mass[j] == 0.0) continue;
            const double q = increment_probability(n0 + static_cast<double>(j), alpha);
            mass[j + 1] += mass[j] * q;
            mass[j] *= 1.0 - q;
        }
    }
    VolumeDistribution out;
    for (std::uint64_t j = 0; j <= t; ++j) {
        if (mass[j] == 0.0) continue;
        out.support.push_back(n0 + static_cast<double>(j));
        out.probabilities.push_back(mass[j]);
    }
    return out;
}

JointDistribution joint_distribution(const ProtocolParams& params, std::uint64_t t,
                                     std::size_t state_limit) {
    params.validate();
    JointLaw law(params);
    for (std::uint64_t s = 0; s < t; ++s) law.step(state_limit);
    return law.to_distribution();
}

VolumeDistribution marginal_volume(const JointDistribution& joint) {
    std::map<double, double> by_volume;
    for (std::size_t i = 0; i < joint.size(); ++i) {
        double v = 0.0;
        for (double n : joint.support[i]) v += n;
        by_volume[v] += joint.probabilities[i];
    }
    VolumeDistribution out;
    for (const auto& [v, p] : by_volume) {
        out.support.push_back(v);
        out.probabilities.push_back(p);
    }
    return out;
}

JointDistribution one_step_outcomes(const SystemState& state, double alpha) {
    state.validate();
    const std::vector<double> powers = voting_powers(state, alpha);
    JointDistribution out;
    for (std::size_t k = 0; k < state.num_bidders(); ++k) {
        std::vector<double> succ = state.stakes;
        succ[k] += 1.0;
        out.support.push_back(std::move(succ));
        out.probabilities.push_back(powers[k]);
    }
    out.support.push_back(state.stakes);
    out.probabilities.push_back(1.0 - increment_probability(state.volume, alpha));
    return out;
}

double conditional_share_mean(const SystemState& state, std::size_t k, double alpha) {
    state.validate();
    check_bidder(k, state.num_bidders());
    const double n = state.stakes[k];
    const double volume = state.volume;
    const double grow = std::pow(volume, 1.0 + alpha);
    return n / volume * (1.0 - increment_probability(volume, alpha))  // nobody wins
           + n / (volume + 1.0) * (volume - n) / grow                 // another bidder wins
           + (n + 1.0) / (volume + 1.0) * n / grow;                   // k wins
}

double conditional_power_mean(const SystemState& state, std::size_t k, double alpha) {
    state.validate();
    check_bidder(k, state.num_bidders());
    const double theta = voting_powers(state, alpha)[k];
    const double volume = state.volume;
    return theta * (1.0 - increment_probability(volume, alpha) +
                    increment_probability(volume + 1.0, alpha));
}

MomentReport recursive_central_moments(const ProtocolParams& params, std::uint64_t t,
                                       std::size_t k, std::size_t state_limit) {
    params.validate();
    check_bidder(k, params.num_bidders());
    const double pi0 = params.initial_stakes[k] / params.initial_volume();
    JointLaw law(params);
    MomentReport r;
    r.t = t;
    r.bidder = k;
    r.mean = pi0;  // martingale
    for (std::uint64_t s = 0; s < t; ++s) {
        double dvar = 0.0, dmu3 = 0.0, dmu4 = 0.0;
        for (const auto& [wins, p] : law.law()) {
            const double volume = law.volume_of(wins);
            const double pi = law.stake_of(wins, k) / volume;
            const double q = 1.0 - pi;
            const double d = pi - pi0;
            const double rate = increment_probability(volume, params.alpha);
            const double g1 = volume + 1.0;
            const double g2 = g1 * g1;
            const double g3 = g2 * g1;
            const double g4 = g3 * g1;
            dvar += p * pi * q * rate / g2;
            dmu3 += p * (pi * q * (1.0 - 2.0 * pi) * rate / g3  //
                         + 3.0 * d * pi * q * rate / g2);
            dmu4 += p * (std::pow(pi, 4) * q * rate / g4                       // (a')
                         + pi * std::pow(q, 4) * rate / g4                      // (b')
                         + 6.0 * d * d * pi * pi * q * rate / g2                // (c')
                         + 6.0 * d * d * pi * q * q * rate / g2                 // (d')
                         - 4.0 * d * std::pow(pi, 3) * q * rate / g3            // (e')
                         + 4.0 * d * pi * std::pow(q, 3) * rate / g3);          // (f')
        }
        r.variance += dvar;
        r.mu3 += dmu3;
        r.mu4 += dmu4;
        law.step(state_limit);
    }
    return r;
}

MomentReport exact_central_moments(const ProtocolParams& params, std::uint64_t t, std::size_t k,
                                   std::size_t state_limit) {
    params.validate();
    check_bidder(k, params.num_bidders());
    const double pi0 = params.initial_stakes[k] / params.initial_volume();
    JointLaw law(params);
    for (std::uint64_t s = 0; s < t; ++s) law.step(state_limit);
    const Moments direct = direct_moments(law, k, pi0);

    const MomentReport rec = recursive_central_moments(params, t, k, state_limit);
    const auto check = [&](const char* name, double a, double b) {
        if (std::abs(a - b) > kMomentAgreementTolerance) {
            std::ostringstream os;
            os.precision(17);
            os << name << " of pi_" << k << "," << t << ": direct " << a << " vs recursion " << b;
            throw ConsistencyError(os.str());
        }
    };
    check("variance", direct.m2, rec.variance);
    check("mu3", direct.m3, rec.mu3);
    check("mu4", direct.m4, rec.mu4);

    MomentReport r;
    r.t = t;
    r.bidder = k;
    r.mean = direct.mean;
    r.variance = direct.m2;
    r.mu3 = direct.m3;
    r.mu4 = direct.m4;
    return r;
}

}  // namespace polyalpha
