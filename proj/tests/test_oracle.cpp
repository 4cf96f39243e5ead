#include <cmath>
#include <functional>
#include <map>

#include "doctest.h"
#include "polyalpha/chain.hpp"
#include "polyalpha/errors.hpp"
#include "polyalpha/oracle.hpp"

using namespace polyalpha;

namespace {

// Independent oracle: enumerate every outcome path of length t, carrying its
// probability, and hand each terminal stake vector to `visit`.
void enumerate_paths(const std::vector<double>& stakes, double alpha, std::uint64_t t, double p,
                     const std::function<void(const std::vector<double>&, double)>& visit) {
    if (p == 0.0) return;
    if (t == 0) {
        visit(stakes, p);
        return;
    }
    double volume = 0.0;
    for (double n : stakes) volume += n;
    const double stay = 1.0 - std::pow(volume, -alpha);
    enumerate_paths(stakes, alpha, t - 1, p * stay, visit);
    for (std::size_t k = 0; k < stakes.size(); ++k) {
        std::vector<double> next = stakes;
        next[k] += 1.0;
        enumerate_paths(next, alpha, t - 1, p * stakes[k] / std::pow(volume, 1.0 + alpha), visit);
    }
}

std::map<std::vector<double>, double> brute_force_joint(const std::vector<double>& stakes, double alpha,
                                                        std::uint64_t t) {
    std::map<std::vector<double>, double> law;
    enumerate_paths(stakes, alpha, t, 1.0, [&](const std::vector<double>& s, double p) { law[s] += p; });
    return law;
}

}  // namespace

TEST_CASE("volume law by hand enumeration") {
    const VolumeDistribution t2 = volume_distribution(1.0, 1.0, 2);
    CHECK(t2.support == std::vector<double>{2.0, 3.0});
    CHECK(t2.probabilities[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(t2.probabilities[1] == doctest::Approx(0.5).epsilon(1e-15));

    const VolumeDistribution t3 = volume_distribution(1.0, 1.0, 3);
    REQUIRE(t3.support == std::vector<double>{2.0, 3.0, 4.0});
    CHECK(std::abs(t3.probabilities[0] - 1.0 / 4.0) < 1e-15);
    CHECK(std::abs(t3.probabilities[1] - 7.0 / 12.0) < 1e-15);
    CHECK(std::abs(t3.probabilities[2] - 1.0 / 6.0) < 1e-15);

    for (std::uint64_t t : {0u, 1u, 17u}) {
        const VolumeDistribution d = volume_distribution(5.0, 0.0, t);
        REQUIRE(d.size() == 1);
        CHECK(d.support[0] == 5.0 + t);
        CHECK(d.probabilities[0] == 1.0);
    }
}

TEST_CASE("volume law matches brute-force path enumeration") {
    for (double alpha : {0.3, 1.0, 2.0}) {
        for (double n0 : {1.0, 2.5}) {
            const std::uint64_t t = 9;
            std::map<double, double> brute;
            enumerate_paths({n0}, alpha, t, 1.0, [&](const std::vector<double>& s, double p) { brute[s[0]] += p; });
            const VolumeDistribution dp = volume_distribution(n0, alpha, t);
            CHECK(dp.total() == doctest::Approx(1.0).epsilon(1e-12));
            for (const auto& [v, p] : brute) CHECK(dp.probability_of(v) == doctest::Approx(p).epsilon(1e-12));
        }
    }
}

TEST_CASE("volume law resource limit") {
    CHECK_THROWS_AS(volume_distribution(1.0, 1.0, 10001), ResourceLimit);
    CHECK_THROWS_AS(volume_distribution(1.0, 1.0, 11, 10), ResourceLimit);
    CHECK_THROWS_AS(volume_distribution(0.5, 1.0, 3), InvalidState);
}

TEST_CASE("joint law examples") {
    const JointDistribution one = joint_distribution(ProtocolParams(1.0, {1.0, 1.0}), 1);
    CHECK(one.probability_of({2.0, 1.0}) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(one.probability_of({1.0, 2.0}) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(one.probability_of({1.0, 1.0}) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(one.size() == 3);

    for (double alpha : {0.0, 0.7, 3.0}) {
        const JointDistribution lone = joint_distribution(ProtocolParams(alpha, {1.0}), 1);
        REQUIRE(lone.size() == 1);
        CHECK(lone.support[0] == std::vector<double>{2.0});
        CHECK(lone.probabilities[0] == doctest::Approx(1.0));
    }

    const JointDistribution two = joint_distribution(ProtocolParams(1.0, {1.0, 1.0}), 2);
    CHECK(two.probability_of({1.0, 1.0}) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("joint law matches brute force and marginalizes to the volume law") {
    const std::vector<std::vector<double>> cases{{1, 1}, {2, 1}, {1, 1, 1}, {0.5, 1.5}};
    for (const auto& stakes : cases) {
        for (double alpha : {0.0, 0.5, 1.0, 2.0}) {
            const ProtocolParams params(alpha, stakes);
            for (std::uint64_t t : {1u, 3u, 6u}) {
                const JointDistribution dp = joint_distribution(params, t);
                CHECK(dp.total() == doctest::Approx(1.0).epsilon(1e-12));
                const auto brute = brute_force_joint(stakes, alpha, t);
                CHECK(dp.size() == brute.size());
                for (const auto& [s, p] : brute) CHECK(dp.probability_of(s) == doctest::Approx(p).epsilon(1e-12));

                const VolumeDistribution marg = marginal_volume(dp);
                const VolumeDistribution vol = volume_distribution(params.initial_volume(), alpha, t);
                REQUIRE(marg.size() == vol.size());
                for (std::size_t i = 0; i < vol.size(); ++i) {
                    CHECK(marg.support[i] == vol.support[i]);
                    CHECK(std::abs(marg.probabilities[i] - vol.probabilities[i]) <= 1e-12);
                }
            }
        }
    }
}

TEST_CASE("joint law refuses to exceed the state limit") {
    const ProtocolParams params(0.0, {1.0, 1.0, 1.0, 1.0});
    try {
        joint_distribution(params, 30, 500);
        FAIL("expected ResourceLimit");
    } catch (const ResourceLimit& e) {
        CHECK(e.attained() > 500);
    }
}

TEST_CASE("one-step outcomes") {
    const JointDistribution d = one_step_outcomes(SystemState::from_stakes({1.0, 1.0}), 1.0);
    REQUIRE(d.size() == 3);
    CHECK(d.probabilities == std::vector<double>{0.25, 0.25, 0.5});
    CHECK(d.total() == doctest::Approx(1.0));
}

TEST_CASE("conditional share mean: examples and martingale identity") {
    CHECK(conditional_share_mean(SystemState::from_stakes({1, 1}), 0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(conditional_share_mean(SystemState::from_stakes({2, 1}), 0, 1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(conditional_share_mean(SystemState::from_stakes({0, 3}), 0, 1.5) == 0.0);

    Stream gen(5);
    for (int i = 0; i < 500; ++i) {
        std::vector<double> stakes{gen.uniform() * 10, 1 + gen.uniform() * 50, gen.uniform() * 3};
        const SystemState s = SystemState::from_stakes(stakes);
        const double alpha = 3.0 * gen.uniform();
        const auto pis = shares(s);
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(std::abs(conditional_share_mean(s, k, alpha) - pis[k]) <= 1e-14 * pis[k] + 1e-300);
        }
    }
}

TEST_CASE("conditional power mean: examples, enumeration, dominance") {
    const SystemState s11 = SystemState::from_stakes({1, 1});
    CHECK(std::abs(conditional_power_mean(s11, 0, 1.0) - 5.0 / 24.0) < 1e-15);
    CHECK(conditional_power_mean(SystemState::from_stakes({2, 1}), 0, 0.0) ==
          doctest::Approx(voting_powers(SystemState::from_stakes({2, 1}), 0.0)[0]));
    CHECK(conditional_power_mean(SystemState::from_stakes({0, 2}), 0, 1.0) == 0.0);

    Stream gen(8);
    for (int i = 0; i < 300; ++i) {
        std::vector<double> stakes{gen.uniform() * 4, 1 + gen.uniform() * 20};
        if (i % 10 == 0) stakes[0] = 0.0;
        const SystemState s = SystemState::from_stakes(stakes);
        const double alpha = i % 7 == 0 ? 0.0 : 2.5 * gen.uniform();
        for (std::size_t k = 0; k < 2; ++k) {
            // enumerate the K+1 outcomes by hand
            double expected = 0.0;
            const JointDistribution next = one_step_outcomes(s, alpha);
            for (std::size_t j = 0; j < next.size(); ++j) {
                double v = 0.0;
                for (double n : next.support[j]) v += n;
                expected += next.probabilities[j] * next.support[j][k] / std::pow(v, 1.0 + alpha);
            }
            const double got = conditional_power_mean(s, k, alpha);
            CHECK(std::abs(got - expected) <= 1e-12);
            const double theta = voting_powers(s, alpha)[k];
            if (alpha == 0.0 || theta == 0.0) {
                CHECK(got == doctest::Approx(theta).epsilon(1e-14));
            } else {
                CHECK(got < theta);
            }
        }
    }
}

TEST_CASE("central moments: examples") {
    const ProtocolParams unit(1.0, {1.0, 1.0});
    const MomentReport one = exact_central_moments(unit, 1, 0);
    CHECK(std::abs(one.variance - 1.0 / 72.0) < 1e-16);
    CHECK(std::abs(one.mu3) < 1e-16);
    CHECK(one.mean == doctest::Approx(0.5));

    const MomentReport zero = exact_central_moments(ProtocolParams(0.5, {1.0, 2.0, 4.0}), 0, 2);
    CHECK(zero.variance == 0.0);
    CHECK(zero.mu3 == 0.0);
    CHECK(zero.mu4 == 0.0);
}

TEST_CASE("central moments agree with brute-force path enumeration (t <= 4)") {
    for (double alpha : {0.0, 1.0, 2.0}) {
        const std::vector<double> stakes{1.0, 2.0};
        const ProtocolParams params(alpha, stakes);
        for (std::uint64_t t = 1; t <= 4; ++t) {
            double m2 = 0, m3 = 0, m4 = 0;
            enumerate_paths(stakes, alpha, t, 1.0, [&](const std::vector<double>& s, double p) {
                const double d = s[0] / (s[0] + s[1]) - 1.0 / 3.0;
                m2 += p * d * d;
                m3 += p * d * d * d;
                m4 += p * d * d * d * d;
            });
            const MomentReport r = exact_central_moments(params, t, 0);
            CHECK(r.variance == doctest::Approx(m2).epsilon(1e-12));
            CHECK(std::abs(r.mu3 - m3) < 1e-15);
            CHECK(r.mu4 == doctest::Approx(m4).epsilon(1e-12));
        }
    }
}

TEST_CASE("moment recursions agree with the direct computation (t <= 12, K <= 3)") {
    for (double alpha : {0.0, 0.5, 1.0, 2.0}) {
        for (std::size_t k_count = 1; k_count <= 3; ++k_count) {
            const ProtocolParams params(alpha, std::vector<double>(k_count, 1.0));
            for (std::uint64_t t = 0; t <= 12; ++t) {
                const MomentReport direct = exact_central_moments(params, t, 0);
                const MomentReport rec = recursive_central_moments(params, t, 0);
                CHECK(std::abs(direct.variance - rec.variance) <= 1e-10);
                CHECK(std::abs(direct.mu3 - rec.mu3) <= 1e-10);
                CHECK(std::abs(direct.mu4 - rec.mu4) <= 1e-10);
                CHECK(direct.variance >= 0.0);
                CHECK(direct.mu4 >= direct.variance * direct.variance - 1e-18);
            }
        }
    }
}

TEST_CASE("moment recursion with an asymmetric start has nonzero third moment") {
    const MomentReport r = exact_central_moments(ProtocolParams(1.0, {1.0, 3.0}), 8, 0);
    CHECK(r.mu3 > 0.0);  // share bounded below by 0, right-skewed for a small bidder
}
