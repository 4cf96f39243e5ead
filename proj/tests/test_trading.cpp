#include <cmath>
#include <sstream>

#include "doctest.h"
#include "polyalpha/errors.hpp"
#include "polyalpha/oracle.hpp"
#include "polyalpha/trading.hpp"

using namespace polyalpha;

namespace {

MarketParams flat_market(double r_free = 0.0, double r_cryp = 0.0) {
    MarketParams m;
    m.r_free = r_free;
    m.r_cryp = r_cryp;
    m.r_price = r_cryp;
    m.noise.kind = NoiseSpec::Kind::degenerate;
    return m;
}

TradeContext ctx(std::uint64_t t, double n_pre, double volume, double price, bool exit = false) {
    return TradeContext{t, n_pre, volume, price, exit};
}

}  // namespace

TEST_CASE("price step") {
    Stream rng(1);
    MarketParams m = flat_market(0.0, 0.01);
    CHECK(price_step(m, 1.0, 100.0, 1.0, rng) == doctest::Approx(1.01 * 100.0 / 100.01).epsilon(1e-15));
    CHECK(price_step(m, 1.0, 100.0, 1.0, rng) == doctest::Approx(1.0099).epsilon(1e-4));

    MarketParams geo = flat_market(0.0, 0.0);
    geo.model = PriceModel::independent_geometric;
    CHECK(price_step(geo, 1.0, 10.0, 3.5, rng) == 3.5);

    CHECK_THROWS_AS(price_step(m, 1.0, 10.0, 0.0, rng), InvalidState);
    CHECK_THROWS_AS(price_step(m, 1.0, 0.5, 1.0, rng), InvalidState);
}

TEST_CASE("calibrated market value has drift exactly 1 + r_cryp") {
    // E(N' P' | G) with xi = 1, enumerating the volume outcome
    MarketParams m = flat_market(0.0, 0.03);
    Stream rng(2);
    for (double alpha : {0.0, 0.5, 1.0, 2.0}) {
        for (double volume : {1.0, 3.0, 17.5, 400.0}) {
            const double price = 2.0;
            const double next = price_step(m, alpha, volume, price, rng);
            const double q = std::pow(volume, -alpha);
            const double expected_mv = (q * (volume + 1.0) + (1.0 - q) * volume) * next;
            CHECK(expected_mv == doctest::Approx(1.03 * volume * price).epsilon(1e-14));
        }
    }
}

TEST_CASE("log-normal innovations have mean one") {
    NoiseSpec noise{NoiseSpec::Kind::lognormal, 0.3};
    Stream rng(3);
    double sum = 0.0;
    const int n = 400000;
    for (int i = 0; i < n; ++i) sum += noise.sample(rng);
    // sd of xi is sqrt(exp(0.09) - 1) ~ 0.307, so SE ~ 5e-4
    CHECK(sum / n == doctest::Approx(1.0).epsilon(0.003));
}

TEST_CASE("validate_decision") {
    CHECK_FALSE(validate_decision(ctx(1, 5, 20, 1), {-5, 0}).has_value());
    const auto shorting = validate_decision(ctx(1, 5, 20, 1), {-6, 0});
    REQUIRE(shorting.has_value());
    CHECK(shorting->kind == ViolationKind::negative_holdings);
    const auto over = validate_decision(ctx(1, 5, 20, 1), {20 - 5 + 1, 0});
    REQUIRE(over.has_value());
    CHECK(over->kind == ViolationKind::exceeds_volume);
    CHECK_FALSE(validate_decision(ctx(1, 5, 20, 1), {15, 0}).has_value());
    const auto neg_b = validate_decision(ctx(1, 5, 20, 1), {0, -0.1});
    REQUIRE(neg_b.has_value());
    CHECK(neg_b->kind == ViolationKind::negative_risk_free);
    const auto at_exit = validate_decision(ctx(3, 5, 20, 1, true), {1, 0});
    REQUIRE(at_exit.has_value());
    CHECK(at_exit->kind == ViolationKind::trade_at_exit);
    CHECK_FALSE(validate_decision(ctx(3, 5, 20, 1, true), {0, 0}).has_value());
}

TEST_CASE("validate_decision never accepts an infeasible decision (fuzz)") {
    Stream rng(4);
    for (int i = 0; i < 1000000; ++i) {
        const double volume = 1.0 + 50.0 * rng.uniform();
        const double n_pre = volume * rng.uniform();
        const Decision d{(rng.uniform() * 2.0 - 1.0) * 1.2 * volume, (rng.uniform() - 0.2) * 10.0};
        const bool exit = rng.uniform() < 0.05;
        const bool feasible = d.b >= 0.0 && n_pre + d.nu >= 0.0 && n_pre + d.nu <= volume * (1.0 + 1e-12) &&
                              (!exit || (d.nu == 0.0 && d.b == 0.0));
        if (!validate_decision(ctx(1, n_pre, volume, 1.0, exit), d).has_value()) {
            REQUIRE(feasible);
        } else {
            REQUIRE_FALSE(feasible);
        }
    }
}

TEST_CASE("cash flows follow the budget identity") {
    PortfolioLedger none(3.0, 1.0, 0.05);
    none.apply_trading_step(ctx(1, 3, 10, 2.0), {0, 0});
    CHECK(none.records().back().cash_flow == 0.0);

    PortfolioLedger sell(3.0, 1.0, 0.0);
    sell.apply_trading_step(ctx(1, 3, 10, 2.0), {-1, 0});
    CHECK(sell.records().back().cash_flow == 2.0);

    PortfolioLedger buy(3.0, 1.0, 0.0);
    buy.apply_trading_step(ctx(1, 3, 10, 2.0), {1, 0});
    CHECK(buy.records().back().cash_flow == -2.0);

    PortfolioLedger saver(3.0, 1.0, 0.1);
    saver.apply_trading_step(ctx(1, 3, 10, 2.0), {-1, 1.5});
    CHECK(saver.records().back().cash_flow == doctest::Approx(0.5));
    saver.apply_trading_step(ctx(2, 2, 10, 2.0), {0, 0});
    CHECK(saver.records().back().cash_flow == doctest::Approx(1.65));

    PortfolioLedger bad(3.0, 1.0, 0.0);
    CHECK_THROWS_AS(bad.apply_trading_step(ctx(1, 3, 10, 2.0), {-4, 0}), ContractError);
    CHECK_THROWS_AS(bad.apply_trading_step(ctx(2, 3, 10, 2.0), {0, 0}), ContractError);
}

TEST_CASE("liquidation") {
    PortfolioLedger l(3.0, 1.0, 0.0);
    CHECK(l.liquidate(ctx(1, 3, 10, 2.0, true)) == 6.0);
    CHECK(l.exit_time() == std::optional<std::uint64_t>{1});
    CHECK_THROWS_AS(l.liquidate(ctx(2, 3, 10, 2.0, true)), ContractError);
    CHECK_THROWS_AS(l.apply_trading_step(ctx(2, 3, 10, 2.0), {0, 0}), ContractError);

    PortfolioLedger with_b(3.0, 1.0, 0.1);
    with_b.apply_trading_step(ctx(1, 3, 10, 2.0), {0, 2.0});
    CHECK(with_b.liquidate(ctx(2, 3, 10, 2.0, true)) == doctest::Approx(2.2 + 6.0));

    // one round then exit: utility is delta * n' P_1
    PortfolioLedger quick(4.0, 1.0, 0.0);
    quick.liquidate(ctx(1, 4, 10, 1.5, true));
    CHECK(utility(quick, 0.9) == doctest::Approx(0.9 * 4.0 * 1.5));

    // non-participation: everything sold at t = 0, undiscounted
    PortfolioLedger out(4.0, 2.5, 0.0);
    out.liquidate(ctx(0, 4, 10, 2.5, true));
    CHECK(utility(out, 0.5) == 10.0);
    CHECK(pi_value(out, 0, 0.5) == 10.0);
}

TEST_CASE("pi value") {
    PortfolioLedger l(3.0, 2.0, 0.0);
    CHECK(pi_value(l, 0, 0.9) == 6.0);
    l.apply_trading_step(ctx(1, 3, 10, 2.0), {-1, 0});
    l.apply_trading_step(ctx(2, 2, 10, 3.0), {2, 0});
    l.liquidate(ctx(3, 4, 11, 4.0, true));
    const double d = 0.9;
    CHECK(pi_value(l, 1, d) == doctest::Approx(d * 3 * 2.0));
    CHECK(pi_value(l, 2, d) == doctest::Approx(d * d * 2 * 3.0 + d * 1 * 2.0));
    CHECK(pi_value(l, 3, d) == doctest::Approx(d * d * d * 4 * 4.0 + d * 2.0 - d * d * 2 * 3.0));
    CHECK_THROWS_AS(pi_value(l, 4, d), ContractError);

    PortfolioLedger hold(2.0, 1.0, 0.0);
    hold.apply_trading_step(ctx(1, 2, 10, 1.5), {0, 0});
    CHECK(pi_value(hold, 1, 0.8) == doctest::Approx(0.8 * 2 * 1.5));
}

TEST_CASE("one-step increment of Pi is pi_t times the increment of market value (enumeration, xi = 1)") {
    const double alpha = 1.0, delta = 0.93;
    const MarketParams m = flat_market(0.0, 0.04);
    Stream rng(6);
    for (const auto& stakes : std::vector<std::vector<double>>{{2.0, 3.0}, {1.0, 1.0, 4.0}, {7.5, 0.5}}) {
        // round 1 happened with outcome n'_1 = stakes[0]; the bidder trades nu and holds b = 0
        const SystemState before = SystemState::from_stakes(stakes, 0);
        const double p1 = 1.7;
        PortfolioLedger base(stakes[0], 1.0, 0.0);
        const double nu = -0.5;
        base.apply_trading_step(ctx(1, stakes[0], before.volume, p1), {nu, 0});
        SystemState post = before;
        post.stakes[0] += nu;
        post.stakes[1] -= nu;
        const double pi_t = post.stakes[0] / post.volume;
        const double p2 = price_step(m, alpha, post.volume, p1, rng);

        double expected_pi_next = 0.0, expected_mv = 0.0;
        const JointDistribution next = one_step_outcomes(post, alpha);
        for (std::size_t j = 0; j < next.size(); ++j) {
            PortfolioLedger l = base;
            double v = 0.0;
            for (double n : next.support[j]) v += n;
            l.liquidate(ctx(2, next.support[j][0], v, p2, true));
            expected_pi_next += next.probabilities[j] * pi_value(l, 2, delta);
            expected_mv += next.probabilities[j] * v * p2;
        }
        const double lhs = expected_pi_next - pi_value(base, 1, delta);
        const double rhs = delta * delta * pi_t * expected_mv - delta * pi_t * post.volume * p1;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("utility") {
    PortfolioLedger hold(3.0, 2.0, 0.0);
    for (std::uint64_t t = 1; t < 5; ++t) hold.apply_trading_step(ctx(t, 3, 10, 2.0), {0, 0});
    CHECK_THROWS_AS(utility(hold, 1.0), ContractError);
    hold.liquidate(ctx(5, 3, 10, 2.0, true));
    CHECK(utility(hold, 1.0) == 6.0);
    CHECK(utility(hold, 0.9) == doctest::Approx(pi_value(hold, 5, 0.9)).epsilon(1e-14));

    // (1 + r_free) delta = 1 removes the risk-free term
    PortfolioLedger saver(3.0, 2.0, 0.25);
    saver.apply_trading_step(ctx(1, 3, 10, 2.0), {-1, 1.0});
    saver.apply_trading_step(ctx(2, 2, 10, 2.0), {0, 0.5});
    saver.liquidate(ctx(3, 2, 10, 2.0, true));
    CHECK(risk_free_term(saver, 0.8) == doctest::Approx(0.0));
    CHECK(utility(saver, 0.8) == doctest::Approx(pi_value(saver, 3, 0.8)).epsilon(1e-14));
}

TEST_CASE("built-in strategies") {
    Stream rng(9);
    const StrategySpec no_trade = StrategySpec::parse("no-trading");
    const Decision d0 = builtin_strategy(no_trade, ctx(3, 4, 10, 1), rng);
    CHECK(d0.nu == 0.0);
    CHECK(d0.b == 0.0);
    const Decision sell = builtin_strategy(StrategySpec::parse("proportional-sell(0.5)"), ctx(3, 4, 10, 1), rng);
    CHECK(sell.nu == -2.0);
    const Decision buy = builtin_strategy(StrategySpec::parse("periodic-buy(3)"), ctx(3, 8.5, 10, 1), rng);
    CHECK(buy.nu == doctest::Approx(1.5));  // clamped at N - n'
    const StrategySpec every_other = StrategySpec::parse("periodic-buy(1,2)");
    CHECK(builtin_strategy(every_other, ctx(3, 1, 10, 1), rng).nu == 0.0);
    CHECK(builtin_strategy(every_other, ctx(4, 1, 10, 1), rng).nu == 1.0);

    CHECK(StrategySpec::parse("random-feasible(0.25)").name() == "random-feasible(0.25)");
    CHECK_THROWS_AS(StrategySpec::parse("martingale-doubling"), ConfigError);
    CHECK_THROWS_AS(StrategySpec::parse("proportional-sell(2)"), ConfigError);
    CHECK_THROWS_AS(StrategySpec::parse("periodic-buy(1"), ConfigError);
}

TEST_CASE("random-feasible decisions always validate") {
    Stream rng(10);
    for (double intensity : {0.1, 0.5, 1.0}) {
        const StrategySpec s{StrategyKind::random_feasible, intensity, 1};
        for (int i = 0; i < 100000 / 3; ++i) {
            const double volume = 1.0 + 100.0 * rng.uniform();
            const double n_pre = volume * rng.uniform();
            const TradeContext c = ctx(1, n_pre, volume, 0.1 + rng.uniform());
            const Decision d = builtin_strategy(s, c, rng);
            REQUIRE_FALSE(validate_decision(c, d).has_value());
            REQUIRE_FALSE(validate_decision(c, round_to_whole_stakes(d)).has_value());
        }
    }
}

TEST_CASE("simulated trading ledgers satisfy the utility decomposition") {
    const ProtocolParams params(1.0, {3.0, 5.0, 2.0});
    MarketParams market;
    market.r_free = 0.02;
    market.r_cryp = 0.05;
    market.noise.sigma = 0.2;
    const std::vector<std::string> kinds{"no-trading", "proportional-sell(0.2)", "periodic-buy(1,3)",
                                         "random-feasible(0.7)", "non-participation"};
    Stream gen(12);
    for (int i = 0; i < 2000; ++i) {
        BidderPolicy policy;
        policy.delta = 0.85 + 0.15 * gen.uniform();
        policy.terminal_time = 1 + static_cast<std::uint64_t>(gen.uniform() * 40);
        policy.strategy = StrategySpec::parse(kinds[i % kinds.size()]);
        policy.integer_trades = i % 3 == 0;
        if (i % 4 == 1) policy.stop = StopRule{StopRule::Kind::share_threshold, 0.35};
        if (i % 4 == 2) policy.stop = StopRule{StopRule::Kind::price_threshold, 1.1};
        TradingStreams streams{Stream(derive_seed(1, i, 0)), Stream(derive_seed(1, i, 1)),
                               Stream(derive_seed(1, i, 2))};
        const TradingRun run = simulate_trading(params, market, policy, i % 3, streams);
        const double rhs = run.outcome.pi_terminal + risk_free_term(run.ledger, policy.delta);
        CHECK(std::abs(run.outcome.utility - rhs) <= 1e-10);
        CHECK(run.outcome.exit_time <= policy.terminal_time);
        CHECK(run.outcome.final_volume >= params.initial_volume());
        for (const auto& r : run.ledger.records()) {
            CHECK(r.b >= 0.0);
            CHECK(r.pre_trade_stake + r.nu >= 0.0);
            CHECK(r.pre_trade_stake + r.nu <= r.volume * (1 + 1e-12));
        }
        const auto& last = run.ledger.records().back();
        CHECK(last.nu == 0.0);
        CHECK(last.b == 0.0);
        if (policy.strategy.kind == StrategyKind::no_trading && policy.stop.kind == StopRule::Kind::fixed_time) {
            CHECK(run.outcome.exit_time == policy.terminal_time);
            for (std::size_t j = 0; j + 1 < run.ledger.records().size(); ++j) {
                CHECK(run.ledger.records()[j].cash_flow == 0.0);
            }
        }
    }
}

TEST_CASE("trading needs a counterparty") {
    MarketParams market;
    BidderPolicy policy;
    TradingStreams streams{Stream(1), Stream(2), Stream(3)};
    CHECK_THROWS_AS(simulate_trading(ProtocolParams(1.0, {2.0}), market, policy, 0, streams), InvalidState);
}

TEST_CASE("ledger CSV export") {
    PortfolioLedger l(2.0, 1.0, 0.0);
    l.apply_trading_step(ctx(1, 2, 5, 1.5), {-1, 0});
    l.liquidate(ctx(2, 1, 6, 2.0, true));
    std::ostringstream os;
    write_ledger_csv(os, l);
    CHECK(os.str() == "t,nu,b,price,cash_flow,stakes,volume\n1,-1,0,1.5,1.5,2,5\n2,0,0,2,2,1,6\n");
}
