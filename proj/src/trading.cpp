#include "polyalpha/trading.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "polyalpha/errors.hpp"

namespace polyalpha {

namespace {

// Slack for the volume cap; trades are real-valued and built from products.
constexpr double kFeasibilitySlack = 1e-12;

const LedgerRecord& record_at(const PortfolioLedger& ledger, std::uint64_t t) {
    const auto& recs = ledger.records();
    for (const auto& r : recs) {
        if (r.t == t) return r;
    }
    throw ContractError("ledger has no record for round " + std::to_string(t));
}

}  // namespace

double NoiseSpec::sample(Stream& rng) const {
    switch (kind) {
        case Kind::degenerate:
            return 1.0;
        case Kind::lognormal:
            // location -sigma^2/2 makes the mean exactly one
            return std::exp(sigma * rng.normal() - 0.5 * sigma * sigma);
    }
    return 1.0;
}

void MarketParams::validate() const {
    if (!(r_free >= 0.0)) throw InvalidState("r_free must be >= 0");
    if (!(r_cryp >= 0.0)) throw InvalidState("r_cryp must be >= 0");
    if (!(r_price > -1.0)) throw InvalidState("r_price must be > -1");
    if (!(p0 > 0.0)) throw InvalidState("initial price must be > 0");
    if (noise.kind == NoiseSpec::Kind::lognormal && !(noise.sigma >= 0.0)) {
        throw InvalidState("noise sigma must be >= 0");
    }
}

double price_step(const MarketParams& market, double alpha, double volume, double price,
                  Stream& rng) {
    if (!(price > 0.0)) throw InvalidState("price must be positive");
    if (!(volume >= 1.0)) throw InvalidState("volume must be >= 1");
    const double xi = market.noise.sample(rng);
    double next = 0.0;
    switch (market.model) {
        case PriceModel::calibrated: {
            const double expected_volume = volume + increment_probability(volume, alpha);
            next = (1.0 + market.r_cryp) * volume * price / expected_volume * xi;
            break;
        }
        case PriceModel::independent_geometric:
            next = price * (1.0 + market.r_price) * xi;
            break;
    }
    if (!(next > 0.0) || !std::isfinite(next)) {
        std::ostringstream os;
        os << "price model produced a non-positive price " << next;
        throw NumericalError(os.str());
    }
    return next;
}

std::optional<Violation> validate_decision(const TradeContext& ctx, const Decision& d) {
    std::ostringstream os;
    if (ctx.at_exit && (d.nu != 0.0 || d.b != 0.0)) {
        os << "at exit nu and b must be 0, got nu=" << d.nu << " b=" << d.b;
        return Violation{ViolationKind::trade_at_exit, os.str()};
    }
    if (!(d.b >= 0.0)) {
        os << "risk-free holding must be >= 0, got " << d.b;
        return Violation{ViolationKind::negative_risk_free, os.str()};
    }
    const double held = ctx.pre_trade_stake + d.nu;
    if (!(held >= 0.0)) {
        os << "negative holdings: n'=" << ctx.pre_trade_stake << " nu=" << d.nu;
        return Violation{ViolationKind::negative_holdings, os.str()};
    }
    if (held > ctx.volume * (1.0 + kFeasibilitySlack)) {
        os << "holdings " << held << " exceed total volume " << ctx.volume;
        return Violation{ViolationKind::exceeds_volume, os.str()};
    }
    return std::nullopt;
}

PortfolioLedger::PortfolioLedger(double initial_stake, double p0, double r_free)
    : initial_stake_(initial_stake), p0_(p0), r_free_(r_free) {
    if (!(initial_stake >= 0.0)) throw InvalidState("initial stake must be >= 0");
    if (!(p0 > 0.0)) throw InvalidState("initial price must be > 0");
}

double PortfolioLedger::previous_b() const noexcept {
    return records_.empty() ? 0.0 : records_.back().b;
}

std::uint64_t PortfolioLedger::next_t() const noexcept {
    return records_.empty() ? 1 : records_.back().t + 1;
}

void PortfolioLedger::apply_trading_step(const TradeContext& ctx, const Decision& d) {
    if (liquidated()) throw ContractError("ledger is already liquidated");
    if (ctx.t != next_t()) {
        throw ContractError("expected round " + std::to_string(next_t()) + ", got " +
                            std::to_string(ctx.t));
    }
    if (ctx.at_exit) throw ContractError("use liquidate() at the exit round");
    if (auto v = validate_decision(ctx, d)) throw ContractError("infeasible decision: " + v->message);
    LedgerRecord r;
    r.t = ctx.t;
    r.nu = d.nu;
    r.b = d.b;
    r.price = ctx.price;
    r.pre_trade_stake = ctx.pre_trade_stake;
    r.volume = ctx.volume;
    r.cash_flow = (1.0 + r_free_) * previous_b() - d.b - d.nu * ctx.price;
    records_.push_back(r);
}

double PortfolioLedger::liquidate(const TradeContext& ctx) {
    if (liquidated()) throw ContractError("double liquidation");
    const std::uint64_t expected = records_.empty() && ctx.t == 0 ? 0 : next_t();
    if (ctx.t != expected) {
        throw ContractError("liquidation at round " + std::to_string(ctx.t) + ", expected " +
                            std::to_string(expected));
    }
    LedgerRecord r;
    r.t = ctx.t;
    r.price = ctx.price;
    r.pre_trade_stake = ctx.pre_trade_stake;
    r.volume = ctx.volume;
    r.cash_flow = (1.0 + r_free_) * previous_b() + ctx.pre_trade_stake * ctx.price;
    records_.push_back(r);
    exit_time_ = ctx.t;
    return r.cash_flow;
}

double pi_value(const PortfolioLedger& ledger, std::uint64_t t, double delta) {
    if (t == 0) return ledger.initial_stake() * ledger.p0();
    if (ledger.exit_time() && t > *ledger.exit_time()) {
        throw ContractError("pi_value requested past the exit time");
    }
    const LedgerRecord& now = record_at(ledger, t);
    double value = std::pow(delta, static_cast<double>(t)) * now.pre_trade_stake * now.price;
    for (const auto& r : ledger.records()) {
        if (r.t >= 1 && r.t < t) value -= std::pow(delta, static_cast<double>(r.t)) * r.nu * r.price;
    }
    return value;
}

double utility(const PortfolioLedger& ledger, double delta) {
    if (!ledger.liquidated()) throw ContractError("utility needs a liquidated ledger");
    double u = 0.0;
    for (const auto& r : ledger.records()) u += std::pow(delta, static_cast<double>(r.t)) * r.cash_flow;
    return u;
}

double risk_free_term(const PortfolioLedger& ledger, double delta) {
    const double coefficient = (1.0 + ledger.r_free()) * delta - 1.0;
    double s = 0.0;
    for (const auto& r : ledger.records()) {
        if (ledger.exit_time() && r.t >= *ledger.exit_time()) continue;
        s += std::pow(delta, static_cast<double>(r.t)) * coefficient * r.b;
    }
    return s;
}

void write_ledger_csv(std::ostream& out, const PortfolioLedger& ledger) {
    out << "t,nu,b,price,cash_flow,stakes,volume\n";
    const auto old = out.precision(17);
    for (const auto& r : ledger.records()) {
        out << r.t << ',' << r.nu << ',' << r.b << ',' << r.price << ',' << r.cash_flow << ','
            << r.pre_trade_stake << ',' << r.volume << '\n';
    }
    out.precision(old);
}

std::string StrategySpec::name() const {
    std::ostringstream os;
    switch (kind) {
        case StrategyKind::non_participation: return "non-participation";
        case StrategyKind::no_trading: return "no-trading";
        case StrategyKind::proportional_sell: os << "proportional-sell(" << parameter << ")"; break;
        case StrategyKind::periodic_buy:
            os << "periodic-buy(" << parameter;
            if (period != 1) os << "," << period;
            os << ")";
            break;
        case StrategyKind::random_feasible: os << "random-feasible(" << parameter << ")"; break;
    }
    return os.str();
}

StrategySpec StrategySpec::parse(std::string_view text) {
    const auto open = text.find('(');
    const std::string head(text.substr(0, open));
    std::vector<double> args;
    if (open != std::string_view::npos) {
        const auto close = text.find(')', open);
        if (close == std::string_view::npos || close + 1 != text.size()) {
            throw ConfigError("malformed strategy '" + std::string(text) + "'");
        }
        std::stringstream ss{std::string(text.substr(open + 1, close - open - 1))};
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                std::size_t used = 0;
                args.push_back(std::stod(item, &used));
                if (used != item.size()) throw std::invalid_argument(item);
            } catch (const std::exception&) {
                throw ConfigError("bad strategy argument '" + item + "' in '" + std::string(text) + "'");
            }
        }
    }
    const auto arg = [&](std::size_t i, double fallback) { return i < args.size() ? args[i] : fallback; };
    StrategySpec s;
    if (head == "non-participation") {
        s.kind = StrategyKind::non_participation;
    } else if (head == "no-trading") {
        s.kind = StrategyKind::no_trading;
    } else if (head == "proportional-sell") {
        s.kind = StrategyKind::proportional_sell;
        s.parameter = arg(0, 0.5);
        if (!(s.parameter >= 0.0 && s.parameter <= 1.0)) throw ConfigError("sell rate must lie in [0, 1]");
    } else if (head == "periodic-buy") {
        s.kind = StrategyKind::periodic_buy;
        s.parameter = arg(0, 1.0);
        const double period = arg(1, 1.0);
        if (!(s.parameter >= 0.0)) throw ConfigError("buy amount must be >= 0");
        if (!(period >= 1.0) || period != std::floor(period)) throw ConfigError("buy period must be a positive integer");
        s.period = static_cast<std::uint64_t>(period);
    } else if (head == "random-feasible") {
        s.kind = StrategyKind::random_feasible;
        s.parameter = arg(0, 0.5);
        if (!(s.parameter >= 0.0 && s.parameter <= 1.0)) throw ConfigError("intensity must lie in [0, 1]");
    } else {
        throw ConfigError("unknown strategy '" + std::string(text) + "'");
    }
    return s;
}

Decision builtin_strategy(const StrategySpec& spec, const TradeContext& ctx, Stream& rng) {
    if (ctx.at_exit) return {};
    const double max_buy = std::max(0.0, ctx.volume - ctx.pre_trade_stake);
    switch (spec.kind) {
        case StrategyKind::non_participation:
        case StrategyKind::no_trading:
            return {};
        case StrategyKind::proportional_sell:
            return {-std::clamp(spec.parameter, 0.0, 1.0) * ctx.pre_trade_stake, 0.0};
        case StrategyKind::periodic_buy:
            if (ctx.t % spec.period != 0) return {};
            return {std::min(spec.parameter, max_buy), 0.0};
        case StrategyKind::random_feasible: {
            const double intensity = std::clamp(spec.parameter, 0.0, 1.0);
            // the box [-n', N - n'] contains 0, so shrinking toward 0 keeps feasibility
            const double nu = intensity * (-ctx.pre_trade_stake + rng.uniform() * ctx.volume);
            const double b = intensity * rng.uniform() * ctx.pre_trade_stake * ctx.price;
            return {std::clamp(nu, -ctx.pre_trade_stake, max_buy), b};
        }
    }
    return {};
}

bool StopRule::triggered(const TradeContext& ctx) const {
    switch (kind) {
        case Kind::fixed_time: return false;
        case Kind::share_threshold: return ctx.pre_trade_stake / ctx.volume >= level;
        case Kind::price_threshold: return ctx.price >= level;
    }
    return false;
}

void BidderPolicy::validate() const {
    if (!(delta > 0.0 && delta <= 1.0)) throw InvalidState("discount factor must lie in (0, 1]");
    if (terminal_time < 1) throw InvalidState("terminal time must be >= 1");
}

Decision round_to_whole_stakes(const Decision& d) { return {std::trunc(d.nu), d.b}; }

TradingRun simulate_trading(const ProtocolParams& params, const MarketParams& market,
                            const BidderPolicy& policy, std::size_t focal,
                            TradingStreams& streams) {
    params.validate();
    market.validate();
    policy.validate();
    if (params.num_bidders() < 2) throw InvalidState("trading needs at least two bidders");
    if (focal >= params.num_bidders()) throw InvalidState("focal bidder out of range");

    SystemState state = SystemState::initial(params);
    double price = market.p0;
    TradingRun run{PortfolioLedger(state.stakes[focal], market.p0, market.r_free), {}};

    if (policy.strategy.kind == StrategyKind::non_participation) {
        run.ledger.liquidate({0, state.stakes[focal], state.volume, price, true});
    } else {
        for (std::uint64_t t = 1; t <= policy.terminal_time; ++t) {
            price = price_step(market, params.alpha, state.volume, price, streams.price);
            step(state, params, streams.chain);
            TradeContext ctx{t, state.stakes[focal], state.volume, price, false};
            if (t == policy.terminal_time || policy.stop.triggered(ctx)) {
                ctx.at_exit = true;
                run.ledger.liquidate(ctx);
                break;
            }
            Decision d = builtin_strategy(policy.strategy, ctx, streams.strategy);
            if (policy.integer_trades) d = round_to_whole_stakes(d);
            run.ledger.apply_trading_step(ctx, d);
            if (d.nu != 0.0) {
                // counterparty side: the others absorb -nu in proportion to their stakes
                const double others = state.volume - ctx.pre_trade_stake;
                const double others_after = others - d.nu;
                state.stakes[focal] = ctx.pre_trade_stake + d.nu;
                if (others > 0.0) {
                    const double scale = std::max(0.0, others_after) / others;
                    for (std::size_t k = 0; k < state.stakes.size(); ++k) {
                        if (k != focal) state.stakes[k] *= scale;
                    }
                } else {
                    state.stakes[focal == 0 ? 1 : 0] += std::max(0.0, others_after);
                }
            }
        }
    }
    const std::uint64_t exit = *run.ledger.exit_time();
    run.outcome.exit_time = exit;
    run.outcome.utility = utility(run.ledger, policy.delta);
    run.outcome.pi_terminal = pi_value(run.ledger, exit, policy.delta);
    run.outcome.final_volume = state.volume;
    return run;
}

}  // namespace polyalpha
