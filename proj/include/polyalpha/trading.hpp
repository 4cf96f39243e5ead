#pragma once

// Trading layer on top of the stake chain: a price process for one unit of
// stake, the budget / no-shorting / liquidation constraints, per-bidder
// portfolio accounting, the discounted value process Pi and the realized
// discounted utility, and a few built-in strategies.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "polyalpha/chain.hpp"
#include "polyalpha/rng.hpp"

namespace polyalpha {

enum class PriceModel {
    /// Drift conditioned on N_t so that E(N_{t+1} P_{t+1} | G_t) = (1 + r_cryp) N_t P_t exactly.
    calibrated,
    /// P_{t+1} = P_t (1 + r_price) xi, independent of the chain.
    independent_geometric,
};

/// Positive mean-one innovation xi.
struct NoiseSpec {
    enum class Kind { degenerate, lognormal };
    Kind kind = Kind::lognormal;
    double sigma = 0.1;

    double sample(Stream& rng) const;
};

struct MarketParams {
    double r_free = 0.0;
    double r_cryp = 0.0;
    /// Growth rate of the independent-geometric model. Unused by the calibrated model.
    double r_price = 0.0;
    double p0 = 1.0;
    PriceModel model = PriceModel::calibrated;
    NoiseSpec noise;

    void validate() const;
};

/// Price at t+1 given volume N_t and price P_t at t.
double price_step(const MarketParams& market, double alpha, double volume, double price,
                  Stream& rng);

struct Decision {
    double nu = 0.0;  ///< stakes bought (> 0) or sold (< 0) this round
    double b = 0.0;   ///< risk-free holding carried to the next round
};

/// What a bidder sees when deciding at round t (after the vote, before trading).
struct TradeContext {
    std::uint64_t t = 0;
    double pre_trade_stake = 0.0;  ///< n'_t
    double volume = 0.0;           ///< N_t
    double price = 0.0;            ///< P_t
    bool at_exit = false;
};

enum class ViolationKind { negative_risk_free, negative_holdings, exceeds_volume, trade_at_exit };

struct Violation {
    ViolationKind kind;
    std::string message;
};

/// Empty when the decision satisfies the no-shorting constraints:
/// b >= 0, 0 <= n' + nu <= N_t, and nu = b = 0 at exit.
std::optional<Violation> validate_decision(const TradeContext& ctx, const Decision& d);

struct LedgerRecord {
    std::uint64_t t = 0;
    double nu = 0.0;
    double b = 0.0;
    double price = 0.0;
    double cash_flow = 0.0;
    double pre_trade_stake = 0.0;
    double volume = 0.0;
};

/// Per-bidder trading history. records[i] holds round i + 1, except for a
/// bidder who exits at t = 0, whose single record is the t = 0 liquidation.
class PortfolioLedger {
public:
    PortfolioLedger(double initial_stake, double p0, double r_free);

    double initial_stake() const noexcept { return initial_stake_; }
    double p0() const noexcept { return p0_; }
    double r_free() const noexcept { return r_free_; }
    const std::vector<LedgerRecord>& records() const noexcept { return records_; }
    std::optional<std::uint64_t> exit_time() const noexcept { return exit_time_; }
    bool liquidated() const noexcept { return exit_time_.has_value(); }

    /// b_{t-1}; zero before the first round.
    double previous_b() const noexcept;
    /// Round of the next record to be appended.
    std::uint64_t next_t() const noexcept;

    /// Appends round ctx.t with c_t = (1 + r_free) b_{t-1} - b_t - nu_t P_t.
    /// Throws ContractError if the ledger is closed, rounds are skipped, or the decision is infeasible.
    void apply_trading_step(const TradeContext& ctx, const Decision& d);

    /// Closes the ledger at ctx.t: c = (1 + r_free) b_{t-1} + n'_t P_t, nu = b = 0.
    /// Returns the final cash flow. Throws ContractError on a second liquidation.
    double liquidate(const TradeContext& ctx);

private:
    double initial_stake_;
    double p0_;
    double r_free_;
    std::vector<LedgerRecord> records_;
    std::optional<std::uint64_t> exit_time_;
};

/// Pi_0 = n_0 P_0; Pi_t = delta^t n'_t P_t - sum_{j<t} delta^j nu_j P_j.
double pi_value(const PortfolioLedger& ledger, std::uint64_t t, double delta);

/// Realized discounted utility sum_t delta^t c_t over a closed ledger.
double utility(const PortfolioLedger& ledger, double delta);

/// sum_{t=1}^{tau-1} delta^t ((1 + r_free) delta - 1) b_t, the risk-free part of the utility.
double risk_free_term(const PortfolioLedger& ledger, double delta);

/// Ledger CSV with header t,nu,b,price,cash_flow,stakes,volume (stakes = pre-trade n'_t).
void write_ledger_csv(std::ostream& out, const PortfolioLedger& ledger);

enum class StrategyKind { non_participation, no_trading, proportional_sell, periodic_buy, random_feasible };

struct StrategySpec {
    StrategyKind kind = StrategyKind::no_trading;
    double parameter = 0.0;  ///< sell rate, buy amount, or intensity, depending on kind
    std::uint64_t period = 1;  ///< periodic_buy only

    std::string name() const;
    static StrategySpec parse(std::string_view text);
};

/// Built-in strategies. Returned decisions are always feasible: they are
/// clamped into the no-shorting box. random_feasible draws from `rng`.
Decision builtin_strategy(const StrategySpec& spec, const TradeContext& ctx, Stream& rng);

struct StopRule {
    enum class Kind { fixed_time, share_threshold, price_threshold };
    Kind kind = Kind::fixed_time;
    double level = 0.0;

    /// True when the rule asks to exit at this round (fixed_time never does; T_k handles it).
    bool triggered(const TradeContext& ctx) const;
};

struct BidderPolicy {
    double delta = 1.0;
    std::uint64_t terminal_time = 1;
    StrategySpec strategy;
    StopRule stop;
    bool integer_trades = false;

    void validate() const;
};

/// Round nu toward zero; the result stays inside the feasible box because the box contains 0.
Decision round_to_whole_stakes(const Decision& d);

struct StrategyOutcome {
    double utility = 0.0;
    double pi_terminal = 0.0;
    std::uint64_t exit_time = 0;
    double final_volume = 0.0;
};

struct TradingRun {
    PortfolioLedger ledger;
    StrategyOutcome outcome;
};

struct TradingStreams {
    Stream chain;
    Stream price;
    Stream strategy;
};

/// Runs the chain, the price process and bidder `focal`'s policy until exit.
/// The focal bidder trades with the rest of the system: other bidders' stakes
/// are rescaled proportionally so the volume is unchanged. Requires K >= 2.
TradingRun simulate_trading(const ProtocolParams& params, const MarketParams& market,
                            const BidderPolicy& policy, std::size_t focal,
                            TradingStreams& streams);

}  // namespace polyalpha
