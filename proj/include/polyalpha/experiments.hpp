#pragma once

// Monte Carlo experiments over the stake chain and the trading layer, and
// the command-line front end that runs them from a configuration.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polyalpha/chain.hpp"
#include "polyalpha/config.hpp"
#include "polyalpha/stats.hpp"
#include "polyalpha/trading.hpp"

namespace polyalpha {

struct Estimate {
    std::string name;
    double value = 0.0;
    double se = 0.0;
    std::uint64_t replications = 0;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void write(std::ostream& out) const;
};

/// Shortest text that round-trips the double.
std::string format_number(double x);

struct ExperimentReport {
    std::string experiment;
    std::uint64_t seed = 0;
    std::uint64_t replications = 0;
    double wall_clock_seconds = 0.0;
    std::vector<Estimate> estimates;
    CsvTable table;
    Json details = Json::object();
    Json config = Json::object();
    std::vector<std::string> failures;  ///< failed self-checks; non-empty means exit status 2
    /// Side tables written to output.<key> when that path is configured
    /// ("histogram", "distribution", "ledger_<j>" for output.ledger with a policy suffix).
    std::map<std::string, CsvTable> extra_tables;

    const Estimate* find(const std::string& name) const;
    /// Everything except wall-clock time is a deterministic function of the config.
    Json to_json(bool include_timing = true) const;
};

// ---------------------------------------------------------------------------
// Replicated simulation of the chain

/// Final (or checkpoint) states of `reps` independent chains. Replication i
/// uses the stream derived from (seed, i), so results do not depend on the
/// thread count.
std::vector<Trajectory> simulate_replications(const ProtocolParams& params, std::uint64_t horizon,
                                              std::uint64_t stride, std::uint64_t reps,
                                              std::uint64_t seed, unsigned threads,
                                              Engine engine = Engine::step);

/// States of each replication at every checkpoint in `times` (sorted ascending).
/// result[i][j] is replication i at times[j].
std::vector<std::vector<SystemState>> checkpoint_states(const ProtocolParams& params,
                                                        const std::vector<std::uint64_t>& times,
                                                        std::uint64_t reps, std::uint64_t seed,
                                                        unsigned threads, Engine engine);

/// Total-variation distance between an exact volume law and samples.
double total_variation(const std::vector<double>& support, const std::vector<double>& probabilities,
                       const std::vector<double>& samples);

// ---------------------------------------------------------------------------
// Tail probabilities

struct TailRow {
    std::uint64_t t = 0;
    double lambda = 0.0;
    bool upper = true;  ///< P(N_t > lambda t^(1/(1+a))) if true, else P(N_t < ...)
    std::uint64_t events = 0;
    std::uint64_t replications = 0;
    double p_hat = 0.0;
    Interval wilson;
    double normalized_rate = 0.0;  ///< -ln p_hat / t^(1/(1+a)); with censoring, the rate at p = 1/R
    bool censored = false;
    double rate_function = 0.0;
    std::optional<double> bound;  ///< tail_bound at epsilon, when lambda is outside the gap
};

std::vector<TailRow> tail_table(double alpha, double n0, const std::vector<std::uint64_t>& times,
                                const std::vector<double>& lambdas, std::uint64_t reps,
                                std::uint64_t seed, unsigned threads, Engine engine, double epsilon);

// ---------------------------------------------------------------------------
// Share stability by bidder class

enum class BidderClass { large, medium, small };
BidderClass parse_bidder_class(const std::string& name);
std::string to_string(BidderClass c);
/// n0 = N/10 (large), 2 (medium), N^-1/2 (small).
double class_initial_stake(BidderClass c, double volume);

struct PhaseCell {
    double alpha = 0.0;
    std::uint64_t volume = 0;
    BidderClass bidder_class = BidderClass::medium;
    double n0 = 0.0;
    std::uint64_t horizon = 0;
    std::uint64_t replications = 0;
    MeanEstimate ratio_mean;     ///< pi_T / pi_0
    VarianceEstimate ratio_var;  ///< Var(pi_T / pi_0)
    double deviation_prob = 0.0; ///< P(|pi_T / pi_0 - 1| > epsilon)
    double deviation_se = 0.0;
};

/// Two-bidder system (focal stake n0, the rest N - n0) run to T = factor * N^(1+alpha).
PhaseCell phase_cell(double alpha, std::uint64_t volume, BidderClass c, double horizon_factor,
                     double epsilon, std::uint64_t reps, std::uint64_t seed, unsigned threads,
                     Engine engine);

// ---------------------------------------------------------------------------
// Strategy comparison

struct TradeRow {
    std::string strategy;
    double delta = 1.0;
    MeanEstimate utility;
    MeanEstimate pi_terminal;
    MeanEstimate excess_over_benchmark;  ///< utility - n0 P0
    MeanEstimate difference_vs_first;    ///< paired with the first policy (common random numbers)
    double max_ledger_identity_error = 0.0;
};

struct TradeComparison {
    double benchmark = 0.0;  ///< n_{k,0} P_0
    std::vector<TradeRow> rows;
};

/// Replication i of every policy uses the same chain and price streams.
TradeComparison trade_table(const ProtocolParams& params, const MarketParams& market,
                            const std::vector<BidderPolicy>& policies, std::size_t focal,
                            std::uint64_t reps, std::uint64_t seed, unsigned threads);

// ---------------------------------------------------------------------------
// Fluid limit

/// sup over u in [0, 1] of |N_{floor(nu)} / n^(1/(1+a)) - X_u|, with the
/// scaled path interpolated linearly between rounds (checked at rounds and midpoints).
double fluid_sup_distance(const std::vector<double>& volumes, double alpha);

struct FluidRow {
    double alpha = 0.0;
    std::uint64_t scale = 0;
    MeanEstimate sup_distance;
    MeanEstimate scaled_terminal;  ///< N_n / n^(1/(1+a)), near growth_constant(alpha)
};

FluidRow fluid_row(double alpha, double n0, std::uint64_t scale, std::uint64_t reps,
                   std::uint64_t seed, unsigned threads);

// ---------------------------------------------------------------------------
// Config-driven experiments

ExperimentReport run_monte_carlo(const ExperimentConfig& config);
ExperimentReport estimate_tails(const ExperimentConfig& config);
ExperimentReport phase_sweep(const ExperimentConfig& config);
ExperimentReport trade_compare(const ExperimentConfig& config);
ExperimentReport fluid_check(const ExperimentConfig& config);
ExperimentReport roots_report(const ExperimentConfig& config);
ExperimentReport oracle_check(const ExperimentConfig& config);

/// Dispatches on config.kind.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Writes output.csv / output.json (and kind-specific extra files) when configured.
void write_outputs(const ExperimentConfig& config, const ExperimentReport& report);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumerical = 2;

/// `polyalpha <subcommand> [--config FILE] [--section.key VALUE ...]`.
/// Prints the JSON report on `out`; returns 0, 1 (configuration) or 2 (numerical failure).
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace polyalpha
