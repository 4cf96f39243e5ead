#pragma once

// Experiment configuration: a JSON document with top-level keys
// {experiment, protocol, market, policies, mc, output}. Every field has a
// default (see default_config()); a config file and then dotted-path flags
// such as --protocol.alpha 1.0 are layered on top.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "polyalpha/chain.hpp"
#include "polyalpha/trading.hpp"

namespace polyalpha {

using Json = nlohmann::ordered_json;

/// Environment variable that overrides mc.seed.
inline constexpr const char* kSeedEnvVar = "POLYALPHA_SEED";

Json default_config();
Json default_policy();

/// Parses a JSON file. Throws ConfigError naming the path if it is missing or malformed.
Json load_config_file(const std::filesystem::path& path);

/// Overlays `patch` onto `base`. Keys absent from `base` are rejected, except
/// inside "policies", whose elements are completed from default_policy().
void merge_config(Json& base, const Json& patch, const std::string& where = "");

/// Sets the value at a dotted path ("protocol.alpha", "policies.0.delta").
/// The text is parsed according to the type of the existing value; arrays
/// take comma-separated lists. Throws ConfigError on unknown paths.
void apply_override(Json& config, std::string_view dotted_path, std::string_view text);

enum class Engine { step, jump };

struct ProtocolConfig {
    double alpha = 1.0;
    std::vector<double> stakes;

    ProtocolParams params() const { return ProtocolParams(alpha, stakes); }
};

struct PolicyConfig {
    StrategySpec strategy;
    std::optional<double> delta;  ///< empty: derived from experiment.delta_factor
    std::uint64_t terminal_time = 50;
    StopRule stop;
    bool integer_trades = false;

    BidderPolicy resolve(double default_delta) const;
};

struct ExperimentConfig {
    std::string kind = "simulate";

    // experiment.*
    std::uint64_t horizon = 8000;
    std::uint64_t stride = 0;  ///< 0 records only the initial and final states
    Engine engine = Engine::step;
    std::vector<std::uint64_t> times;
    std::vector<double> lambdas;
    std::vector<std::uint64_t> ladder;  ///< phase: initial volumes N
    std::vector<std::string> classes;
    double horizon_factor = 50.0;
    double epsilon = 0.1;
    std::vector<std::uint64_t> scales;  ///< fluid: n
    std::vector<double> alphas;         ///< phase / fluid; empty = protocol.alpha
    std::size_t bidder = 0;
    double delta_factor = 1.0;  ///< delta (1 + r_cryp) for policies without an explicit delta

    ProtocolConfig protocol;
    MarketParams market;
    std::vector<PolicyConfig> policies;

    std::uint64_t reps = 1000;
    std::uint64_t seed = 0;
    unsigned threads = 0;

    std::string csv_path;
    std::string json_path;
    std::string histogram_path;
    std::string distribution_path;
    std::string ledger_path;

    Json raw;  ///< the fully merged document, echoed into reports

    /// Builds typed settings from a merged document. Throws ConfigError on invalid values.
    static ExperimentConfig from_json(const Json& merged);

    std::vector<double> alpha_list() const;
};

/// default_config() <- file (if any) <- env seed <- overrides, then from_json.
ExperimentConfig build_config(const std::string& kind, const std::optional<std::filesystem::path>& file,
                              const std::vector<std::pair<std::string, std::string>>& overrides);

}  // namespace polyalpha
