#include "polyalpha/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "polyalpha/errors.hpp"

namespace polyalpha {

namespace {

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss{std::string(text)};
    while (std::getline(ss, item, sep)) out.push_back(item);
    if (!text.empty() && text.back() == sep) out.emplace_back();
    return out;
}

double parse_double(std::string_view text, std::string_view where) {
    try {
        std::size_t used = 0;
        const std::string s(text);
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("expected a number for " + std::string(where) + ", got '" + std::string(text) + "'");
    }
}

std::uint64_t parse_unsigned(std::string_view text, std::string_view where) {
    const std::string s(text);
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
        throw ConfigError("expected a nonnegative integer for " + std::string(where) + ", got '" + s + "'");
    }
    try {
        return std::stoull(s);
    } catch (const std::exception&) {
        throw ConfigError("integer out of range for " + std::string(where) + ": '" + s + "'");
    }
}

Json parse_scalar_like(const Json& like, std::string_view text, std::string_view where) {
    if (like.is_boolean()) {
        if (text == "true" || text == "1") return true;
        if (text == "false" || text == "0") return false;
        throw ConfigError("expected true/false for " + std::string(where));
    }
    if (like.is_number_unsigned() || like.is_number_integer()) return parse_unsigned(text, where);
    if (like.is_number()) return parse_double(text, where);
    if (like.is_string()) return std::string(text);
    if (like.is_null()) {
        if (text == "null") return nullptr;
        return parse_double(text, where);
    }
    throw ConfigError("cannot override " + std::string(where) + " from the command line");
}

Json policy_json(const std::string& strategy) {
    Json p = default_policy();
    p["strategy"] = strategy;
    return p;
}

template <class T>
T get(const Json& node, const char* key, const std::string& where) {
    try {
        return node.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError("invalid value for " + where + "." + key + ": " + e.what());
    }
}

StopRule parse_stop(const std::string& name, double level) {
    StopRule s;
    s.level = level;
    if (name == "fixed-time") {
        s.kind = StopRule::Kind::fixed_time;
    } else if (name == "share-threshold") {
        s.kind = StopRule::Kind::share_threshold;
    } else if (name == "price-threshold") {
        s.kind = StopRule::Kind::price_threshold;
    } else {
        throw ConfigError("unknown stop rule '" + name + "'");
    }
    return s;
}

}  // namespace

Json default_policy() {
    return Json{{"strategy", "no-trading"}, {"delta", nullptr},    {"terminal_time", 50},
                {"stop", "fixed-time"},     {"stop_level", 0.0},   {"integer_trades", false}};
}

Json default_config() {
    Json c;
    c["experiment"] = Json{
        {"kind", "simulate"},
        {"horizon", 8000},
        {"stride", 0},
        {"engine", "step"},
        {"times", Json::array({1000, 1500, 2000, 2500, 3000, 3500, 4000, 4500, 5000, 5500, 6000, 6500,
                               7000, 7500, 8000})},
        {"lambdas", Json::array({std::sqrt(2.2), std::sqrt(1.8)})},
        {"ladder", Json::array({200, 800, 3200})},
        {"classes", Json::array({"large", "medium", "small"})},
        {"horizon_factor", 50.0},
        {"epsilon", 0.1},
        {"scales", Json::array({100, 1000, 10000})},
        {"alphas", Json::array()},
        {"bidder", 0},
        {"delta_factor", 1.0},
    };
    c["protocol"] = Json{{"alpha", 1.0}, {"n0", 5.0}, {"bidders", 1}, {"stakes", Json::array()}};
    c["market"] = Json{{"r_free", 0.01}, {"r_cryp", 0.05},       {"r_price", 0.05}, {"p0", 1.0},
                       {"model", "calibrated"}, {"noise", "lognormal"}, {"sigma", 0.1}};
    c["policies"] = Json::array({policy_json("non-participation"), policy_json("no-trading"),
                                 policy_json("proportional-sell(0.1)"), policy_json("periodic-buy(1)"),
                                 policy_json("random-feasible(0.5)")});
    c["mc"] = Json{{"reps", 1000}, {"seed", 20240601}, {"threads", 0}};
    c["output"] = Json{{"csv", ""}, {"json", ""}, {"histogram", ""}, {"distribution", ""}, {"ledger", ""}};
    return c;
}

Json load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw ConfigError("malformed config file " + path.string() + ": " + e.what());
    }
}

void merge_config(Json& base, const Json& patch, const std::string& where) {
    if (where == "experiment" && patch.is_string()) {
        base["kind"] = patch;
        return;
    }
    if (where == "policies") {
        if (!patch.is_array()) throw ConfigError("policies must be an array");
        Json out = Json::array();
        for (std::size_t i = 0; i < patch.size(); ++i) {
            Json p = default_policy();
            merge_config(p, patch[i], "policies." + std::to_string(i));
            out.push_back(std::move(p));
        }
        base = std::move(out);
        return;
    }
    if (!patch.is_object()) {
        base = patch;
        return;
    }
    if (!base.is_object()) throw ConfigError("config key " + where + " is not an object");
    for (const auto& [key, value] : patch.items()) {
        const std::string path = where.empty() ? key : where + "." + key;
        if (!base.contains(key)) throw ConfigError("unknown config key " + path);
        merge_config(base[key], value, path);
    }
}

void apply_override(Json& config, std::string_view dotted_path, std::string_view text) {
    const std::vector<std::string> parts = split(dotted_path, '.');
    Json* node = &config;
    std::string where;
    for (const std::string& part : parts) {
        where += where.empty() ? part : "." + part;
        if (node->is_array()) {
            const std::uint64_t index = parse_unsigned(part, where);
            if (index > node->size()) throw ConfigError("index out of range in " + where);
            if (index == node->size()) node->push_back(default_policy());
            node = &(*node)[index];
        } else if (node->is_object() && node->contains(part)) {
            node = &(*node)[part];
        } else {
            throw ConfigError("unknown config key " + where);
        }
    }
    if (node->is_object()) throw ConfigError(where + " is a section, not a value");
    if (node->is_array()) {
        Json like = node->empty() ? Json(0.0) : (*node)[0];
        if (like.is_object()) throw ConfigError("cannot override " + where + " as a list");
        Json out = Json::array();
        if (!text.empty()) {
            for (const std::string& item : split(text, ',')) out.push_back(parse_scalar_like(like, item, where));
        }
        *node = std::move(out);
        return;
    }
    *node = parse_scalar_like(*node, text, where);
}

BidderPolicy PolicyConfig::resolve(double default_delta) const {
    BidderPolicy p;
    p.delta = delta.value_or(default_delta);
    p.terminal_time = terminal_time;
    p.strategy = strategy;
    p.stop = stop;
    p.integer_trades = integer_trades;
    try {
        p.validate();
    } catch (const InvalidState& e) {
        throw ConfigError(std::string("policy ") + strategy.name() + ": " + e.what());
    }
    return p;
}

ExperimentConfig ExperimentConfig::from_json(const Json& merged) {
    ExperimentConfig c;
    c.raw = merged;
    const Json& e = merged.at("experiment");
    c.kind = get<std::string>(e, "kind", "experiment");
    c.horizon = get<std::uint64_t>(e, "horizon", "experiment");
    c.stride = get<std::uint64_t>(e, "stride", "experiment");
    const auto engine = get<std::string>(e, "engine", "experiment");
    if (engine == "step") {
        c.engine = Engine::step;
    } else if (engine == "jump") {
        c.engine = Engine::jump;
    } else {
        throw ConfigError("experiment.engine must be 'step' or 'jump'");
    }
    c.times = get<std::vector<std::uint64_t>>(e, "times", "experiment");
    c.lambdas = get<std::vector<double>>(e, "lambdas", "experiment");
    c.ladder = get<std::vector<std::uint64_t>>(e, "ladder", "experiment");
    c.classes = get<std::vector<std::string>>(e, "classes", "experiment");
    c.horizon_factor = get<double>(e, "horizon_factor", "experiment");
    c.epsilon = get<double>(e, "epsilon", "experiment");
    c.scales = get<std::vector<std::uint64_t>>(e, "scales", "experiment");
    c.alphas = get<std::vector<double>>(e, "alphas", "experiment");
    c.bidder = get<std::size_t>(e, "bidder", "experiment");
    c.delta_factor = get<double>(e, "delta_factor", "experiment");
    for (const auto& cls : c.classes) {
        if (cls != "large" && cls != "medium" && cls != "small") {
            throw ConfigError("unknown bidder class '" + cls + "' (expected large, medium, small)");
        }
    }
    if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) throw ConfigError("experiment.epsilon must lie in (0, 1)");
    if (!(c.horizon_factor > 0.0)) throw ConfigError("experiment.horizon_factor must be > 0");
    if (!(c.delta_factor > 0.0)) throw ConfigError("experiment.delta_factor must be > 0");

    const Json& p = merged.at("protocol");
    c.protocol.alpha = get<double>(p, "alpha", "protocol");
    c.protocol.stakes = get<std::vector<double>>(p, "stakes", "protocol");
    if (c.protocol.stakes.empty()) {
        const double n0 = get<double>(p, "n0", "protocol");
        const auto bidders = get<std::uint64_t>(p, "bidders", "protocol");
        if (bidders == 0) throw ConfigError("protocol.bidders must be >= 1");
        c.protocol.stakes.assign(bidders, n0 / static_cast<double>(bidders));
    }
    try {
        c.protocol.params();
    } catch (const InvalidState& err) {
        throw ConfigError(std::string("protocol: ") + err.what());
    }
    if (c.bidder >= c.protocol.stakes.size()) throw ConfigError("experiment.bidder out of range");

    const Json& m = merged.at("market");
    c.market.r_free = get<double>(m, "r_free", "market");
    c.market.r_cryp = get<double>(m, "r_cryp", "market");
    c.market.r_price = get<double>(m, "r_price", "market");
    c.market.p0 = get<double>(m, "p0", "market");
    const auto model = get<std::string>(m, "model", "market");
    if (model == "calibrated") {
        c.market.model = PriceModel::calibrated;
    } else if (model == "independent-geometric") {
        c.market.model = PriceModel::independent_geometric;
    } else {
        throw ConfigError("market.model must be 'calibrated' or 'independent-geometric'");
    }
    const auto noise = get<std::string>(m, "noise", "market");
    if (noise == "lognormal") {
        c.market.noise.kind = NoiseSpec::Kind::lognormal;
    } else if (noise == "degenerate") {
        c.market.noise.kind = NoiseSpec::Kind::degenerate;
    } else {
        throw ConfigError("market.noise must be 'lognormal' or 'degenerate'");
    }
    c.market.noise.sigma = get<double>(m, "sigma", "market");
    try {
        c.market.validate();
    } catch (const InvalidState& err) {
        throw ConfigError(std::string("market: ") + err.what());
    }

    const Json& policies = merged.at("policies");
    for (std::size_t i = 0; i < policies.size(); ++i) {
        const Json& pj = policies[i];
        const std::string where = "policies." + std::to_string(i);
        PolicyConfig pc;
        pc.strategy = StrategySpec::parse(get<std::string>(pj, "strategy", where));
        if (!pj.at("delta").is_null()) pc.delta = get<double>(pj, "delta", where);
        pc.terminal_time = get<std::uint64_t>(pj, "terminal_time", where);
        pc.stop = parse_stop(get<std::string>(pj, "stop", where), get<double>(pj, "stop_level", where));
        pc.integer_trades = get<bool>(pj, "integer_trades", where);
        c.policies.push_back(pc);
    }

    const Json& mc = merged.at("mc");
    c.reps = get<std::uint64_t>(mc, "reps", "mc");
    c.seed = get<std::uint64_t>(mc, "seed", "mc");
    c.threads = get<unsigned>(mc, "threads", "mc");
    if (c.reps < 1) throw ConfigError("mc.reps must be >= 1");

    const Json& out = merged.at("output");
    c.csv_path = get<std::string>(out, "csv", "output");
    c.json_path = get<std::string>(out, "json", "output");
    c.histogram_path = get<std::string>(out, "histogram", "output");
    c.distribution_path = get<std::string>(out, "distribution", "output");
    c.ledger_path = get<std::string>(out, "ledger", "output");
    return c;
}

std::vector<double> ExperimentConfig::alpha_list() const {
    return alphas.empty() ? std::vector<double>{protocol.alpha} : alphas;
}

ExperimentConfig build_config(const std::string& kind, const std::optional<std::filesystem::path>& file,
                              const std::vector<std::pair<std::string, std::string>>& overrides) {
    Json cfg = default_config();
    if (file) merge_config(cfg, load_config_file(*file));
    cfg["experiment"]["kind"] = kind;
    if (const char* env = std::getenv(kSeedEnvVar); env && *env) {
        cfg["mc"]["seed"] = parse_unsigned(env, kSeedEnvVar);
    }
    for (const auto& [path, value] : overrides) apply_override(cfg, path, value);
    return ExperimentConfig::from_json(cfg);
}

}  // namespace polyalpha
