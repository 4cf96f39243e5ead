#include <filesystem>
#include <fstream>
#include <ostream>

#include "CLI11.hpp"
#include "polyalpha/errors.hpp"
#include "polyalpha/experiments.hpp"

namespace polyalpha {

namespace {

const char* const kSubcommands[][2] = {
    {"simulate", "simulate replicated chain trajectories"},
    {"tails", "estimate tail probabilities of the volume"},
    {"roots", "rate-function roots and two-scale refinement"},
    {"phase", "share variance by bidder class across initial volumes"},
    {"trade", "compare trading strategies under common random numbers"},
    {"fluid", "distance of rescaled volume paths to the fluid limit"},
    {"oracle-check", "exact-oracle self checks and Monte Carlo agreement"},
};

// Short flags and the config path they set.
const char* const kAliases[][2] = {
    {"alpha", "protocol.alpha"}, {"n0", "protocol.n0"},       {"bidders", "protocol.bidders"},
    {"horizon", "experiment.horizon"}, {"stride", "experiment.stride"}, {"engine", "experiment.engine"},
    {"reps", "mc.reps"},         {"seed", "mc.seed"},         {"threads", "mc.threads"},
    {"csv", "output.csv"},       {"json", "output.json"},
};

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write output file " + path);
    out << contents;
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
    const std::filesystem::path p(path);
    return (p.parent_path() / (p.stem().string() + suffix + p.extension().string())).string();
}

std::string table_text(const CsvTable& t) {
    std::ostringstream os;
    t.write(os);
    return os.str();
}

}  // namespace

void write_outputs(const ExperimentConfig& config, const ExperimentReport& report) {
    if (!config.csv_path.empty()) write_file(config.csv_path, table_text(report.table));
    // files omit wall-clock time so they are reproducible bit for bit
    if (!config.json_path.empty()) write_file(config.json_path, report.to_json(false).dump(2) + "\n");
    for (const auto& [key, table] : report.extra_tables) {
        if (key == "histogram" && !config.histogram_path.empty()) {
            write_file(config.histogram_path, table_text(table));
        } else if (key == "distribution" && !config.distribution_path.empty()) {
            write_file(config.distribution_path, table_text(table));
        } else if (key.rfind("ledger_", 0) == 0 && !config.ledger_path.empty()) {
            write_file(with_suffix(config.ledger_path, "_" + key.substr(7)), table_text(table));
        }
    }
}

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Poly(alpha) stake-chain experiments"};
    app.require_subcommand(1, 1);

    std::string config_file;
    std::vector<std::pair<std::string, std::string>> overrides;
    std::map<std::string, std::string> alias_values;

    for (const auto& [name, help] : kSubcommands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->allow_extras();
        sub->add_option("--config", config_file, "JSON config file");
        for (const auto& [flag, path] : kAliases) {
            sub->add_option("--" + std::string(flag), alias_values[flag], "sets " + std::string(path));
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return kExitConfig;
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string kind = sub->get_name();
    for (const auto& [flag, path] : kAliases) {
        if (sub->count("--" + std::string(flag)) > 0) overrides.emplace_back(path, alias_values[flag]);
    }
    const std::vector<std::string> extras = sub->remaining();
    for (std::size_t i = 0; i < extras.size(); ++i) {
        std::string key = extras[i];
        if (key.rfind("--", 0) != 0 || key.find('.') == std::string::npos) {
            err << "error: unknown argument '" << key << "'\n" << sub->help();
            return kExitConfig;
        }
        key = key.substr(2);
        std::string value;
        if (const auto eq = key.find('='); eq != std::string::npos) {
            value = key.substr(eq + 1);
            key = key.substr(0, eq);
        } else if (i + 1 < extras.size()) {
            value = extras[++i];
        } else {
            err << "error: missing value for --" << key << "\n";
            return kExitConfig;
        }
        overrides.emplace_back(key, value);
    }

    try {
        std::optional<std::filesystem::path> file;
        if (!config_file.empty()) file = config_file;
        const ExperimentConfig config = build_config(kind, file, overrides);
        const ExperimentReport report = run_experiment(config);
        write_outputs(config, report);
        out << report.to_json(true).dump(2) << "\n";
        if (!report.failures.empty()) {
            for (const auto& f : report.failures) err << "check failed: " << f << "\n";
            return kExitNumerical;
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const InvalidState& e) {
        err << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DomainError& e) {
        err << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ResourceLimit& e) {
        err << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
}

}  // namespace polyalpha
