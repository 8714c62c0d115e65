#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "modtd/experiments.hpp"

namespace modtd::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Exit codes shared by every subcommand.
enum ExitCode : int { kOk = 0, kRuntimeError = 1, kUsageError = 2 };

/// Invalid run configuration; `key()` names the offending field.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string key, const std::string& message)
        : std::invalid_argument("invalid '" + key + "': " + message), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

enum class Command { bandit, cardsort, sweep };

/// Everything one harness invocation needs; mirrors the run-config file.
struct RunOptions {
    Command command = Command::bandit;
    ExperimentConfig config = ExperimentConfig::bandit_defaults();
    std::vector<UpdateRule> rules{UpdateRule::conventional, UpdateRule::modulated};
    HyperparamGrid grid = HyperparamGrid::standard();
    std::vector<int> n_values;  // sweep only
    std::filesystem::path out;

    /// Throws ConfigError naming the first offending key.
    void validate() const;
};

/// Reads a run-config document. Unknown or inapplicable keys, missing
/// required keys and bad values all raise ConfigError.
RunOptions parse_run_config(const nlohmann::json& doc);

/// Inverse of parse_run_config; the result parses back to the same options.
nlohmann::json to_json(const RunOptions& options);

/// Output files written by one command, in write order.
struct Outputs {
    std::vector<std::filesystem::path> files;
};

/// Runs the experiment described by `options` and writes its CSVs and
/// manifest under options.out. Throws on I/O failure.
Outputs execute(const RunOptions& options, std::ostream& log);

/// Full command-line entry point (`bandit`, `cardsort`, `sweep`, `run`).
/// Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace modtd::cli
