#ifndef SPINREAD_CLI_HPP
#define SPINREAD_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace spinread::cli {

inline constexpr const char* kToolkit = "spinread";
inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1,
    exit_config = 2,
    exit_missing_input = 3,
    exit_not_converged = 4,
    exit_numerical = 5,
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MissingInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<std::string> commands();

/// Full default parameter block of a command; also its schema (every key
/// that may appear, with the JSON type it must have; null accepts any).
nlohmann::json default_config(const std::string& command);

/// Merges `user` into the defaults, rejecting unknown keys and type
/// mismatches. The user block must carry schema_version.
nlohmann::json merge_config(const std::string& command, const nlohmann::json& user);

/// Applies `key.path=value`; the value is parsed as JSON, falling back to a
/// plain string.
void apply_override(nlohmann::json& user, const std::string& assignment);

struct RunConfig {
    std::string command;
    nlohmann::json params;  // merged and validated
    std::optional<std::uint64_t> seed;
    std::filesystem::path out_dir = ".";
};

struct RunOutcome {
    int exit_code = exit_ok;
    nlohmann::json report;
};

/// Executes a command. Outputs land in out_dir via atomic rename; the report
/// is also written there as report.json.
RunOutcome run(const RunConfig& config);

/// Argument parsing, dispatch and exit-code mapping for the executable.
int main_entry(int argc, char** argv);

}  // namespace spinread::cli

#endif
