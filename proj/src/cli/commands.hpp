#ifndef SPINREAD_CLI_COMMANDS_HPP
#define SPINREAD_CLI_COMMANDS_HPP

#include <string>
#include <vector>

#include "spinread/cli.hpp"

namespace spinread::cli::detail {

struct CommandResult {
    nlohmann::json results = nlohmann::json::object();
    std::vector<std::string> outputs;
    bool converged = true;
};

CommandResult simulate(const RunConfig& c);
CommandResult preprocess(const RunConfig& c);
CommandResult classify(const RunConfig& c);
CommandResult sweep(const RunConfig& c);
CommandResult fit_hmm(const RunConfig& c);
CommandResult fit_histogram(const RunConfig& c);
CommandResult fit_physics(const RunConfig& c);
CommandResult snr(const RunConfig& c);
CommandResult emit(const RunConfig& c);

}  // namespace spinread::cli::detail

#endif
