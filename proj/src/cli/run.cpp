#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "spinread/numeric.hpp"
#include "spinread/pipeline.hpp"

namespace spinread::cli {

using nlohmann::json;

namespace {

using Handler = detail::CommandResult (*)(const RunConfig&);

const std::map<std::string, Handler>& handlers() {
    static const std::map<std::string, Handler> h{
        {"simulate", detail::simulate},         {"preprocess", detail::preprocess},
        {"classify", detail::classify},         {"sweep", detail::sweep},
        {"fit-hmm", detail::fit_hmm},           {"fit-histogram", detail::fit_histogram},
        {"fit-physics", detail::fit_physics},   {"snr", detail::snr},
        {"emit", detail::emit},
    };
    return h;
}

json base_report(const RunConfig& c) {
    return {{"toolkit", kToolkit},
            {"version", kVersion},
            {"schema_version", kSchemaVersion},
            {"command", c.command},
            {"config", c.params},
            {"seed", c.seed ? json(*c.seed) : json(nullptr)}};
}

RunOutcome failure(const RunConfig& c, int code, const std::string& message) {
    json report = base_report(c);
    report["status"] = "error";
    report["error"] = message;
    return {code, report};
}

}  // namespace

RunOutcome run(const RunConfig& config) {
    const auto it = handlers().find(config.command);
    if (it == handlers().end()) return failure(config, exit_config, "unknown command '" + config.command + "'");

    const auto start = std::chrono::steady_clock::now();
    RunOutcome out;
    try {
        auto result = it->second(config);
        const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
        out.report = base_report(config);
        out.report["wall_clock_s"] = wall.count();
        out.report["status"] = result.converged ? "ok" : "not_converged";
        out.report["results"] = std::move(result.results);
        out.report["outputs"] = result.outputs;
        out.exit_code = result.converged ? exit_ok : exit_not_converged;
    } catch (const ConfigError& e) {
        return failure(config, exit_config, e.what());
    } catch (const DomainError& e) {
        return failure(config, exit_config, e.what());
    } catch (const MissingInput& e) {
        return failure(config, exit_missing_input, e.what());
    } catch (const NumericalError& e) {
        return failure(config, exit_numerical, e.what());
    } catch (const json::exception& e) {
        return failure(config, exit_config, e.what());
    }
    std::filesystem::create_directories(config.out_dir);
    pipeline::write_file_atomic(config.out_dir / "report.json", out.report.dump(2) + "\n");
    return out;
}

int main_entry(int argc, char** argv) {
    CLI::App app{"Spin readout analysis toolkit"};
    app.set_version_flag("--version", kVersion);
    std::string command;
    std::string config_path;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::string model;

    std::string names;
    for (const auto& c : commands()) names += (names.empty() ? "" : ", ") + c;
    app.add_option("command", command, "One of: " + names)->required();
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--set", sets, "Override a config key: key.path=value")->take_all();
    app.add_option("--seed", seed, "RNG seed");
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--model", model, "Physics model id (fit-physics)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    RunConfig rc;
    rc.command = command;
    rc.seed = seed;
    rc.out_dir = out_dir;
    try {
        json user = {{"schema_version", kSchemaVersion}};
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) {
                std::cerr << "error: config file not found: " << config_path << "\n";
                return exit_missing_input;
            }
            std::ostringstream ss;
            ss << in.rdbuf();
            user = json::parse(ss.str(), nullptr, false);
            if (user.is_discarded()) throw ConfigError("malformed JSON in " + config_path);
        }
        for (const auto& s : sets) apply_override(user, s);
        if (!model.empty()) {
            if (command != "fit-physics") throw ConfigError("--model applies to fit-physics only");
            user["model"] = model;
        }
        rc.params = merge_config(command, user);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    }

    RunOutcome out;
    try {
        out = run(rc);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_failure;
    }
    std::cout << out.report.dump(2) << "\n";
    if (out.exit_code != exit_ok && out.report.contains("error")) {
        std::cerr << "error: " << out.report["error"].get<std::string>() << "\n";
    }
    return out.exit_code;
}

}  // namespace spinread::cli
