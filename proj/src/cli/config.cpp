#include "spinread/cli.hpp"

namespace spinread::cli {

using nlohmann::json;

namespace {

json model_block() {
    return {
        {"gamma_t0_hz", 1.0 / 170e-6},
        {"gamma_tm_hz", 1.0 / 0.29},
        {"tlf_up_hz", 0.0},
        {"tlf_down_hz", 0.0},
        {"spin_prior", {0.25, 0.25, 0.5}},
        {"tlf_excited_prior", 0.0},
        {"tlf_offset", nullptr},
        {"v_singlet", 0.0},
        {"v_triplet", 1.0},
        {"tau_min_s", 3.3e-6},
    };
}

json density_block() {
    return {
        {"v_s", 0.0},      {"v_t", 1.0},           {"sigma0", 1.0},
        {"t0_s", 3.3e-6},  {"t1_t0_s", 170e-6},    {"t1_tm_s", 0.29},
        {"p_s", 0.25},     {"p_t0", 0.25},         {"p_tm", 0.5},
    };
}

void merge_into(json& target, const json& source, const std::string& path) {
    if (!source.is_object()) throw ConfigError(path + ": expected an object");
    for (const auto& [key, value] : source.items()) {
        const std::string where = path.empty() ? key : path + "." + key;
        if (!target.contains(key)) throw ConfigError("unknown config key '" + where + "'");
        json& slot = target[key];
        if (slot.is_null()) {
            slot = value;
        } else if (slot.is_object()) {
            merge_into(slot, value, where);
        } else if (slot.is_number()) {
            if (!value.is_number()) throw ConfigError("config key '" + where + "' must be a number");
            slot = value;
        } else if (slot.is_string()) {
            if (!value.is_string()) throw ConfigError("config key '" + where + "' must be a string");
            slot = value;
        } else if (slot.is_boolean()) {
            if (!value.is_boolean()) throw ConfigError("config key '" + where + "' must be a boolean");
            slot = value;
        } else if (slot.is_array()) {
            if (!value.is_array()) throw ConfigError("config key '" + where + "' must be an array");
            slot = value;
        }
    }
}

}  // namespace

std::vector<std::string> commands() {
    return {"simulate", "preprocess", "classify", "sweep", "fit-hmm",
            "fit-histogram", "fit-physics", "snr", "emit"};
}

json default_config(const std::string& command) {
    json c = {{"schema_version", kSchemaVersion}};
    if (command == "simulate") {
        c["n_traces"] = 10000;
        c["dt_s"] = 1e-6;
        c["n_samples"] = 400;
        c["hmm_file"] = "";
        c["model"] = model_block();
        c["v0"] = 1.0;
        c["output"] = "traces";
        c["drift"] = {{"background_samples", 0}, {"background_level", 0.0},
                      {"drift_per_trace", 0.0}, {"noise_std", 0.0}};
    } else if (command == "preprocess") {
        c["input"] = "traces";
        c["window"] = 50;
        c["output"] = "corrected";
        c["csv"] = false;
    } else if (command == "classify") {
        c["input"] = "traces";
        c["hmm_file"] = "";
        c["classifier"] = "threshold";
        c["basis"] = "parity";
        c["t_read_s"] = 340e-6;
        c["threshold"] = nullptr;
        c["grid"] = 2001;
        c["output"] = "classify.csv";
    } else if (command == "sweep") {
        c["input"] = "traces";
        c["hmm_file"] = "";
        c["classifier"] = "threshold";
        c["basis"] = "parity";
        c["t_read_s"] = {50e-6, 100e-6, 200e-6, 340e-6};
        c["grid"] = 2001;
        c["output"] = "sweep.csv";
    } else if (command == "fit-hmm") {
        c["input"] = "traces";
        c["init_file"] = "";
        c["model"] = model_block();
        c["t_read_s"] = nullptr;
        c["tie_means"] = true;
        c["shared_std"] = true;
        c["freeze_tlf"] = false;
        c["freeze_emissions"] = false;
        c["tol"] = 1e-7;
        c["max_iter"] = 500;
        c["output"] = "hmm_fit.json";
    } else if (command == "fit-histogram") {
        c["input"] = "histogram.csv";
        c["t_read_s"] = 204e-6;
        c["mode"] = "two_state";
        c["init"] = density_block();
        c["output"] = "histogram_fit.json";
    } else if (command == "fit-physics") {
        c["model"] = "lz";
        c["input"] = "data.csv";
        c["init"] = json::array();
        c["poisson_weights"] = false;
        c["rabi_convention"] = "literal";
        c["output"] = "physics_fit.json";
    } else if (command == "snr") {
        c["input"] = "iq.csv";
        c["t_read_s"] = 328e-6;
        c["eta"] = 0.8;
        c["output"] = "projected.csv";
    } else if (command == "emit") {
        c["family"] = "capacitance";
        c["capacitance"] = {{"alpha_drt", 0.17}, {"t_e_k", 0.09}, {"f_rf_hz", 576e6},
                            {"gamma_min_hz", 0.05e9}, {"gamma_max_hz", 19e9}, {"n_points", 400},
                            {"output", "capacitance.csv"}};
        c["fidelity"] = {{"input", "traces"}, {"hmm_file", ""}, {"classifier", "hmm"},
                         {"basis", "parity"}, {"t_read_s", {50e-6, 100e-6, 200e-6, 340e-6}},
                         {"output", "fidelity.csv"}};
        c["histogram"] = {{"input", "traces"}, {"t_read_s", 204e-6}, {"bins", 101},
                          {"density", density_block()}, {"output", "histogram.csv"}};
        c["noise"] = {{"input", "traces"}, {"basis", "parity"},
                      {"t_read_s", {10e-6, 20e-6, 40e-6, 80e-6, 160e-6}},
                      {"fit_max_t_s", nullptr}, {"output", "noise.csv"}};
    } else {
        throw ConfigError("unknown command '" + command + "'");
    }
    return c;
}

json merge_config(const std::string& command, const json& user) {
    json merged = default_config(command);
    if (!user.is_object() || !user.contains("schema_version")) {
        throw ConfigError("config must be an object carrying schema_version (expected " +
                          std::to_string(kSchemaVersion) + ")");
    }
    merge_into(merged, user, "");
    if (merged["schema_version"] != kSchemaVersion) {
        throw ConfigError("unsupported schema_version; expected " + std::to_string(kSchemaVersion));
    }
    return merged;
}

void apply_override(json& user, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override '" + assignment + "' is not of the form key=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    json* node = &user;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
        if (!node->is_object()) *node = json::object();
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

}  // namespace spinread::cli
