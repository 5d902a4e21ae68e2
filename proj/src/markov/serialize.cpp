#include "spinread/markov.hpp"
#include "spinread/numeric.hpp"

namespace spinread::markov {

namespace {

void require_keys(const nlohmann::json& j, std::initializer_list<const char*> keys,
                  const std::string& where) {
    if (!j.is_object()) throw DomainError(where + ": expected an object");
    for (const auto& [k, v] : j.items()) {
        bool known = false;
        for (const char* key : keys) known = known || k == key;
        if (!known) throw DomainError(where + ": unknown key '" + k + "'");
    }
    for (const char* key : keys) {
        if (!j.contains(key)) throw DomainError(where + ": missing key '" + std::string(key) + "'");
    }
}

Vector6 vector6(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array() || j.size() != kHiddenStates) {
        throw DomainError(where + ": expected an array of 6 numbers");
    }
    Vector6 v{};
    for (int i = 0; i < kHiddenStates; ++i) v[i] = j.at(i).get<double>();
    return v;
}

}  // namespace

nlohmann::json to_json(const HmmParams& p) {
    const auto& r = p.rates();
    return {
        {"pi", p.pi()},
        {"rates", {{"gamma_t0_hz", r.gamma_t0}, {"gamma_tm_hz", r.gamma_tm},
                   {"tlf_up_hz", r.tlf_up}, {"tlf_down_hz", r.tlf_down}}},
        {"dt_s", p.dt()},
        {"emissions", {{"means", p.emissions().means}, {"stds", p.emissions().stds}}},
    };
}

HmmParams hmm_from_json(const nlohmann::json& j) {
    try {
        require_keys(j, {"pi", "rates", "dt_s", "emissions"}, "hmm");
        const auto& jr = j.at("rates");
        require_keys(jr, {"gamma_t0_hz", "gamma_tm_hz", "tlf_up_hz", "tlf_down_hz"}, "hmm.rates");
        const auto& je = j.at("emissions");
        require_keys(je, {"means", "stds"}, "hmm.emissions");
        RateSet r{jr.at("gamma_t0_hz").get<double>(), jr.at("gamma_tm_hz").get<double>(),
                  jr.at("tlf_up_hz").get<double>(), jr.at("tlf_down_hz").get<double>()};
        EmissionModel em{vector6(je.at("means"), "hmm.emissions.means"),
                         vector6(je.at("stds"), "hmm.emissions.stds")};
        return {vector6(j.at("pi"), "hmm.pi"), r, j.at("dt_s").get<double>(), em};
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("hmm: ") + e.what());
    }
}

}  // namespace spinread::markov
