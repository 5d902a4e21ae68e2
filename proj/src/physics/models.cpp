#include <cmath>

#include "spinread/constants.hpp"
#include "spinread/numeric.hpp"
#include "spinread/physics.hpp"

namespace spinread::physics {

namespace {

PhysicsModel lz_model() {
    PhysicsModel m;
    m.id = "lz";
    m.x_unit = "eV/s";
    m.y_unit = "probability";
    m.parameters = {{"delta", "neV", 1e-3, 1e4}};
    m.evaluate = [](double x, std::span<const double> p) {
        return lz_probability(p[0] * units::neV, x * units::eV);
    };
    return m;
}

PhysicsModel thermometry_model() {
    PhysicsModel m;
    m.id = "thermometry";
    m.x_unit = "mK";
    m.y_unit = "mV";
    m.parameters = {{"alpha", "", 1e-4, 1.0}, {"t_e", "mK", 1e-3, 1e4}};
    m.evaluate = [](double x, std::span<const double> p) {
        return coulomb_fwhm(p[0], x * units::mK, p[1] * units::mK) / units::mV;
    };
    return m;
}

PhysicsModel ict_model() {
    PhysicsModel m;
    m.id = "ict";
    m.x_unit = "ueV";
    m.y_unit = "charge fraction";
    m.parameters = {{"t_c", "ueV", 1e-4, 1e3}, {"t_e", "mK", 1e-2, 1e4}};
    m.evaluate = [](double x, std::span<const double> p) {
        return ict_lineshape(x * units::ueV, p[0] * units::ueV, p[1] * units::mK);
    };
    return m;
}

PhysicsModel rabi_model(RabiConvention convention) {
    PhysicsModel m;
    m.id = "rabi";
    m.x_unit = "us";
    m.y_unit = "signal";
    m.parameters = {{"amplitude", "", -10.0, 10.0},
                    {"t2_star", "us", 1e-4, 1e4},
                    {"f_rabi", "MHz", 0.0, 1e4},
                    {"phase", "rad", -10.0, 10.0}};
    m.evaluate = [convention](double x, std::span<const double> p) {
        return damped_rabi(x * units::us, p[0], p[1] * units::us, p[2] * units::MHz, p[3],
                           convention);
    };
    return m;
}

PhysicsModel delta_c_model() {
    PhysicsModel m;
    m.id = "delta_c";
    m.x_unit = "GHz";
    m.y_unit = "aF";
    m.parameters = {{"alpha_drt", "", 0.0, 0.999}, {"t_e", "mK", 1.0, 1e4}, {"f_rf", "MHz", 1.0, 1e5}};
    m.evaluate = [](double x, std::span<const double> p) {
        SensorParams s{p[0], p[1] * units::mK, p[2] * units::MHz, x * units::GHz};
        return delta_c_drt(s) / 1e-18;
    };
    return m;
}

}  // namespace

std::vector<std::string> model_ids() { return {"lz", "thermometry", "ict", "rabi", "delta_c"}; }

PhysicsModel make_model(const std::string& id, const ModelSettings& settings) {
    if (id == "lz") return lz_model();
    if (id == "thermometry") return thermometry_model();
    if (id == "ict") return ict_model();
    if (id == "rabi") return rabi_model(settings.rabi_convention);
    if (id == "delta_c") return delta_c_model();
    throw DomainError("unknown physics model '" + id + "'");
}

}  // namespace spinread::physics
