#include <doctest.h>

#include <cmath>

#include "spinread/constants.hpp"
#include "spinread/numeric.hpp"
#include "spinread/physics.hpp"

using namespace spinread;
using namespace spinread::physics;

namespace {

SensorParams device_sensor(double gamma = 1e9) { return {0.17, 0.09, 576e6, gamma}; }

}  // namespace

TEST_CASE("delta_c vanishes at both tunnel-rate limits") {
    const double peak = delta_c_drt(device_sensor(1.2e9));
    CHECK(delta_c_drt(device_sensor(1e3)) < 1e-9 * peak);
    CHECK(delta_c_drt(device_sensor(1e18)) < 1e-6 * peak);
}

TEST_CASE("tunnel-rate optimum for the sensor operating point") {
    const auto opt = optimal_tunnel_rate(device_sensor(), 0.05e9, 19e9);
    const double kt_h = constants::boltzmann * 0.09 / constants::planck;
    CHECK(kt_h == doctest::Approx(1.87e9).epsilon(0.005));
    CHECK(opt.gamma > 576e6);
    CHECK(opt.gamma < kt_h);
    // positive root of g^3 - f^2 g - 2 f^2 kT/h = 0
    CHECK(opt.gamma == doctest::Approx(1.1781296025e9).epsilon(1e-6));
    CHECK(std::abs(opt.gamma - 1.15e9) < 0.15 * 1.15e9);
    CHECK(opt.delta_c == doctest::Approx(delta_c_drt(device_sensor(opt.gamma))));

    auto hot = device_sensor();
    hot.t_electron *= 100.0;
    const auto opt_hot = optimal_tunnel_rate(hot, 0.05e9, 1e12);
    CHECK(opt_hot.gamma == doctest::Approx(5.0146152589e9).epsilon(1e-6));
    CHECK(opt_hot.gamma > opt.gamma);
}

TEST_CASE("optimum on the search boundary is rejected") {
    CHECK_THROWS_AS(optimal_tunnel_rate(device_sensor(), 2e9, 19e9), DomainError);
}

TEST_CASE("sensor parameter validation") {
    CHECK_THROWS_AS(delta_c_drt({1.0, 0.09, 576e6, 1e9}), DomainError);
    CHECK_THROWS_AS(delta_c_drt({0.17, 0.0, 576e6, 1e9}), DomainError);
    CHECK_THROWS_AS(delta_c_drt({0.17, 0.09, 576e6, -1.0}), DomainError);
}

TEST_CASE("coupling factor") {
    CHECK(coupling_factor(1.0) == doctest::Approx(0.5));
    for (double b : {0.0, 0.1, 0.42, 0.9, 1.1, 3.0, 100.0}) CHECK(coupling_factor(b) <= 0.5);
    CHECK(coupling_factor(0.0) == 0.0);
}

TEST_CASE("resonator extraction from VNA data") {
    const auto on = resonator_from_vna(578.6e6, 578.6e6 / 74.8, (1.0 - 0.42) / (1.0 + 0.42),
                                       88.7 * units::nH, 0.2 * units::pF);
    CHECK(on.q_r == doctest::Approx(74.8));
    CHECK(on.beta == doctest::Approx(0.42));
    CHECK(on.regime == CouplingRegime::under);
    CHECK(on.q_int == doctest::Approx(106.0).epsilon(0.005));

    const auto off = resonator_from_vna(583.9e6, 583.9e6 / 80.0, 0.3, 88.7 * units::nH, 0.2 * units::pF);
    CHECK(off.c_p == doctest::Approx(6.376058e-13).epsilon(1e-6));

    const auto over = resonator_from_vna(583.9e6, 1e6, -0.4, 88.7 * units::nH, 0.2 * units::pF);
    CHECK(over.regime == CouplingRegime::over);
    CHECK(over.beta > 1.0);

    CHECK(resonator_from_vna(5e8, 5e8, 0.2, 88.7 * units::nH, 0.2 * units::pF).q_r == doctest::Approx(1.0));
}

TEST_CASE("reflectometry SNR") {
    const auto r = resonator_from_vna(578.6e6, 578.6e6 / 74.8, (1.0 - 0.42) / (1.0 + 0.42),
                                      88.7 * units::nH, 0.2 * units::pF);
    CHECK(reflectometry_snr(r, 1e-15, 1e-12, 0.0, 1e4) == 0.0);
    const double snr1 = reflectometry_snr(r, 1e-15, 1e-12, 1.0, 1.0);
    REQUIRE(snr1 > 0.0);
    // back-solve the drive ratio that gives the measured charge SNR of 10.0
    const double v_ratio = 10.0 / snr1;
    CHECK(reflectometry_snr(r, 1e-15, 1e-12, 1.0, v_ratio) == doctest::Approx(10.0));
    CHECK(reflectometry_snr(r, 1e-15, 1e-12, 0.5, v_ratio) == doctest::Approx(5.0));
}

TEST_CASE("integration time and charge SNR") {
    CHECK(min_integration_time(1.0, 328e-6) == doctest::Approx(328e-6));
    CHECK(std::abs(min_integration_time(10.0, 328e-6) - 3.3e-6) < 0.1e-6);
    CHECK(min_integration_time(20.0, 328e-6) == doctest::Approx(min_integration_time(10.0, 328e-6) / 4.0));
    CHECK(charge_snr(8.0, 0.8) == doctest::Approx(10.0));
    CHECK_THROWS_AS(min_integration_time(0.0, 1e-6), DomainError);
}

TEST_CASE("Landau-Zener probability") {
    CHECK(lz_probability(0.0, 1.0) == 1.0);
    const double delta = 46.9 * units::neV;
    const double v_half = 2.0 * constants::pi * delta * delta / (constants::hbar * std::log(2.0));
    CHECK(lz_probability(delta, v_half) == doctest::Approx(0.5));
    CHECK(v_half / units::eV == doctest::Approx(30.29244483).epsilon(1e-8));
    CHECK(lz_probability(delta, 2.0 * v_half) > 0.5);
}

TEST_CASE("Coulomb peak thermometry") {
    CHECK(coulomb_fwhm(0.17, 0.0, 0.09) == doctest::Approx(1.6104275161e-4).epsilon(1e-9));
    CHECK(coulomb_fwhm(0.17, 0.2, 0.09) > coulomb_fwhm(0.17, 0.0, 0.09));
}

TEST_CASE("interdot lineshape") {
    const double tc = 8.0 * units::ueV;
    CHECK(ict_lineshape(0.0, tc, 0.04) == doctest::Approx(0.5));
    for (double eps : {1.0, 5.0, 20.0, 80.0}) {
        const double x = eps * units::ueV;
        CHECK(ict_lineshape(x, tc, 0.04) + ict_lineshape(-x, tc, 0.04) == doctest::Approx(1.0));
    }
}

TEST_CASE("damped Rabi oscillation") {
    CHECK(damped_rabi(0.0, 0.35, 0.4e-6, 17e6, 0.0) == 0.0);
    for (auto conv : {RabiConvention::literal, RabiConvention::angular}) {
        // choose phase so the sine sits at its crest at t = T2*
        const double w = conv == RabiConvention::angular ? 2.0 * constants::pi * 17e6 : 17e6;
        const double phase = constants::pi / 2.0 - w * 0.4e-6;
        CHECK(damped_rabi(0.4e-6, 0.35, 0.4e-6, 17e6, phase, conv) ==
              doctest::Approx(0.35 / std::exp(1.0)));
    }
}
