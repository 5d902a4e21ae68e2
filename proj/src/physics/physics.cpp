#include "spinread/physics.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "spinread/constants.hpp"
#include "spinread/numeric.hpp"

namespace spinread::physics {

namespace c = spinread::constants;

void SensorParams::validate() const {
    if (!(alpha_drt >= 0.0 && alpha_drt < 1.0)) {
        throw DomainError("alpha_drt must lie in [0, 1)");
    }
    if (!(t_electron > 0.0)) throw DomainError("electron temperature must be > 0");
    if (!(f_rf > 0.0)) throw DomainError("RF frequency must be > 0");
    if (!(gamma > 0.0)) throw DomainError("tunnel rate must be > 0");
}

double delta_c_drt(const SensorParams& p) {
    p.validate();
    const double kt = c::boltzmann * p.t_electron;
    const double e = c::elementary_charge;
    const double prefactor = 4.0 * (1.0 - p.alpha_drt) * (1.0 - p.alpha_drt) * e * e / (3.0 * kt);
    const double ratio = p.f_rf / p.gamma;
    const double tunnelling = 1.0 / (1.0 + ratio * ratio);
    const double broadening = 1.0 / (1.0 + c::planck * p.gamma / kt);
    return prefactor * tunnelling * broadening;
}

TunnelRateOptimum optimal_tunnel_rate(SensorParams p, double gamma_lo, double gamma_hi) {
    if (!(gamma_lo > 0.0 && gamma_lo < gamma_hi)) {
        throw DomainError("search range must satisfy 0 < lower < upper");
    }
    p.gamma = gamma_lo;
    p.validate();

    auto value_at_log = [&p](double log_gamma) {
        SensorParams q = p;
        q.gamma = std::exp(log_gamma);
        return delta_c_drt(q);
    };

    constexpr int grid = 513;
    const double a = std::log(gamma_lo);
    const double b = std::log(gamma_hi);
    int best = 0;
    double best_value = -1.0;
    for (int i = 0; i < grid; ++i) {
        const double v = value_at_log(a + (b - a) * i / (grid - 1));
        if (v > best_value) {
            best_value = v;
            best = i;
        }
    }
    if (best == 0 || best == grid - 1) {
        throw DomainError("capacitance maximum lies on the search-range boundary");
    }
    const double step = (b - a) / (grid - 1);
    const double centre = a + step * best;
    const auto opt = numeric::golden_section_max(value_at_log, centre - step, centre + step, 1e-14);
    return {std::exp(opt.x), opt.value};
}

double tunnel_rate_from_barrier(double v_barrier, double gamma0, double v_scale) {
    if (!(gamma0 > 0.0) || v_scale == 0.0) {
        throw DomainError("tunnel-rate mapping needs gamma0 > 0 and non-zero voltage scale");
    }
    return gamma0 * std::exp(v_barrier / v_scale);
}

void ResonatorParams::validate() const {
    if (!(f0 > 0.0 && q_r > 0.0 && q_int > 0.0 && c_p > 0.0 && c_c > 0.0 && l > 0.0 && r_c > 0.0)) {
        throw DomainError("resonator parameters must be strictly positive");
    }
    if (!(beta >= 0.0)) throw DomainError("coupling coefficient must be >= 0");
    if (std::abs(q_int - (1.0 + beta) * q_r) > 1e-9 * q_int) {
        throw DomainError("q_int inconsistent with (1 + beta) q_r");
    }
}

ResonatorParams resonator_from_vna(double f0, double delta_f, double gamma_v_at_f0,
                                   double l, double c_c) {
    if (!(f0 > 0.0 && delta_f > 0.0 && l > 0.0 && c_c > 0.0)) {
        throw DomainError("f0, delta_f, L and C_c must be > 0");
    }
    if (!(gamma_v_at_f0 > -1.0 && gamma_v_at_f0 < 1.0)) {
        throw DomainError("reflection coefficient on resonance must lie in (-1, 1)");
    }
    ResonatorParams r;
    r.f0 = f0;
    r.l = l;
    r.c_c = c_c;
    r.q_r = f0 / delta_f;
    r.beta = std::abs((gamma_v_at_f0 - 1.0) / (gamma_v_at_f0 + 1.0));
    if (gamma_v_at_f0 > 0.0) {
        r.regime = CouplingRegime::under;
    } else if (gamma_v_at_f0 < 0.0) {
        r.regime = CouplingRegime::over;
    } else {
        r.regime = CouplingRegime::critical;
    }
    r.q_int = (1.0 + r.beta) * r.q_r;
    const double omega0 = 2.0 * c::pi * f0;
    r.c_p = 1.0 / (omega0 * omega0 * l) - c_c;
    if (!(r.c_p > 0.0)) {
        throw DomainError("extracted parasitic capacitance is not positive");
    }
    r.r_c = r.q_int * std::sqrt(l / (c_c + r.c_p));
    return r;
}

double coupling_factor(double beta) {
    if (!(beta >= 0.0)) throw DomainError("coupling coefficient must be >= 0");
    return 2.0 * beta / ((1.0 + beta) * (1.0 + beta));
}

double reflectometry_snr(const ResonatorParams& r, double delta_c, double c_tot,
                         double eta, double v_ratio) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("eta must lie in [0, 1]");
    if (!(delta_c > 0.0 && c_tot > 0.0)) throw DomainError("capacitances must be > 0");
    if (!(v_ratio >= 0.0)) throw DomainError("V_in / V_n must be >= 0");
    return eta * coupling_factor(r.beta) * r.q_int * (delta_c / c_tot) * v_ratio;
}

double min_integration_time(double snr, double t_read) {
    if (!(snr > 0.0)) throw DomainError("SNR must be > 0");
    if (!(t_read > 0.0)) throw DomainError("readout time must be > 0");
    return t_read / (snr * snr);
}

double charge_snr(double spin_snr, double eta) {
    if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("eta must lie in (0, 1]");
    return spin_snr / eta;
}

double lz_probability(double delta, double velocity) {
    if (!(velocity > 0.0)) throw DomainError("sweep velocity must be > 0");
    if (!(delta >= 0.0)) throw DomainError("anticrossing gap must be >= 0");
    return std::exp(-2.0 * c::pi * delta * delta / (c::hbar * velocity));
}

double coulomb_fwhm(double alpha, double t_mxc, double t_e) {
    if (!(alpha > 0.0)) throw DomainError("lever arm must be > 0");
    if (!(t_mxc >= 0.0 && t_e >= 0.0)) throw DomainError("temperatures must be >= 0");
    return 3.53 * c::boltzmann / (c::elementary_charge * alpha) * std::hypot(t_mxc, t_e);
}

double ict_lineshape(double epsilon, double t_c, double t_e) {
    if (!(t_c > 0.0)) throw DomainError("tunnel coupling must be > 0");
    if (!(t_e > 0.0)) throw DomainError("electron temperature must be > 0");
    const double omega = std::hypot(epsilon, 2.0 * t_c);
    return 0.5 * (1.0 - epsilon / omega * std::tanh(omega / (2.0 * c::boltzmann * t_e)));
}

double damped_rabi(double t, double amplitude, double t2_star, double f_rabi,
                   double phase, RabiConvention convention) {
    if (!(t2_star > 0.0)) throw DomainError("T2* must be > 0");
    const double omega = convention == RabiConvention::angular ? 2.0 * c::pi * f_rabi : f_rabi;
    return amplitude * std::exp(-t / t2_star) * std::sin(omega * t + phase);
}

}  // namespace spinread::physics
