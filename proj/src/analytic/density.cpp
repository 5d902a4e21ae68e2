#include <cmath>
#include <numbers>
#include <random>

#include "spinread/analytic.hpp"
#include "spinread/numeric.hpp"

namespace spinread::analytic {

void DensityParams::validate() const {
    if (!(std::isfinite(v_s) && std::isfinite(v_t))) throw DomainError("signal means must be finite");
    if (v_s == v_t) throw DomainError("singlet and triplet means coincide");
    if (!(sigma0 > 0.0 && std::isfinite(sigma0))) throw DomainError("sigma0 must be > 0");
    if (!(t0 > 0.0 && std::isfinite(t0))) throw DomainError("t0 must be > 0");
    if (!(t1_t0 > 0.0 && t1_tm > 0.0)) throw DomainError("relaxation times must be > 0");
    if (!(p_s >= 0.0 && p_t0 >= 0.0 && p_tm >= 0.0)) throw DomainError("fractions must be >= 0");
    if (std::abs(p_s + p_t0 + p_tm - 1.0) > 1e-12) throw DomainError("fractions must sum to 1");
}

std::string to_string(DensityMode m) {
    return m == DensityMode::two_state ? "two_state" : "three_state";
}

DensityMode parse_density_mode(const std::string& name) {
    if (name == "two_state") return DensityMode::two_state;
    if (name == "three_state") return DensityMode::three_state;
    throw DomainError("unknown density mode '" + name + "'");
}

double sigma_of_t(double sigma0, double t0, double t) {
    if (!(t > 0.0)) throw DomainError("integration time must be > 0");
    if (!(sigma0 > 0.0 && t0 > 0.0)) throw DomainError("sigma0 and t0 must be > 0");
    return sigma0 * std::sqrt(t0 / t);
}

double singlet_density(double v, double t, const DensityParams& p) {
    return numeric::normal_pdf(v, p.v_s, sigma_of_t(p.sigma0, p.t0, t));
}

namespace {

// log erfc(x) for x >= 0, asymptotic beyond the range where erfc underflows.
double log_erfc(double x) {
    if (x < 25.0) return std::log(std::erfc(x));
    const double x2 = x * x;
    return -x2 - std::log(x * std::sqrt(std::numbers::pi)) +
           std::log1p(-0.5 / x2 + 0.75 / (x2 * x2) - 1.875 / (x2 * x2 * x2));
}

}  // namespace

double decay_tail(double v, double t, double t1, const DensityParams& p) {
    if (!(t > 0.0 && t1 > 0.0)) throw DomainError("t and T1 must be > 0");
    if (p.v_s == p.v_t) throw DomainError("decay tail undefined for coincident means");
    const double r = t / t1;
    if (r == 0.0) return 0.0;
    const double s = sigma_of_t(p.sigma0, p.t0, t);
    const double dv = p.v_t - p.v_s;

    const double exponent = r * (p.v_s - v) / dv + r * r * s * s / (2.0 * dv * dv);
    const double a = r * s / (std::sqrt(2.0) * (p.v_s - p.v_t));
    const double x1 = a + (v - p.v_s) / (std::sqrt(2.0) * s);
    const double x2 = a + (v - p.v_t) / (std::sqrt(2.0) * s);
    const double hi = std::max(x1, x2), lo = std::min(x1, x2);
    const double scale = r / (2.0 * std::abs(dv));
    double value;
    if (lo >= 0.0 || hi <= 0.0) {
        // erf(hi) - erf(lo) as a difference of same-side tails, in log space
        const double l_near = lo >= 0.0 ? log_erfc(lo) : log_erfc(-hi);
        const double l_far = lo >= 0.0 ? log_erfc(hi) : log_erfc(-lo);
        value = scale * std::exp(exponent + l_near) * -std::expm1(l_far - l_near);
    } else {
        value = scale * std::exp(exponent) * (std::erf(hi) - std::erf(lo));
    }
    if (std::isfinite(value)) return std::max(value, 0.0);
    return numeric::integrate(
        [&](double u) { return r * std::exp(-r * u) * numeric::normal_pdf(v, p.v_s + u * dv, s); },
        0.0, 1.0, 1e-14);
}

double triplet_density(double v, double t, double t1, const DensityParams& p) {
    const double survive = std::exp(-t / t1);
    return survive * numeric::normal_pdf(v, p.v_t, sigma_of_t(p.sigma0, p.t0, t)) +
           decay_tail(v, t, t1, p);
}

double combined_density(double v, double t, const DensityParams& p, DensityMode mode) {
    if (mode == DensityMode::two_state) {
        if (p.p_t0 != 0.0) throw DomainError("two-state density requires p_t0 = 0");
        return p.p_s * singlet_density(v, t, p) + p.p_tm * triplet_density(v, t, p.t1_tm, p);
    }
    double out = p.p_s * singlet_density(v, t, p);
    if (p.p_t0 > 0.0) out += p.p_t0 * triplet_density(v, t, p.t1_t0, p);
    if (p.p_tm > 0.0) out += p.p_tm * triplet_density(v, t, p.t1_tm, p);
    return out;
}

std::vector<double> sample_averages(const DensityParams& p, double t, DensityMode mode,
                                    std::size_t n, std::uint64_t seed) {
    p.validate();
    if (mode == DensityMode::two_state && p.p_t0 != 0.0) {
        throw DomainError("two-state sampling requires p_t0 = 0");
    }
    const double s = sigma_of_t(p.sigma0, p.t0, t);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> out(n);
    for (auto& x : out) {
        const double u = uniform(rng);
        double mean = p.v_s;
        if (u >= p.p_s) {
            const double t1 = u < p.p_s + p.p_t0 ? p.t1_t0 : p.t1_tm;
            const double decay = -t1 * std::log1p(-uniform(rng));
            mean = decay >= t ? p.v_t : p.v_s + (decay / t) * (p.v_t - p.v_s);
        }
        x = mean + s * normal(rng);
    }
    return out;
}

}  // namespace spinread::analytic
