#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "spinread/analytic.hpp"
#include "spinread/numeric.hpp"

namespace spinread::analytic {

double electrical_fidelity(double snr) {
    if (!(snr >= 0.0)) throw DomainError("SNR must be >= 0");
    return 0.5 * (1.0 + std::erf(snr / (2.0 * std::sqrt(2.0))));
}

double closed_form_fidelity(double snr, double gamma_t) {
    if (!(gamma_t >= 0.0)) throw DomainError("relaxation exponent must be >= 0");
    return 0.5 * (1.0 + std::erf(snr / (2.0 * std::sqrt(2.0))) * std::exp(-gamma_t / 2.0));
}

namespace {

struct Classes {
    std::function<double(double)> n0;  // singlet / odd
    std::function<double(double)> n1;  // triplet / even
    bool class1_high = true;
    double lo = 0.0;
    double hi = 0.0;
};

Classes make_classes(const DensityParams& p, double t, DensityMode mode,
                     readout::ReadoutBasis basis) {
    p.validate();
    if (basis == readout::ReadoutBasis::three_state) {
        throw DomainError("analytic fidelity needs a binary basis");
    }
    if (mode == DensityMode::two_state && p.p_t0 != 0.0) {
        throw DomainError("two-state model requires p_t0 = 0");
    }
    Classes c;
    const double s = sigma_of_t(p.sigma0, p.t0, t);
    c.class1_high = p.v_t > p.v_s;
    c.lo = std::min(p.v_s, p.v_t) - 6.0 * s;
    c.hi = std::max(p.v_s, p.v_t) + 6.0 * s;
    c.n0 = [p, t](double v) { return singlet_density(v, t, p); };
    c.n1 = [p, t](double v) { return triplet_density(v, t, p.t1_tm, p); };
    if (mode == DensityMode::three_state) {
        if (basis == readout::ReadoutBasis::parity) {
            c.n0 = [p, t](double v) {
                return 0.5 * (singlet_density(v, t, p) + triplet_density(v, t, p.t1_t0, p));
            };
        } else {
            const double w = p.p_t0 + p.p_tm;
            if (!(w > 0.0)) throw DomainError("singlet-triplet model needs triplet population");
            c.n1 = [p, t, w](double v) {
                return (p.p_t0 * triplet_density(v, t, p.t1_t0, p) +
                        p.p_tm * triplet_density(v, t, p.t1_tm, p)) / w;
            };
        }
    }
    return c;
}

// Balanced fidelity from the masses of each class below the threshold.
double fidelity_from_below(const Classes& c, double below0, double below1, double total0,
                           double total1) {
    if (c.class1_high) return 0.5 * (below0 + (total1 - below1));
    return 0.5 * ((total0 - below0) + below1);
}

}  // namespace

double analytic_fidelity_at(const DensityParams& p, double t, DensityMode mode,
                            readout::ReadoutBasis basis, double threshold) {
    const Classes c = make_classes(p, t, mode, basis);
    const double th = std::clamp(threshold, c.lo, c.hi);
    const double below0 = numeric::integrate(c.n0, c.lo, th);
    const double below1 = numeric::integrate(c.n1, c.lo, th);
    const double above0 = numeric::integrate(c.n0, th, c.hi);
    const double above1 = numeric::integrate(c.n1, th, c.hi);
    return fidelity_from_below(c, below0, below1, below0 + above0, below1 + above1);
}

AnalyticFidelityReport analytic_fidelity(const DensityParams& p, double t, DensityMode mode,
                                         readout::ReadoutBasis basis) {
    const Classes c = make_classes(p, t, mode, basis);
    constexpr int grid = 2001;
    const double step = (c.hi - c.lo) / (grid - 1);
    auto node = [&](int k) { return c.lo + step * k; };

    std::vector<double> cum0(grid, 0.0), cum1(grid, 0.0);
    for (int k = 1; k < grid; ++k) {
        cum0[k] = cum0[k - 1] + numeric::integrate(c.n0, node(k - 1), node(k), 1e-12);
        cum1[k] = cum1[k - 1] + numeric::integrate(c.n1, node(k - 1), node(k), 1e-12);
    }
    const double total0 = cum0.back();
    const double total1 = cum1.back();

    int best = 0;
    double best_f = -1.0;
    for (int k = 0; k < grid; ++k) {
        const double f = fidelity_from_below(c, cum0[k], cum1[k], total0, total1);
        if (f > best_f) {
            best_f = f;
            best = k;
        }
    }
    const int k0 = std::max(best - 1, 0);
    const int k1 = std::min(best + 1, grid - 1);
    auto f_at = [&](double th) {
        const double b0 = cum0[k0] + numeric::integrate(c.n0, node(k0), th, 1e-12);
        const double b1 = cum1[k0] + numeric::integrate(c.n1, node(k0), th, 1e-12);
        return fidelity_from_below(c, b0, b1, total0, total1);
    };
    auto opt = numeric::golden_section_max(f_at, node(k0), node(k1), 1e-12);

    // The optimum is a crossing of the two class densities; polish on it.
    auto diff = [&](double v) { return c.n0(v) - c.n1(v); };
    if (diff(node(k0)) * diff(node(k1)) < 0.0) {
        const double root = numeric::bisect_root(diff, node(k0), node(k1));
        const double f_root = f_at(root);
        if (f_root >= opt.value - 1e-15) opt = {root, f_root};
    }

    AnalyticFidelityReport r;
    r.f_m_star = opt.value;
    r.v_m_star = 2.0 * opt.value - 1.0;
    r.v_threshold = opt.x;
    r.snr = std::abs(p.v_t - p.v_s) / sigma_of_t(p.sigma0, p.t0, t);
    r.f_e_star = electrical_fidelity(r.snr);
    r.eq1_reference = closed_form_fidelity(r.snr, t / p.t1_tm);
    return r;
}

}  // namespace spinread::analytic
