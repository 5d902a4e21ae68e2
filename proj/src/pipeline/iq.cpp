#include <cmath>
#include <limits>
#include <random>

#include "spinread/constants.hpp"
#include "spinread/numeric.hpp"
#include "spinread/pipeline.hpp"

namespace spinread::pipeline {

namespace {

struct Mixture {
    IqPoint mu[2];
    double w = 0.5;    // weight of component 0
    double var = 1.0;  // per-axis variance
    double ll = -std::numeric_limits<double>::infinity();
};

double dist2(const IqPoint& a, const IqPoint& b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1];
    return dx * dx + dy * dy;
}

// Responsibility of component 0; adds log p(x) to `ll`.
double responsibility0(const Mixture& m, const IqPoint& x, double& ll) {
    const double l0 = std::log(m.w) - dist2(x, m.mu[0]) / (2.0 * m.var);
    const double l1 = std::log1p(-m.w) - dist2(x, m.mu[1]) / (2.0 * m.var);
    const double top = std::max(l0, l1);
    const double s = std::exp(l0 - top) + std::exp(l1 - top);
    ll += top + std::log(s) - std::log(2.0 * constants::pi * m.var);
    return std::exp(l0 - top) / s;
}

bool fit_once(std::span<const IqPoint> x, Mixture& m, const IqOptions& opt) {
    const auto n = static_cast<double>(x.size());
    double prev = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < opt.max_iter; ++it) {
        double ll = 0.0, r0_sum = 0.0;
        IqPoint s0{}, s1{};
        std::vector<double> r(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            r[i] = responsibility0(m, x[i], ll);
            r0_sum += r[i];
            for (int d = 0; d < 2; ++d) {
                s0[d] += r[i] * x[i][d];
                s1[d] += (1.0 - r[i]) * x[i][d];
            }
        }
        m.ll = ll;
        const double r1_sum = n - r0_sum;
        if (!(r0_sum > 1e-9 && r1_sum > 1e-9)) return false;
        m.w = r0_sum / n;
        for (int d = 0; d < 2; ++d) {
            m.mu[0][d] = s0[d] / r0_sum;
            m.mu[1][d] = s1[d] / r1_sum;
        }
        double ss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            ss += r[i] * dist2(x[i], m.mu[0]) + (1.0 - r[i]) * dist2(x[i], m.mu[1]);
        }
        m.var = ss / (2.0 * n);
        if (!(m.var > 0.0) || !(m.w > 1e-9 && m.w < 1.0 - 1e-9)) return false;
        if (std::abs(ll - prev) <= opt.tol * std::abs(ll)) break;
        prev = ll;
    }
    double ll = 0.0;
    for (const auto& p : x) responsibility0(m, p, ll);
    m.ll = ll;
    return std::isfinite(ll);
}

}  // namespace

IqProjection iq_project(std::span<const IqPoint> x, const IqOptions& opt) {
    if (x.size() < 2) throw DomainError("iq_project: need at least two points");
    if (opt.restarts < 1) throw DomainError("iq_project: restarts must be >= 1");

    std::mt19937_64 rng(opt.seed);
    std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    bool found = false;
    Mixture best;
    for (int restart = 0; restart < opt.restarts; ++restart) {
        // k-means++ seeding.
        const IqPoint c0 = x[pick(rng)];
        std::vector<double> d2(x.size());
        double total = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) total += d2[i] = dist2(x[i], c0);
        if (!(total > 0.0)) continue;
        double u = uniform(rng) * total;
        std::size_t j = 0;
        while (j + 1 < x.size() && u >= d2[j]) u -= d2[j++];
        Mixture m;
        m.mu[0] = c0;
        m.mu[1] = x[j];
        double ss = 0.0;
        for (const auto& p : x) ss += std::min(dist2(p, m.mu[0]), dist2(p, m.mu[1]));
        m.var = std::max(ss / (2.0 * static_cast<double>(x.size())), 1e-300);
        if (!fit_once(x, m, opt)) continue;
        if (!found || m.ll > best.ll) {
            best = m;
            found = true;
        }
    }
    if (!found) throw DomainError("iq_project: mixture fit degenerate (single cluster?)");

    double ll_unused = 0.0;
    const int a = responsibility0(best, x[0], ll_unused) >= 0.5 ? 0 : 1;
    const int b = 1 - a;
    IqProjection out;
    out.mean_a = best.mu[a];
    out.mean_b = best.mu[b];
    out.weight_a = a == 0 ? best.w : 1.0 - best.w;
    out.delta_v = std::sqrt(dist2(out.mean_a, out.mean_b));
    if (!(out.delta_v > 0.0)) throw DomainError("iq_project: cluster means coincide");
    out.sigma = std::sqrt(best.var);
    out.snr = out.delta_v / out.sigma;
    out.log_likelihood = best.ll;
    const double ux = (out.mean_b[0] - out.mean_a[0]) / out.delta_v;
    const double uy = (out.mean_b[1] - out.mean_a[1]) / out.delta_v;
    out.values.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out.values[i] = (x[i][0] - out.mean_a[0]) * ux + (x[i][1] - out.mean_a[1]) * uy;
    }
    return out;
}

}  // namespace spinread::pipeline
