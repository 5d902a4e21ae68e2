#include <algorithm>
#include <cmath>
#include <limits>

#include "spinread/analytic.hpp"
#include "spinread/constants.hpp"
#include "spinread/numeric.hpp"

namespace spinread::analytic {

namespace {

// Internal vector: v_s, v_t, ln sigma0, [ln t1_t0], ln t1_tm, [z_t0], z_tm.
struct Layout {
    bool three;
    std::size_t size() const { return three ? 7 : 5; }

    DensityParams unpack(std::span<const double> x, const DensityParams& base) const {
        DensityParams p = base;
        p.v_s = x[0];
        p.v_t = x[1];
        p.sigma0 = std::exp(x[2]);
        if (three) {
            p.t1_t0 = std::exp(x[3]);
            p.t1_tm = std::exp(x[4]);
            const double m = std::max({0.0, x[5], x[6]});
            const double e_s = std::exp(-m), e0 = std::exp(x[5] - m), e1 = std::exp(x[6] - m);
            const double z = e_s + e0 + e1;
            p.p_s = e_s / z;
            p.p_t0 = e0 / z;
            p.p_tm = e1 / z;
        } else {
            p.t1_tm = std::exp(x[3]);
            const double m = std::max(0.0, x[4]);
            const double e_s = std::exp(-m), e1 = std::exp(x[4] - m);
            p.p_s = e_s / (e_s + e1);
            p.p_t0 = 0.0;
            p.p_tm = e1 / (e_s + e1);
        }
        return p;
    }

    std::vector<double> natural(const DensityParams& p) const {
        if (three) return {p.v_s, p.v_t, p.sigma0, p.t1_t0, p.t1_tm, p.p_s, p.p_t0, p.p_tm};
        return {p.v_s, p.v_t, p.sigma0, p.t1_tm, p.p_s, p.p_tm};
    }

    std::vector<std::string> names() const {
        if (three) return {"v_s", "v_t", "sigma0", "t1_t0_s", "t1_tm_s", "p_s", "p_t0", "p_tm"};
        return {"v_s", "v_t", "sigma0", "t1_tm_s", "p_s", "p_tm"};
    }
};

double log_fraction(double p) {
    p = std::clamp(p, 1e-12, 1.0 - 1e-12);
    return std::log(p);
}

}  // namespace

HistogramFit fit_histogram(std::span<const double> centers, std::span<const double> counts,
                           double t, DensityMode mode, const DensityParams& init,
                           const physics::FitOptions& options) {
    init.validate();
    if (!(t > 0.0)) throw DomainError("integration time must be > 0");
    if (centers.size() != counts.size()) throw DomainError("fit_histogram: column lengths differ");
    if (centers.size() < 8) throw DomainError("fit_histogram: too few bins");
    const double width = centers[1] - centers[0];
    if (!(width > 0.0)) throw DomainError("fit_histogram: bin centres must increase");
    for (std::size_t i = 1; i < centers.size(); ++i) {
        if (std::abs(centers[i] - centers[i - 1] - width) > 1e-6 * width) {
            throw DomainError("fit_histogram: bins must be uniform");
        }
    }
    double total = 0.0;
    for (double c : counts) {
        if (!(c >= 0.0)) throw DomainError("fit_histogram: negative count");
        total += c;
    }
    if (!(total > 0.0)) throw DomainError("fit_histogram: empty histogram");

    const Layout layout{mode == DensityMode::three_state};
    const double span = centers.back() - centers.front();
    const double ln_t = std::log(t);

    physics::LeastSquaresProblem prob;
    prob.n_params = layout.size();
    prob.n_residuals = centers.size();
    std::vector<double> x0;
    auto add = [&](double value, double lo, double hi) {
        prob.lower.push_back(lo);
        prob.upper.push_back(hi);
        x0.push_back(std::clamp(value, lo, hi));
    };
    add(init.v_s, centers.front() - span, centers.back() + span);
    add(init.v_t, centers.front() - span, centers.back() + span);
    add(std::log(init.sigma0), std::log(init.sigma0) - 10.0, std::log(init.sigma0) + 10.0);
    if (layout.three) add(std::log(init.t1_t0), ln_t - 12.0, ln_t + 12.0);
    add(std::log(init.t1_tm), ln_t - 12.0, ln_t + 12.0);
    const double ref = std::max(init.p_s, 1e-12);
    if (layout.three) add(log_fraction(init.p_t0) - std::log(ref), -30.0, 30.0);
    add(log_fraction(init.p_tm) - std::log(ref), -30.0, 30.0);

    std::vector<double> sqrt_w(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) sqrt_w[i] = 1.0 / std::sqrt(std::max(counts[i], 1.0));

    prob.residuals = [&](std::span<const double> x, std::span<double> out) {
        DensityParams p = layout.unpack(x, init);
        if (p.v_s == p.v_t) p.v_t = p.v_s + 1e-12;
        for (std::size_t i = 0; i < centers.size(); ++i) {
            const double model = total * width * combined_density(centers[i], t, p, mode);
            out[i] = sqrt_w[i] * (counts[i] - model);
        }
    };

    HistogramFit out;
    out.fit = physics::least_squares(prob, x0, options);
    out.params = layout.unpack(out.fit.params, init);
    out.names = layout.names();
    out.values = layout.natural(out.params);

    const std::size_t n = layout.size();
    const std::size_t m = out.values.size();
    out.sigmas.assign(m, std::numeric_limits<double>::quiet_NaN());
    if (out.fit.status != physics::FitStatus::singular_jacobian) {
        Eigen::MatrixXd jac(m, n);
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<double> xp = out.fit.params, xm = out.fit.params;
            const double h = 1e-6 * std::max(1.0, std::abs(xp[j]));
            xp[j] += h;
            xm[j] -= h;
            const auto gp = layout.natural(layout.unpack(xp, init));
            const auto gm = layout.natural(layout.unpack(xm, init));
            for (std::size_t i = 0; i < m; ++i) jac(i, j) = (gp[i] - gm[i]) / (2.0 * h);
        }
        const Eigen::MatrixXd cov = jac * out.fit.covariance * jac.transpose();
        for (std::size_t i = 0; i < m; ++i) out.sigmas[i] = std::sqrt(std::max(0.0, cov(i, i)));
    }
    return out;
}

nlohmann::json to_json(const HistogramFit& f) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    nlohmann::json values, sigmas;
    for (std::size_t i = 0; i < f.names.size(); ++i) {
        values[f.names[i]] = num(f.values[i]);
        sigmas[f.names[i]] = num(f.sigmas[i]);
    }
    const auto& p = f.params;
    return {
        {"params", values},
        {"sigmas", sigmas},
        {"t0_s", p.t0},
        {"t1_t0_us", num(p.t1_t0 / units::us)},
        {"t1_tm_us", num(p.t1_tm / units::us)},
        {"residual_norm", f.fit.residual_norm},
        {"n_iterations", f.fit.n_iterations},
        {"converged", f.fit.converged},
        {"status", physics::to_string(f.fit.status)},
    };
}

}  // namespace spinread::analytic
