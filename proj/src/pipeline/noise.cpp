#include <cmath>
#include <limits>

#include "spinread/numeric.hpp"
#include "spinread/pipeline.hpp"

namespace spinread::pipeline {

NoiseScaling noise_scaling(const markov::TraceBatch& batch, std::span<const double> t_reads,
                           readout::ReadoutBasis basis, std::optional<double> fit_max_t) {
    if (batch.empty()) throw DomainError("noise_scaling: empty batch");
    if (t_reads.empty()) throw DomainError("noise_scaling: no readout times");
    if (basis == readout::ReadoutBasis::three_state) {
        throw DomainError("noise_scaling: needs a two-class basis");
    }
    for (const auto& tr : batch) {
        if (!tr.label) throw DomainError("noise_scaling: traces need ground-truth labels");
    }

    NoiseScaling out;
    for (double t : t_reads) {
        double n[2] = {0, 0}, s[2] = {0, 0}, ss[2] = {0, 0};
        for (const auto& tr : batch) {
            const int c = readout::map_basis(*tr.label, basis);
            const double v = readout::window_average(tr, t);
            n[c] += 1.0;
            s[c] += v;
            ss[c] += v * v;
        }
        if (n[0] < 2.0 || n[1] < 2.0) throw DomainError("noise_scaling: fewer than two traces in a class");
        double mean[2], var[2];
        for (int c = 0; c < 2; ++c) {
            mean[c] = s[c] / n[c];
            var[c] = (ss[c] - n[c] * mean[c] * mean[c]) / (n[c] - 1.0);
        }
        const double pooled = std::sqrt(0.5 * (var[0] + var[1]));
        out.t_read.push_back(t);
        out.inv_snr.push_back(pooled / std::abs(mean[1] - mean[0]));
    }

    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < out.t_read.size(); ++i) {
        if (fit_max_t && out.t_read[i] > *fit_max_t) continue;
        xs.push_back(1.0 / std::sqrt(out.t_read[i]));
        ys.push_back(out.inv_snr[i]);
    }
    out.n_fit = xs.size();
    if (xs.size() < 2) return out;

    const auto m = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (!(sxx > 0.0)) return out;
    out.fitted = true;
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    if (xs.size() > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double r = ys[i] - out.intercept - out.slope * xs[i];
            rss += r * r;
        }
        const double s2 = rss / (m - 2.0);
        out.slope_se = std::sqrt(s2 / sxx);
        out.intercept_se = std::sqrt(s2 * (1.0 / m + mx * mx / sxx));
    } else {
        out.slope_se = out.intercept_se = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

nlohmann::json to_json(const NoiseScaling& n) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    nlohmann::json j;
    j["t_read_s"] = n.t_read;
    j["inv_snr"] = n.inv_snr;
    j["fitted"] = n.fitted;
    j["n_fit"] = n.n_fit;
    if (n.fitted) {
        j["slope"] = num(n.slope);
        j["intercept"] = num(n.intercept);
        j["slope_se"] = num(n.slope_se);
        j["intercept_se"] = num(n.intercept_se);
    }
    return j;
}

}  // namespace spinread::pipeline
