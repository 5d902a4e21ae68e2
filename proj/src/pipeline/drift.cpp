#include <numeric>
#include <random>

#include "spinread/numeric.hpp"
#include "spinread/pipeline.hpp"

namespace spinread::pipeline {

TraceBundle inject_drift(const TraceBundle& bundle, const DriftSpec& spec) {
    bundle.validate();
    if (spec.background_samples == 0) throw DomainError("inject_drift: background length must be >= 1");
    if (!(spec.noise_std >= 0.0)) throw DomainError("inject_drift: noise std must be >= 0");
    const auto& m = bundle.manifest;
    const std::size_t measure = m.n_samples - m.background_samples;

    TraceBundle out;
    out.manifest = m;
    out.manifest.background_samples = spec.background_samples;
    out.manifest.n_samples = spec.background_samples + measure;
    out.manifest.drift_corrected = false;
    out.data.resize(m.n_traces * out.manifest.n_samples);

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t k = 0; k < m.n_traces; ++k) {
        const double offset = spec.drift_per_trace * static_cast<double>(k);
        auto dst = out.row(k);
        for (std::size_t i = 0; i < spec.background_samples; ++i) {
            dst[i] = spec.background_level + offset + spec.noise_std * normal(rng);
        }
        const auto src = bundle.row(k);
        for (std::size_t i = 0; i < measure; ++i) {
            dst[spec.background_samples + i] = src[m.background_samples + i] + offset;
        }
    }
    return out;
}

TraceBundle drift_correct(const TraceBundle& bundle, std::size_t window) {
    bundle.validate();
    const auto& m = bundle.manifest;
    if (m.background_samples == 0) throw DomainError("drift_correct: traces carry no background segment");
    if (window == 0) throw DomainError("drift_correct: window must be >= 1");

    std::vector<double> bg(m.n_traces);
    for (std::size_t k = 0; k < m.n_traces; ++k) {
        const auto r = bundle.row(k);
        bg[k] = std::accumulate(r.begin(), r.begin() + m.background_samples, 0.0) /
                static_cast<double>(m.background_samples);
    }

    TraceBundle out = bundle;
    out.manifest.drift_corrected = true;
    for (std::size_t k = 0; k < m.n_traces; ++k) {
        double ref = bg[0];
        if (k > 0) {
            const std::size_t first = k > window ? k - window : 0;
            ref = std::accumulate(bg.begin() + first, bg.begin() + k, 0.0) /
                  static_cast<double>(k - first);
        }
        for (double& v : out.row(k)) v -= ref;
    }
    return out;
}

}  // namespace spinread::pipeline
