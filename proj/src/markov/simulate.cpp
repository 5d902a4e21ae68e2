#include <random>

#include "spinread/markov.hpp"
#include "spinread/numeric.hpp"

namespace spinread::markov {

namespace {

int draw(const Vector6& cumulative, double u) {
    for (int i = 0; i < kHiddenStates - 1; ++i) {
        if (u < cumulative[i]) return i;
    }
    return kHiddenStates - 1;
}

Vector6 cumulate(const double* row) {
    Vector6 c{};
    double acc = 0.0;
    for (int i = 0; i < kHiddenStates; ++i) {
        acc += row[i];
        c[i] = acc;
    }
    return c;
}

}  // namespace

SimulatedBatch simulate_batch(const HmmParams& params, std::size_t n_traces,
                              std::size_t n_samples, std::uint64_t seed, bool keep_paths) {
    if (n_traces == 0 || n_samples == 0) throw DomainError("simulate_batch: counts must be >= 1");

    const Vector6 pi_cum = cumulate(params.pi().data());
    std::array<Vector6, kHiddenStates> row_cum;
    for (int i = 0; i < kHiddenStates; ++i) row_cum[i] = cumulate(params.transition().row(i).data());
    const auto& em = params.emissions();

    SimulatedBatch out;
    out.traces.resize(n_traces);
    if (keep_paths) out.paths.resize(n_traces);

    numeric::parallel_blocks(n_traces, 64, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                              static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
            std::mt19937_64 rng(seq);
            std::uniform_real_distribution<double> uniform(0.0, 1.0);
            std::normal_distribution<double> normal(0.0, 1.0);

            Trace& tr = out.traces[k];
            tr.dt = params.dt();
            tr.samples.resize(n_samples);
            std::vector<std::uint8_t>* path = keep_paths ? &out.paths[k] : nullptr;
            if (path) path->resize(n_samples);

            int state = draw(pi_cum, uniform(rng));
            tr.label = HiddenState::from_index(state).spin;
            for (std::size_t t = 0; t < n_samples; ++t) {
                if (t > 0) state = draw(row_cum[state], uniform(rng));
                tr.samples[t] = em.means[state] + em.stds[state] * normal(rng);
                if (path) (*path)[t] = static_cast<std::uint8_t>(state);
            }
        }
    });
    return out;
}

}  // namespace spinread::markov
