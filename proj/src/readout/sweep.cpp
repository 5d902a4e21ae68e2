#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "spinread/numeric.hpp"
#include "spinread/readout.hpp"

namespace spinread::readout {

std::string to_string(Classifier c) { return c == Classifier::hmm ? "hmm" : "threshold"; }

Classifier parse_classifier(const std::string& name) {
    if (name == "threshold") return Classifier::threshold;
    if (name == "hmm") return Classifier::hmm;
    throw DomainError("unknown classifier '" + name + "'");
}

namespace {

std::vector<MetricReport> threshold_sweep(const markov::TraceBatch& batch,
                                          std::span<const SpinState> truth,
                                          std::span<const double> t_reads, ReadoutBasis basis,
                                          const SweepOptions& opt) {
    std::vector<MetricReport> out;
    std::vector<double> avg(batch.size());
    for (double t : t_reads) {
        numeric::parallel_blocks(batch.size(), 256, [&](std::size_t, std::size_t b, std::size_t e) {
            for (std::size_t k = b; k < e; ++k) avg[k] = window_average(batch[k], t);
        });
        double threshold = 0.0;
        bool invert = false;
        if (opt.fixed_threshold) {
            threshold = *opt.fixed_threshold;
        } else {
            std::vector<double> c0, c1;
            for (std::size_t k = 0; k < batch.size(); ++k) {
                (map_basis(truth[k], basis) == 0 ? c0 : c1).push_back(avg[k]);
            }
            const auto choice = optimal_threshold_empirical(c0, c1, opt.grid);
            threshold = choice.threshold;
            invert = !choice.class1_high;
        }
        std::vector<int> pred(batch.size());
        for (std::size_t k = 0; k < batch.size(); ++k) {
            pred[k] = threshold_classify(avg[k], threshold, invert);
        }
        auto r = confusion_metrics(truth, std::span<const int>(pred), basis);
        r.classifier = "threshold";
        r.t_read = t;
        r.threshold = threshold;
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<MetricReport> hmm_sweep(const markov::HmmParams& params,
                                    const markov::TraceBatch& batch,
                                    std::span<const SpinState> truth,
                                    std::span<const double> t_reads, ReadoutBasis basis) {
    std::vector<std::size_t> order(t_reads.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return t_reads[a] < t_reads[b]; });

    const double dt = batch.front().dt;
    std::vector<std::size_t> windows(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        windows[i] = markov::window_samples(t_reads[order[i]], dt);
    }

    // pred[t_read index][trace]
    std::vector<std::vector<SpinState>> pred(t_reads.size(), std::vector<SpinState>(batch.size()));
    numeric::parallel_blocks(batch.size(), 32, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            if (windows.back() > batch[k].samples.size()) {
                throw DomainError("readout time exceeds trace duration");
            }
            const auto p0 = markov::initial_state_posteriors(params, batch[k].samples, windows);
            for (std::size_t i = 0; i < order.size(); ++i) pred[order[i]][k] = decide(p0[i]).spin;
        }
    });

    std::vector<MetricReport> out;
    for (std::size_t i = 0; i < t_reads.size(); ++i) {
        auto r = confusion_metrics(truth, std::span<const SpinState>(pred[i]), basis);
        r.classifier = "hmm";
        r.t_read = t_reads[i];
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace

std::vector<MetricReport> fidelity_sweep(const markov::HmmParams* params,
                                         const markov::TraceBatch& batch,
                                         std::span<const double> t_reads, Classifier classifier,
                                         ReadoutBasis basis, const SweepOptions& options) {
    if (batch.empty()) throw DomainError("fidelity_sweep: empty batch");
    if (t_reads.empty()) throw DomainError("fidelity_sweep: no readout times");
    std::vector<SpinState> truth(batch.size());
    for (std::size_t k = 0; k < batch.size(); ++k) {
        if (!batch[k].label) throw DomainError("fidelity_sweep: trace without ground-truth label");
        if (batch[k].dt != batch.front().dt) throw DomainError("fidelity_sweep: mixed sample intervals");
        truth[k] = *batch[k].label;
    }
    if (classifier == Classifier::threshold) {
        if (basis == ReadoutBasis::three_state) {
            throw DomainError("threshold classifier needs a binary basis");
        }
        return threshold_sweep(batch, truth, t_reads, basis, options);
    }
    if (!params) throw DomainError("HMM classifier needs model parameters");
    if (std::abs(params->dt() - batch.front().dt) > 1e-12 * params->dt()) {
        throw DomainError("model dt differs from trace dt");
    }
    return hmm_sweep(*params, batch, truth, t_reads, basis);
}

std::string sweep_csv(std::span<const MetricReport> reports) {
    using numeric::format_double;
    std::ostringstream os;
    os << "t_read_s,classifier,basis,F_m,V_m,recall_S,recall_T0,recall_Tm,n,F_balanced\n";
    for (const auto& r : reports) {
        os << format_double(r.t_read) << ',' << r.classifier << ',' << to_string(r.basis) << ','
           << format_double(r.f_m) << ',' << format_double(r.v_m) << ','
           << format_double(r.spin_recall[0]) << ',' << format_double(r.spin_recall[1]) << ','
           << format_double(r.spin_recall[2]) << ',' << r.n << ',' << format_double(r.f_balanced)
           << '\n';
    }
    return os.str();
}

}  // namespace spinread::readout
