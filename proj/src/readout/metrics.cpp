#include <cmath>
#include <limits>

#include "spinread/numeric.hpp"
#include "spinread/readout.hpp"

namespace spinread::readout {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

nlohmann::json number(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

}  // namespace

MetricReport confusion_metrics(std::span<const SpinState> truth, std::span<const int> predicted,
                               ReadoutBasis basis) {
    if (truth.size() != predicted.size()) {
        throw DomainError("confusion_metrics: truth and prediction lengths differ");
    }
    if (truth.empty()) throw DomainError("confusion_metrics: no labels");
    const int k = n_classes(basis);

    MetricReport r;
    r.basis = basis;
    r.n = truth.size();
    r.confusion.basis = basis;
    r.confusion.counts.assign(k, std::vector<std::size_t>(k, 0));
    std::array<std::size_t, markov::kSpinStates> spin_total{}, spin_ok{};
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int t = map_basis(truth[i], basis);
        const int p = predicted[i];
        if (p < 0 || p >= k) throw DomainError("confusion_metrics: predicted label out of range");
        ++r.confusion.counts[t][p];
        const int s = static_cast<int>(truth[i]);
        ++spin_total[s];
        spin_ok[s] += p == t;
    }

    const double n = static_cast<double>(r.n);
    std::size_t correct = 0;
    double recall_sum = 0.0;
    int present = 0;
    r.f_i.resize(k);
    r.recall.resize(k);
    for (int c = 0; c < k; ++c) {
        std::size_t row = 0;
        for (int p = 0; p < k; ++p) row += r.confusion.counts[c][p];
        const std::size_t ok = r.confusion.counts[c][c];
        correct += ok;
        r.f_i[c] = 1.0 - static_cast<double>(row - ok) / n;
        if (row > 0) {
            r.recall[c] = static_cast<double>(ok) / static_cast<double>(row);
            recall_sum += r.recall[c];
            ++present;
        } else {
            r.recall[c] = kNaN;
        }
    }
    double f_sum = 0.0;
    for (double f : r.f_i) f_sum += f;
    r.f_m = f_sum / k;
    r.v_m = static_cast<double>(correct) / n;
    r.f_balanced = recall_sum / present;
    for (int s = 0; s < markov::kSpinStates; ++s) {
        r.spin_recall[s] = spin_total[s] > 0
                               ? static_cast<double>(spin_ok[s]) / static_cast<double>(spin_total[s])
                               : kNaN;
    }
    return r;
}

MetricReport confusion_metrics(std::span<const SpinState> truth,
                               std::span<const SpinState> predicted, ReadoutBasis basis) {
    if (truth.size() != predicted.size()) {
        throw DomainError("confusion_metrics: truth and prediction lengths differ");
    }
    std::vector<int> mapped(predicted.size());
    for (std::size_t i = 0; i < predicted.size(); ++i) mapped[i] = map_basis(predicted[i], basis);
    return confusion_metrics(truth, std::span<const int>(mapped), basis);
}

nlohmann::json to_json(const MetricReport& r) {
    nlohmann::json j;
    j["basis"] = to_string(r.basis);
    j["classifier"] = r.classifier;
    j["t_read_s"] = r.t_read;
    j["n"] = r.n;
    j["classes"] = class_names(r.basis);
    j["confusion"] = r.confusion.counts;
    j["F_i"] = r.f_i;
    nlohmann::json recall = nlohmann::json::array();
    for (double v : r.recall) recall.push_back(number(v));
    j["recall"] = recall;
    j["F_m"] = r.f_m;
    j["V_m"] = r.v_m;
    j["F_balanced"] = r.f_balanced;
    j["recall_S"] = number(r.spin_recall[0]);
    j["recall_T0"] = number(r.spin_recall[1]);
    j["recall_Tm"] = number(r.spin_recall[2]);
    j["threshold"] = r.threshold ? nlohmann::json(*r.threshold) : nlohmann::json(nullptr);
    return j;
}

}  // namespace spinread::readout
