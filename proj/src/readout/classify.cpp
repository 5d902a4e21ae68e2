#include <algorithm>
#include <cmath>
#include <numeric>

#include "spinread/numeric.hpp"
#include "spinread/readout.hpp"

namespace spinread::readout {

std::string to_string(ReadoutBasis b) {
    switch (b) {
        case ReadoutBasis::three_state: return "three_state";
        case ReadoutBasis::parity: return "parity";
        case ReadoutBasis::singlet_triplet: return "singlet_triplet";
    }
    return "?";
}

ReadoutBasis parse_basis(const std::string& name) {
    if (name == "three_state") return ReadoutBasis::three_state;
    if (name == "parity") return ReadoutBasis::parity;
    if (name == "singlet_triplet") return ReadoutBasis::singlet_triplet;
    throw DomainError("unknown readout basis '" + name + "'");
}

int n_classes(ReadoutBasis b) { return b == ReadoutBasis::three_state ? 3 : 2; }

std::vector<std::string> class_names(ReadoutBasis b) {
    switch (b) {
        case ReadoutBasis::three_state: return {"S", "T0", "Tm"};
        case ReadoutBasis::parity: return {"odd", "even"};
        case ReadoutBasis::singlet_triplet: return {"singlet", "triplet"};
    }
    return {};
}

int map_basis(SpinState s, ReadoutBasis b) {
    switch (b) {
        case ReadoutBasis::three_state: return static_cast<int>(s);
        case ReadoutBasis::parity: return s == SpinState::Tm ? 1 : 0;
        case ReadoutBasis::singlet_triplet: return s == SpinState::S ? 0 : 1;
    }
    return 0;
}

double window_average(const markov::Trace& trace, double t_read) {
    trace.validate();
    const std::size_t n = markov::window_samples(t_read, trace.dt);
    if (n > trace.samples.size()) throw DomainError("readout time exceeds trace duration");
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += trace.samples[i];
    return acc / static_cast<double>(n);
}

namespace {

struct SortedClasses {
    std::vector<double> low;
    std::vector<double> high;

    // Fidelity of "high iff v > th".
    double fidelity(double th) const {
        const auto low_ok = std::upper_bound(low.begin(), low.end(), th) - low.begin();
        const auto high_ok = high.end() - std::upper_bound(high.begin(), high.end(), th);
        return 0.5 * (static_cast<double>(low_ok) / low.size() +
                      static_cast<double>(high_ok) / high.size());
    }
};

double mean(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double balanced_fidelity(std::span<const double> class0, std::span<const double> class1,
                         double threshold, bool class1_high) {
    if (class0.empty() || class1.empty()) throw DomainError("balanced_fidelity: empty class");
    const auto& low = class1_high ? class0 : class1;
    const auto& high = class1_high ? class1 : class0;
    std::size_t low_ok = 0, high_ok = 0;
    for (double v : low) low_ok += v <= threshold;
    for (double v : high) high_ok += v > threshold;
    return 0.5 * (static_cast<double>(low_ok) / low.size() +
                  static_cast<double>(high_ok) / high.size());
}

ThresholdChoice optimal_threshold_empirical(std::span<const double> class0,
                                            std::span<const double> class1, int grid) {
    if (class0.empty() || class1.empty()) {
        throw DomainError("optimal_threshold_empirical: both classes need at least one value");
    }
    if (grid < 2) throw DomainError("optimal_threshold_empirical: grid must be >= 2");

    ThresholdChoice out;
    out.class1_high = mean(class1) >= mean(class0);
    SortedClasses sc;
    const auto& low = out.class1_high ? class0 : class1;
    const auto& high = out.class1_high ? class1 : class0;
    sc.low.assign(low.begin(), low.end());
    sc.high.assign(high.begin(), high.end());
    std::sort(sc.low.begin(), sc.low.end());
    std::sort(sc.high.begin(), sc.high.end());

    std::vector<double> u(sc.low);
    u.insert(u.end(), sc.high.begin(), sc.high.end());
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    const double lo = u.front();
    const double hi = u.back();
    if (lo == hi) {
        out.threshold = lo;
        out.fidelity = sc.fidelity(lo);
        return out;
    }

    const double step = (hi - lo) / (grid - 1);
    int best = 0;
    double best_f = -1.0;
    for (int k = 0; k < grid; ++k) {
        const double f = sc.fidelity(lo + step * k);
        if (f > best_f) {
            best_f = f;
            best = k;
        }
    }

    // F is constant on [u_k, u_{k+1}); interval index k in [0, m).
    const auto m = static_cast<std::ptrdiff_t>(u.size());
    auto interval_of = [&](double th) {
        return std::upper_bound(u.begin(), u.end(), th) - u.begin() - 1;
    };
    auto f_of = [&](std::ptrdiff_t k) { return sc.fidelity(u[k]); };

    const std::ptrdiff_t k_lo = std::max<std::ptrdiff_t>(0, interval_of(lo + step * (best - 1)));
    const std::ptrdiff_t k_hi = std::min<std::ptrdiff_t>(m - 1, interval_of(lo + step * (best + 1)));
    std::ptrdiff_t k_best = k_lo;
    double f_best = f_of(k_lo);
    for (std::ptrdiff_t k = k_lo + 1; k <= k_hi; ++k) {
        const double f = f_of(k);
        if (f > f_best) {
            f_best = f;
            k_best = k;
        }
    }
    std::ptrdiff_t start = k_best;
    std::ptrdiff_t end = k_best;
    while (start > 0 && f_of(start - 1) == f_best) --start;
    while (end + 1 < m && f_of(end + 1) == f_best) ++end;

    const double left = u[start];
    const double right = end + 1 < m ? u[end + 1] : u[end];
    out.threshold = 0.5 * (left + right);
    out.fidelity = sc.fidelity(out.threshold);
    return out;
}

int threshold_classify(double avg, double threshold, bool invert) {
    const int above = avg > threshold ? 1 : 0;
    return invert ? 1 - above : above;
}

HmmDecision decide(const markov::Vector6& p0) {
    HmmDecision d;
    for (int i = 0; i < markov::kHiddenStates; ++i) d.mass[i % markov::kSpinStates] += p0[i];
    int best = 0;
    for (int s = 1; s < markov::kSpinStates; ++s) {
        if (d.mass[s] > d.mass[best]) best = s;
    }
    for (int s = 0; s < markov::kSpinStates; ++s) {
        if (s != best && d.mass[s] == d.mass[best]) d.tie = true;
    }
    d.spin = static_cast<SpinState>(best);
    return d;
}

HmmDecision hmm_classify(const markov::HmmParams& params, const markov::Trace& trace,
                         double t_read) {
    const auto post = markov::forward_backward(params, trace, t_read);
    return decide(post.probs.front());
}

}  // namespace spinread::readout
