#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "kernel.hpp"
#include "spinread/numeric.hpp"

namespace spinread::markov {

namespace detail {

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178;
}

EmissionEval::EmissionEval(const EmissionModel& em) {
    for (int i = 0; i < kHiddenStates; ++i) {
        int found = -1;
        for (int u = 0; u < n_unique_; ++u) {
            if (mean_[u] == em.means[i] && inv_std_[u] == 1.0 / em.stds[i]) {
                found = u;
                break;
            }
        }
        if (found < 0) {
            found = n_unique_++;
            mean_[found] = em.means[i];
            inv_std_[found] = 1.0 / em.stds[i];
            log_norm_[found] = -std::log(em.stds[i]) - kHalfLog2Pi;
        }
        map_[i] = found;
    }
}

double EmissionEval::operator()(double y, double* e) const {
    std::array<double, kHiddenStates> lb{};
    double top = -std::numeric_limits<double>::infinity();
    for (int u = 0; u < n_unique_; ++u) {
        const double z = (y - mean_[u]) * inv_std_[u];
        lb[u] = log_norm_[u] - 0.5 * z * z;
        top = std::max(top, lb[u]);
    }
    std::array<double, kHiddenStates> ex{};
    for (int u = 0; u < n_unique_; ++u) ex[u] = std::exp(lb[u] - top);
    for (int i = 0; i < kHiddenStates; ++i) e[i] = ex[map_[i]];
    return top;
}

void run(const HmmParams& params, const EmissionEval& eval, std::span<const double> y,
         Workspace& ws, bool backward) {
    const std::size_t n = y.size();
    const Matrix6& a = params.transition();
    ws.e.resize(n);
    ws.alpha.resize(n);
    ws.scale.resize(n);

    double ll = 0.0;
    RowVec prior = Eigen::Map<const RowVec>(params.pi().data());
    for (std::size_t t = 0; t < n; ++t) {
        const double top = eval(y[t], ws.e[t].data());
        if (t > 0) prior = ws.alpha[t - 1] * a;
        RowVec f = prior.cwiseProduct(ws.e[t]);
        const double c = f.sum();
        if (!(c > 0.0) || !std::isfinite(c)) {
            throw NumericalError("forward pass: emission likelihoods underflow at step " +
                                 std::to_string(t));
        }
        ws.alpha[t] = f / c;
        ws.scale[t] = c;
        ll += std::log(c) + top;
    }
    ws.log_likelihood = ll;

    if (!backward) return;
    ws.beta.resize(n);
    ws.beta[n - 1].setOnes();
    for (std::size_t t = n - 1; t-- > 0;) {
        const RowVec g = ws.e[t + 1].cwiseProduct(ws.beta[t + 1]);
        ws.beta[t] = (a * g.transpose()).transpose() / ws.scale[t + 1];
    }
}

std::span<const double> window(const Trace& trace, std::optional<double> t_read) {
    trace.validate();
    if (!t_read) return trace.samples;
    const std::size_t n = window_samples(*t_read, trace.dt);
    if (n > trace.samples.size()) {
        throw DomainError("readout time exceeds trace duration");
    }
    return {trace.samples.data(), n};
}

}  // namespace detail

Posterior forward_backward(const HmmParams& params, const Trace& trace,
                           std::optional<double> t_read) {
    const auto y = detail::window(trace, t_read);
    detail::EmissionEval eval(params.emissions());
    detail::Workspace ws;
    detail::run(params, eval, y, ws, true);

    Posterior out;
    out.log_likelihood = ws.log_likelihood;
    out.probs.resize(y.size());
    for (std::size_t t = 0; t < y.size(); ++t) {
        detail::RowVec g = ws.alpha[t].cwiseProduct(ws.beta[t]);
        g /= g.sum();
        std::copy(g.data(), g.data() + kHiddenStates, out.probs[t].begin());
    }
    return out;
}

Posterior brute_force_posterior(const HmmParams& params, const Trace& trace) {
    trace.validate();
    const std::size_t n = trace.samples.size();
    if (n > kBruteForceMaxLength) {
        throw DomainError("brute_force_posterior: trace longer than " +
                          std::to_string(kBruteForceMaxLength) + " samples");
    }
    const auto& em = params.emissions();
    const Matrix6& a = params.transition();

    std::vector<std::array<double, kHiddenStates>> b(n);
    double log_offset = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        std::array<double, kHiddenStates> lb{};
        for (int i = 0; i < kHiddenStates; ++i) {
            lb[i] = std::log(numeric::normal_pdf(trace.samples[t], em.means[i], em.stds[i]));
        }
        const double top = *std::max_element(lb.begin(), lb.end());
        for (int i = 0; i < kHiddenStates; ++i) b[t][i] = std::exp(lb[i] - top);
        log_offset += top;
    }

    std::vector<Vector6> mass(n, Vector6{});
    std::vector<int> path(n);
    double total = 0.0;
    std::function<void(std::size_t, double)> visit = [&](std::size_t t, double w) {
        for (int j = 0; j < kHiddenStates; ++j) {
            const double step = t == 0 ? params.pi()[j] : a(path[t - 1], j);
            const double wj = w * step * b[t][j];
            if (wj == 0.0) continue;
            path[t] = j;
            if (t + 1 == n) {
                total += wj;
                for (std::size_t s = 0; s < n; ++s) mass[s][path[s]] += wj;
            } else {
                visit(t + 1, wj);
            }
        }
    };
    visit(0, 1.0);
    if (!(total > 0.0)) throw NumericalError("brute_force_posterior: zero total path weight");

    Posterior out;
    out.probs = std::move(mass);
    for (auto& row : out.probs) {
        for (double& p : row) p /= total;
    }
    out.log_likelihood = std::log(total) + log_offset;
    return out;
}

double log_likelihood(const HmmParams& params, const TraceBatch& batch,
                      std::optional<double> t_read) {
    if (batch.empty()) throw DomainError("log_likelihood: empty batch");
    constexpr std::size_t block = 16;
    std::vector<double> partial(numeric::block_count(batch.size(), block), 0.0);
    detail::EmissionEval eval(params.emissions());
    numeric::parallel_blocks(batch.size(), block, [&](std::size_t b, std::size_t begin, std::size_t end) {
        detail::Workspace ws;
        double acc = 0.0;
        for (std::size_t k = begin; k < end; ++k) {
            detail::run(params, eval, detail::window(batch[k], t_read), ws, false);
            acc += ws.log_likelihood;
        }
        partial[b] = acc;
    });
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

std::vector<Vector6> initial_state_posteriors(const HmmParams& params,
                                              std::span<const double> samples,
                                              std::span<const std::size_t> windows) {
    if (samples.empty()) throw DomainError("initial_state_posteriors: empty trace");
    for (std::size_t k = 0; k < windows.size(); ++k) {
        if (windows[k] < 1 || windows[k] > samples.size() || (k > 0 && windows[k] < windows[k - 1])) {
            throw DomainError("initial_state_posteriors: windows must be ascending within the trace");
        }
    }
    std::vector<Vector6> out(windows.size());
    if (windows.empty()) return out;

    detail::EmissionEval eval(params.emissions());
    const Matrix6& a = params.transition();
    detail::RowVec e;
    Matrix6 m = Matrix6::Zero();
    eval(samples[0], e.data());
    for (int i = 0; i < kHiddenStates; ++i) m(i, i) = params.pi()[i] * e[i];

    std::size_t next = 0;
    const std::size_t last = windows.back();
    for (std::size_t t = 0; t < last; ++t) {
        if (t > 0) {
            eval(samples[t], e.data());
            m = (m * a) * e.asDiagonal();
        }
        const double s = m.sum();
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw NumericalError("initial_state_posteriors: underflow at step " + std::to_string(t));
        }
        m /= s;
        while (next < windows.size() && windows[next] == t + 1) {
            const auto rows = m.rowwise().sum();
            for (int i = 0; i < kHiddenStates; ++i) out[next][i] = rows[i];
            ++next;
        }
    }
    return out;
}

}  // namespace spinread::markov
