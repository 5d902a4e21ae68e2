#include <algorithm>
#include <cmath>

#include "kernel.hpp"
#include "spinread/numeric.hpp"

namespace spinread::markov {

namespace {

constexpr double kVarianceFloor = 1e-12;

struct Stats {
    Vector6 first{};     // posterior at step 0
    Matrix6 pairs = Matrix6::Zero();  // expected transition counts
    Vector6 w{};
    Vector6 wy{};
    Vector6 wyy{};
    double ll = 0.0;

    void add(const Stats& o) {
        for (int i = 0; i < kHiddenStates; ++i) {
            first[i] += o.first[i];
            w[i] += o.w[i];
            wy[i] += o.wy[i];
            wyy[i] += o.wyy[i];
        }
        pairs += o.pairs;
        ll += o.ll;
    }
};

Stats e_step(const HmmParams& params, const TraceBatch& batch, std::optional<double> t_read) {
    constexpr std::size_t block = 16;
    std::vector<Stats> partial(numeric::block_count(batch.size(), block));
    const detail::EmissionEval eval(params.emissions());
    const Matrix6& a = params.transition();

    numeric::parallel_blocks(batch.size(), block, [&](std::size_t b, std::size_t begin, std::size_t end) {
        detail::Workspace ws;
        Stats& st = partial[b];
        for (std::size_t k = begin; k < end; ++k) {
            const auto y = detail::window(batch[k], t_read);
            detail::run(params, eval, y, ws, true);
            st.ll += ws.log_likelihood;
            Matrix6 outer = Matrix6::Zero();
            for (std::size_t t = 0; t < y.size(); ++t) {
                detail::RowVec g = ws.alpha[t].cwiseProduct(ws.beta[t]);
                g /= g.sum();
                for (int i = 0; i < kHiddenStates; ++i) {
                    st.w[i] += g[i];
                    st.wy[i] += g[i] * y[t];
                    st.wyy[i] += g[i] * y[t] * y[t];
                }
                if (t == 0) {
                    for (int i = 0; i < kHiddenStates; ++i) st.first[i] += g[i];
                }
                if (t + 1 < y.size()) {
                    const detail::RowVec right =
                        ws.e[t + 1].cwiseProduct(ws.beta[t + 1]) / ws.scale[t + 1];
                    outer.noalias() += ws.alpha[t].transpose() * right;
                }
            }
            st.pairs += outer.cwiseProduct(a);
        }
    });

    Stats total;
    for (const auto& p : partial) total.add(p);
    return total;
}

double rate_from_probability(double p, double dt) { return -std::log1p(-p) / dt; }

RateSet m_step_rates(const Stats& st, const HmmParams& params, const EmOptions& opt) {
    RateSet r = params.rates();
    const double dt = params.dt();
    double spin[kSpinStates][kSpinStates] = {};
    double tlf[2][2] = {};
    for (int i = 0; i < kHiddenStates; ++i) {
        const auto hi = HiddenState::from_index(i);
        for (int j = 0; j < kHiddenStates; ++j) {
            const auto hj = HiddenState::from_index(j);
            spin[int(hi.spin)][int(hj.spin)] += st.pairs(i, j);
            tlf[int(hi.tlf)][int(hj.tlf)] += st.pairs(i, j);
        }
    }
    auto decay_rate = [&](SpinState s, double current) {
        const int k = int(s);
        const double n = spin[k][0] + spin[k][k];
        if (!(n > 0.0)) return current;
        const double p = std::min(spin[k][0] / n, 1.0 - 1e-15);
        return rate_from_probability(p, dt);
    };
    r.gamma_t0 = decay_rate(SpinState::T0, r.gamma_t0);
    r.gamma_tm = decay_rate(SpinState::Tm, r.gamma_tm);

    if (!opt.freeze_tlf) {
        const double ng = tlf[0][0] + tlf[0][1];
        const double ne = tlf[1][0] + tlf[1][1];
        if (ng > 0.0 && ne > 0.0) {
            const double up = tlf[0][1] / ng;
            const double down = tlf[1][0] / ne;
            const double sum = std::min(up + down, 1.0 - 1e-15);
            if (sum > 0.0) {
                const double lambda = rate_from_probability(sum, dt);
                r.tlf_up = lambda * up / (up + down);
                r.tlf_down = lambda * down / (up + down);
            } else {
                r.tlf_up = r.tlf_down = 0.0;
            }
        }
    }
    return r;
}

EmissionModel m_step_emissions(const Stats& st, const EmissionModel& old, const EmOptions& opt,
                               bool& floored) {
    EmissionModel em = old;
    auto spread = [&](int i, double mu) {
        return st.wyy[i] - 2.0 * mu * st.wy[i] + mu * mu * st.w[i];
    };

    if (opt.tie_means) {
        for (int g = 0; g < 2; ++g) {
            double num = 0.0, den = 0.0;
            for (int i = 0; i < kHiddenStates; ++i) {
                if (charge_group(i) != g) continue;
                const double prec = opt.shared_std ? 1.0 : 1.0 / (old.stds[i] * old.stds[i]);
                num += prec * st.wy[i];
                den += prec * st.w[i];
            }
            if (den > 0.0) {
                for (int i = 0; i < kHiddenStates; ++i) {
                    if (charge_group(i) == g) em.means[i] = num / den;
                }
            }
        }
    } else {
        for (int i = 0; i < kHiddenStates; ++i) {
            if (st.w[i] > 0.0) em.means[i] = st.wy[i] / st.w[i];
        }
    }

    auto floor_var = [&](double v) {
        if (!(v >= kVarianceFloor)) {
            floored = true;
            return kVarianceFloor;
        }
        return v;
    };

    if (opt.shared_std) {
        double ss = 0.0, n = 0.0;
        for (int i = 0; i < kHiddenStates; ++i) {
            ss += spread(i, em.means[i]);
            n += st.w[i];
        }
        if (n > 0.0) {
            const double s = std::sqrt(floor_var(ss / n));
            em.stds.fill(s);
        }
    } else {
        for (int i = 0; i < kHiddenStates; ++i) {
            if (st.w[i] > 0.0) em.stds[i] = std::sqrt(floor_var(spread(i, em.means[i]) / st.w[i]));
        }
    }
    return em;
}

}  // namespace

EmResult em_fit(const TraceBatch& batch, const HmmParams& init, const EmOptions& opt) {
    if (batch.empty()) throw DomainError("em_fit: empty batch");
    if (!(opt.tol > 0.0) || opt.max_iter < 1) throw DomainError("em_fit: invalid tol or max_iter");
    for (const auto& tr : batch) {
        if (std::abs(tr.dt - init.dt()) > 1e-12 * init.dt()) {
            throw DomainError("em_fit: trace dt differs from model dt");
        }
    }

    EmResult result{init, {}, 0, false, false};
    Stats st = e_step(init, batch, opt.t_read);
    result.log_likelihoods.push_back(st.ll);

    for (int iter = 1; iter <= opt.max_iter; ++iter) {
        const HmmParams& cur = result.params;
        Vector6 pi{};
        double n0 = 0.0;
        for (double f : st.first) n0 += f;
        for (int i = 0; i < kHiddenStates; ++i) pi[i] = st.first[i] / n0;
        const RateSet rates = m_step_rates(st, cur, opt);
        const EmissionModel em = opt.freeze_emissions
                                     ? cur.emissions()
                                     : m_step_emissions(st, cur.emissions(), opt, result.variance_floored);

        HmmParams next(pi, rates, cur.dt(), em);
        Stats st_next = e_step(next, batch, opt.t_read);
        result.params = next;
        result.iterations = iter;
        result.log_likelihoods.push_back(st_next.ll);

        const double prev = st.ll;
        st = std::move(st_next);
        if (std::abs(st.ll - prev) <= opt.tol * std::abs(prev)) {
            result.converged = true;
            break;
        }
    }
    return result;
}

}  // namespace spinread::markov
