#include <algorithm>
#include <cmath>
#include <numeric>

#include "spinread/markov.hpp"
#include "spinread/numeric.hpp"

namespace spinread::markov {

std::string to_string(SpinState s) {
    switch (s) {
        case SpinState::S: return "S";
        case SpinState::T0: return "T0";
        case SpinState::Tm: return "Tm";
    }
    return "?";
}

SpinState parse_spin_state(const std::string& name) {
    if (name == "S") return SpinState::S;
    if (name == "T0") return SpinState::T0;
    if (name == "Tm" || name == "T-") return SpinState::Tm;
    throw DomainError("unknown spin state '" + name + "'");
}

void RateSet::validate() const {
    for (double r : {gamma_t0, gamma_tm, tlf_up, tlf_down}) {
        if (!(r >= 0.0 && std::isfinite(r))) throw DomainError("rates must be finite and >= 0");
    }
}

int charge_group(int i) {
    const auto h = HiddenState::from_index(i);
    const bool triplet = h.spin != SpinState::S;
    const bool excited = h.tlf == TlfState::excited;
    return triplet != excited ? 1 : 0;
}

EmissionModel EmissionModel::charge_tied(double low, double high, double std) {
    EmissionModel e;
    for (int i = 0; i < kHiddenStates; ++i) {
        e.means[i] = charge_group(i) == 0 ? low : high;
        e.stds[i] = std;
    }
    return e;
}

void EmissionModel::validate() const {
    for (int i = 0; i < kHiddenStates; ++i) {
        if (!std::isfinite(means[i])) throw DomainError("emission means must be finite");
        if (!(stds[i] > 0.0 && std::isfinite(stds[i]))) throw DomainError("emission stds must be > 0");
    }
}

Matrix6 build_generator(const RateSet& rates) {
    rates.validate();
    Matrix6 q = Matrix6::Zero();
    for (int tlf = 0; tlf < 2; ++tlf) {
        const int s = HiddenState{SpinState::S, TlfState(tlf)}.index();
        q(HiddenState{SpinState::T0, TlfState(tlf)}.index(), s) = rates.gamma_t0;
        q(HiddenState{SpinState::Tm, TlfState(tlf)}.index(), s) = rates.gamma_tm;
    }
    for (int spin = 0; spin < kSpinStates; ++spin) {
        const int g = HiddenState{SpinState(spin), TlfState::ground}.index();
        const int e = HiddenState{SpinState(spin), TlfState::excited}.index();
        q(g, e) = rates.tlf_up;
        q(e, g) = rates.tlf_down;
    }
    for (int i = 0; i < kHiddenStates; ++i) q(i, i) = -q.row(i).sum();
    return q;
}

Matrix6 transition_matrix(const Matrix6& q, double dt) {
    if (!(dt > 0.0)) throw DomainError("dt must be > 0");
    Matrix6 m = q * dt;
    const double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    if (norm > 0.5) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
        m /= std::ldexp(1.0, squarings);
    }
    Matrix6 a = Matrix6::Identity();
    Matrix6 term = Matrix6::Identity();
    for (int k = 1; k <= 20; ++k) {
        term = term * m / static_cast<double>(k);
        a += term;
    }
    for (int k = 0; k < squarings; ++k) a = a * a;
    for (int i = 0; i < kHiddenStates; ++i) {
        for (int j = 0; j < kHiddenStates; ++j) a(i, j) = std::clamp(a(i, j), 0.0, 1.0);
        a.row(i) /= a.row(i).sum();
    }
    return a;
}

HmmParams::HmmParams(const Vector6& pi, const RateSet& rates, double dt,
                     const EmissionModel& emissions)
    : pi_(pi), rates_(rates), dt_(dt), emissions_(emissions) {
    if (!(dt > 0.0 && std::isfinite(dt))) throw DomainError("dt must be > 0");
    double total = 0.0;
    for (double p : pi) {
        if (!(p >= 0.0)) throw DomainError("initial probabilities must be >= 0");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("initial probabilities must sum to 1");
    emissions.validate();
    a_ = transition_matrix(build_generator(rates), dt);
}

HmmParams HmmParams::from_spin_prior(const std::array<double, kSpinStates>& spin_pi,
                                     const RateSet& rates, double dt,
                                     const EmissionModel& emissions) {
    Vector6 pi{};
    for (int s = 0; s < kSpinStates; ++s) pi[s] = spin_pi[s];
    return {pi, rates, dt, emissions};
}

std::array<double, kSpinStates> HmmParams::spin_prior() const {
    std::array<double, kSpinStates> out{};
    for (int i = 0; i < kHiddenStates; ++i) out[i % kSpinStates] += pi_[i];
    return out;
}

void Trace::validate() const {
    if (!(dt > 0.0)) throw DomainError("trace dt must be > 0");
    if (samples.empty()) throw DomainError("trace has no samples");
}

std::size_t window_samples(double t_read, double dt) {
    if (!(dt > 0.0)) throw DomainError("dt must be > 0");
    if (!(t_read > 0.0) || t_read < dt * (1.0 - 1e-9)) {
        throw DomainError("readout time shorter than one sample interval");
    }
    const auto n = static_cast<std::size_t>(std::floor(t_read / dt * (1.0 + 1e-9)));
    return std::max<std::size_t>(n, 1);
}

}  // namespace spinread::markov
