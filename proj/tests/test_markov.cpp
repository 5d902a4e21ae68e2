#include <doctest.h>

#include <cmath>
#include <random>

#include "random_hmm.hpp"
#include "spinread/constants.hpp"
#include "spinread/numeric.hpp"

using namespace spinread;
using namespace spinread::markov;

namespace {

constexpr int SG = 0, T0G = 1, TmG = 2, SE = 3, T0E = 4, TmE = 5;

HmmParams device_model(double dt = 1e-6) {
    const RateSet rates{1.0 / 170e-6, 1.0 / 0.29, 0.0, 0.0};
    const double sigma = std::sqrt(3.3e-6 / dt);
    return HmmParams::from_spin_prior({0.25, 0.25, 0.5}, rates, dt,
                                      EmissionModel::charge_tied(0.0, 1.0, sigma));
}

double normal_pdf(double y, double m, double s) {
    return std::exp(-0.5 * (y - m) * (y - m) / (s * s)) / (std::sqrt(2.0 * constants::pi) * s);
}

}  // namespace

TEST_CASE("hidden-state indexing and charge groups") {
    for (int i = 0; i < kHiddenStates; ++i) CHECK(HiddenState::from_index(i).index() == i);
    CHECK(charge_group(SG) == 0);
    CHECK(charge_group(T0E) == 0);
    CHECK(charge_group(TmE) == 0);
    CHECK(charge_group(T0G) == 1);
    CHECK(charge_group(TmG) == 1);
    CHECK(charge_group(SE) == 1);
    CHECK(parse_spin_state("T-") == SpinState::Tm);
    CHECK(to_string(SpinState::T0) == "T0");
    CHECK_THROWS_AS(parse_spin_state("T+"), DomainError);
}

TEST_CASE("generator structure") {
    CHECK(build_generator({}).isZero(0.0));

    const auto q = build_generator({0.0, 50.0, 0.0, 0.0});
    int off_diagonal = 0;
    for (int i = 0; i < kHiddenStates; ++i)
        for (int j = 0; j < kHiddenStates; ++j)
            if (i != j && q(i, j) != 0.0) ++off_diagonal;
    CHECK(off_diagonal == 2);
    CHECK(q(TmG, SG) == 50.0);
    CHECK(q(TmE, SE) == 50.0);

    const auto g = build_generator({3.0, 5.0, 7.0, 11.0});
    for (int i = 0; i < kHiddenStates; ++i) CHECK(g.row(i).sum() == 0.0);
    CHECK(g(SG, SE) == 7.0);
    CHECK(g(T0E, T0G) == 11.0);
    CHECK(g(T0E, SE) == 3.0);
    CHECK(g(SG, T0G) == 0.0);
    CHECK_THROWS_AS(build_generator({-1.0, 0.0, 0.0, 0.0}), DomainError);
}

TEST_CASE("transition matrix") {
    const RateSet rates{1.0 / 170e-6, 1.0 / 0.29, 800.0, 1200.0};
    const auto q = build_generator(rates);
    CHECK((transition_matrix(q, 1e-15) - Matrix6::Identity()).cwiseAbs().maxCoeff() < 1e-10);

    const double gamma = 4000.0;
    const auto a1 = transition_matrix(build_generator({0.0, gamma, 0.0, 0.0}), 1e-4);
    CHECK(a1(TmG, SG) == doctest::Approx(-std::expm1(-gamma * 1e-4)).epsilon(1e-13));
    CHECK(a1(TmG, TmG) == doctest::Approx(std::exp(-gamma * 1e-4)).epsilon(1e-13));

    for (double dt : {1e-6, 20e-6, 1e-3, 0.05}) {
        const auto a = transition_matrix(q, dt);
        const auto half = transition_matrix(q, dt / 2.0);
        for (int i = 0; i < kHiddenStates; ++i) CHECK(a.row(i).sum() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK((a - half * half).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(a.minCoeff() >= 0.0);
    }
}

TEST_CASE("parameter validation") {
    const auto em = EmissionModel::charge_tied(0.0, 1.0, 0.1);
    CHECK_THROWS_AS(HmmParams({0.5, 0.5, 0.5, 0, 0, 0}, {}, 1e-6, em), DomainError);
    CHECK_THROWS_AS(HmmParams({1, 0, 0, 0, 0, 0}, {}, 0.0, em), DomainError);
    CHECK_THROWS_AS(HmmParams({1, 0, 0, 0, 0, 0}, {}, 1e-6, EmissionModel::charge_tied(0.0, 1.0, 0.0)),
                    DomainError);
    CHECK(window_samples(340e-6, 1e-6) == 340);
    CHECK(window_samples(3 * 0.1, 0.1) == 3);
    CHECK_THROWS_AS(window_samples(0.5e-6, 1e-6), DomainError);
}

TEST_CASE("parameter JSON round trip") {
    std::mt19937_64 rng(3);
    const auto p = random_hmm::draw(rng);
    const auto back = hmm_from_json(to_json(p));
    CHECK(back.pi() == p.pi());
    CHECK(back.dt() == p.dt());
    CHECK(back.emissions().means == p.emissions().means);
    CHECK(back.emissions().stds == p.emissions().stds);
    CHECK(back.rates().gamma_t0 == p.rates().gamma_t0);
    CHECK(back.transition() == p.transition());
    auto j = to_json(p);
    j["extra"] = 1;
    CHECK_THROWS_AS(hmm_from_json(j), DomainError);
}

TEST_CASE("simulation statistics") {
    const auto p = device_model();
    const std::size_t n = 40000;
    const auto sim = simulate_batch(p, n, 171, 99, true);
    std::array<double, 3> counts{};
    double t0_total = 0.0, t0_alive = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto s = static_cast<int>(*sim.traces[k].label);
        counts[s] += 1.0;
        CHECK(HiddenState::from_index(sim.paths[k][0]).spin == *sim.traces[k].label);
        if (s == 1) {
            t0_total += 1.0;
            if (sim.paths[k][170] == T0G) t0_alive += 1.0;
        }
    }
    const std::array<double, 3> pi{0.25, 0.25, 0.5};
    for (int s = 0; s < 3; ++s) {
        const double se = std::sqrt(pi[s] * (1 - pi[s]) / n);
        CHECK(std::abs(counts[s] / n - pi[s]) < 3.0 * se);
    }
    const double frac = t0_alive / t0_total;
    const double expect = std::exp(-1.0);
    CHECK(std::abs(frac - expect) < 3.0 * std::sqrt(expect * (1 - expect) / t0_total));
}

TEST_CASE("near-noiseless singlet simulation sits at the singlet mean") {
    const auto p = HmmParams::from_spin_prior({1, 0, 0}, {}, 1e-6, EmissionModel::charge_tied(0.3, 1.0, 1e-300));
    const auto sim = simulate_batch(p, 5, 50, 1);
    for (const auto& t : sim.traces)
        for (double y : t.samples) CHECK(y == 0.3);
}

TEST_CASE("simulation is reproducible per trace") {
    const auto p = device_model();
    const auto a = simulate_batch(p, 200, 30, 42);
    const auto b = simulate_batch(p, 300, 30, 42);
    const auto c = simulate_batch(p, 200, 30, 43);
    for (std::size_t k = 0; k < 200; ++k) CHECK(a.traces[k].samples == b.traces[k].samples);
    CHECK(a.traces[0].samples != c.traces[0].samples);
}

TEST_CASE("uninformative emissions return the propagated prior") {
    EmissionModel em;
    em.means.fill(0.2);
    em.stds.fill(0.7);
    const Vector6 pi{0.1, 0.2, 0.3, 0.15, 0.15, 0.1};
    const HmmParams p(pi, {2e4, 5e3, 1e4, 3e4}, 10e-6, em);
    std::mt19937_64 rng(1);
    const auto trace = random_hmm::draw_trace(p, 12, rng);
    const auto post = forward_backward(p, trace);
    Eigen::Matrix<double, 1, kHiddenStates> m;
    for (int i = 0; i < kHiddenStates; ++i) m(i) = pi[i];
    for (std::size_t t = 0; t < trace.samples.size(); ++t) {
        for (int i = 0; i < kHiddenStates; ++i) CHECK(post.probs[t][i] == doctest::Approx(m(i)).epsilon(1e-12));
        m = m * p.transition();
    }
}

TEST_CASE("single-sample posterior and likelihood follow Bayes rule") {
    std::mt19937_64 rng(5);
    const auto p = random_hmm::draw(rng);
    Trace t;
    t.dt = p.dt();
    t.samples = {0.37};
    const auto post = forward_backward(p, t);
    double z = 0.0;
    Vector6 w{};
    for (int i = 0; i < kHiddenStates; ++i) z += (w[i] = p.pi()[i] * normal_pdf(0.37, p.emissions().means[i], p.emissions().stds[i]));
    for (int i = 0; i < kHiddenStates; ++i) CHECK(post.probs[0][i] == doctest::Approx(w[i] / z).epsilon(1e-12));
    CHECK(post.log_likelihood == doctest::Approx(std::log(z)).epsilon(1e-12));
    CHECK(log_likelihood(p, {t}) == doctest::Approx(std::log(z)).epsilon(1e-12));
}

TEST_CASE("forward-backward agrees with path enumeration") {
    std::mt19937_64 rng(17);
    for (int draw = 0; draw < 20; ++draw) {
        const auto p = random_hmm::draw(rng);
        const auto trace = random_hmm::draw_trace(p, 1 + draw % 7, rng);
        const auto fb = forward_backward(p, trace);
        const auto bf = brute_force_posterior(p, trace);
        double diff = 0.0;
        for (std::size_t t = 0; t < trace.samples.size(); ++t)
            for (int i = 0; i < kHiddenStates; ++i) diff = std::max(diff, std::abs(fb.probs[t][i] - bf.probs[t][i]));
        CHECK(diff <= 1e-9);
        CHECK(fb.log_likelihood == doctest::Approx(bf.log_likelihood).epsilon(1e-10));
    }
}

TEST_CASE("deterministic transitions leave mass on reachable paths only") {
    // S and T0 only: T0 decays to S with probability ~1 per step, S is absorbing.
    const HmmParams p({0.5, 0.5, 0, 0, 0, 0}, {1e9, 0.0, 0.0, 0.0}, 1e-6,
                      EmissionModel::charge_tied(0.0, 1.0, 0.5));
    Trace t;
    t.dt = 1e-6;
    t.samples = {0.9, 0.1};
    const auto bf = brute_force_posterior(p, t);
    CHECK(bf.probs[1][T0G] < 1e-12);
    for (int i : {TmG, SE, T0E, TmE}) {
        CHECK(bf.probs[0][i] == 0.0);
        CHECK(bf.probs[1][i] == 0.0);
    }
    CHECK(bf.probs[1][SG] == doctest::Approx(1.0));
    std::mt19937_64 rng(1);
    const auto long_trace = random_hmm::draw_trace(p, kBruteForceMaxLength + 1, rng);
    CHECK_THROWS_AS(brute_force_posterior(p, long_trace), DomainError);
}

TEST_CASE("log-likelihood is additive over traces") {
    const auto p = device_model(10e-6);
    const auto sim = simulate_batch(p, 50, 40, 8);
    auto doubled = sim.traces;
    doubled.insert(doubled.end(), sim.traces.begin(), sim.traces.end());
    CHECK(log_likelihood(p, doubled) == doctest::Approx(2.0 * log_likelihood(p, sim.traces)).epsilon(1e-13));
}

TEST_CASE("fixed-point smoother matches windowed forward-backward") {
    std::mt19937_64 rng(23);
    const auto p = random_hmm::draw(rng);
    const auto trace = random_hmm::draw_trace(p, 60, rng);
    const std::vector<std::size_t> windows{1, 2, 7, 30, 60};
    const auto p0 = initial_state_posteriors(p, trace.samples, windows);
    for (std::size_t w = 0; w < windows.size(); ++w) {
        const auto fb = forward_backward(p, trace, windows[w] * p.dt());
        for (int i = 0; i < kHiddenStates; ++i) CHECK(p0[w][i] == doctest::Approx(fb.probs[0][i]).epsilon(1e-10));
    }
}

TEST_CASE("windowed inference uses only the leading samples") {
    const auto p = device_model();
    auto trace = simulate_batch(p, 1, 100, 4).traces[0];
    const auto a = forward_backward(p, trace, 40e-6);
    trace.samples[70] = 1e6;
    const auto b = forward_backward(p, trace, 40e-6);
    CHECK(a.probs.size() == 40);
    CHECK(a.log_likelihood == b.log_likelihood);
}

TEST_CASE("underflow surfaces as a numerical error") {
    const HmmParams p({1, 0, 0, 0, 0, 0}, {}, 1e-6, EmissionModel::charge_tied(0.0, 1.0, 1e-3));
    Trace t;
    t.dt = 1e-6;
    t.samples = {0.0, 1e4};
    CHECK_THROWS_AS(forward_backward(p, t), NumericalError);
}
