#include <doctest.h>

#include <cmath>

#include "spinread/markov.hpp"
#include "spinread/numeric.hpp"

using namespace spinread;
using namespace spinread::markov;

namespace {

HmmParams truth_model() {
    const double dt = 10e-6;
    const RateSet rates{1.0 / 170e-6, 1.0 / 5e-3, 0.0, 0.0};
    return HmmParams::from_spin_prior({0.25, 0.25, 0.5}, rates, dt,
                                      EmissionModel::charge_tied(0.0, 1.0, std::sqrt(3.3e-6 / dt)));
}

bool non_decreasing(const std::vector<double>& ll) {
    for (std::size_t i = 1; i < ll.size(); ++i)
        if (ll[i] < ll[i - 1] - 1e-9 * std::abs(ll[i - 1])) return false;
    return true;
}

}  // namespace

TEST_CASE("one iteration from the truth stays at the truth") {
    const auto truth = truth_model();
    const auto batch = simulate_batch(truth, 3000, 300, 5).traces;
    EmOptions opt;
    opt.max_iter = 1;
    const auto fit = em_fit(batch, truth, opt);
    CHECK(fit.iterations == 1);
    const auto& r = fit.params.rates();
    CHECK(r.gamma_t0 == doctest::Approx(truth.rates().gamma_t0).epsilon(0.05));
    CHECK(r.gamma_tm == doctest::Approx(truth.rates().gamma_tm).epsilon(0.15));
    CHECK(std::abs(fit.params.emissions().means[0]) < 0.01);
    CHECK(fit.params.emissions().means[1] == doctest::Approx(1.0).epsilon(0.01));
    CHECK(fit.params.emissions().stds[0] == doctest::Approx(truth.emissions().stds[0]).epsilon(0.01));
    for (int s = 0; s < kSpinStates; ++s)
        CHECK(fit.params.spin_prior()[s] == doctest::Approx(truth.spin_prior()[s]).epsilon(0.1));
}

TEST_CASE("EM from a perturbed start recovers rates with monotone likelihood") {
    const auto truth = truth_model();
    const auto batch = simulate_batch(truth, 3000, 400, 6).traces;
    const auto init = truth.with_rates({1.0 / 300e-6, 1.0 / 2e-3, 0.0, 0.0})
                          .with_emissions(EmissionModel::charge_tied(0.1, 0.8, 0.8));
    const auto fit = em_fit(batch, init);
    CHECK(fit.converged);
    CHECK(non_decreasing(fit.log_likelihoods));
    CHECK(fit.log_likelihoods.size() == static_cast<std::size_t>(fit.iterations) + 1);
    CHECK(fit.log_likelihoods.back() == doctest::Approx(log_likelihood(fit.params, batch)).epsilon(1e-12));
    CHECK(1.0 / fit.params.rates().gamma_t0 == doctest::Approx(170e-6).epsilon(0.1));
    CHECK(1.0 / fit.params.rates().gamma_tm == doctest::Approx(5e-3).epsilon(0.2));
    CHECK(fit.params.rates().tlf_up == 0.0);
}

TEST_CASE("EM recovers two-level-fluctuator switching") {
    const double dt = 20e-6;
    const RateSet rates{1.0 / 170e-6, 1.0 / 20e-3, 80.0, 120.0};
    Vector6 pi{};
    for (int s = 0; s < kSpinStates; ++s) {
        pi[s] = std::array{0.25, 0.25, 0.5}[s] * 0.6;
        pi[s + 3] = std::array{0.25, 0.25, 0.5}[s] * 0.4;
    }
    const HmmParams truth(pi, rates, dt, EmissionModel::charge_tied(0.0, 1.0, 0.35));
    const auto batch = simulate_batch(truth, 1500, 500, 9).traces;
    const auto init = truth.with_rates({1.0 / 250e-6, 1.0 / 10e-3, 40.0, 200.0});
    const auto fit = em_fit(batch, init);
    CHECK(non_decreasing(fit.log_likelihoods));
    CHECK(fit.params.rates().tlf_up == doctest::Approx(80.0).epsilon(0.2));
    CHECK(fit.params.rates().tlf_down == doctest::Approx(120.0).epsilon(0.2));
    CHECK(1.0 / fit.params.rates().gamma_t0 == doctest::Approx(170e-6).epsilon(0.1));
}

TEST_CASE("frozen blocks are left untouched") {
    const auto truth = truth_model();
    const auto batch = simulate_batch(truth, 200, 100, 7).traces;
    const auto init = truth.with_emissions(EmissionModel::charge_tied(0.05, 0.9, 0.7));
    EmOptions opt;
    opt.freeze_emissions = true;
    opt.freeze_tlf = true;
    opt.max_iter = 5;
    const auto fit = em_fit(batch, init, opt);
    CHECK(fit.params.emissions().means == init.emissions().means);
    CHECK(fit.params.emissions().stds == init.emissions().stds);
    CHECK(fit.params.rates().tlf_up == 0.0);
    CHECK(fit.params.rates().tlf_down == 0.0);
}

TEST_CASE("untied per-state emissions") {
    const auto truth = truth_model();
    const auto batch = simulate_batch(truth, 500, 200, 12).traces;
    EmOptions opt;
    opt.tie_means = false;
    opt.shared_std = false;
    opt.max_iter = 50;
    const auto fit = em_fit(batch, truth, opt);
    CHECK(non_decreasing(fit.log_likelihoods));
    CHECK(fit.params.emissions().means[0] == doctest::Approx(0.0).scale(1.0).epsilon(0.02));
    CHECK(fit.params.emissions().means[2] == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("non-convergence is reported, not hidden") {
    const auto truth = truth_model();
    const auto batch = simulate_batch(truth, 200, 100, 3).traces;
    EmOptions opt;
    opt.max_iter = 2;
    opt.tol = 1e-15;
    const auto fit = em_fit(batch, truth.with_rates({1e3, 1e3, 0, 0}), opt);
    CHECK_FALSE(fit.converged);
    CHECK(fit.iterations == 2);
}

TEST_CASE("sampling interval mismatch is rejected") {
    const auto truth = truth_model();
    auto batch = simulate_batch(truth, 5, 10, 1).traces;
    batch[2].dt = 1e-6;
    CHECK_THROWS_AS(em_fit(batch, truth), DomainError);
}
