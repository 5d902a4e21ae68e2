#include <doctest.h>

#include <cmath>

#include "fit_cases.hpp"
#include "spinread/numeric.hpp"
#include "spinread/physics.hpp"

using namespace spinread::physics;

TEST_CASE("noiseless data with init at truth is a fixed point") {
    const std::vector<std::pair<std::string, std::vector<double>>> truths{
        {"lz", {46.9}},
        {"thermometry", {0.17, 90.0}},
        {"ict", {8.0, 40.0}},
        {"rabi", {0.35, 0.4, 17.0, 0.3}},
        {"delta_c", {0.17, 90.0, 576.0}},
    };
    for (const auto& [id, truth] : truths) {
        CAPTURE(id);
        const auto m = make_model(id);
        std::vector<double> x, y;
        for (int i = 0; i < 40; ++i) {
            x.push_back(id == "ict" ? -100.0 + 5.0 * i : 0.5 + 0.25 * i);
            y.push_back(m.evaluate(x.back(), truth));
        }
        const auto fit = fit_model(m, x, y, std::nullopt, truth);
        CHECK(fit.converged);
        CHECK(fit.n_iterations <= 2);
        for (std::size_t j = 0; j < truth.size(); ++j) CHECK(fit.params[j] == doctest::Approx(truth[j]));
    }
}

TEST_CASE("synthetic round trips at the device operating points") {
    for (const auto& c : fit_cases::device_cases()) {
        CAPTURE(c.model);
        const auto m = make_model(c.model);
        const auto d = fit_cases::synthesize(c, m, 2024);
        const auto fit = fit_model(m, d.x, d.y, std::nullopt, c.init);
        REQUIRE(fit.converged);
        for (std::size_t j = 0; j < c.truth.size(); ++j) {
            CAPTURE(j);
            REQUIRE(std::isfinite(fit.sigmas[j]));
            CHECK(std::abs(fit.params[j] - c.truth[j]) <= 3.0 * fit.sigmas[j]);
        }
        if (c.model == "ict") CHECK(std::abs(fit.params[0] - 8.0) < 0.5);
    }
}

TEST_CASE("bounds are respected") {
    const auto m = make_model("lz");
    std::vector<double> x, y;
    for (int i = 1; i <= 20; ++i) {
        x.push_back(10.0 * i);
        y.push_back(1.0);
    }
    const auto fit = fit_model(m, x, y, std::nullopt, {5.0});
    CHECK(fit.params[0] >= m.parameters[0].lower);
    CHECK(fit.params[0] < 1.0);
}

TEST_CASE("degenerate problems report a singular jacobian") {
    LeastSquaresProblem p;
    p.n_params = 2;
    p.n_residuals = 5;
    p.residuals = [](std::span<const double> q, std::span<double> out) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 - (q[0] + q[1]) * static_cast<double>(i);
    };
    p.lower = {-10.0, -10.0};
    p.upper = {10.0, 10.0};
    const auto fit = least_squares(p, {0.1, 0.2});
    CHECK(fit.status == FitStatus::singular_jacobian);
    CHECK(std::isnan(fit.sigmas[0]));
}

TEST_CASE("poisson weights") {
    const std::vector<double> counts{0.0, 1.0, 4.0, 100.0};
    const auto w = poisson_weights(counts);
    CHECK(w[0] == 1.0);
    CHECK(w[1] == 1.0);
    CHECK(w[2] == doctest::Approx(0.25));
    CHECK(w[3] == doctest::Approx(0.01));
}

TEST_CASE("input validation") {
    const auto m = make_model("lz");
    const std::vector<double> x{1.0, 2.0}, y{1.0};
    CHECK_THROWS_AS(fit_model(m, x, y, std::nullopt, {40.0}), spinread::DomainError);
    CHECK_THROWS_AS(make_model("nonexistent"), spinread::DomainError);
}
