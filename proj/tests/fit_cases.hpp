#ifndef SPINREAD_TESTS_FIT_CASES_HPP
#define SPINREAD_TESTS_FIT_CASES_HPP

#include <random>
#include <string>
#include <vector>

#include "spinread/physics.hpp"

namespace fit_cases {

struct Case {
    std::string model;
    std::vector<double> truth;
    std::vector<double> init;
    double x_lo, x_hi;
    int n;
    double noise;          // absolute, or relative when `multiplicative`
    bool multiplicative = false;
};

/// Synthetic round-trip cases at the device operating points.
inline std::vector<Case> device_cases() {
    return {
        {"lz", {46.9}, {35.0}, 3.0, 300.0, 60, 0.01, true},
        {"thermometry", {0.17, 90.0}, {0.2, 70.0}, 0.0, 300.0, 30, 0.005},
        {"ict", {8.0, 40.0}, {6.0, 60.0}, -120.0, 120.0, 121, 0.01},
        {"rabi", {0.35, 0.4, 17.0, 0.3}, {0.3, 0.5, 16.8, 0.2}, 0.0, 1.5, 150, 0.02},
    };
}

struct Data {
    std::vector<double> x, y;
};

inline Data synthesize(const Case& c, const spinread::physics::PhysicsModel& m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    Data d;
    for (int i = 0; i < c.n; ++i) {
        const double x = c.x_lo + (c.x_hi - c.x_lo) * i / (c.n - 1);
        const double f = m.evaluate(x, c.truth);
        d.x.push_back(x);
        d.y.push_back(c.multiplicative ? f * (1.0 + c.noise * noise(rng)) : f + c.noise * noise(rng));
    }
    return d;
}

}  // namespace fit_cases

#endif
