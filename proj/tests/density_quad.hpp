#ifndef SPINREAD_TESTS_DENSITY_QUAD_HPP
#define SPINREAD_TESTS_DENSITY_QUAD_HPP

#include <algorithm>
#include <cmath>
#include <functional>

#include "spinread/analytic.hpp"
#include "spinread/numeric.hpp"

namespace density_quad {

/// Integral of f over [v_lo - 12 sigma, v_hi + 12 sigma], piecewise so that
/// narrow peaks are always resolved.
inline double total(const std::function<double(double)>& f, double v_lo, double v_hi, double sigma) {
    const double a = std::min(v_lo, v_hi) - 12.0 * sigma;
    const double b = std::max(v_lo, v_hi) + 12.0 * sigma;
    const int pieces = 400;
    double sum = 0.0;
    for (int i = 0; i < pieces; ++i) {
        const double lo = a + (b - a) * i / pieces, hi = a + (b - a) * (i + 1) / pieces;
        sum += spinread::numeric::integrate(f, lo, hi, 1e-13);
    }
    return sum;
}

}  // namespace density_quad

#endif
