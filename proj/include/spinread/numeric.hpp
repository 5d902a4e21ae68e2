#ifndef SPINREAD_NUMERIC_HPP
#define SPINREAD_NUMERIC_HPP

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>

namespace spinread {

/// Thrown when an input violates a documented precondition (non-positive
/// temperature, probability outside [0,1], ...).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when an iterative numerical method fails (quadrature, underflow).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace numeric {

double normal_pdf(double x, double mean, double sigma);
double normal_cdf(double x, double mean, double sigma);

/// Adaptive Gauss-Kronrod quadrature on a finite interval. Throws
/// NumericalError if the error estimate exceeds both `abs_tol` and the
/// round-off floor 1e-12 * integral of |f|.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-10);

struct Extremum {
    double x;
    double value;
};

/// Golden-section search for the maximum of a unimodal function on [lo, hi].
Extremum golden_section_max(const std::function<double(double)>& f, double lo,
                            double hi, double x_tol = 1e-12,
                            int max_iter = 300);

/// Bisection for a sign change of f on [lo, hi]. Requires f(lo)*f(hi) <= 0.
double bisect_root(const std::function<double(double)>& f, double lo, double hi,
                   double x_tol = 1e-15, int max_iter = 200);

/// Runs fn(begin, end) over contiguous blocks of [0, n) on worker threads.
/// The partition is a function of n and `block` only, so reductions that
/// combine per-block results in block order are thread-count independent.
void parallel_blocks(std::size_t n, std::size_t block,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

std::size_t block_count(std::size_t n, std::size_t block);

/// Shortest decimal form that parses back to the same double; "nan", "inf".
std::string format_double(double v);

}  // namespace numeric
}  // namespace spinread

#endif
