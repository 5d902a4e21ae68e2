#include "spinread/numeric.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace spinread::numeric {

double normal_pdf(double x, double mean, double sigma) {
    const double z = (x - mean) / sigma;
    return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
}

double normal_cdf(double x, double mean, double sigma) {
    return 0.5 * std::erfc(-(x - mean) / (std::numbers::sqrt2 * sigma));
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol) {
    if (a == b) return 0.0;
    using gk = boost::math::quadrature::gauss_kronrod<double, 31>;
    struct Panel {
        double lo, hi, tol, parent_err;
        int depth;
    };
    double value = 0.0, error = 0.0, l1 = 0.0;
    std::vector<Panel> stack{{a, b, abs_tol, std::numeric_limits<double>::infinity(), 0}};
    while (!stack.empty()) {
        const Panel p = stack.back();
        stack.pop_back();
        double err = 0.0, norm = 0.0;
        const double v = gk::integrate(f, p.lo, p.hi, 0, 0.0, &err, &norm);
        if (!std::isfinite(v) || !std::isfinite(err)) {
            throw NumericalError("quadrature: non-finite integrand near " + std::to_string(p.lo));
        }
        // a split that no longer lowers the estimate has hit the round-off floor
        const bool stalled = err >= 0.75 * p.parent_err;
        if (err <= std::max(p.tol, 1e-14 * norm) || stalled || p.depth >= 40) {
            value += v;
            l1 += norm;
            if (!stalled) error += err;
            continue;
        }
        const double mid = 0.5 * (p.lo + p.hi);
        stack.push_back({mid, p.hi, 0.5 * p.tol, err, p.depth + 1});
        stack.push_back({p.lo, mid, 0.5 * p.tol, err, p.depth + 1});
    }
    if (!std::isfinite(value) || error > std::max(abs_tol, 1e-12 * l1)) {
        throw NumericalError("quadrature did not converge on [" + std::to_string(a) +
                             ", " + std::to_string(b) + "], error estimate " +
                             std::to_string(error));
    }
    return value;
}

Extremum golden_section_max(const std::function<double(double)>& f, double lo,
                            double hi, double x_tol, int max_iter) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo;
    double b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int i = 0; i < max_iter && (b - a) > x_tol * std::max(1.0, std::abs(a) + std::abs(b)); ++i) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    const double x = fc >= fd ? c : d;
    return {x, std::max(fc, fd)};
}

double bisect_root(const std::function<double(double)>& f, double lo, double hi,
                   double x_tol, int max_iter) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) {
        throw NumericalError("bisect_root: no sign change in bracket");
    }
    for (int i = 0; i < max_iter && (hi - lo) > x_tol; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

std::size_t block_count(std::size_t n, std::size_t block) {
    return block == 0 ? 0 : (n + block - 1) / block;
}

void parallel_blocks(std::size_t n, std::size_t block,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    const std::size_t n_blocks = block_count(n, block);
    if (n_blocks == 0) return;
    const std::size_t n_workers =
        std::min<std::size_t>(n_blocks, std::max(1u, std::thread::hardware_concurrency()));
    auto run_block = [&](std::size_t b) {
        const std::size_t begin = b * block;
        fn(b, begin, std::min(n, begin + block));
    };
    if (n_workers == 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) run_block(b);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n_workers);
    std::vector<std::thread> workers;
    workers.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) {
        workers.emplace_back([&, w] {
            try {
                for (std::size_t b = next++; b < n_blocks; b = next++) run_block(b);
            } catch (...) {
                errors[w] = std::current_exception();
                next = n_blocks;
            }
        });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace spinread::numeric
