#include <algorithm>
#include <cmath>

#include "spinread/numeric.hpp"
#include "spinread/pipeline.hpp"

namespace spinread::pipeline {

Histogram build_histogram(std::span<const double> values, int bins,
                          std::optional<std::pair<double, double>> range) {
    if (values.empty()) throw DomainError("build_histogram: no values");
    if (bins < 2) throw DomainError("build_histogram: need at least two bins");
    Histogram h;
    if (range) {
        h.lo = range->first;
        h.hi = range->second;
        if (!(h.lo < h.hi)) throw DomainError("build_histogram: range must satisfy lo < hi");
    } else {
        const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
        h.lo = *mn;
        h.hi = *mx;
        if (h.lo == h.hi) {
            h.lo -= 0.5;
            h.hi += 0.5;
        }
    }
    const double width = (h.hi - h.lo) / bins;
    h.centers.resize(bins);
    h.counts.assign(bins, 0.0);
    for (int b = 0; b < bins; ++b) h.centers[b] = h.lo + (b + 0.5) * width;
    for (double v : values) {
        if (!(v >= h.lo && v <= h.hi)) continue;
        auto b = static_cast<long>(std::floor((v - h.lo) / width));
        b = std::clamp<long>(b, 0, bins - 1);
        h.counts[b] += 1.0;
    }
    return h;
}

}  // namespace spinread::pipeline
