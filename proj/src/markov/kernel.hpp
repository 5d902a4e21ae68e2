#ifndef SPINREAD_MARKOV_KERNEL_HPP
#define SPINREAD_MARKOV_KERNEL_HPP

#include <span>
#include <vector>

#include "spinread/markov.hpp"

namespace spinread::markov::detail {

using RowVec = Eigen::Matrix<double, 1, kHiddenStates>;

/// Emission densities rescaled per step by their maximum over states.
/// Identical (mean, std) pairs are evaluated once.
class EmissionEval {
public:
    explicit EmissionEval(const EmissionModel& em);

    /// Writes e_i = b_i(y) / max_j b_j(y) and returns log max_j b_j(y).
    double operator()(double y, double* e) const;

private:
    int n_unique_ = 0;
    std::array<int, kHiddenStates> map_{};
    std::array<double, kHiddenStates> mean_{};
    std::array<double, kHiddenStates> inv_std_{};
    std::array<double, kHiddenStates> log_norm_{};
};

struct Workspace {
    std::vector<RowVec> e;
    std::vector<RowVec> alpha;
    std::vector<RowVec> beta;
    std::vector<double> scale;  // forward normalisers c_t
    double log_likelihood = 0.0;
};

/// Scaled forward pass (and backward pass when requested) over `y`.
void run(const HmmParams& params, const EmissionEval& eval, std::span<const double> y,
         Workspace& ws, bool backward);

std::span<const double> window(const Trace& trace, std::optional<double> t_read);

}  // namespace spinread::markov::detail

#endif
