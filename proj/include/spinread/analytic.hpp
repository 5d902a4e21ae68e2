#ifndef SPINREAD_ANALYTIC_HPP
#define SPINREAD_ANALYTIC_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinread/physics.hpp"
#include "spinread/readout.hpp"

namespace spinread::analytic {

/// Signal-average distribution parameters. Signal values are in the same
/// (normalised) units as the traces; times in seconds. Relaxation times may
/// be +inf.
struct DensityParams {
    double v_s = 0.0;
    double v_t = 1.0;
    double sigma0 = 1.0;  // std of the average at t0
    double t0 = 1.0;
    double t1_t0 = 1.0;
    double t1_tm = 1.0;
    double p_s = 0.5;
    double p_t0 = 0.0;
    double p_tm = 0.5;

    void validate() const;
};

enum class DensityMode { two_state, three_state };

std::string to_string(DensityMode m);
DensityMode parse_density_mode(const std::string& name);

double sigma_of_t(double sigma0, double t0, double t);

double singlet_density(double v, double t, const DensityParams& p);

/// Density of averages of triplets that relaxed during the window, spread
/// between the two means.
double decay_tail(double v, double t, double t1, const DensityParams& p);

/// exp(-t/T1) N(v; v_t, sigma) + decay_tail.
double triplet_density(double v, double t, double t1, const DensityParams& p);

/// two_state: p_s n_S + p_tm n_T(t1_tm), requires p_t0 == 0.
/// three_state: p_s n_S + p_t0 n_T(t1_t0) + p_tm n_T(t1_tm).
double combined_density(double v, double t, const DensityParams& p, DensityMode mode);

struct AnalyticFidelityReport {
    double f_m_star = 0.0;
    double v_m_star = 0.0;
    double f_e_star = 0.0;
    double v_threshold = 0.0;
    double eq1_reference = 0.0;  // closed-form SNR/relaxation estimate
    double snr = 0.0;
};

/// Closed-form estimate 1/2 [1 + erf(SNR / 2 sqrt 2) exp(-gamma t / 2)].
double closed_form_fidelity(double snr, double gamma_t);

/// Electrical fidelity 1/2 [1 + erf(SNR / 2 sqrt 2)].
double electrical_fidelity(double snr);

/// Balanced two-class fidelity maximised over the threshold.
/// two_state: S against n_T(t1_tm) for either basis.
/// three_state, parity: odd = (n_S + n_T0) / 2 against n_Tm.
/// three_state, singlet_triplet: S against the p_t0 : p_tm mixture of triplets.
AnalyticFidelityReport analytic_fidelity(const DensityParams& p, double t, DensityMode mode,
                                         readout::ReadoutBasis basis);

/// Balanced fidelity at a given threshold, same class construction.
double analytic_fidelity_at(const DensityParams& p, double t, DensityMode mode,
                            readout::ReadoutBasis basis, double threshold);

/// Draws `n` window averages from the generative model behind the densities.
std::vector<double> sample_averages(const DensityParams& p, double t, DensityMode mode,
                                    std::size_t n, std::uint64_t seed);

struct HistogramFit {
    DensityParams params;
    physics::FitResult fit;         // internal (log / logit) parameterisation
    std::vector<std::string> names; // natural parameters
    std::vector<double> values;
    std::vector<double> sigmas;
};

/// Poisson-weighted least squares of N * width * combined_density against
/// counts. sigma0 is referred to init.t0; times are fitted in log space and
/// fractions through a softmax.
HistogramFit fit_histogram(std::span<const double> bin_centers, std::span<const double> counts,
                           double t, DensityMode mode, const DensityParams& init,
                           const physics::FitOptions& options = {});

nlohmann::json to_json(const HistogramFit& f);

}  // namespace spinread::analytic

#endif
