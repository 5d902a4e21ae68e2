#ifndef SPINREAD_PHYSICS_HPP
#define SPINREAD_PHYSICS_HPP

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace spinread::physics {

// ---------------------------------------------------------------------------
// Sensor (single-electron box) physics
// ---------------------------------------------------------------------------

struct SensorParams {
    double alpha_drt = 0.0;   // lever arm of the dot-to-reservoir transition, [0, 1)
    double t_electron = 0.0;  // K
    double f_rf = 0.0;        // Hz
    double gamma = 0.0;       // dot-reservoir tunnel rate, Hz

    void validate() const;
};

/// Quantum capacitance change of the dot-to-reservoir transition, in farads.
/// The two bracketed factors compete: tunnelling must be faster than the RF
/// drive, but slower than the thermal energy scale k_B T_e / h.
double delta_c_drt(const SensorParams& p);

struct TunnelRateOptimum {
    double gamma;        // Hz
    double delta_c;      // F
};

/// Maximises delta_c_drt over gamma in [gamma_lo, gamma_hi] (the `gamma`
/// field of `p` is ignored). Coarse log-spaced grid followed by golden-section
/// refinement in log(gamma). Throws DomainError when the maximum sits on a
/// range boundary.
TunnelRateOptimum optimal_tunnel_rate(SensorParams p, double gamma_lo, double gamma_hi);

/// Exponential barrier-gate modulation of the tunnel rate.
double tunnel_rate_from_barrier(double v_barrier, double gamma0, double v_scale);

// ---------------------------------------------------------------------------
// Resonator
// ---------------------------------------------------------------------------

enum class CouplingRegime { under, critical, over };

struct ResonatorParams {
    double f0 = 0.0;     // Hz
    double q_r = 0.0;    // loaded quality factor
    double q_int = 0.0;  // internal quality factor
    double beta = 0.0;   // coupling coefficient, >= 0
    double c_p = 0.0;    // parasitic capacitance, F
    double c_c = 0.0;    // coupling capacitance, F
    double l = 0.0;      // inductance, H
    double r_c = 0.0;    // equivalent resistance to ground, ohm
    CouplingRegime regime = CouplingRegime::under;

    void validate() const;
};

/// Extracts resonator parameters from a VNA measurement. `gamma_v_at_f0` is
/// the real reflection coefficient on resonance; its sign encodes the regime
/// (positive: under-coupled). beta is stored as a magnitude.
ResonatorParams resonator_from_vna(double f0, double delta_f, double gamma_v_at_f0,
                                   double l, double c_c);

/// Voltage SNR of a reflectometry charge-sensing event. Only the magnitude of
/// the complex reflection change enters.
double reflectometry_snr(const ResonatorParams& r, double delta_c, double c_tot,
                         double eta, double v_ratio);

/// 2 beta / (1 + beta)^2, maximal (1/2) at critical coupling.
double coupling_factor(double beta);

double min_integration_time(double snr, double t_read);

/// SNR of the charge sensor given a spin-readout SNR and contrast ratio eta.
double charge_snr(double spin_snr, double eta);

// ---------------------------------------------------------------------------
// Device lineshapes
// ---------------------------------------------------------------------------

/// Landau-Zener single-passage probability; delta in J, velocity in J/s.
double lz_probability(double delta, double velocity);

/// Coulomb peak FWHM in volts for lever arm alpha and temperatures in K.
double coulomb_fwhm(double alpha, double t_mxc, double t_e);

/// Excess charge fraction across an interdot transition. epsilon, t_c in J.
double ict_lineshape(double epsilon, double t_c, double t_e);

enum class RabiConvention {
    literal,  // sin(f t + phi), as printed
    angular,  // sin(2 pi f t + phi)
};

double damped_rabi(double t, double amplitude, double t2_star, double f_rabi,
                   double phase, RabiConvention convention = RabiConvention::literal);

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

enum class FitStatus { converged, max_iterations, singular_jacobian };

struct FitResult {
    std::vector<double> params;
    std::vector<double> sigmas;
    Eigen::MatrixXd covariance;
    double residual_norm = 0.0;
    int n_iterations = 0;
    bool converged = false;
    FitStatus status = FitStatus::max_iterations;
};

std::string to_string(FitStatus status);

struct ParameterSpec {
    std::string name;
    std::string unit;
    double lower;
    double upper;
};

/// A model y = f(x; params) with parameters and x/y in the model's display
/// units (neV, mK, ...). Conversion to SI happens inside `evaluate`.
struct PhysicsModel {
    std::string id;
    std::string x_unit;
    std::string y_unit;
    std::vector<ParameterSpec> parameters;
    std::function<double(double x, std::span<const double> params)> evaluate;

    std::size_t size() const { return parameters.size(); }
    void validate() const;
};

struct FitOptions {
    int max_iterations = 200;
    double step_tol = 1e-8;
    double cost_tol = 1e-10;
};

/// Generic residual problem for the least-squares engine.
struct LeastSquaresProblem {
    std::size_t n_params = 0;
    std::size_t n_residuals = 0;
    /// Fills `out` (size n_residuals) with weighted residuals sqrt(w) * (y - f).
    std::function<void(std::span<const double> params, std::span<double> out)> residuals;
    std::vector<double> lower;
    std::vector<double> upper;
};

/// Box-constrained Levenberg-Marquardt on a generic residual function.
FitResult least_squares(const LeastSquaresProblem& problem, std::vector<double> init,
                        const FitOptions& options = {});

FitResult fit_model(const PhysicsModel& model, std::span<const double> x,
                    std::span<const double> y, std::optional<std::span<const double>> weights,
                    std::vector<double> init, const FitOptions& options = {});

/// Poisson weights 1 / max(y, 1) for count data.
std::vector<double> poisson_weights(std::span<const double> counts);

struct ModelSettings {
    RabiConvention rabi_convention = RabiConvention::literal;
};

/// Registered ids: lz, thermometry, ict, rabi, delta_c.
///
///   lz           x: sweep rate [eV/s]       y: probability      params: delta [neV]
///   thermometry  x: T_MXC [mK]              y: FWHM [mV]        params: alpha, T_e [mK]
///   ict          x: detuning [ueV]          y: charge fraction  params: t_c [ueV], T_e [mK]
///   rabi         x: time [us]               y: signal           params: A, T2* [us], f_Rabi [MHz], phase [rad]
///   delta_c      x: tunnel rate [GHz]       y: delta C [aF]     params: alpha_DRT, T_e [mK], f_RF [MHz]
PhysicsModel make_model(const std::string& id, const ModelSettings& settings = {});
std::vector<std::string> model_ids();

}  // namespace spinread::physics

#endif
