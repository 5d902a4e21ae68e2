#ifndef SPINREAD_MARKOV_HPP
#define SPINREAD_MARKOV_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace spinread::markov {

// ---------------------------------------------------------------------------
// State space
// ---------------------------------------------------------------------------

enum class SpinState : std::uint8_t { S = 0, T0 = 1, Tm = 2 };
enum class TlfState : std::uint8_t { ground = 0, excited = 1 };

inline constexpr int kSpinStates = 3;
inline constexpr int kHiddenStates = 6;

/// Canonical order: (S,G)=0 (T0,G)=1 (Tm,G)=2 (S,E)=3 (T0,E)=4 (Tm,E)=5.
struct HiddenState {
    SpinState spin = SpinState::S;
    TlfState tlf = TlfState::ground;

    constexpr int index() const {
        return static_cast<int>(spin) + kSpinStates * static_cast<int>(tlf);
    }
    static constexpr HiddenState from_index(int i) {
        return {static_cast<SpinState>(i % kSpinStates), static_cast<TlfState>(i / kSpinStates)};
    }
    friend constexpr bool operator==(HiddenState, HiddenState) = default;
};

std::string to_string(SpinState s);
SpinState parse_spin_state(const std::string& name);

using Matrix6 = Eigen::Matrix<double, kHiddenStates, kHiddenStates, Eigen::RowMajor>;
using Vector6 = std::array<double, kHiddenStates>;

// ---------------------------------------------------------------------------
// Model parameters
// ---------------------------------------------------------------------------

/// Transition rates in hertz.
struct RateSet {
    double gamma_t0 = 0.0;  // T0 -> S
    double gamma_tm = 0.0;  // T- -> S
    double tlf_up = 0.0;    // G -> E
    double tlf_down = 0.0;  // E -> G

    void validate() const;
};

struct EmissionModel {
    Vector6 means{};
    Vector6 stds{};

    /// Two charge configurations: the singlet-like group {(S,G),(T0,E),(Tm,E)}
    /// emits at `low`, the triplet-like group {(T0,G),(Tm,G),(S,E)} at `high`.
    static EmissionModel charge_tied(double low, double high, double std);

    void validate() const;
};

/// States sharing a mean under charge tying: 0 for the singlet-like group,
/// 1 for the triplet-like group.
int charge_group(int hidden_index);

class HmmParams {
public:
    HmmParams(const Vector6& pi, const RateSet& rates, double dt, const EmissionModel& emissions);

    /// Spin-only initial distribution with the TLF in its ground state.
    static HmmParams from_spin_prior(const std::array<double, kSpinStates>& spin_pi,
                                     const RateSet& rates, double dt,
                                     const EmissionModel& emissions);

    const Vector6& pi() const { return pi_; }
    const RateSet& rates() const { return rates_; }
    double dt() const { return dt_; }
    const Matrix6& transition() const { return a_; }
    const EmissionModel& emissions() const { return emissions_; }

    HmmParams with_emissions(const EmissionModel& e) const { return {pi_, rates_, dt_, e}; }
    HmmParams with_rates(const RateSet& r) const { return {pi_, r, dt_, emissions_}; }
    HmmParams with_pi(const Vector6& p) const { return {p, rates_, dt_, emissions_}; }

    /// Marginal initial probability of each spin state.
    std::array<double, kSpinStates> spin_prior() const;

private:
    Vector6 pi_;
    RateSet rates_;
    double dt_;
    Matrix6 a_;
    EmissionModel emissions_;
};

nlohmann::json to_json(const HmmParams& p);
HmmParams hmm_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

struct Trace {
    double dt = 0.0;
    std::vector<double> samples;
    std::optional<SpinState> label;
    std::vector<double> background;  // empty when no pre-measurement segment

    double duration() const { return dt * static_cast<double>(samples.size()); }
    void validate() const;
};

using TraceBatch = std::vector<Trace>;

struct SimulatedBatch {
    TraceBatch traces;
    std::vector<std::vector<std::uint8_t>> paths;  // hidden-state indices, when requested
};

/// Number of samples in a readout window: floor(t_read / dt), guarded
/// against round-off, minimum 1. Throws DomainError when t_read < dt.
std::size_t window_samples(double t_read, double dt);

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Continuous-time rate matrix over the six hidden states.
Matrix6 build_generator(const RateSet& rates);

/// exp(q dt) by scaling and squaring of a truncated Taylor series.
Matrix6 transition_matrix(const Matrix6& q, double dt);

/// Simulates `n_traces` traces. Trace k draws from an engine seeded by
/// (seed, k) only, so any subset can be regenerated independently.
SimulatedBatch simulate_batch(const HmmParams& params, std::size_t n_traces,
                              std::size_t n_samples, std::uint64_t seed, bool keep_paths = false);

struct Posterior {
    std::vector<Vector6> probs;
    double log_likelihood = 0.0;
};

/// Smoothed posteriors over the first window_samples(t_read) samples (the
/// whole trace when t_read is empty). Per-step scaling normalisation.
Posterior forward_backward(const HmmParams& params, const Trace& trace,
                           std::optional<double> t_read = std::nullopt);

/// Exact posterior by enumerating all 6^n hidden paths; n <= 10.
Posterior brute_force_posterior(const HmmParams& params, const Trace& trace);

inline constexpr std::size_t kBruteForceMaxLength = 10;

/// Sum over traces of the forward-pass log-likelihood.
double log_likelihood(const HmmParams& params, const TraceBatch& batch,
                      std::optional<double> t_read = std::nullopt);

/// p(z_0 | y_0..y_{n-1}) for every n in `windows` (ascending, >= 1) from a
/// single forward sweep of the joint filter p(z_0, z_t | y_0..y_t).
/// Agrees with the step-0 row of forward_backward over the same window.
std::vector<Vector6> initial_state_posteriors(const HmmParams& params,
                                              std::span<const double> samples,
                                              std::span<const std::size_t> windows);

struct EmOptions {
    bool tie_means = true;         // two charge-configuration means
    bool shared_std = true;        // one std for all hidden states
    bool freeze_tlf = false;
    bool freeze_emissions = false;
    double tol = 1e-7;             // relative log-likelihood change
    int max_iter = 500;
    std::optional<double> t_read;  // restrict to a readout window
};

struct EmResult {
    HmmParams params;
    std::vector<double> log_likelihoods;  // one per evaluated parameter set
    int iterations = 0;
    bool converged = false;
    bool variance_floored = false;
};

/// Baum-Welch with the generator's structural zeros preserved: the
/// M-step estimates one-step spin-decay and TLF switching probabilities and
/// maps them back to rates, so the fitted transition matrix is always an
/// exact exponential of a valid generator.
EmResult em_fit(const TraceBatch& batch, const HmmParams& init, const EmOptions& options = {});

}  // namespace spinread::markov

#endif
