#ifndef SPINREAD_READOUT_HPP
#define SPINREAD_READOUT_HPP

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinread/markov.hpp"

namespace spinread::readout {

using markov::SpinState;

enum class ReadoutBasis { three_state, parity, singlet_triplet };

std::string to_string(ReadoutBasis b);
ReadoutBasis parse_basis(const std::string& name);

/// Number of classes: 3 for three_state, 2 otherwise.
int n_classes(ReadoutBasis b);
std::vector<std::string> class_names(ReadoutBasis b);

/// parity: S, T0 -> 0 (odd), Tm -> 1 (even).
/// singlet_triplet: S -> 0 (singlet), T0, Tm -> 1 (triplet).
/// three_state: S, T0, Tm -> 0, 1, 2.
int map_basis(SpinState s, ReadoutBasis b);

// ---------------------------------------------------------------------------
// Threshold method
// ---------------------------------------------------------------------------

double window_average(const markov::Trace& trace, double t_read);

struct ThresholdChoice {
    double threshold = 0.0;
    double fidelity = 0.0;  // balanced mean fidelity at the threshold
    bool class1_high = true;  // class 1 lies above the threshold
};

/// Balanced (50/50) two-class fidelity of the rule "class 1 iff v > th"
/// (inverted when !class1_high).
double balanced_fidelity(std::span<const double> class0, std::span<const double> class1,
                         double threshold, bool class1_high);

/// Uniform grid over the pooled range, then exact evaluation at every data
/// split point inside the best grid cell's neighbourhood. Equal-fidelity
/// runs resolve to the midpoint of the run. The high-side class is the one
/// with the larger mean.
ThresholdChoice optimal_threshold_empirical(std::span<const double> class0,
                                            std::span<const double> class1, int grid = 2001);

/// 1 when avg lies strictly above the threshold, 0 otherwise; `invert`
/// swaps the two.
int threshold_classify(double avg, double threshold, bool invert = false);

// ---------------------------------------------------------------------------
// HMM method
// ---------------------------------------------------------------------------

struct HmmDecision {
    SpinState spin = SpinState::S;
    std::array<double, markov::kSpinStates> mass{};  // step-0 posterior per spin
    bool tie = false;
};

/// TLF-marginalised argmax of a step-0 posterior; ties go to S < T0 < Tm.
HmmDecision decide(const markov::Vector6& p0);

HmmDecision hmm_classify(const markov::HmmParams& params, const markov::Trace& trace,
                         double t_read);

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct ConfusionMatrix {
    ReadoutBasis basis = ReadoutBasis::three_state;
    std::vector<std::vector<std::size_t>> counts;  // [true][predicted]
};

struct MetricReport {
    ReadoutBasis basis = ReadoutBasis::three_state;
    std::string classifier;
    double t_read = 0.0;
    std::size_t n = 0;
    ConfusionMatrix confusion;
    std::vector<double> f_i;     // 1 - (class-i errors) / n
    std::vector<double> recall;  // per basis class; NaN when the class is absent
    double f_m = 0.0;            // mean of f_i
    double v_m = 0.0;            // fraction correct
    double f_balanced = 0.0;     // mean recall over present classes
    std::array<double, markov::kSpinStates> spin_recall{};  // NaN when absent
    std::optional<double> threshold;
};

/// Predictions given as spin states; both sides are mapped to the basis.
MetricReport confusion_metrics(std::span<const SpinState> truth,
                               std::span<const SpinState> predicted, ReadoutBasis basis);

/// Predictions given directly as basis class indices.
MetricReport confusion_metrics(std::span<const SpinState> truth, std::span<const int> predicted,
                               ReadoutBasis basis);

nlohmann::json to_json(const MetricReport& r);

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

enum class Classifier { threshold, hmm };

std::string to_string(Classifier c);
Classifier parse_classifier(const std::string& name);

struct SweepOptions {
    int grid = 2001;
    /// Fixed threshold instead of per-t_read optimisation.
    std::optional<double> fixed_threshold;
};

/// One report per t_read. The threshold classifier needs a binary basis and
/// ignores `params` (may be null); the HMM classifier requires it.
std::vector<MetricReport> fidelity_sweep(const markov::HmmParams* params,
                                         const markov::TraceBatch& batch,
                                         std::span<const double> t_reads, Classifier classifier,
                                         ReadoutBasis basis, const SweepOptions& options = {});

/// Header: t_read_s,classifier,basis,F_m,V_m,recall_S,recall_T0,recall_Tm,n,F_balanced
std::string sweep_csv(std::span<const MetricReport> reports);

}  // namespace spinread::readout

#endif
