#ifndef SPINREAD_PIPELINE_HPP
#define SPINREAD_PIPELINE_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spinread/markov.hpp"
#include "spinread/readout.hpp"

namespace spinread::pipeline {

// ---------------------------------------------------------------------------
// Trace bundles
// ---------------------------------------------------------------------------

inline constexpr int kBundleVersion = 1;

struct BundleManifest {
    int version = kBundleVersion;
    double dt = 0.0;  // s
    std::size_t n_traces = 0;
    std::size_t n_samples = 0;  // per row, background included
    std::vector<markov::SpinState> labels;  // empty or one per trace
    double v0 = 1.0;  // normalisation of the stored signal
    std::size_t background_samples = 0;  // leading samples of each row
    bool drift_corrected = false;

    friend bool operator==(const BundleManifest&, const BundleManifest&) = default;
};

/// Row-major n_traces x n_samples sample matrix plus manifest.
struct TraceBundle {
    BundleManifest manifest;
    std::vector<double> data;

    std::span<const double> row(std::size_t k) const;
    std::span<double> row(std::size_t k);
    void validate() const;
};

/// Traces must share dt, length and background length.
TraceBundle bundle_from_batch(const markov::TraceBatch& batch, double v0 = 1.0);

/// Splits each row into background and measurement segments.
markov::TraceBatch to_batch(const TraceBundle& bundle);

nlohmann::json manifest_to_json(const BundleManifest& m);
BundleManifest manifest_from_json(const nlohmann::json& j);

/// Writes `<stem>.manifest.json` and `<stem>.f64` (little-endian doubles).
void save_bundle(const TraceBundle& bundle, const std::filesystem::path& stem);
TraceBundle load_bundle(const std::filesystem::path& stem);

/// One trace per row: a `# dt_s=... background_samples=... v0=...` line, a
/// column header, then `label,s0,s1,...` with an empty label when unknown.
std::string bundle_to_csv(const TraceBundle& bundle);
TraceBundle bundle_from_csv(const std::string& text);

/// Writes `contents` to a temporary sibling, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

// ---------------------------------------------------------------------------
// Drift
// ---------------------------------------------------------------------------

struct DriftSpec {
    std::size_t background_samples = 10;
    double background_level = 0.0;  // reference signal during the background segment
    double drift_per_trace = 0.0;   // offset added to trace k: k * drift_per_trace
    double noise_std = 0.0;         // per-sample noise on the background segment
    std::uint64_t seed = 0;
};

/// Prepends a background segment to every row and adds the per-trace offset
/// to the whole row. Any existing background is replaced.
TraceBundle inject_drift(const TraceBundle& bundle, const DriftSpec& spec);

/// Subtracts from trace k the mean background of traces max(0, k - window)
/// ... k - 1; trace 0 uses its own background.
TraceBundle drift_correct(const TraceBundle& bundle, std::size_t window = 50);

// ---------------------------------------------------------------------------
// I/Q projection
// ---------------------------------------------------------------------------

using IqPoint = std::array<double, 2>;

struct IqProjection {
    std::vector<double> values;  // signed projections, origin at the first cluster
    double delta_v = 0.0;
    double sigma = 0.0;
    double snr = 0.0;
    IqPoint mean_a{};  // cluster holding sample 0
    IqPoint mean_b{};
    double weight_a = 0.0;
    double log_likelihood = 0.0;
};

struct IqOptions {
    int restarts = 10;
    int max_iter = 500;
    double tol = 1e-12;
    std::uint64_t seed = 12345;
};

/// Two-component Gaussian mixture with one shared isotropic variance.
IqProjection iq_project(std::span<const IqPoint> batch, const IqOptions& options = {});

// ---------------------------------------------------------------------------
// Histograms and noise
// ---------------------------------------------------------------------------

struct Histogram {
    std::vector<double> centers;
    std::vector<double> counts;
    double lo = 0.0;
    double hi = 0.0;
};

/// Uniform bins over `range` (default: data min/max); left-closed, the last
/// bin closed on both sides. Values outside the range are dropped.
Histogram build_histogram(std::span<const double> values, int bins,
                          std::optional<std::pair<double, double>> range = std::nullopt);

struct NoiseScaling {
    std::vector<double> t_read;
    std::vector<double> inv_snr;
    bool fitted = false;  // false with fewer than two points in the fit region
    std::size_t n_fit = 0;
    double slope = 0.0;   // 1/SNR per 1/sqrt(s)
    double intercept = 0.0;
    double slope_se = 0.0;
    double intercept_se = 0.0;
};

/// Empirical 1/SNR of window averages between the two classes of `basis`
/// (separation of the class means over the pooled std), with an OLS fit of
/// 1/SNR against 1/sqrt(t_read) over t_read <= fit_max_t.
NoiseScaling noise_scaling(const markov::TraceBatch& batch, std::span<const double> t_reads,
                           readout::ReadoutBasis basis = readout::ReadoutBasis::parity,
                           std::optional<double> fit_max_t = std::nullopt);

nlohmann::json to_json(const NoiseScaling& n);

}  // namespace spinread::pipeline

#endif
