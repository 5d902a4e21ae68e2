#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "spinread/analytic.hpp"
#include "spinread/constants.hpp"
#include "spinread/markov.hpp"
#include "spinread/numeric.hpp"
#include "spinread/physics.hpp"
#include "spinread/pipeline.hpp"
#include "spinread/readout.hpp"

namespace spinread::cli::detail {

namespace fs = std::filesystem;
using nlohmann::json;
using numeric::format_double;

namespace {

fs::path require_file(const std::string& path) {
    if (path.empty()) throw ConfigError("an input path is required");
    if (!fs::exists(path)) throw MissingInput("input not found: " + path);
    return path;
}

pipeline::TraceBundle load_bundle(const std::string& stem) {
    require_file(stem + ".manifest.json");
    require_file(stem + ".f64");
    return pipeline::load_bundle(stem);
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw MissingInput("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

markov::HmmParams load_hmm(const std::string& path) {
    const auto text = read_text(require_file(path));
    const json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ConfigError("malformed HMM parameter file " + path);
    return markov::hmm_from_json(j);
}

markov::HmmParams model_from_block(const json& m, double dt) {
    const double v_s = m.at("v_singlet").get<double>();
    const double v_t = m.at("v_triplet").get<double>();
    const double tau = m.at("tau_min_s").get<double>();
    if (!(tau > 0.0)) throw ConfigError("model.tau_min_s must be > 0");
    const double sigma = std::abs(v_t - v_s) * std::sqrt(tau / dt);

    markov::EmissionModel em;
    if (m.at("tlf_offset").is_null()) {
        em = markov::EmissionModel::charge_tied(v_s, v_t, sigma);
    } else {
        const double offset = m.at("tlf_offset").get<double>();
        for (int i = 0; i < markov::kHiddenStates; ++i) {
            const auto h = markov::HiddenState::from_index(i);
            em.means[i] = (h.spin == markov::SpinState::S ? v_s : v_t) +
                          (h.tlf == markov::TlfState::excited ? offset : 0.0);
            em.stds[i] = sigma;
        }
    }
    const auto prior = m.at("spin_prior").get<std::vector<double>>();
    if (prior.size() != markov::kSpinStates) throw ConfigError("model.spin_prior needs three entries");
    const double pe = m.at("tlf_excited_prior").get<double>();
    if (!(pe >= 0.0 && pe <= 1.0)) throw ConfigError("model.tlf_excited_prior must lie in [0, 1]");
    markov::Vector6 pi{};
    for (int s = 0; s < markov::kSpinStates; ++s) {
        pi[s] = prior[s] * (1.0 - pe);
        pi[s + markov::kSpinStates] = prior[s] * pe;
    }
    const markov::RateSet rates{m.at("gamma_t0_hz").get<double>(), m.at("gamma_tm_hz").get<double>(),
                                m.at("tlf_up_hz").get<double>(), m.at("tlf_down_hz").get<double>()};
    return {pi, rates, dt, em};
}

std::vector<double> time_list(const json& j) {
    if (j.is_number()) return {j.get<double>()};
    auto v = j.get<std::vector<double>>();
    if (v.empty()) throw ConfigError("t_read_s must not be empty");
    return v;
}

std::string write_output(const RunConfig& c, const std::string& name, const std::string& contents) {
    fs::create_directories(c.out_dir);
    const fs::path p = c.out_dir / name;
    pipeline::write_file_atomic(p, contents);
    return p.string();
}

// Numeric columns of a CSV; '#' lines and a non-numeric header row are skipped.
std::vector<std::vector<double>> read_columns(const std::string& path, std::size_t min_cols,
                                              std::size_t max_cols) {
    std::istringstream in(read_text(require_file(path)));
    std::vector<std::vector<double>> cols(max_cols);
    std::string line;
    std::size_t width = 0;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        bool numeric_row = true;
        while (std::getline(ls, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                numeric_row = false;
                break;
            }
        }
        if (!numeric_row) {
            if (first) {
                first = false;
                continue;
            }
            throw ConfigError(path + ": non-numeric row '" + line + "'");
        }
        first = false;
        if (width == 0) width = row.size();
        if (row.size() != width || width < min_cols || width > max_cols) {
            throw ConfigError(path + ": expected " + std::to_string(min_cols) + " to " +
                              std::to_string(max_cols) + " columns per row");
        }
        for (std::size_t k = 0; k < width; ++k) cols[k].push_back(row[k]);
    }
    if (width == 0) throw ConfigError(path + ": no data rows");
    cols.resize(width);
    return cols;
}

json label_fractions(const markov::TraceBatch& batch) {
    std::array<double, 3> n{};
    for (const auto& t : batch) {
        if (t.label) n[static_cast<int>(*t.label)] += 1.0;
    }
    const double total = static_cast<double>(batch.size());
    return {{"S", n[0] / total}, {"T0", n[1] / total}, {"Tm", n[2] / total}};
}

std::vector<readout::MetricReport> run_sweep(const markov::TraceBatch& batch, const std::string& hmm_file,
                                             const std::string& classifier, const std::string& basis,
                                             const std::vector<double>& t_reads,
                                             const readout::SweepOptions& opt) {
    const auto cls = readout::parse_classifier(classifier);
    std::optional<markov::HmmParams> hmm;
    if (cls == readout::Classifier::hmm) {
        if (hmm_file.empty()) throw ConfigError("the hmm classifier needs hmm_file");
        hmm = load_hmm(hmm_file);
    }
    return readout::fidelity_sweep(hmm ? &*hmm : nullptr, batch, t_reads, cls,
                                   readout::parse_basis(basis), opt);
}

analytic::DensityParams density_from_block(const json& b) {
    analytic::DensityParams p;
    p.v_s = b.at("v_s").get<double>();
    p.v_t = b.at("v_t").get<double>();
    p.sigma0 = b.at("sigma0").get<double>();
    p.t0 = b.at("t0_s").get<double>();
    p.t1_t0 = b.at("t1_t0_s").get<double>();
    p.t1_tm = b.at("t1_tm_s").get<double>();
    p.p_s = b.at("p_s").get<double>();
    p.p_t0 = b.at("p_t0").get<double>();
    p.p_tm = b.at("p_tm").get<double>();
    return p;
}

json fit_json(const physics::FitResult& f) {
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json sig = json::array();
    for (double s : f.sigmas) sig.push_back(num(s));
    return {{"params", f.params}, {"sigmas", sig}, {"residual_norm", f.residual_norm},
            {"n_iterations", f.n_iterations}, {"converged", f.converged},
            {"status", physics::to_string(f.status)}};
}

}  // namespace

CommandResult simulate(const RunConfig& c) {
    if (!c.seed) throw ConfigError("simulate requires --seed");
    const auto& p = c.params;
    const auto n_traces = p.at("n_traces").get<long long>();
    const auto n_samples = p.at("n_samples").get<long long>();
    if (n_traces < 1 || n_samples < 1) throw ConfigError("n_traces and n_samples must be >= 1");
    const auto hmm_file = p.at("hmm_file").get<std::string>();
    const markov::HmmParams hmm = hmm_file.empty()
                                      ? model_from_block(p.at("model"), p.at("dt_s").get<double>())
                                      : load_hmm(hmm_file);

    auto sim = markov::simulate_batch(hmm, static_cast<std::size_t>(n_traces),
                                      static_cast<std::size_t>(n_samples), *c.seed);
    auto bundle = pipeline::bundle_from_batch(sim.traces, p.at("v0").get<double>());
    const auto& d = p.at("drift");
    const auto bg = d.at("background_samples").get<long long>();
    if (bg < 0) throw ConfigError("drift.background_samples must be >= 0");
    if (bg > 0) {
        pipeline::DriftSpec spec;
        spec.background_samples = static_cast<std::size_t>(bg);
        spec.background_level = d.at("background_level").get<double>();
        spec.drift_per_trace = d.at("drift_per_trace").get<double>();
        spec.noise_std = d.at("noise_std").get<double>();
        spec.seed = *c.seed ^ 0x5bd1e9955bd1e995ULL;
        bundle = pipeline::inject_drift(bundle, spec);
    }

    fs::create_directories(c.out_dir);
    const auto stem = c.out_dir / p.at("output").get<std::string>();
    pipeline::save_bundle(bundle, stem);
    CommandResult r;
    r.outputs = {stem.string() + ".manifest.json", stem.string() + ".f64",
                 write_output(c, "hmm.json", markov::to_json(hmm).dump(2) + "\n")};
    r.results = {{"n_traces", n_traces}, {"n_samples", n_samples}, {"dt_s", hmm.dt()},
                 {"label_fractions", label_fractions(sim.traces)}, {"hmm", markov::to_json(hmm)}};
    return r;
}

CommandResult preprocess(const RunConfig& c) {
    const auto& p = c.params;
    const auto window = p.at("window").get<long long>();
    if (window < 1) throw ConfigError("window must be >= 1");
    const auto bundle = load_bundle(p.at("input").get<std::string>());
    const auto corrected = pipeline::drift_correct(bundle, static_cast<std::size_t>(window));
    fs::create_directories(c.out_dir);
    const auto stem = c.out_dir / p.at("output").get<std::string>();
    pipeline::save_bundle(corrected, stem);
    CommandResult r;
    r.outputs = {stem.string() + ".manifest.json", stem.string() + ".f64"};
    if (p.at("csv").get<bool>()) {
        r.outputs.push_back(write_output(c, p.at("output").get<std::string>() + ".csv",
                                         pipeline::bundle_to_csv(corrected)));
    }
    r.results = {{"n_traces", corrected.manifest.n_traces}, {"window", window},
                 {"drift_corrected", true}};
    return r;
}

CommandResult classify(const RunConfig& c) {
    const auto& p = c.params;
    const auto batch = pipeline::to_batch(load_bundle(p.at("input").get<std::string>()));
    readout::SweepOptions opt;
    opt.grid = p.at("grid").get<int>();
    if (!p.at("threshold").is_null()) {
        if (!p.at("threshold").is_number()) throw ConfigError("threshold must be a number or null");
        opt.fixed_threshold = p.at("threshold").get<double>();
    }
    const std::vector<double> t{p.at("t_read_s").get<double>()};
    const auto reports = run_sweep(batch, p.at("hmm_file").get<std::string>(),
                                   p.at("classifier").get<std::string>(),
                                   p.at("basis").get<std::string>(), t, opt);
    CommandResult r;
    r.outputs = {write_output(c, p.at("output").get<std::string>(), readout::sweep_csv(reports))};
    r.results = {{"metrics", readout::to_json(reports.front())}};
    return r;
}

CommandResult sweep(const RunConfig& c) {
    const auto& p = c.params;
    const auto batch = pipeline::to_batch(load_bundle(p.at("input").get<std::string>()));
    readout::SweepOptions opt;
    opt.grid = p.at("grid").get<int>();
    const auto reports = run_sweep(batch, p.at("hmm_file").get<std::string>(),
                                   p.at("classifier").get<std::string>(),
                                   p.at("basis").get<std::string>(), time_list(p.at("t_read_s")), opt);
    CommandResult r;
    r.outputs = {write_output(c, p.at("output").get<std::string>(), readout::sweep_csv(reports))};
    json list = json::array();
    for (const auto& m : reports) list.push_back(readout::to_json(m));
    r.results = {{"metrics", list}};
    return r;
}

CommandResult fit_hmm(const RunConfig& c) {
    const auto& p = c.params;
    const auto batch = pipeline::to_batch(load_bundle(p.at("input").get<std::string>()));
    const auto init_file = p.at("init_file").get<std::string>();
    const markov::HmmParams init =
        init_file.empty() ? model_from_block(p.at("model"), batch.front().dt) : load_hmm(init_file);

    markov::EmOptions opt;
    opt.tie_means = p.at("tie_means").get<bool>();
    opt.shared_std = p.at("shared_std").get<bool>();
    opt.freeze_tlf = p.at("freeze_tlf").get<bool>();
    opt.freeze_emissions = p.at("freeze_emissions").get<bool>();
    opt.tol = p.at("tol").get<double>();
    opt.max_iter = p.at("max_iter").get<int>();
    if (!p.at("t_read_s").is_null()) opt.t_read = p.at("t_read_s").get<double>();

    const auto fit = markov::em_fit(batch, init, opt);
    const auto& rates = fit.params.rates();
    auto inverse_us = [](double rate) {
        return rate > 0.0 ? json(1.0 / rate / units::us) : json(nullptr);
    };
    CommandResult r;
    r.converged = fit.converged;
    r.outputs = {write_output(c, p.at("output").get<std::string>(),
                              markov::to_json(fit.params).dump(2) + "\n")};
    r.results = {{"iterations", fit.iterations},
                 {"converged", fit.converged},
                 {"variance_floored", fit.variance_floored},
                 {"log_likelihood", fit.log_likelihoods.back()},
                 {"inverse_gamma_t0_us", inverse_us(rates.gamma_t0)},
                 {"inverse_gamma_tm_us", inverse_us(rates.gamma_tm)},
                 {"hmm", markov::to_json(fit.params)}};
    return r;
}

CommandResult fit_histogram(const RunConfig& c) {
    const auto& p = c.params;
    const auto cols = read_columns(p.at("input").get<std::string>(), 2, 2);
    const auto mode = analytic::parse_density_mode(p.at("mode").get<std::string>());
    const auto fit = analytic::fit_histogram(cols[0], cols[1], p.at("t_read_s").get<double>(), mode,
                                             density_from_block(p.at("init")));
    CommandResult r;
    r.converged = fit.fit.converged;
    const json j = analytic::to_json(fit);
    r.outputs = {write_output(c, p.at("output").get<std::string>(), j.dump(2) + "\n")};
    r.results = j;
    return r;
}

CommandResult fit_physics(const RunConfig& c) {
    const auto& p = c.params;
    physics::ModelSettings settings;
    const auto conv = p.at("rabi_convention").get<std::string>();
    if (conv == "angular") {
        settings.rabi_convention = physics::RabiConvention::angular;
    } else if (conv != "literal") {
        throw ConfigError("rabi_convention must be 'literal' or 'angular'");
    }
    const auto model = physics::make_model(p.at("model").get<std::string>(), settings);
    const auto init = p.at("init").get<std::vector<double>>();
    if (init.size() != model.size()) {
        throw ConfigError("init needs " + std::to_string(model.size()) + " values for model " + model.id);
    }
    const auto cols = read_columns(p.at("input").get<std::string>(), 2, 3);
    std::optional<std::span<const double>> weights;
    std::vector<double> w;
    if (cols.size() == 3) {
        weights = cols[2];
    } else if (p.at("poisson_weights").get<bool>()) {
        w = physics::poisson_weights(cols[1]);
        weights = w;
    }
    const auto fit = physics::fit_model(model, cols[0], cols[1], weights, init);

    json names = json::array(), units_ = json::array();
    for (const auto& ps : model.parameters) {
        names.push_back(ps.name);
        units_.push_back(ps.unit);
    }
    json j = fit_json(fit);
    j["model"] = model.id;
    j["names"] = names;
    j["units"] = units_;
    CommandResult r;
    r.converged = fit.converged;
    r.outputs = {write_output(c, p.at("output").get<std::string>(), j.dump(2) + "\n")};
    r.results = j;
    return r;
}

CommandResult snr(const RunConfig& c) {
    const auto& p = c.params;
    const auto cols = read_columns(p.at("input").get<std::string>(), 2, 2);
    std::vector<pipeline::IqPoint> pts(cols[0].size());
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = {cols[0][i], cols[1][i]};
    const auto proj = pipeline::iq_project(pts);
    const double t_read = p.at("t_read_s").get<double>();
    const double eta = p.at("eta").get<double>();

    std::string csv = "projection\n";
    for (double v : proj.values) csv += format_double(v) + "\n";
    CommandResult r;
    r.outputs = {write_output(c, p.at("output").get<std::string>(), csv)};
    r.results = {{"delta_v", proj.delta_v},
                 {"sigma", proj.sigma},
                 {"snr", proj.snr},
                 {"charge_snr", physics::charge_snr(proj.snr, eta)},
                 {"tau_min_s", physics::min_integration_time(proj.snr, t_read)},
                 {"mean_a", proj.mean_a},
                 {"mean_b", proj.mean_b}};
    return r;
}

CommandResult emit(const RunConfig& c) {
    const auto& p = c.params;
    const auto family = p.at("family").get<std::string>();
    CommandResult r;
    if (family == "capacitance") {
        const auto& b = p.at("capacitance");
        physics::SensorParams s{b.at("alpha_drt").get<double>(), b.at("t_e_k").get<double>(),
                                b.at("f_rf_hz").get<double>(), 1.0};
        const double lo = b.at("gamma_min_hz").get<double>();
        const double hi = b.at("gamma_max_hz").get<double>();
        const int n = b.at("n_points").get<int>();
        if (!(lo > 0.0 && lo < hi) || n < 2) throw ConfigError("invalid capacitance grid");
        std::string csv = "gamma_hz,delta_c_f\n";
        for (int i = 0; i < n; ++i) {
            s.gamma = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
            csv += format_double(s.gamma) + "," + format_double(physics::delta_c_drt(s)) + "\n";
        }
        const auto opt = physics::optimal_tunnel_rate(s, lo, hi);
        r.outputs = {write_output(c, b.at("output").get<std::string>(), csv)};
        r.results = {{"optimal_gamma_hz", opt.gamma}, {"optimal_delta_c_f", opt.delta_c}};
    } else if (family == "fidelity") {
        const auto& b = p.at("fidelity");
        const auto batch = pipeline::to_batch(load_bundle(b.at("input").get<std::string>()));
        const auto reports = run_sweep(batch, b.at("hmm_file").get<std::string>(),
                                       b.at("classifier").get<std::string>(),
                                       b.at("basis").get<std::string>(), time_list(b.at("t_read_s")), {});
        std::string csv = "t_read_s,F_m,V_m,recall_S,recall_T0,recall_Tm\n";
        for (const auto& m : reports) {
            csv += format_double(m.t_read) + "," + format_double(m.f_m) + "," + format_double(m.v_m) +
                   "," + format_double(m.spin_recall[0]) + "," + format_double(m.spin_recall[1]) + "," +
                   format_double(m.spin_recall[2]) + "\n";
        }
        r.outputs = {write_output(c, b.at("output").get<std::string>(), csv)};
        r.results = {{"n_points", reports.size()}};
    } else if (family == "histogram") {
        const auto& b = p.at("histogram");
        const auto batch = pipeline::to_batch(load_bundle(b.at("input").get<std::string>()));
        const double t = b.at("t_read_s").get<double>();
        std::vector<double> avg(batch.size());
        for (std::size_t k = 0; k < batch.size(); ++k) avg[k] = readout::window_average(batch[k], t);
        const auto h = pipeline::build_histogram(avg, b.at("bins").get<int>());
        const auto three = density_from_block(b.at("density"));
        three.validate();
        auto two = three;
        two.p_tm = three.p_t0 + three.p_tm;
        two.p_t0 = 0.0;
        std::string csv = "bin_center,count,density_two_state,density_three_state\n";
        for (std::size_t i = 0; i < h.centers.size(); ++i) {
            const double v = h.centers[i];
            csv += format_double(v) + "," + format_double(h.counts[i]) + "," +
                   format_double(analytic::combined_density(v, t, two, analytic::DensityMode::two_state)) +
                   "," +
                   format_double(analytic::combined_density(v, t, three, analytic::DensityMode::three_state)) +
                   "\n";
        }
        r.outputs = {write_output(c, b.at("output").get<std::string>(), csv)};
        r.results = {{"n_values", avg.size()}, {"bins", h.centers.size()}};
    } else if (family == "noise") {
        const auto& b = p.at("noise");
        const auto batch = pipeline::to_batch(load_bundle(b.at("input").get<std::string>()));
        std::optional<double> fit_max;
        if (!b.at("fit_max_t_s").is_null()) fit_max = b.at("fit_max_t_s").get<double>();
        const auto ns = pipeline::noise_scaling(batch, time_list(b.at("t_read_s")),
                                                readout::parse_basis(b.at("basis").get<std::string>()),
                                                fit_max);
        std::string csv = "t_read_s,inv_snr,inv_snr_fit\n";
        for (std::size_t i = 0; i < ns.t_read.size(); ++i) {
            const double fitv = ns.fitted ? ns.intercept + ns.slope / std::sqrt(ns.t_read[i])
                                          : std::numeric_limits<double>::quiet_NaN();
            csv += format_double(ns.t_read[i]) + "," + format_double(ns.inv_snr[i]) + "," +
                   format_double(fitv) + "\n";
        }
        r.outputs = {write_output(c, b.at("output").get<std::string>(), csv)};
        r.results = pipeline::to_json(ns);
    } else {
        throw ConfigError("unknown emit family '" + family + "'");
    }
    return r;
}

}  // namespace spinread::cli::detail
