#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include "spinread/numeric.hpp"
#include "spinread/pipeline.hpp"

namespace spinread::pipeline {

namespace fs = std::filesystem;

std::span<const double> TraceBundle::row(std::size_t k) const {
    return {data.data() + k * manifest.n_samples, manifest.n_samples};
}

std::span<double> TraceBundle::row(std::size_t k) {
    return {data.data() + k * manifest.n_samples, manifest.n_samples};
}

void TraceBundle::validate() const {
    const auto& m = manifest;
    if (m.version != kBundleVersion) throw DomainError("unsupported bundle version");
    if (!(m.dt > 0.0)) throw DomainError("bundle dt must be > 0");
    if (m.n_traces == 0 || m.n_samples == 0) throw DomainError("bundle is empty");
    if (data.size() != m.n_traces * m.n_samples) {
        throw DomainError("bundle data size does not match manifest dimensions");
    }
    if (!m.labels.empty() && m.labels.size() != m.n_traces) {
        throw DomainError("bundle label count does not match trace count");
    }
    if (m.background_samples >= m.n_samples) {
        throw DomainError("background segment leaves no measurement samples");
    }
}

TraceBundle bundle_from_batch(const markov::TraceBatch& batch, double v0) {
    if (batch.empty()) throw DomainError("bundle_from_batch: empty batch");
    TraceBundle b;
    auto& m = b.manifest;
    m.dt = batch.front().dt;
    m.background_samples = batch.front().background.size();
    m.n_samples = m.background_samples + batch.front().samples.size();
    m.n_traces = batch.size();
    m.v0 = v0;
    const bool labelled = batch.front().label.has_value();
    b.data.reserve(m.n_traces * m.n_samples);
    for (const auto& tr : batch) {
        tr.validate();
        if (tr.dt != m.dt || tr.background.size() != m.background_samples ||
            tr.background.size() + tr.samples.size() != m.n_samples) {
            throw DomainError("bundle_from_batch: traces differ in dt or length");
        }
        if (tr.label.has_value() != labelled) {
            throw DomainError("bundle_from_batch: labels present on some traces only");
        }
        if (labelled) m.labels.push_back(*tr.label);
        b.data.insert(b.data.end(), tr.background.begin(), tr.background.end());
        b.data.insert(b.data.end(), tr.samples.begin(), tr.samples.end());
    }
    b.validate();
    return b;
}

markov::TraceBatch to_batch(const TraceBundle& bundle) {
    bundle.validate();
    const auto& m = bundle.manifest;
    markov::TraceBatch out(m.n_traces);
    for (std::size_t k = 0; k < m.n_traces; ++k) {
        const auto r = bundle.row(k);
        out[k].dt = m.dt;
        out[k].background.assign(r.begin(), r.begin() + m.background_samples);
        out[k].samples.assign(r.begin() + m.background_samples, r.end());
        if (!m.labels.empty()) out[k].label = m.labels[k];
    }
    return out;
}

nlohmann::json manifest_to_json(const BundleManifest& m) {
    nlohmann::json labels = nullptr;
    if (!m.labels.empty()) {
        labels = nlohmann::json::array();
        for (auto s : m.labels) labels.push_back(markov::to_string(s));
    }
    return {{"version", m.version},
            {"dt_s", m.dt},
            {"n_traces", m.n_traces},
            {"n_samples", m.n_samples},
            {"labels", labels},
            {"v0", m.v0},
            {"background_samples", m.background_samples},
            {"drift_corrected", m.drift_corrected}};
}

BundleManifest manifest_from_json(const nlohmann::json& j) {
    static const char* keys[] = {"version", "dt_s", "n_traces", "n_samples", "labels",
                                 "v0", "background_samples", "drift_corrected", "data_file"};
    if (!j.is_object()) throw DomainError("manifest: expected an object");
    for (const auto& [k, v] : j.items()) {
        if (std::find(std::begin(keys), std::end(keys), k) == std::end(keys)) {
            throw DomainError("manifest: unknown key '" + k + "'");
        }
    }
    try {
        BundleManifest m;
        m.version = j.at("version").get<int>();
        m.dt = j.at("dt_s").get<double>();
        m.n_traces = j.at("n_traces").get<std::size_t>();
        m.n_samples = j.at("n_samples").get<std::size_t>();
        if (!j.at("labels").is_null()) {
            for (const auto& s : j.at("labels")) {
                m.labels.push_back(markov::parse_spin_state(s.get<std::string>()));
            }
        }
        m.v0 = j.at("v0").get<double>();
        m.background_samples = j.at("background_samples").get<std::size_t>();
        m.drift_corrected = j.at("drift_corrected").get<bool>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("manifest: ") + e.what());
    }
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw std::runtime_error("cannot rename " + tmp.string() + ": " + ec.message());
    }
}

namespace {

fs::path with_suffix(const fs::path& stem, const char* suffix) {
    fs::path p = stem;
    p += suffix;
    return p;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::uint64_t to_little(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        v = __builtin_bswap64(v);
    }
    return v;
}

}  // namespace

void save_bundle(const TraceBundle& bundle, const fs::path& stem) {
    bundle.validate();
    std::string raw(bundle.data.size() * sizeof(double), '\0');
    for (std::size_t i = 0; i < bundle.data.size(); ++i) {
        const std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(bundle.data[i]));
        std::memcpy(raw.data() + i * sizeof bits, &bits, sizeof bits);
    }
    const fs::path data_path = with_suffix(stem, ".f64");
    auto manifest = manifest_to_json(bundle.manifest);
    manifest["data_file"] = data_path.filename().string();
    write_file_atomic(data_path, raw);
    write_file_atomic(with_suffix(stem, ".manifest.json"), manifest.dump(2) + "\n");
}

TraceBundle load_bundle(const fs::path& stem) {
    const fs::path manifest_path = with_suffix(stem, ".manifest.json");
    const fs::path data_path = with_suffix(stem, ".f64");
    if (!fs::exists(manifest_path)) throw std::runtime_error("missing " + manifest_path.string());
    if (!fs::exists(data_path)) throw std::runtime_error("missing " + data_path.string());

    TraceBundle b;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw DomainError("manifest: " + std::string(e.what()));
    }
    b.manifest = manifest_from_json(j);
    const std::string raw = read_file(data_path);
    if (raw.size() != b.manifest.n_traces * b.manifest.n_samples * sizeof(double)) {
        throw DomainError("sample file size does not match manifest");
    }
    b.data.resize(raw.size() / sizeof(double));
    for (std::size_t i = 0; i < b.data.size(); ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, raw.data() + i * sizeof bits, sizeof bits);
        b.data[i] = std::bit_cast<double>(to_little(bits));
    }
    b.validate();
    return b;
}

std::string bundle_to_csv(const TraceBundle& bundle) {
    bundle.validate();
    const auto& m = bundle.manifest;
    std::ostringstream os;
    os << "# dt_s=" << numeric::format_double(m.dt) << " background_samples=" << m.background_samples
       << " v0=" << numeric::format_double(m.v0) << '\n';
    os << "label";
    for (std::size_t i = 0; i < m.n_samples; ++i) os << ",s" << i;
    os << '\n';
    for (std::size_t k = 0; k < m.n_traces; ++k) {
        if (!m.labels.empty()) os << markov::to_string(m.labels[k]);
        for (double v : bundle.row(k)) os << ',' << numeric::format_double(v);
        os << '\n';
    }
    return os.str();
}

TraceBundle bundle_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    TraceBundle b;
    auto& m = b.manifest;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
        throw DomainError("trace CSV: first line must carry '# dt_s=...'");
    }
    {
        std::istringstream meta(line.substr(2));
        std::string field;
        bool have_dt = false;
        while (meta >> field) {
            const auto eq = field.find('=');
            if (eq == std::string::npos) throw DomainError("trace CSV: malformed header field " + field);
            const std::string key = field.substr(0, eq);
            const std::string value = field.substr(eq + 1);
            if (key == "dt_s") {
                m.dt = std::stod(value);
                have_dt = true;
            } else if (key == "background_samples") {
                m.background_samples = std::stoul(value);
            } else if (key == "v0") {
                m.v0 = std::stod(value);
            } else {
                throw DomainError("trace CSV: unknown header field " + key);
            }
        }
        if (!have_dt) throw DomainError("trace CSV: header lacks dt_s");
    }
    if (!std::getline(in, line)) throw DomainError("trace CSV: missing column header");
    bool any_label = false, any_missing = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');
        if (cell.empty()) {
            any_missing = true;
        } else {
            any_label = true;
            m.labels.push_back(markov::parse_spin_state(cell));
        }
        std::size_t count = 0;
        while (std::getline(row, cell, ',')) {
            b.data.push_back(std::stod(cell));
            ++count;
        }
        if (m.n_traces == 0) m.n_samples = count;
        if (count != m.n_samples) throw DomainError("trace CSV: rows differ in length");
        ++m.n_traces;
    }
    if (any_label && any_missing) throw DomainError("trace CSV: labels present on some rows only");
    b.validate();
    return b;
}

}  // namespace spinread::pipeline
