#include "keplerdm/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "keplerdm/errors.hpp"
#include "keplerdm/regimes.hpp"

namespace keplerdm {

using nlohmann::json;

namespace {

std::string json_type(const json& j) { return j.type_name(); }

// Reads one JSON object, remembering which keys were consumed so that the
// rest can be reported as unknown.
class ObjectReader {
public:
    ObjectReader(const json& object, std::string prefix) : object_(object), prefix_(std::move(prefix)) {
        if (!object_.is_object()) {
            throw ConfigError("config key '" + prefix_ + "': expected an object, got " +
                              json_type(object_));
        }
    }

    const json* find(const std::string& key) {
        seen_.insert(key);
        auto it = object_.find(key);
        return it == object_.end() ? nullptr : &*it;
    }

    std::string path(const std::string& key) const {
        return prefix_.empty() ? key : prefix_ + "." + key;
    }

    [[noreturn]] void mismatch(const std::string& key, const char* expected, const json& got) const {
        throw ConfigError("config key '" + path(key) + "': expected " + expected + ", got " +
                          json_type(got) + " " + got.dump());
    }

    void number(const std::string& key, double& out) {
        if (const json* j = find(key)) {
            if (!j->is_number()) mismatch(key, "a number", *j);
            out = j->get<double>();
        }
    }
    void number(const std::string& key, std::optional<double>& out) {
        if (const json* j = find(key)) {
            if (j->is_null()) return;
            if (!j->is_number()) mismatch(key, "a number", *j);
            out = j->get<double>();
        }
    }
    template <class Int>
    void integer(const std::string& key, Int& out) {
        if (const json* j = find(key)) out = Int(as_integer(key, *j));
    }
    void integer(const std::string& key, std::optional<std::int64_t>& out) {
        if (const json* j = find(key)) {
            if (j->is_null()) return;
            out = as_integer(key, *j);
        }
    }
    void unsigned64(const std::string& key, std::uint64_t& out) {
        if (const json* j = find(key)) {
            if (j->is_number_unsigned()) {
                out = j->get<std::uint64_t>();
            } else if (j->is_number_integer() && j->get<std::int64_t>() >= 0) {
                out = std::uint64_t(j->get<std::int64_t>());
            } else {
                mismatch(key, "an unsigned 64-bit integer", *j);
            }
        }
    }
    void string(const std::string& key, std::string& out) {
        if (const json* j = find(key)) {
            if (!j->is_string()) mismatch(key, "a string", *j);
            out = j->get<std::string>();
        }
    }
    void boolean(const std::string& key, bool& out) {
        if (const json* j = find(key)) {
            if (!j->is_boolean()) mismatch(key, "true or false", *j);
            out = j->get<bool>();
        }
    }

    void finish() const {
        for (auto it = object_.begin(); it != object_.end(); ++it) {
            if (!seen_.count(it.key())) {
                throw ConfigError("unknown config key '" + path(it.key()) + "'");
            }
        }
    }

private:
    std::int64_t as_integer(const std::string& key, const json& j) const {
        if (j.is_number_integer()) return j.get<std::int64_t>();
        if (j.is_number_float()) {
            const double v = j.get<double>();
            if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9.0e18) {
                return std::int64_t(v);
            }
        }
        mismatch(key, "an integer", j);
    }

    const json& object_;
    std::string prefix_;
    std::set<std::string> seen_;
};

std::vector<KickHarmonic> parse_harmonics(const json& j, const std::string& key) {
    if (!j.is_array() || j.empty()) {
        throw ConfigError("config key '" + key +
                          "': expected a non-empty list of {index, amplitude, phase}");
    }
    std::vector<KickHarmonic> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        ObjectReader r(j[i], key + "[" + std::to_string(i) + "]");
        KickHarmonic h;
        r.integer("index", h.index);
        r.number("amplitude", h.amplitude);
        r.number("phase", h.phase);
        r.finish();
        if (h.index < 1) throw ConfigError("config key '" + key + "': harmonic index must be >= 1");
        out.push_back(h);
    }
    return out;
}

BinaryParams parse_inline_system(const json& j) {
    ObjectReader r(j, "system");
    BinaryParams p;
    p.name = "inline";
    r.string("name", p.name);
    r.number("central_mass_kg", p.central_mass_kg);
    r.number("planet_mass_kg", p.planet_mass_kg);
    r.number("orbit_radius_m", p.orbit_radius_m);
    r.number("orbit_velocity_m_s", p.orbit_velocity_m_s);
    r.number("period_years", p.period_years);
    r.number("kick_amplitude", p.kick_amplitude);
    r.number("empirical_chaos_border", p.empirical_chaos_border);
    if (const json* h = r.find("harmonics")) p.harmonics = parse_harmonics(*h, "system.harmonics");
    r.finish();
    return p;
}

void apply_override(json& root, const ConfigOverride& o) {
    json* node = &root;
    std::string_view key = o.first;
    std::string walked;
    while (true) {
        const auto dot = key.find('.');
        const std::string part(key.substr(0, dot));
        if (part.empty()) throw ConfigError("override '" + o.first + "': empty key segment");
        walked += walked.empty() ? part : "." + part;
        if (dot == std::string_view::npos) {
            json value;
            try {
                value = json::parse(o.second);
            } catch (const json::parse_error&) {
                value = o.second;
            }
            (*node)[part] = std::move(value);
            return;
        }
        json& child = (*node)[part];
        if (child.is_null()) child = json::object();
        if (!child.is_object()) {
            throw ConfigError("override '" + o.first + "': '" + walked + "' is not an object");
        }
        node = &child;
        key.remove_prefix(dot + 1);
    }
}

void validate(const RunConfig& c) {
    const bool raw_quantum = c.command == Command::quantum_sim && c.quantum.kick_strength;
    if (c.command != Command::presets && !raw_quantum && !c.has_system) {
        throw ConfigError("config key 'system': required (preset name or object)");
    }
    if (c.has_system) (void)c.binary();
    c.dmp.validate();
    if (!(c.grid.mu_min > 0.0) || !(c.grid.mu_max > c.grid.mu_min) || c.grid.count < 2) {
        throw ConfigError("config key 'grid': need 0 < mu_min < mu_max and count >= 2");
    }
    const auto& k = c.classical;
    if (k.n_trajectories < 1 || k.max_kicks < 1 || k.diffusion_horizon < 0 || !(k.w_min > 0.0)) {
        throw ConfigError("config key 'classical': n_trajectories, max_kicks >= 1; w_min > 0");
    }
    if (k.diffusion_window.first < 1 || k.diffusion_window.last < k.diffusion_window.first) {
        throw ConfigError("config key 'classical.fit_first/fit_last': need 1 <= first <= last");
    }
    if (k.section_trajectories < 0 || k.section_iterations < 0 ||
        !(k.section_w_min <= k.section_w_max) || !(k.section_w_max < 0.0)) {
        throw ConfigError("config key 'classical.section_*': need counts >= 0 and w_min <= w_max < 0");
    }
    const auto& q = c.quantum;
    if (q.frequency && q.chaos_parameter) {
        throw ConfigError("config key 'quantum': give frequency or chaos_parameter, not both");
    }
    if (q.kick_strength && (!q.ionization_photons || !(q.frequency || q.chaos_parameter))) {
        throw ConfigError("config key 'quantum': raw parameters need kick_strength, "
                          "ionization_photons and frequency or chaos_parameter");
    }
    if (q.n_periods < 0 || q.window_begin < 0 || q.window_end < 0 || q.pad < 4 ||
        q.realizations < 1 || !(q.relative_spread >= 0.0) || q.max_sites < 64) {
        throw ConfigError("config key 'quantum': invalid knob (pad >= 4, realizations >= 1, counts >= 0)");
    }
    if (c.checkpoint.every < 0) throw ConfigError("config key 'checkpoint.every': must be >= 0");
}

json constants_json(const PhysicalConstants& k) {
    return json{{"gravitational_constant", k.gravitational_constant},
                {"hbar", k.hbar},
                {"electron_mass", k.electron_mass},
                {"solar_mass", k.solar_mass},
                {"year_seconds", k.year},
                {"astronomical_unit", k.astronomical_unit},
                {"electronvolt", k.electronvolt},
                {"universe_age_years", k.universe_age_years},
                {"galactic_dm_density_g_cm3", k.galactic_dm_density_g_cm3},
                {"galactic_velocity_km_s", k.galactic_velocity_km_s}};
}

json harmonics_json(const std::vector<KickHarmonic>& hs) {
    json out = json::array();
    for (const auto& h : hs) {
        out.push_back({{"index", h.index}, {"amplitude", h.amplitude}, {"phase", h.phase}});
    }
    return out;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json cell_json(const Cell& cell) {
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
                if (!std::isfinite(v)) return format_double(v);
            }
            return v;
        },
        cell);
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

std::string digest_hex(std::string_view bytes, const EVP_MD* md) {
    unsigned char out[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), out, &len, md, nullptr) != 1) {
        throw std::runtime_error("digest computation failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string s;
    for (unsigned i = 0; i < len; ++i) {
        s += hex[out[i] >> 4];
        s += hex[out[i] & 15];
    }
    return s;
}

std::string sha256_raw(std::string_view bytes) {
    unsigned char out[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), out, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("digest computation failed");
    }
    return std::string(reinterpret_cast<const char*>(out), len);
}

// ---- checkpoint byte streams (little-endian hosts only) ----

static_assert(std::endian::native == std::endian::little, "checkpoint format is little-endian");

constexpr char kMagic[8] = {'K', 'D', 'M', 'C', 'K', 'P', 'T', '\n'};
constexpr std::size_t kHeaderSize = 8 + 1 + 1 + 8;
constexpr std::size_t kDigestSize = 32;
enum class CheckpointKind : std::uint8_t { quantum = 1, ensemble = 2 };

class ByteWriter {
public:
    template <class T>
    void put(const T& v) {
        static_assert(std::is_trivially_copyable_v<T>);
        bytes_.append(reinterpret_cast<const char*>(&v), sizeof(T));
    }
    template <class T>
    void put_vector(const std::vector<T>& v) {
        put(std::uint64_t(v.size()));
        bytes_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(T));
    }
    std::string& bytes() { return bytes_; }

private:
    std::string bytes_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}
    template <class T>
    T get() {
        T v;
        take(&v, sizeof(T));
        return v;
    }
    template <class T>
    std::vector<T> get_vector() {
        const auto n = get<std::uint64_t>();
        if (n > (bytes_.size() - pos_) / sizeof(T)) throw CheckpointError("checkpoint payload truncated");
        std::vector<T> v(n);
        take(v.data(), n * sizeof(T));
        return v;
    }
    void expect_end() const {
        if (pos_ != bytes_.size()) throw CheckpointError("checkpoint payload has trailing bytes");
    }

private:
    void take(void* out, std::size_t n) {
        if (bytes_.size() - pos_ < n) throw CheckpointError("checkpoint payload truncated");
        std::memcpy(out, bytes_.data() + pos_, n);
        pos_ += n;
    }
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

std::string wrap_checkpoint(CheckpointKind kind, const std::string& payload) {
    std::string out(kMagic, sizeof(kMagic));
    out += char(kCheckpointVersion);
    out += char(kind);
    const std::uint64_t len = payload.size();
    out.append(reinterpret_cast<const char*>(&len), sizeof(len));
    out += payload;
    out += sha256_raw(out);
    return out;
}

std::string_view unwrap_checkpoint(std::string_view bytes, CheckpointKind kind) {
    if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw CheckpointError("not a keplerdm checkpoint (bad magic)");
    }
    if (bytes.size() < kHeaderSize) throw CheckpointError("checkpoint checksum error: header truncated");
    const auto version = std::uint8_t(bytes[8]);
    if (version != kCheckpointVersion) {
        throw CheckpointError("checkpoint version " + std::to_string(version) +
                              " is not supported (expected " +
                              std::to_string(kCheckpointVersion) + ")");
    }
    if (std::uint8_t(bytes[9]) != std::uint8_t(kind)) {
        throw CheckpointError("checkpoint holds a different kind of run state");
    }
    std::uint64_t len = 0;
    std::memcpy(&len, bytes.data() + 10, sizeof(len));
    const std::size_t available = bytes.size() - kHeaderSize;
    if (available < kDigestSize || len != available - kDigestSize) {
        throw CheckpointError("checkpoint checksum error: expected " +
                              std::to_string(kHeaderSize + len + kDigestSize) + " bytes, found " +
                              std::to_string(bytes.size()));
    }
    const std::string_view body = bytes.substr(0, kHeaderSize + len);
    if (sha256_raw(body) != bytes.substr(kHeaderSize + len)) {
        throw CheckpointError("checkpoint checksum error: contents are corrupt");
    }
    return bytes.substr(kHeaderSize, len);
}

// ---- subcommand drivers ----

using Clock = std::chrono::steady_clock;

struct OutputSink {
    std::filesystem::path dir;
    OutputFormat format;
    std::vector<OutputRecord> records;

    void table(const std::string& stem, const Table& t) {
        const std::string name = stem + std::string(format_extension(format));
        records.push_back({name, emit_table(t, format, dir / name)});
    }
    void raw(const std::string& name, const std::string& bytes) {
        records.push_back({name, write_output(dir / name, bytes)});
    }
};

Table summary_table() { return Table{{"quantity", "value", "unit"}, {}}; }

std::filesystem::path checkpoint_path(const RunConfig& c, const std::filesystem::path& dir) {
    if (!c.checkpoint.path.empty()) return c.checkpoint.path;
    return dir / (std::string(command_name(c.command)) + ".ckpt");
}

void run_regimes(const RunConfig& c, OutputSink& out, std::ostream& log) {
    const auto grid = log_spaced_grid(c.grid.mu_min, c.grid.mu_max, c.grid.count);
    out.table("regimes", figure1_csv_table(figure1_table(c.binary(), grid, c.dmp.initial_w)));
    log << "regimes: " << grid.size() << " rows\n";
}

void run_lifetime(const RunConfig& c, OutputSink& out, std::ostream& log) {
    const BinarySystem system = c.binary();
    const auto grid = log_spaced_grid(c.grid.mu_min, c.grid.mu_max, c.grid.count);
    out.table("lifetime", figure2_csv_table(figure2_table(system, grid, c.dmp.initial_w)));
    WindowScan scan;
    scan.initial_w = c.dmp.initial_w;
    const auto window = universe_age_window(system, {}, scan);
    Table t{{"mu", "direction"}, {}};
    for (const auto& x : window.crossings) {
        t.add({x.mass_ratio, std::string(x.rising ? "rising" : "falling")});
    }
    out.table("universe_age_crossings", t);
    log << "lifetime: " << grid.size() << " rows, " << window.crossings.size()
        << " universe-age crossings\n";
}

void run_classical(const RunConfig& c, OutputSink& out, std::ostream& log) {
    const BinarySystem system = c.binary();
    const KickFunction kick = KickFunction::for_system(system);
    EnsembleConfig ec;
    ec.n_trajectories = c.classical.n_trajectories;
    ec.max_kicks = c.classical.max_kicks;
    ec.seed = c.seed;
    ec.w_min = c.classical.w_min;
    ec.diffusion_horizon = c.classical.diffusion_horizon;
    ec.threads = c.threads;
    const double w0 = c.dmp.initial_w;

    const auto ckpt = checkpoint_path(c, out.dir);
    std::optional<EnsembleRunner> runner;
    if (c.checkpoint.resume && std::filesystem::exists(ckpt)) {
        runner.emplace(EnsembleRunner::restore(kick, w0, ec, load_ensemble_checkpoint(ckpt)));
        log << "classical-sim: resumed at kick " << runner->completed_kicks() << " from "
            << ckpt.string() << "\n";
    } else {
        runner.emplace(kick, w0, ec);
    }
    const std::int64_t every = c.checkpoint.every > 0 ? c.checkpoint.every : ec.max_kicks;
    while (!runner->finished()) {
        runner->advance_to(runner->completed_kicks() + every);
        if (c.checkpoint.every > 0) save_checkpoint(ckpt, runner->snapshot());
    }
    const EnsembleResult r = runner->result();
    out.table("survival", survival_table(r));
    out.table("escapes", escape_table(r));
    out.table("diffusion", diffusion_table(r));

    const double eps = epsilon(system);
    double d = std::numeric_limits<double>::quiet_NaN();
    try {
        d = measure_diffusion(r, c.classical.diffusion_window);
    } catch (const EstimationError& e) {
        log << "classical-sim: diffusion not measured: " << e.what() << "\n";
    }
    const double median_years = r.median_escape_periods() * system.period_years();
    Table s = summary_table();
    s.add({std::string("epsilon"), eps, std::string("1")});
    s.add({std::string("chaos_border"), chaos_border(system), std::string("1")});
    s.add({std::string("initial_w"), w0, std::string("1")});
    s.add({std::string("diffusion_per_kick"), d, std::string("1/kick")});
    s.add({std::string("diffusion_over_rpa"), d / (0.5 * eps * eps), std::string("1")});
    s.add({std::string("escaped_fraction"), double(r.escaped) / double(r.n_trajectories), std::string("1")});
    s.add({std::string("sunk_fraction"), double(r.sunk) / double(r.n_trajectories), std::string("1")});
    s.add({std::string("median_escape_time"), median_years, std::string("yr")});
    s.add({std::string("diffusive_time"), diffusive_time(system), std::string("yr")});
    out.table("classical_summary", s);

    if (c.classical.section_trajectories > 0) {
        std::vector<std::array<double, 2>> starts;
        const auto n = c.classical.section_trajectories;
        for (std::int64_t i = 0; i < n; ++i) {
            const double t = n == 1 ? 0.0 : double(i) / double(n - 1);
            starts.push_back({c.classical.section_w_min +
                                  t * (c.classical.section_w_max - c.classical.section_w_min),
                              0.0});
        }
        out.table("section", section_table(poincare_section(kick, starts,
                                                            c.classical.section_iterations,
                                                            MapOptions{c.classical.w_min})));
    }
    log << "classical-sim: " << r.n_trajectories << " trajectories, " << r.escaped
        << " escaped within " << r.max_kicks << " kicks\n";
}

QuantumParams resolve_quantum_params(const RunConfig& c) {
    const auto& q = c.quantum;
    QuantumParams p;
    if (q.kick_strength) {
        p.kick_strength = *q.kick_strength;
        p.ionization_photons = *q.ionization_photons;
        p.frequency = q.frequency ? *q.frequency
                                  : frequency_for_chaos_parameter(p.kick_strength,
                                                                  p.ionization_photons,
                                                                  *q.chaos_parameter);
    } else {
        p = quantum_params(c.binary(), c.dmp);
    }
    p.validate();
    const double k = p.kick_strength;
    const double sites = p.ionization_photons + double(q.pad) * std::max({k * k, k, 10.0});
    if (!(sites <= double(q.max_sites))) {
        throw DomainError("quantum-sim: the lattice would need about " + format_double(sites) +
                          " sites (limit quantum.max_sites = " + std::to_string(q.max_sites) +
                          "); this parameter set is not simulable at desk scale");
    }
    return p;
}

void run_quantum_sim(const RunConfig& c, OutputSink& out, std::ostream& log) {
    const QuantumParams p = resolve_quantum_params(c);
    QuantumRunConfig rc;
    rc.window_begin = c.quantum.window_begin;
    rc.window_end = c.quantum.window_end;
    rc.lattice.pad = c.quantum.pad;
    rc.lattice.size = c.quantum.lattice_size;
    const auto t_q = std::max<std::int64_t>(1, std::int64_t(std::ceil(p.localization_length())));
    const std::int64_t window_end = rc.window_end > 0 ? rc.window_end : 3 * t_q;
    rc.n_periods = c.quantum.n_periods > 0 ? c.quantum.n_periods : window_end;

    Table s = summary_table();
    s.add({std::string("kick_strength"), p.kick_strength, std::string("photons")});
    s.add({std::string("frequency"), p.frequency, std::string("1")});
    s.add({std::string("ionization_photons"), p.ionization_photons, std::string("photons")});
    s.add({std::string("theoretical_length"), p.localization_length(), std::string("photons")});

    if (c.quantum.realizations > 1) {
        const auto avg = run_realizations(p, rc, c.quantum.realizations, c.quantum.relative_spread,
                                          DisorderAverage::geometric, c.threads);
        out.table("distribution", distribution_table(avg.distribution, avg.lowest_offset));
        s.add({std::string("fitted_length"), avg.fitted_length, std::string("photons")});
        s.add({std::string("realizations"), std::int64_t(c.quantum.realizations), std::string("1")});
        out.table("quantum_summary", s);
        log << "quantum-sim: " << c.quantum.realizations << " realizations, fitted length "
            << format_double(avg.fitted_length) << "\n";
        return;
    }

    const auto ckpt = checkpoint_path(c, out.dir);
    std::optional<QuantumRunner> runner;
    if (c.checkpoint.resume && std::filesystem::exists(ckpt)) {
        runner.emplace(QuantumRunner::restore(p, rc, load_quantum_checkpoint(ckpt)));
        log << "quantum-sim: resumed at period " << runner->wavefunction().time << "\n";
    } else {
        runner.emplace(p, rc);
    }
    const std::int64_t every = c.checkpoint.every > 0 ? c.checkpoint.every : rc.n_periods;
    while (runner->wavefunction().time < rc.n_periods) {
        runner->advance_to(runner->wavefunction().time + every);
        if (c.checkpoint.every > 0) save_checkpoint(ckpt, runner->snapshot());
    }
    const QuantumRunResult r = runner->result();
    if (r.window_before_quantum_time) {
        log << "quantum-sim: warning: averaging window starts before t_q = " << t_q << "\n";
    }
    if (!r.fit_error.empty()) log << "quantum-sim: fit failed: " << r.fit_error << "\n";
    out.table("ionization", ionization_table(r));
    out.table("distribution", distribution_table(r.distribution, r.lowest_offset));
    s.add({std::string("fitted_length"), r.fitted_length, std::string("photons")});
    s.add({std::string("absorbed_probability"), r.final_absorbed, std::string("1")});
    s.add({std::string("lattice_sites"), std::int64_t(r.distribution.size()), std::string("1")});
    s.add({std::string("periods"), rc.n_periods, std::string("T_p")});
    out.table("quantum_summary", s);
    log << "quantum-sim: " << rc.n_periods << " periods, absorbed "
        << format_double(r.final_absorbed) << "\n";
}

void run_capture(const RunConfig& c, OutputSink& out, std::ostream& log) {
    const CaptureReport r = capture_report(c.binary(), c.dmp);
    if (c.format == OutputFormat::json) {
        out.raw("capture.json", capture_json(r));
    } else {
        out.table("capture", capture_table(r));
    }
    log << "capture: " << r.regime_label << ", M_cap " << format_double(r.captured_mass_g) << " g\n";
}

void run_presets(const RunConfig& c, OutputSink& out, std::ostream& log) {
    out.table("presets", preset_table());
    for (const auto& name : preset_names()) log << preset_description(name) << "\n";
    (void)c;
}

}  // namespace

std::string_view command_name(Command c) {
    switch (c) {
        case Command::regimes: return "regimes";
        case Command::lifetime: return "lifetime";
        case Command::classical_sim: return "classical-sim";
        case Command::quantum_sim: return "quantum-sim";
        case Command::capture: return "capture";
        case Command::presets: return "presets";
    }
    return "unknown";
}

std::optional<Command> parse_command(std::string_view name) {
    for (Command c : {Command::regimes, Command::lifetime, Command::classical_sim,
                      Command::quantum_sim, Command::capture, Command::presets}) {
        if (command_name(c) == name) return c;
    }
    return std::nullopt;
}

std::string_view format_extension(OutputFormat f) { return f == OutputFormat::json ? ".json" : ".csv"; }

BinarySystem RunConfig::binary() const {
    if (!has_system) throw ConfigError("no binary system configured");
    BinaryParams p = system;
    if (kick_amplitude) p.kick_amplitude = *kick_amplitude;
    if (harmonics) p.harmonics = *harmonics;
    return BinarySystem::from_params(p);
}

ConfigOverride parse_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw ConfigError("override '" + std::string(assignment) + "': expected key=value");
    }
    return {std::string(assignment.substr(0, eq)), std::string(assignment.substr(eq + 1))};
}

RunConfig parse_config(std::string_view text, const std::vector<ConfigOverride>& overrides) {
    json root;
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        root = json::object();
    } else {
        try {
            root = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
    }
    if (!root.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& o : overrides) apply_override(root, o);

    RunConfig c;
    ObjectReader r(root, "");
    std::string command = "regimes";
    r.string("command", command);
    const auto cmd = parse_command(command);
    if (!cmd) {
        throw ConfigError("config key 'command': expected one of regimes, lifetime, classical-sim, "
                          "quantum-sim, capture, presets; got '" + command + "'");
    }
    c.command = *cmd;

    if (const json* s = r.find("system")) {
        if (s->is_string()) {
            c.preset_name = s->get<std::string>();
            c.system = preset_params(c.preset_name);
        } else if (s->is_object()) {
            c.system = parse_inline_system(*s);
        } else {
            r.mismatch("system", "a preset name or an object", *s);
        }
        c.has_system = true;
    }
    r.number("kick_amplitude", c.kick_amplitude);
    if (const json* h = r.find("kick_harmonics")) c.harmonics = parse_harmonics(*h, "kick_harmonics");

    if (const json* j = r.find("dmp")) {
        ObjectReader d(*j, "dmp");
        d.number("mass_ratio", c.dmp.mass_ratio);
        d.number("initial_w", c.dmp.initial_w);
        d.finish();
    }
    if (const json* j = r.find("grid")) {
        ObjectReader g(*j, "grid");
        g.number("mu_min", c.grid.mu_min);
        g.number("mu_max", c.grid.mu_max);
        g.integer("count", c.grid.count);
        g.finish();
    }
    if (const json* j = r.find("classical")) {
        ObjectReader k(*j, "classical");
        k.integer("n_trajectories", c.classical.n_trajectories);
        k.integer("max_kicks", c.classical.max_kicks);
        k.number("w_min", c.classical.w_min);
        k.integer("diffusion_horizon", c.classical.diffusion_horizon);
        k.integer("fit_first", c.classical.diffusion_window.first);
        k.integer("fit_last", c.classical.diffusion_window.last);
        k.integer("section_trajectories", c.classical.section_trajectories);
        k.integer("section_iterations", c.classical.section_iterations);
        k.number("section_w_min", c.classical.section_w_min);
        k.number("section_w_max", c.classical.section_w_max);
        k.finish();
    }
    if (const json* j = r.find("quantum")) {
        ObjectReader q(*j, "quantum");
        q.number("kick_strength", c.quantum.kick_strength);
        q.number("ionization_photons", c.quantum.ionization_photons);
        q.number("frequency", c.quantum.frequency);
        q.number("chaos_parameter", c.quantum.chaos_parameter);
        q.integer("n_periods", c.quantum.n_periods);
        q.integer("window_begin", c.quantum.window_begin);
        q.integer("window_end", c.quantum.window_end);
        q.integer("pad", c.quantum.pad);
        q.integer("lattice_size", c.quantum.lattice_size);
        q.integer("realizations", c.quantum.realizations);
        q.number("relative_spread", c.quantum.relative_spread);
        q.integer("max_sites", c.quantum.max_sites);
        q.finish();
    }
    if (const json* j = r.find("checkpoint")) {
        ObjectReader k(*j, "checkpoint");
        k.integer("every", c.checkpoint.every);
        k.string("path", c.checkpoint.path);
        k.boolean("resume", c.checkpoint.resume);
        k.finish();
    }
    r.unsigned64("seed", c.seed);
    r.string("out", c.out_dir);
    std::string format = "csv";
    r.string("format", format);
    if (format == "csv") {
        c.format = OutputFormat::csv;
    } else if (format == "json") {
        c.format = OutputFormat::json;
    } else {
        throw ConfigError("config key 'format': expected csv or json, got '" + format + "'");
    }
    r.integer("threads", c.threads);
    r.finish();
    validate(c);
    return c;
}

std::string config_to_json(const RunConfig& c) {
    json j;
    j["command"] = std::string(command_name(c.command));
    if (c.has_system) {
        if (!c.preset_name.empty()) {
            j["system"] = c.preset_name;
        } else {
            const auto& s = c.system;
            j["system"] = {{"name", s.name},
                           {"central_mass_kg", s.central_mass_kg},
                           {"planet_mass_kg", s.planet_mass_kg},
                           {"orbit_radius_m", optional_json(s.orbit_radius_m)},
                           {"orbit_velocity_m_s", optional_json(s.orbit_velocity_m_s)},
                           {"period_years", optional_json(s.period_years)},
                           {"kick_amplitude", s.kick_amplitude},
                           {"harmonics", harmonics_json(s.harmonics)},
                           {"empirical_chaos_border", optional_json(s.empirical_chaos_border)}};
        }
        const BinaryParams resolved = c.binary().params();
        j["resolved_system"] = {{"central_mass_kg", resolved.central_mass_kg},
                                {"planet_mass_kg", resolved.planet_mass_kg},
                                {"orbit_radius_m", optional_json(resolved.orbit_radius_m)},
                                {"orbit_velocity_m_s", optional_json(resolved.orbit_velocity_m_s)},
                                {"period_years", optional_json(resolved.period_years)},
                                {"kick_amplitude", resolved.kick_amplitude},
                                {"harmonics", harmonics_json(resolved.harmonics)}};
    }
    j["kick_amplitude"] = optional_json(c.kick_amplitude);
    j["kick_harmonics"] = c.harmonics ? harmonics_json(*c.harmonics) : json(nullptr);
    j["dmp"] = {{"mass_ratio", c.dmp.mass_ratio}, {"initial_w", c.dmp.initial_w}};
    j["grid"] = {{"mu_min", c.grid.mu_min}, {"mu_max", c.grid.mu_max}, {"count", c.grid.count}};
    const auto& k = c.classical;
    j["classical"] = {{"n_trajectories", k.n_trajectories},
                      {"max_kicks", k.max_kicks},
                      {"w_min", k.w_min},
                      {"diffusion_horizon", k.diffusion_horizon},
                      {"fit_first", k.diffusion_window.first},
                      {"fit_last", k.diffusion_window.last},
                      {"section_trajectories", k.section_trajectories},
                      {"section_iterations", k.section_iterations},
                      {"section_w_min", k.section_w_min},
                      {"section_w_max", k.section_w_max}};
    const auto& q = c.quantum;
    j["quantum"] = {{"kick_strength", optional_json(q.kick_strength)},
                    {"ionization_photons", optional_json(q.ionization_photons)},
                    {"frequency", optional_json(q.frequency)},
                    {"chaos_parameter", optional_json(q.chaos_parameter)},
                    {"n_periods", q.n_periods},
                    {"window_begin", q.window_begin},
                    {"window_end", q.window_end},
                    {"pad", q.pad},
                    {"lattice_size", q.lattice_size ? json(*q.lattice_size) : json(nullptr)},
                    {"realizations", q.realizations},
                    {"relative_spread", q.relative_spread},
                    {"max_sites", q.max_sites}};
    j["checkpoint"] = {{"every", c.checkpoint.every},
                       {"path", c.checkpoint.path},
                       {"resume", c.checkpoint.resume}};
    j["seed"] = c.seed;
    j["out"] = c.out_dir;
    j["format"] = c.format == OutputFormat::json ? "json" : "csv";
    j["threads"] = c.threads;
    return j.dump(2) + "\n";
}

std::filesystem::path output_directory(const RunConfig& config) {
    if (!config.out_dir.empty()) return config.out_dir;
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return ".";
}

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

void Table::add(std::vector<Cell> row) {
    if (row.size() != columns.size()) {
        throw std::invalid_argument("table row has " + std::to_string(row.size()) +
                                    " cells, expected " + std::to_string(columns.size()));
    }
    rows.push_back(std::move(row));
}

std::string render_csv(const Table& table) {
    std::string out;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) out += ',';
        out += csv_escape(table.columns[i]);
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, double>) {
                        out += format_double(v);
                    } else if constexpr (std::is_same_v<T, std::int64_t>) {
                        out += std::to_string(v);
                    } else {
                        out += csv_escape(v);
                    }
                },
                row[i]);
        }
        out += '\n';
    }
    return out;
}

std::string render_json(const Table& table) {
    json rows = json::array();
    for (const auto& row : table.rows) {
        json obj = json::object();
        for (std::size_t i = 0; i < row.size(); ++i) obj[table.columns[i]] = cell_json(row[i]);
        rows.push_back(std::move(obj));
    }
    return rows.dump(2) + "\n";
}

std::string render(const Table& table, OutputFormat format) {
    return format == OutputFormat::json ? render_json(table) : render_csv(table);
}

std::string content_hash(std::string_view bytes) {
    std::string blob = "blob " + std::to_string(bytes.size());
    blob += '\0';
    blob += bytes;
    return digest_hex(blob, EVP_sha1());
}

std::string write_output(const std::filesystem::path& path, std::string_view bytes) {
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) {
            throw IoError("cannot create directory " + path.parent_path().string() + ": " +
                          ec.message());
        }
    }
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open " + tmp.string() + " for writing");
        f.write(bytes.data(), std::streamsize(bytes.size()));
        f.flush();
        if (!f) throw IoError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
    return content_hash(bytes);
}

std::string emit_table(const Table& table, OutputFormat format, const std::filesystem::path& path) {
    return write_output(path, render(table, format));
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    if (f.bad()) throw IoError("read failed for " + path.string());
    return ss.str();
}

Table figure1_csv_table(const std::vector<Figure1Row>& rows) {
    Table t{{"mu", "N_I", "ell_phi", "regime"}, {}};
    for (const auto& r : rows) t.add({r.mass_ratio, r.ionization_photons, r.localization_length, r.regime});
    return t;
}

Table figure2_csv_table(const std::vector<Figure2Row>& rows) {
    Table t{{"mu", "t_I_years", "mechanism"}, {}};
    for (const auto& r : rows) t.add({r.mass_ratio, r.lifetime_years, r.mechanism});
    return t;
}

Table survival_table(const EnsembleResult& result) {
    Table t{{"kicks", "periods", "surviving_fraction"}, {}};
    for (const auto& p : result.survival_curve) t.add({p.kicks, p.periods, p.surviving_fraction});
    return t;
}

Table escape_table(const EnsembleResult& result) {
    Table t{{"traj_id", "kicks", "periods"}, {}};
    for (const auto& e : result.escape_times) {
        if (e.status == TrajectoryStatus::escaped) t.add({e.trajectory, e.kicks, e.periods});
    }
    return t;
}

Table diffusion_table(const EnsembleResult& result) {
    Table t{{"kicks", "mean_square_dw", "survivors"}, {}};
    for (const auto& d : result.diffusion_series) t.add({d.kicks, d.mean_square_displacement, d.survivors});
    return t;
}

Table section_table(const std::vector<SectionPoint>& points) {
    Table t{{"traj_id", "w", "phi"}, {}};
    for (const auto& p : points) t.add({p.trajectory, p.w, p.phi});
    return t;
}

Table ionization_table(const QuantumRunResult& result) {
    Table t{{"iteration", "p_ion"}, {}};
    for (const auto& [it, p] : result.ionization_curve) t.add({it, p});
    return t;
}

Table distribution_table(const std::vector<double>& distribution, std::int64_t lowest_offset) {
    Table t{{"N_phi", "W"}, {}};
    for (std::size_t j = 0; j < distribution.size(); ++j) {
        t.add({std::int64_t(j) + lowest_offset, distribution[j]});
    }
    return t;
}

Table preset_table() {
    Table t{{"name", "central_mass_kg", "planet_mass_kg", "orbit_radius_m", "orbit_velocity_m_s",
             "period_years", "kick_amplitude", "description"},
            {}};
    for (const auto& name : preset_names()) {
        const BinaryParams p = preset(name).params();
        t.add({name, p.central_mass_kg, p.planet_mass_kg, *p.orbit_radius_m, *p.orbit_velocity_m_s,
               *p.period_years, p.kick_amplitude, preset_description(name)});
    }
    return t;
}

namespace {

struct Quantity {
    const char* name;
    double value;
    const char* unit;
};

std::vector<Quantity> capture_quantities(const CaptureReport& r) {
    return {{"mass_ratio", r.mass_ratio, "1"},
            {"chaos_border", r.chaos_border, "1"},
            {"quantum_border", r.quantum_border, "1"},
            {"halo_radius", r.halo_radius, "r_p"},
            {"classical_halo_radius", r.classical_halo_radius, "r_p"},
            {"accumulation_time", r.accumulation_years, "yr"},
            {"reduction_factor", r.reduction_factor, "1"},
            {"captured_mass", r.captured_mass_g, "g"},
            {"classical_captured_mass", r.classical_captured_mass_g, "g"},
            {"one_photon_energy_cut", r.one_photon_energy_cut ? 1.0 : 0.0, "bool"},
            {"cut_flow_fraction", r.cut_flow_fraction, "1"},
            {"cross_section_at_planet_velocity", r.cross_section_at_vp_m2, "m^2"},
            {"cross_section_at_galactic_velocity", r.cross_section_at_u_m2, "m^2"}};
}

}  // namespace

Table capture_table(const CaptureReport& report) {
    Table t = summary_table();
    for (const auto& q : capture_quantities(report)) {
        t.add({std::string(q.name), q.value, std::string(q.unit)});
    }
    t.add({std::string("regime"), report.regime_label, std::string("label")});
    return t;
}

std::string capture_json(const CaptureReport& report) {
    json j = json::object();
    for (const auto& q : capture_quantities(report)) {
        j[q.name] = {{"value", cell_json(q.value)}, {"unit", q.unit}};
    }
    j["regime"] = {{"value", report.regime_label}, {"unit", "label"}};
    return j.dump(2) + "\n";
}

std::string render_manifest(const RunManifest& m) {
    json j;
    j["tool_version"] = m.tool_version;
    j["command"] = m.command;
    j["config"] = m.config_json.empty() ? json::object() : json::parse(m.config_json);
    j["constants"] = constants_json(m.constants);
    j["wall_seconds"] = m.wall_seconds;
    json outs = json::array();
    for (const auto& o : m.outputs) outs.push_back({{"path", o.path}, {"hash", o.hash}});
    j["outputs"] = outs;
    return j.dump(2) + "\n";
}

RunManifest execute(const RunConfig& config, std::ostream& log) {
    const auto start = Clock::now();
    OutputSink out{output_directory(config), config.format, {}};
    switch (config.command) {
        case Command::regimes: run_regimes(config, out, log); break;
        case Command::lifetime: run_lifetime(config, out, log); break;
        case Command::classical_sim: run_classical(config, out, log); break;
        case Command::quantum_sim: run_quantum_sim(config, out, log); break;
        case Command::capture: run_capture(config, out, log); break;
        case Command::presets: run_presets(config, out, log); break;
    }
    RunManifest m;
    m.command = std::string(command_name(config.command));
    m.config_json = config_to_json(config);
    if (config.has_system) m.constants = config.binary().constants();
    m.outputs = std::move(out.records);
    std::sort(m.outputs.begin(), m.outputs.end(),
              [](const OutputRecord& a, const OutputRecord& b) { return a.path < b.path; });
    m.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    write_output(out.dir / "manifest.json", render_manifest(m));
    return m;
}

std::string encode_checkpoint(const QuantumRunner::Snapshot& s) {
    ByteWriter w;
    w.put_vector(s.psi.amplitudes);
    w.put(s.psi.lowest_offset);
    w.put(s.psi.initial_photons);
    w.put(s.psi.absorbed_probability);
    w.put(s.psi.leaked_probability);
    w.put(s.psi.time);
    w.put_vector(s.distribution_sum);
    w.put(s.samples);
    w.put_vector(s.ionization_curve);
    return wrap_checkpoint(CheckpointKind::quantum, w.bytes());
}

std::string encode_checkpoint(const EnsembleRunner::Snapshot& s) {
    ByteWriter w;
    w.put(s.completed_kicks);
    w.put(std::uint64_t(s.states.size()));
    for (const auto& st : s.states) {
        w.put(st.w);
        w.put(st.phi);
        w.put(st.kicks);
        w.put(st.elapsed_periods);
        w.put(std::uint8_t(st.status));
    }
    w.put_vector(s.chunk_sums);
    w.put_vector(s.chunk_counts);
    return wrap_checkpoint(CheckpointKind::ensemble, w.bytes());
}

QuantumRunner::Snapshot decode_quantum_checkpoint(std::string_view bytes) {
    ByteReader r(unwrap_checkpoint(bytes, CheckpointKind::quantum));
    QuantumRunner::Snapshot s;
    s.psi.amplitudes = r.get_vector<std::complex<double>>();
    s.psi.lowest_offset = r.get<std::int64_t>();
    s.psi.initial_photons = r.get<std::int64_t>();
    s.psi.absorbed_probability = r.get<double>();
    s.psi.leaked_probability = r.get<double>();
    s.psi.time = r.get<std::int64_t>();
    s.distribution_sum = r.get_vector<double>();
    s.samples = r.get<std::int64_t>();
    s.ionization_curve = r.get_vector<double>();
    r.expect_end();
    return s;
}

EnsembleRunner::Snapshot decode_ensemble_checkpoint(std::string_view bytes) {
    ByteReader r(unwrap_checkpoint(bytes, CheckpointKind::ensemble));
    EnsembleRunner::Snapshot s;
    s.completed_kicks = r.get<std::int64_t>();
    const auto n = r.get<std::uint64_t>();
    if (n > bytes.size()) throw CheckpointError("checkpoint payload truncated");
    s.states.resize(n);
    for (auto& st : s.states) {
        st.w = r.get<double>();
        st.phi = r.get<double>();
        st.kicks = r.get<std::int64_t>();
        st.elapsed_periods = r.get<double>();
        const auto status = r.get<std::uint8_t>();
        if (status > 2) throw CheckpointError("checkpoint holds an invalid trajectory status");
        st.status = TrajectoryStatus(status);
    }
    s.chunk_sums = r.get_vector<double>();
    s.chunk_counts = r.get_vector<std::int64_t>();
    r.expect_end();
    return s;
}

void save_checkpoint(const std::filesystem::path& path, const QuantumRunner::Snapshot& snapshot) {
    write_output(path, encode_checkpoint(snapshot));
}

void save_checkpoint(const std::filesystem::path& path, const EnsembleRunner::Snapshot& snapshot) {
    write_output(path, encode_checkpoint(snapshot));
}

QuantumRunner::Snapshot load_quantum_checkpoint(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    try {
        return decode_quantum_checkpoint(bytes);
    } catch (const CheckpointError& e) {
        throw CheckpointError(path.string() + ": " + e.what());
    }
}

EnsembleRunner::Snapshot load_ensemble_checkpoint(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    try {
        return decode_ensemble_checkpoint(bytes);
    } catch (const CheckpointError& e) {
        throw CheckpointError(path.string() + ": " + e.what());
    }
}

}  // namespace keplerdm
