#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "keplerdm/binary_system.hpp"
#include "keplerdm/capture.hpp"
#include "keplerdm/classical_map.hpp"
#include "keplerdm/quantum_map.hpp"

namespace keplerdm {

inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr std::uint64_t kDefaultSeed = 20171217;
// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "KEPLERDM_OUT";

enum class Command { regimes, lifetime, classical_sim, quantum_sim, capture, presets };
enum class OutputFormat { csv, json };

std::string_view command_name(Command c);
std::optional<Command> parse_command(std::string_view name);
std::string_view format_extension(OutputFormat f);

struct GridSpec {
    double mu_min = 1e-22;
    double mu_max = 1e-13;
    int count = 200;
};

struct ClassicalKnobs {
    std::int64_t n_trajectories = 10000;
    std::int64_t max_kicks = 100000;
    double w_min = 1e-4;
    std::int64_t diffusion_horizon = 1000;
    KickWindow diffusion_window{};
    // Poincare section: this many trajectories (0 disables) spread over
    // w in [section_w_min, section_w_max] at phi = 0.
    std::int64_t section_trajectories = 0;
    std::int64_t section_iterations = 1000;
    double section_w_min = -0.6;
    double section_w_max = -0.1;
};

struct QuantumKnobs {
    // Raw map parameters; when kick_strength is unset, they come from system + dmp.
    std::optional<double> kick_strength;
    std::optional<double> ionization_photons;
    std::optional<double> frequency;
    std::optional<double> chaos_parameter;  // alternative to frequency
    std::int64_t n_periods = 0;             // 0: 3 t_q
    std::int64_t window_begin = 0;
    std::int64_t window_end = 0;
    int pad = 4;
    std::optional<std::int64_t> lattice_size;
    int realizations = 1;
    double relative_spread = 1e-4;
    std::int64_t max_sites = std::int64_t(1) << 24;
};

struct CheckpointKnobs {
    std::int64_t every = 0;  // iterations (kicks or periods) between saves; 0 disables
    std::string path;        // default <out>/<command>.ckpt
    bool resume = false;
};

struct RunConfig {
    Command command = Command::regimes;
    // Exactly one of preset name / inline description; preset_name empty for inline.
    std::string preset_name;
    BinaryParams system{};
    bool has_system = false;
    std::optional<double> kick_amplitude;  // f0 override
    std::optional<std::vector<KickHarmonic>> harmonics;  // kick shape override
    DmpSpec dmp{1e-19, -1.0};
    GridSpec grid{};
    ClassicalKnobs classical{};
    QuantumKnobs quantum{};
    CheckpointKnobs checkpoint{};
    std::uint64_t seed = kDefaultSeed;
    std::string out_dir;  // empty: $KEPLERDM_OUT, then "."

    OutputFormat format = OutputFormat::csv;
    unsigned threads = 1;

    BinarySystem binary() const;  // throws ConfigError without a system
};

// key=value override; key is a dotted path, value JSON (bare words are strings).
using ConfigOverride = std::pair<std::string, std::string>;
ConfigOverride parse_override(std::string_view assignment);  // throws ConfigError

// Parses JSON text, applies overrides, validates and fills defaults. Unknown
// keys and type mismatches raise ConfigError naming the key.
RunConfig parse_config(std::string_view text, const std::vector<ConfigOverride>& overrides = {});

// Canonical JSON echo of the resolved config (sorted keys, round-trip numbers).
std::string config_to_json(const RunConfig& config);

// Output directory after applying the environment default.
std::filesystem::path output_directory(const RunConfig& config);

// Shortest decimal that parses back to the same double; "inf", "-inf", "nan".
std::string format_double(double value);

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row);  // throws std::invalid_argument on width mismatch
};

std::string render_csv(const Table& table);
// Array of row objects with sorted keys; non-finite doubles become strings.
std::string render_json(const Table& table);
std::string render(const Table& table, OutputFormat format);

// Git blob hash: sha1("blob <size>\0" + bytes), lowercase hex.
std::string content_hash(std::string_view bytes);

// Writes bytes (creating parent directories) and returns their content hash.
// Throws IoError with the path on failure.
std::string write_output(const std::filesystem::path& path, std::string_view bytes);
std::string emit_table(const Table& table, OutputFormat format, const std::filesystem::path& path);
std::string read_file(const std::filesystem::path& path);  // throws IoError

Table figure1_csv_table(const std::vector<Figure1Row>& rows);
Table figure2_csv_table(const std::vector<Figure2Row>& rows);
Table survival_table(const EnsembleResult& result);
Table escape_table(const EnsembleResult& result);
Table diffusion_table(const EnsembleResult& result);
Table section_table(const std::vector<SectionPoint>& points);
Table ionization_table(const QuantumRunResult& result);
Table distribution_table(const std::vector<double>& distribution, std::int64_t lowest_offset);
Table preset_table();
// quantity,value,unit
Table capture_table(const CaptureReport& report);
// {"quantity": {"unit": ..., "value": ...}, ...}
std::string capture_json(const CaptureReport& report);

struct OutputRecord {
    std::string path;  // relative to the output directory
    std::string hash;
};

struct RunManifest {
    std::string tool_version{kToolVersion};
    std::string command;
    std::string config_json;
    PhysicalConstants constants{};
    double wall_seconds = 0.0;
    std::vector<OutputRecord> outputs;
};

std::string render_manifest(const RunManifest& manifest);

// Runs one subcommand, writes its outputs and manifest.json into
// config.out_dir, and returns the manifest. Progress goes to log.
RunManifest execute(const RunConfig& config, std::ostream& log);

// Versioned binary checkpoints: magic, version byte, kind byte, payload
// length, payload, SHA-256 of everything before it.
inline constexpr std::uint8_t kCheckpointVersion = 1;

std::string encode_checkpoint(const QuantumRunner::Snapshot& snapshot);
std::string encode_checkpoint(const EnsembleRunner::Snapshot& snapshot);
// Throw CheckpointError on bad magic, version, kind, length or checksum.
QuantumRunner::Snapshot decode_quantum_checkpoint(std::string_view bytes);
EnsembleRunner::Snapshot decode_ensemble_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const QuantumRunner::Snapshot& snapshot);
void save_checkpoint(const std::filesystem::path& path, const EnsembleRunner::Snapshot& snapshot);
QuantumRunner::Snapshot load_quantum_checkpoint(const std::filesystem::path& path);
EnsembleRunner::Snapshot load_ensemble_checkpoint(const std::filesystem::path& path);

}  // namespace keplerdm
