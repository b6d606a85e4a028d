#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "keplerdm/errors.hpp"
#include "keplerdm/io.hpp"

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kDomain = 3, kIo = 4 };

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kepler-map dynamics of light dark matter in binary systems"};
    app.set_version_flag("--version", std::string(keplerdm::kToolVersion));

    std::string command;
    std::string config_path;
    std::vector<std::string> sets;
    std::string out_dir;
    std::string format;
    std::string system;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;

    app.add_option("command", command,
                   "regimes | lifetime | classical-sim | quantum-sim | capture | presets")
        ->required();
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--set", sets, "override key=value (dotted keys, JSON values)")->take_all();
    app.add_option("--system", system, "preset name (same as --set system=<name>)");
    app.add_option("--out", out_dir,
                   std::string("output directory (default $") + keplerdm::kOutputDirEnv + " or .)");
    app.add_option("--format", format, "csv | json");
    app.add_option("--seed", seed, "64-bit seed");
    app.add_option("--threads", threads, "worker threads; 0 = all cores; never changes results");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        std::string text = "{}";
        if (!config_path.empty()) text = keplerdm::read_file(config_path);
        std::vector<keplerdm::ConfigOverride> overrides;
        overrides.emplace_back("command", "\"" + command + "\"");
        if (!system.empty()) overrides.emplace_back("system", "\"" + system + "\"");
        for (const auto& s : sets) overrides.push_back(keplerdm::parse_override(s));
        if (!out_dir.empty()) overrides.emplace_back("out", "\"" + out_dir + "\"");
        if (!format.empty()) overrides.emplace_back("format", "\"" + format + "\"");
        if (seed) overrides.emplace_back("seed", std::to_string(*seed));
        if (threads) overrides.emplace_back("threads", std::to_string(*threads));

        const keplerdm::RunConfig config = keplerdm::parse_config(text, overrides);
        const keplerdm::RunManifest manifest = keplerdm::execute(config, std::cerr);
        const auto dir = keplerdm::output_directory(config);
        for (const auto& o : manifest.outputs) {
            std::cout << o.hash << "  " << (dir / o.path).string() << "\n";
        }
        std::cout << "manifest  " << (dir / "manifest.json").string() << "\n";
        return kOk;
    } catch (const keplerdm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const keplerdm::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIo;
    } catch (const keplerdm::DomainError& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return kDomain;
    } catch (const keplerdm::EstimationError& e) {
        std::cerr << "estimation error: " << e.what() << "\n";
        return kDomain;
    }
}
