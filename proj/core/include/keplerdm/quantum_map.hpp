#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "keplerdm/binary_system.hpp"

namespace keplerdm {

// Raw parameters of the quantum Kepler map: kick strength k (photons), planet
// frequency in dark-atom units omega, and photons to ionization N_I.
struct QuantumParams {
    double kick_strength = 0.0;
    double frequency = 0.0;
    double ionization_photons = 0.0;

    void validate() const;  // k >= 0, omega > 0, N_I >= 1
    double localization_length() const { return 0.5 * kick_strength * kick_strength; }
};

QuantumParams quantum_params(const BinarySystem& system, const DmpSpec& dmp);

// omega for which the local chaos parameter k * d^2H0/dN^2 at N = -N_I equals
// chaos_parameter. Used to place desk-scale runs in the chaotic regime.
double frequency_for_chaos_parameter(double kick_strength, double ionization_photons,
                                     double chaos_parameter);

struct LatticeConfig {
    int pad = 4;
    // Sites above the ionization threshold that receive kicked amplitude
    // before it is absorbed. 0 selects 2 ceil(k) + 16.
    int continuum_buffer = 0;
    // Fixed lattice size (power of two); must cover the padding rule.
    std::optional<std::int64_t> size;
    bool bottom_mask = true;
    int bottom_mask_width = 8;
    // Run aborts once the bottom mask has removed more than this.
    double max_bottom_leak = 1e-8;
};

// Amplitudes on sites j = 0..L-1 holding photon offsets N_phi = j + lowest_offset;
// total photon number is N = initial_photons + N_phi.
struct PhotonWavefunction {
    std::vector<std::complex<double>> amplitudes;
    std::int64_t lowest_offset = 0;
    std::int64_t initial_photons = 0;
    double absorbed_probability = 0.0;
    double leaked_probability = 0.0;
    std::int64_t time = 0;

    std::int64_t size() const { return std::int64_t(amplitudes.size()); }
    std::int64_t offset(std::int64_t site) const { return site + lowest_offset; }
    std::int64_t total_photons(std::int64_t site) const {
        return initial_photons + site + lowest_offset;
    }
    double norm_squared() const;
    std::vector<double> probabilities() const;
};

// Delta state at N_phi = 0 with N0 = -round(N_I). Throws ConfigError for
// N_I < 1 or a fixed lattice that cannot hold the padding.
PhotonWavefunction init_state(const QuantumParams& params, const LatticeConfig& lattice = {});

// One orbital period of the quantum map on a fixed lattice:
// kick exp(-i k cos phi) in the phase representation, absorption of N >= 0
// (and of the bottom mask), then rotation exp(-i H0(N)) with
// H0 = 2 pi (-2 omega N)^{-1/2}. Thread-safe; holds the FFT plans.
class QuantumKeplerMap {
public:
    QuantumKeplerMap(const QuantumParams& params, const PhotonWavefunction& layout,
                     const LatticeConfig& lattice = {});
    ~QuantumKeplerMap();
    QuantumKeplerMap(QuantumKeplerMap&&) noexcept;
    QuantumKeplerMap& operator=(QuantumKeplerMap&&) noexcept;

    void kick(PhotonWavefunction& psi) const;
    // Throws std::logic_error if amplitude remains on a site with N >= 0.
    void rotate(PhotonWavefunction& psi) const;
    // Removes the continuum (returned, added to absorbed_probability) and the
    // bottom-mask loss (added to leaked_probability).
    double absorb(PhotonWavefunction& psi) const;
    // kick, absorb, rotate; returns the ionized probability of this period.
    // Throws DomainError when the bottom leak exceeds the configured limit.
    double evolve_period(PhotonWavefunction& psi) const;

    const QuantumParams& params() const { return params_; }
    std::span<const std::complex<double>> kick_factors() const { return kick_factors_; }
    std::span<const std::complex<double>> rotation_factors() const { return rotation_factors_; }
    std::span<const double> absorber_mask() const { return mask_; }

private:
    void check_layout(const PhotonWavefunction& psi) const;

    struct Plans;
    QuantumParams params_;
    LatticeConfig lattice_;
    std::int64_t size_ = 0;
    std::int64_t lowest_offset_ = 0;
    std::int64_t initial_photons_ = 0;
    std::vector<std::complex<double>> kick_factors_;
    std::vector<std::complex<double>> rotation_factors_;
    std::vector<double> mask_;  // 1 keeps, 0 removes; continuum sites are 0
    std::vector<char> continuum_;
    std::unique_ptr<Plans> plans_;
};

// (1 + 2|N|/ell) exp(-2|N|/ell) / (2 ell); throws DomainError for ell <= 0.
double theoretical_distribution(double localization_length, double photon_offset);

enum class ProfileModel {
    exponential,  // ln W linear in |N|
    localized,    // ln W - ln(1 + 2|N|/ell) linear in |N|, solved by fixed point
};

struct FitOptions {
    ProfileModel model = ProfileModel::localized;
    double min_abs_offset = 0.0;  // |N_phi| range, inclusive
    double max_abs_offset = 0.0;
    double floor = 1e-14;
    int min_sites = 20;
};

// Fit over both sides of the |N_phi| range: ell = -2/slope. Returns +inf for
// a non-decaying profile; throws EstimationError when fewer than min_sites
// values exceed the floor.
double fit_localization_length(std::span<const double> distribution, std::int64_t lowest_offset,
                               const FitOptions& options);

// Default fit: [1.5 ell, 5 ell] with the localized profile.
FitOptions default_fit_options(double theoretical_length);

struct QuantumRunConfig {
    std::int64_t n_periods = 0;
    // Time average over iterations t in [window_begin, window_end]; both 0
    // selects [t_q, 3 t_q] with t_q = ceil(ell_phi).
    std::int64_t window_begin = 0;
    std::int64_t window_end = 0;
    LatticeConfig lattice{};
    std::optional<FitOptions> fit;  // default_fit_options when empty
};

struct QuantumRunResult {
    std::vector<std::pair<std::int64_t, double>> ionization_curve;
    std::vector<double> distribution;  // time-averaged |psi|^2 per site
    std::int64_t lowest_offset = 0;
    double fitted_length = 0.0;        // NaN when the fit failed
    std::string fit_error;
    double theoretical_length = 0.0;
    double final_absorbed = 0.0;
    std::int64_t window_begin = 0;
    std::int64_t window_end = 0;
    bool window_before_quantum_time = false;
    QuantumParams params;
};

// Resumable evolution with time averaging; snapshot() captures everything
// needed to continue bit-identically.
class QuantumRunner {
public:
    QuantumRunner(const QuantumParams& params, QuantumRunConfig config);

    void advance_to(std::int64_t period);
    void run() { advance_to(config_.n_periods); }
    QuantumRunResult result() const;

    const PhotonWavefunction& wavefunction() const { return psi_; }
    const QuantumRunConfig& config() const { return config_; }

    struct Snapshot {
        PhotonWavefunction psi;
        std::vector<double> distribution_sum;
        std::int64_t samples = 0;
        std::vector<double> ionization_curve;  // absorbed probability after each period
    };
    Snapshot snapshot() const;
    static QuantumRunner restore(const QuantumParams& params, QuantumRunConfig config,
                                 Snapshot snapshot);

private:
    QuantumParams params_;
    QuantumRunConfig config_;
    PhotonWavefunction psi_;
    QuantumKeplerMap map_;
    std::vector<double> distribution_sum_;
    std::int64_t samples_ = 0;
    std::vector<double> curve_;
};

QuantumRunResult run_quantum(const QuantumParams& params, const QuantumRunConfig& config);

enum class DisorderAverage { arithmetic, geometric };

struct RealizationAverage {
    std::vector<double> distribution;
    std::int64_t lowest_offset = 0;
    double fitted_length = 0.0;
    std::vector<double> realization_lengths;  // per-realization fits (NaN on failure)
};

// Independent runs at frequencies omega (1 + relative_spread * j), j < count;
// the time-averaged profiles are combined across runs and fitted once.
RealizationAverage run_realizations(const QuantumParams& params, const QuantumRunConfig& config,
                                    int count, double relative_spread, DisorderAverage average,
                                    unsigned threads = 1);

}  // namespace keplerdm
