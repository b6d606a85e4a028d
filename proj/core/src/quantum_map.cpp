#include "keplerdm/quantum_map.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "keplerdm/errors.hpp"
#include "keplerdm/parallel.hpp"

namespace keplerdm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// FFTW planning is not thread-safe; execution is.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

std::int64_t continuum_buffer(const QuantumParams& params, const LatticeConfig& lattice) {
    if (lattice.continuum_buffer > 0) return lattice.continuum_buffer;
    return 2 * std::int64_t(std::ceil(params.kick_strength)) + 16;
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = double(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

}  // namespace

void QuantumParams::validate() const {
    if (!(kick_strength >= 0.0) || !std::isfinite(kick_strength)) {
        throw ConfigError("quantum: kick strength k must be finite and >= 0");
    }
    if (!(frequency > 0.0) || !std::isfinite(frequency)) {
        throw ConfigError("quantum: frequency omega must be finite and > 0");
    }
    if (!(ionization_photons >= 1.0) || !std::isfinite(ionization_photons)) {
        throw ConfigError("quantum: N_I must be finite and >= 1");
    }
}

QuantumParams quantum_params(const BinarySystem& system, const DmpSpec& dmp) {
    const AtomicScales a = atomic_scales(system, dmp);
    return QuantumParams{a.kick_strength, a.dimensionless_frequency, a.ionization_photons};
}

double frequency_for_chaos_parameter(double kick_strength, double ionization_photons,
                                     double chaos_parameter) {
    if (!(kick_strength > 0.0) || !(ionization_photons > 0.0) || !(chaos_parameter > 0.0)) {
        throw DomainError("frequency_for_chaos_parameter: arguments must be positive");
    }
    // k * 6 pi omega^2 (2 omega N_I)^{-5/2} = K
    const double root = 6.0 * std::numbers::pi * kick_strength / chaos_parameter;
    return root * root * std::pow(2.0 * ionization_photons, -5.0);
}

double PhotonWavefunction::norm_squared() const {
    double total = 0.0;
    for (const auto& a : amplitudes) total += std::norm(a);
    return total;
}

std::vector<double> PhotonWavefunction::probabilities() const {
    std::vector<double> p(amplitudes.size());
    std::transform(amplitudes.begin(), amplitudes.end(), p.begin(),
                   [](const std::complex<double>& a) { return std::norm(a); });
    return p;
}

PhotonWavefunction init_state(const QuantumParams& params, const LatticeConfig& lattice) {
    params.validate();
    if (lattice.pad < 4) throw ConfigError("lattice.pad must be >= 4");
    const double k = params.kick_strength;
    const std::int64_t n_ion = std::llround(params.ionization_photons);
    const auto below = std::int64_t(std::ceil(double(lattice.pad) * std::max({k * k, k, 10.0})));
    const std::int64_t buffer = continuum_buffer(params, lattice);
    const std::int64_t required = n_ion + below + buffer;

    std::int64_t size = std::int64_t(std::bit_ceil(std::uint64_t(required)));
    if (lattice.size) {
        if (*lattice.size < required) {
            throw ConfigError("lattice.size " + std::to_string(*lattice.size) +
                              " is smaller than the " + std::to_string(required) +
                              " sites required by the padding rule");
        }
        if (!std::has_single_bit(std::uint64_t(*lattice.size))) {
            throw ConfigError("lattice.size must be a power of two");
        }
        size = *lattice.size;
    }

    PhotonWavefunction psi;
    psi.amplitudes.assign(std::size_t(size), {0.0, 0.0});
    psi.initial_photons = -n_ion;
    // top site sits buffer - 1 photons above threshold (N = buffer - 1)
    psi.lowest_offset = n_ion + buffer - size;
    psi.amplitudes[std::size_t(-psi.lowest_offset)] = 1.0;
    return psi;
}

struct QuantumKeplerMap::Plans {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;

    explicit Plans(std::int64_t n) {
        std::vector<std::complex<double>> scratch(static_cast<std::size_t>(n));
        std::lock_guard lock(fftw_planner_mutex());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        forward = fftw_plan_dft_1d(int(n), as_fftw(scratch.data()), as_fftw(scratch.data()),
                                   FFTW_FORWARD, flags);
        backward = fftw_plan_dft_1d(int(n), as_fftw(scratch.data()), as_fftw(scratch.data()),
                                    FFTW_BACKWARD, flags);
        if (!forward || !backward) throw std::runtime_error("FFTW plan creation failed");
    }
    ~Plans() {
        std::lock_guard lock(fftw_planner_mutex());
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
    }
    Plans(const Plans&) = delete;
    Plans& operator=(const Plans&) = delete;
};

QuantumKeplerMap::QuantumKeplerMap(const QuantumParams& params, const PhotonWavefunction& layout,
                                   const LatticeConfig& lattice)
    : params_(params),
      lattice_(lattice),
      size_(layout.size()),
      lowest_offset_(layout.lowest_offset),
      initial_photons_(layout.initial_photons) {
    if (!(params.kick_strength >= 0.0) || !(params.frequency > 0.0)) {
        throw ConfigError("quantum map needs k >= 0 and omega > 0");
    }
    if (size_ < 2) throw ConfigError("quantum lattice needs at least two sites");
    const auto n = std::size_t(size_);

    kick_factors_.resize(n);
    for (std::size_t m = 0; m < n; ++m) {
        const double phi = kTwoPi * double(m) / double(n);
        kick_factors_[m] = std::polar(1.0, -params.kick_strength * std::cos(phi));
    }

    rotation_factors_.resize(n);
    continuum_.assign(n, 0);
    mask_.assign(n, 1.0);
    for (std::size_t j = 0; j < n; ++j) {
        const std::int64_t total = initial_photons_ + lowest_offset_ + std::int64_t(j);
        if (total >= 0) {
            continuum_[j] = 1;
            mask_[j] = 0.0;
            rotation_factors_[j] = 1.0;
            continue;
        }
        // H0 / 2 pi reduced to its fractional part before scaling
        const double cycles = 1.0 / std::sqrt(-2.0 * params.frequency * double(total));
        rotation_factors_[j] = std::polar(1.0, -kTwoPi * (cycles - std::floor(cycles)));
    }
    if (lattice.bottom_mask) {
        const int width = std::min<int>(lattice.bottom_mask_width, int(n / 4));
        for (int j = 0; j < width; ++j) {
            const double s = std::sin(0.5 * std::numbers::pi * double(j + 1) / double(width + 1));
            mask_[std::size_t(j)] = std::min(mask_[std::size_t(j)], s * s);
        }
    }
    plans_ = std::make_unique<Plans>(size_);
}

QuantumKeplerMap::~QuantumKeplerMap() = default;
QuantumKeplerMap::QuantumKeplerMap(QuantumKeplerMap&&) noexcept = default;
QuantumKeplerMap& QuantumKeplerMap::operator=(QuantumKeplerMap&&) noexcept = default;

void QuantumKeplerMap::check_layout(const PhotonWavefunction& psi) const {
    if (psi.size() != size_ || psi.lowest_offset != lowest_offset_ ||
        psi.initial_photons != initial_photons_) {
        throw std::logic_error("wavefunction lattice does not match the quantum map");
    }
}

void QuantumKeplerMap::kick(PhotonWavefunction& psi) const {
    check_layout(psi);
    if (params_.kick_strength == 0.0) return;  // identity; skips transform round-off
    auto* data = psi.amplitudes.data();
    fftw_execute_dft(plans_->backward, as_fftw(data), as_fftw(data));
    const double scale = 1.0 / double(size_);
    for (std::size_t m = 0; m < psi.amplitudes.size(); ++m) {
        data[m] *= kick_factors_[m] * scale;
    }
    fftw_execute_dft(plans_->forward, as_fftw(data), as_fftw(data));
}

void QuantumKeplerMap::rotate(PhotonWavefunction& psi) const {
    check_layout(psi);
    for (std::size_t j = 0; j < psi.amplitudes.size(); ++j) {
        if (continuum_[j]) {
            if (psi.amplitudes[j] != std::complex<double>{}) {
                throw std::logic_error("rotation reached a site with N >= 0; absorb first");
            }
            continue;
        }
        psi.amplitudes[j] *= rotation_factors_[j];
    }
}

double QuantumKeplerMap::absorb(PhotonWavefunction& psi) const {
    check_layout(psi);
    double ionized = 0.0, leaked = 0.0;
    for (std::size_t j = 0; j < psi.amplitudes.size(); ++j) {
        const double m = mask_[j];
        if (m == 1.0) continue;
        auto& a = psi.amplitudes[j];
        const double p = std::norm(a);
        if (continuum_[j]) {
            ionized += p;
            a = 0.0;
        } else {
            leaked += p * (1.0 - m * m);
            a *= m;
        }
    }
    psi.absorbed_probability += ionized;
    psi.leaked_probability += leaked;
    return ionized;
}

double QuantumKeplerMap::evolve_period(PhotonWavefunction& psi) const {
    kick(psi);
    const double ionized = absorb(psi);
    rotate(psi);
    psi.time += 1;
    if (psi.leaked_probability > lattice_.max_bottom_leak) {
        throw DomainError("lattice too small: bottom absorber removed probability " +
                          std::to_string(psi.leaked_probability) + " by period " +
                          std::to_string(psi.time));
    }
    return ionized;
}

double theoretical_distribution(double localization_length, double photon_offset) {
    if (!(localization_length > 0.0)) {
        throw DomainError("theoretical_distribution: localization length must be positive");
    }
    const double x = 2.0 * std::abs(photon_offset) / localization_length;
    return (1.0 + x) * std::exp(-x) / (2.0 * localization_length);
}

double fit_localization_length(std::span<const double> distribution, std::int64_t lowest_offset,
                               const FitOptions& options) {
    std::vector<double> x, y;
    for (std::size_t j = 0; j < distribution.size(); ++j) {
        const double a = std::abs(double(std::int64_t(j) + lowest_offset));
        if (a < options.min_abs_offset || a > options.max_abs_offset) continue;
        if (!(distribution[j] > options.floor)) continue;
        x.push_back(a);
        y.push_back(std::log(distribution[j]));
    }
    if (std::int64_t(x.size()) < options.min_sites) {
        throw EstimationError("fit_localization_length: " + std::to_string(x.size()) +
                              " sites above the floor in the fit range, need " +
                              std::to_string(options.min_sites));
    }
    constexpr double kInf = std::numeric_limits<double>::infinity();
    double slope = least_squares_slope(x, y);
    if (!(slope < -1e-300)) return kInf;
    double length = -2.0 / slope;
    if (options.model == ProfileModel::exponential) return length;

    std::vector<double> corrected(y.size());
    for (int iter = 0; iter < 500; ++iter) {
        for (std::size_t i = 0; i < y.size(); ++i) {
            corrected[i] = y[i] - std::log1p(2.0 * x[i] / length);
        }
        slope = least_squares_slope(x, corrected);
        if (!(slope < -1e-300)) return kInf;
        const double next = -2.0 / slope;
        const bool done = std::abs(next - length) <= 1e-13 * length;
        length = next;
        if (done) break;
    }
    return length;
}

FitOptions default_fit_options(double theoretical_length) {
    FitOptions f;
    f.min_abs_offset = 1.5 * theoretical_length;
    f.max_abs_offset = 5.0 * theoretical_length;
    return f;
}

QuantumRunner::QuantumRunner(const QuantumParams& params, QuantumRunConfig config)
    : params_(params),
      config_(std::move(config)),
      psi_(init_state(params, config_.lattice)),
      map_(params, psi_, config_.lattice) {
    const auto t_q = std::max<std::int64_t>(1, std::int64_t(std::ceil(params.localization_length())));
    if (config_.window_begin == 0 && config_.window_end == 0) {
        config_.window_begin = t_q;
        config_.window_end = 3 * t_q;
    }
    if (config_.window_begin < 1 || config_.window_end < config_.window_begin) {
        throw ConfigError("quantum window must satisfy 1 <= begin <= end");
    }
    if (config_.n_periods < config_.window_end) {
        throw ConfigError("n_periods (" + std::to_string(config_.n_periods) +
                          ") must reach the end of the averaging window (" +
                          std::to_string(config_.window_end) + ")");
    }
    distribution_sum_.assign(psi_.amplitudes.size(), 0.0);
    curve_.reserve(std::size_t(config_.n_periods));
}

void QuantumRunner::advance_to(std::int64_t period) {
    const std::int64_t target = std::min(period, config_.n_periods);
    while (psi_.time < target) {
        map_.evolve_period(psi_);
        curve_.push_back(psi_.absorbed_probability);
        if (psi_.time >= config_.window_begin && psi_.time <= config_.window_end) {
            for (std::size_t j = 0; j < distribution_sum_.size(); ++j) {
                distribution_sum_[j] += std::norm(psi_.amplitudes[j]);
            }
            ++samples_;
        }
    }
}

QuantumRunResult QuantumRunner::result() const {
    QuantumRunResult r;
    r.params = params_;
    r.lowest_offset = psi_.lowest_offset;
    r.theoretical_length = params_.localization_length();
    r.final_absorbed = psi_.absorbed_probability;
    r.window_begin = config_.window_begin;
    r.window_end = config_.window_end;
    r.window_before_quantum_time =
        double(config_.window_begin) < std::ceil(params_.localization_length());
    r.ionization_curve.reserve(curve_.size());
    for (std::size_t t = 0; t < curve_.size(); ++t) {
        r.ionization_curve.emplace_back(std::int64_t(t + 1), curve_[t]);
    }
    r.distribution.assign(distribution_sum_.size(), 0.0);
    if (samples_ > 0) {
        for (std::size_t j = 0; j < distribution_sum_.size(); ++j) {
            r.distribution[j] = distribution_sum_[j] / double(samples_);
        }
    }
    const FitOptions fit = config_.fit.value_or(default_fit_options(r.theoretical_length));
    try {
        r.fitted_length = fit_localization_length(r.distribution, r.lowest_offset, fit);
    } catch (const EstimationError& e) {
        r.fitted_length = std::numeric_limits<double>::quiet_NaN();
        r.fit_error = e.what();
    }
    return r;
}

QuantumRunner::Snapshot QuantumRunner::snapshot() const {
    return Snapshot{psi_, distribution_sum_, samples_, curve_};
}

QuantumRunner QuantumRunner::restore(const QuantumParams& params, QuantumRunConfig config,
                                     Snapshot snapshot) {
    QuantumRunner runner(params, std::move(config));
    const auto& p = snapshot.psi;
    if (p.size() != runner.psi_.size() || p.lowest_offset != runner.psi_.lowest_offset ||
        p.initial_photons != runner.psi_.initial_photons ||
        snapshot.distribution_sum.size() != runner.distribution_sum_.size() ||
        snapshot.ionization_curve.size() != std::size_t(std::max<std::int64_t>(p.time, 0))) {
        throw CheckpointError("quantum snapshot does not match the run configuration");
    }
    runner.psi_ = std::move(snapshot.psi);
    runner.distribution_sum_ = std::move(snapshot.distribution_sum);
    runner.samples_ = snapshot.samples;
    runner.curve_ = std::move(snapshot.ionization_curve);
    return runner;
}

QuantumRunResult run_quantum(const QuantumParams& params, const QuantumRunConfig& config) {
    QuantumRunner runner(params, config);
    runner.run();
    return runner.result();
}

RealizationAverage run_realizations(const QuantumParams& params, const QuantumRunConfig& config,
                                    int count, double relative_spread, DisorderAverage average,
                                    unsigned threads) {
    if (count < 1) throw ConfigError("realization count must be >= 1");
    std::vector<QuantumRunResult> runs(static_cast<std::size_t>(count));
    parallel_for(std::size_t(count), threads, [&](std::size_t j) {
        QuantumParams p = params;
        p.frequency *= 1.0 + relative_spread * double(j);
        runs[j] = run_quantum(p, config);
    });

    RealizationAverage out;
    out.lowest_offset = runs.front().lowest_offset;
    const std::size_t n = runs.front().distribution.size();
    out.distribution.assign(n, 0.0);
    for (const auto& r : runs) {
        for (std::size_t i = 0; i < n; ++i) {
            out.distribution[i] += average == DisorderAverage::arithmetic
                                       ? r.distribution[i]
                                       : std::log(std::max(r.distribution[i], 1e-300));
        }
        out.realization_lengths.push_back(r.fitted_length);
    }
    for (auto& v : out.distribution) {
        v /= double(count);
        if (average == DisorderAverage::geometric) v = std::exp(v);
    }
    const FitOptions fit =
        config.fit.value_or(default_fit_options(params.localization_length()));
    out.fitted_length = fit_localization_length(out.distribution, out.lowest_offset, fit);
    return out;
}

}  // namespace keplerdm
