#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "keplerdm/binary_system.hpp"

namespace keplerdm {

// Energy change per perihelion passage, in units of w = 2E/(m_d v_p^2):
// sum_j a_j sin(j phi + theta_j).
class KickFunction {
public:
    KickFunction() = default;
    explicit KickFunction(std::vector<KickHarmonic> terms);  // throws ConfigError if empty

    static KickFunction sine(double amplitude);
    // epsilon times the system's relative kick shape.
    static KickFunction for_system(const BinarySystem& system);

    template <class T>
    T evaluate(T phi) const {
        using std::sin;
        T sum = T(0);
        for (const auto& h : terms_) sum += h.amplitude * sin(double(h.index) * phi + h.phase);
        return sum;
    }
    double operator()(double phi) const { return evaluate(phi); }

    // sum_j |a_j|, the largest possible |kick|
    double bound() const;
    // <F^2> over a uniform phase: sum_j a_j^2 / 2
    double mean_square() const;

    const std::vector<KickHarmonic>& terms() const { return terms_; }

private:
    std::vector<KickHarmonic> terms_;
};

enum class TrajectoryStatus : std::uint8_t { bound = 0, escaped = 1, sunk = 2 };

struct ClassicalState {
    double w = -1.0;
    double phi = 0.0;  // in [0, 2 pi)
    std::int64_t kicks = 0;
    double elapsed_periods = 0.0;  // sum of orbital periods, in planet periods
    TrajectoryStatus status = TrajectoryStatus::bound;
};

struct MapOptions {
    // |w| below this after a kick freezes the trajectory as sunk.
    double w_min = 1e-4;
};

// Kick followed by rotation with the new energy. No phase reduction, so the
// same code serves double and complex-step differentiation. Requires w + F < 0.
template <class T>
std::array<T, 2> kepler_map_unreduced(T w, T phi, const KickFunction& kick) {
    using std::pow;
    const T w_new = w + kick.evaluate(phi);
    const T phi_new = phi + 2.0 * std::numbers::pi * pow(-w_new, -1.5);
    return {w_new, phi_new};
}

double reduce_phase(double phi);

// One map iteration. Escape (w >= 0 after the kick) is tested before the
// phase advance; non-bound states are returned unchanged.
ClassicalState step(const ClassicalState& state, const KickFunction& kick,
                    const MapOptions& options = {});

// Exact inverse of step for states that stayed bound.
ClassicalState inverse_step(const ClassicalState& state, const KickFunction& kick);

struct EnsembleConfig {
    std::int64_t n_trajectories = 10000;
    std::int64_t max_kicks = 100000;
    std::uint64_t seed = 20171217;
    double w_min = 1e-4;
    // <(w - w0)^2> is recorded after every kick up to this count.
    std::int64_t diffusion_horizon = 1000;
    unsigned threads = 1;  // 0: hardware concurrency; never affects results

    void validate() const;
};

struct SurvivalPoint {
    std::int64_t kicks = 0;
    double periods = 0.0;
    double surviving_fraction = 1.0;
};

struct EscapeRecord {
    std::int64_t trajectory = 0;
    std::int64_t kicks = 0;
    double periods = 0.0;
    TrajectoryStatus status = TrajectoryStatus::bound;
};

struct DiffusionPoint {
    std::int64_t kicks = 0;
    double mean_square_displacement = 0.0;
    std::int64_t survivors = 0;
};

struct EnsembleResult {
    // One point per escape, ordered by elapsed periods. Sunk trajectories
    // count as surviving.
    std::vector<SurvivalPoint> survival_curve;
    // Every trajectory; bound survivors carry their state at max_kicks.
    std::vector<EscapeRecord> escape_times;
    std::vector<DiffusionPoint> diffusion_series;
    std::uint64_t seed = 0;
    std::int64_t n_trajectories = 0;
    std::int64_t max_kicks = 0;
    double initial_w = 0.0;
    std::int64_t escaped = 0;
    std::int64_t sunk = 0;

    // Median escape time in planet periods over all trajectories;
    // +inf when fewer than half escaped.
    double median_escape_periods() const;
};

// Resumable ensemble integration. Trajectories are grouped into fixed chunks
// whose partial sums are combined in chunk order, so the result is
// bit-identical for any thread count and across checkpoint/resume.
class EnsembleRunner {
public:
    static constexpr std::int64_t kChunkSize = 256;

    EnsembleRunner(KickFunction kick, double initial_w, EnsembleConfig config);

    // Integrates every trajectory up to min(target, max_kicks) kicks.
    void advance_to(std::int64_t target_kicks);
    void run() { advance_to(config_.max_kicks); }

    std::int64_t completed_kicks() const { return completed_kicks_; }
    bool finished() const { return completed_kicks_ >= config_.max_kicks; }
    EnsembleResult result() const;

    const KickFunction& kick() const { return kick_; }
    double initial_w() const { return initial_w_; }
    const EnsembleConfig& config() const { return config_; }
    std::span<const ClassicalState> trajectories() const { return states_; }

    // Raw state access for checkpointing.
    struct Snapshot {
        std::int64_t completed_kicks = 0;
        std::vector<ClassicalState> states;
        std::vector<double> chunk_sums;          // [chunk][record]
        std::vector<std::int64_t> chunk_counts;  // [chunk][record]
    };
    Snapshot snapshot() const;
    static EnsembleRunner restore(KickFunction kick, double initial_w, EnsembleConfig config,
                                  Snapshot snapshot);

private:
    std::size_t chunk_count() const;
    std::size_t record_count() const;

    KickFunction kick_;
    double initial_w_;
    EnsembleConfig config_;
    std::int64_t completed_kicks_ = 0;
    std::vector<ClassicalState> states_;
    std::vector<double> chunk_sums_;
    std::vector<std::int64_t> chunk_counts_;
};

EnsembleResult run_ensemble(const KickFunction& kick, double initial_w,
                            const EnsembleConfig& config);
EnsembleResult run_ensemble(const BinarySystem& system, const DmpSpec& dmp,
                            const EnsembleConfig& config);

struct KickWindow {
    std::int64_t first = 1;
    std::int64_t last = 100;
};

// Least-squares slope of <(w - w0)^2> against kick count: D_w per kick.
// Throws EstimationError with fewer than 10 points in the window.
double measure_diffusion(const EnsembleResult& result, KickWindow window);

struct SectionPoint {
    std::int64_t trajectory = 0;
    double w = 0.0;
    double phi = 0.0;
};

// Orbit points (w, phi) for each initial condition, starting with the initial
// point; a trajectory stops at escape or sinking.
std::vector<SectionPoint> poincare_section(const KickFunction& kick,
                                           std::span<const std::array<double, 2>> initial,
                                           std::int64_t iterations,
                                           const MapOptions& options = {});

// Diffusive escape time from w = -1 in years, T_p / D_w with D_w = <F^2>.
// Mass independent. +inf when the kick vanishes.
double diffusive_time(const BinarySystem& system);
double diffusive_time(const BinarySystem& system, double diffusion_per_kick);

}  // namespace keplerdm
