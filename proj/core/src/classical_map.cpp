#include "keplerdm/classical_map.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "keplerdm/errors.hpp"
#include "keplerdm/parallel.hpp"
#include "keplerdm/rng.hpp"

namespace keplerdm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Phase advance 2 pi * period taken modulo 2 pi before adding, which keeps
// full precision for long orbits.
double phase_advance(double period) { return kTwoPi * (period - std::floor(period)); }

}  // namespace

KickFunction::KickFunction(std::vector<KickHarmonic> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) throw ConfigError("kick function needs at least one harmonic");
}

KickFunction KickFunction::sine(double amplitude) {
    return KickFunction({KickHarmonic{1, amplitude, 0.0}});
}

KickFunction KickFunction::for_system(const BinarySystem& system) {
    const double eps = epsilon(system);
    std::vector<KickHarmonic> terms = system.harmonics();
    for (auto& t : terms) t.amplitude *= eps;
    return KickFunction(std::move(terms));
}

double KickFunction::bound() const {
    double total = 0.0;
    for (const auto& h : terms_) total += std::abs(h.amplitude);
    return total;
}

double KickFunction::mean_square() const {
    // Harmonics with equal index interfere; sum them as phasors first.
    std::vector<std::complex<double>> by_index;
    for (const auto& h : terms_) {
        if (by_index.size() < std::size_t(h.index)) by_index.resize(h.index);
        by_index[h.index - 1] += std::polar(h.amplitude, h.phase);
    }
    double total = 0.0;
    for (const auto& c : by_index) total += std::norm(c);
    return 0.5 * total;
}

double reduce_phase(double phi) {
    double r = std::fmod(phi, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;
    return r;
}

ClassicalState step(const ClassicalState& state, const KickFunction& kick,
                    const MapOptions& options) {
    if (state.status != TrajectoryStatus::bound) return state;
    ClassicalState next = state;
    next.kicks += 1;
    next.w = state.w + kick(state.phi);
    if (next.w >= 0.0) {
        next.status = TrajectoryStatus::escaped;
        return next;
    }
    if (-next.w < options.w_min) {
        next.status = TrajectoryStatus::sunk;
        return next;
    }
    const double period = std::pow(-next.w, -1.5);
    next.phi = reduce_phase(state.phi + phase_advance(period));
    next.elapsed_periods += period;
    return next;
}

ClassicalState inverse_step(const ClassicalState& state, const KickFunction& kick) {
    if (state.status != TrajectoryStatus::bound || !(state.w < 0.0)) {
        throw DomainError("inverse_step: state must be bound");
    }
    const double period = std::pow(-state.w, -1.5);
    ClassicalState prev = state;
    prev.phi = reduce_phase(state.phi - phase_advance(period));
    prev.w = state.w - kick(prev.phi);
    prev.kicks -= 1;
    prev.elapsed_periods -= period;
    return prev;
}

void EnsembleConfig::validate() const {
    if (n_trajectories < 1) throw ConfigError("n_traj must be >= 1");
    if (max_kicks < 1) throw ConfigError("max_kicks must be >= 1");
    if (!(w_min >= 0.0)) throw ConfigError("w_min must be >= 0");
    if (diffusion_horizon < 0) throw ConfigError("diffusion_horizon must be >= 0");
}

double EnsembleResult::median_escape_periods() const {
    std::vector<double> t;
    t.reserve(escape_times.size());
    for (const auto& e : escape_times) {
        t.push_back(e.status == TrajectoryStatus::escaped ? e.periods
                                                          : std::numeric_limits<double>::infinity());
    }
    if (t.empty()) return std::numeric_limits<double>::infinity();
    const std::size_t mid = t.size() / 2;
    std::nth_element(t.begin(), t.begin() + mid, t.end());
    const double upper = t[mid];
    if (t.size() % 2 == 1) return upper;
    const double lower = *std::max_element(t.begin(), t.begin() + mid);
    return 0.5 * (lower + upper);
}

EnsembleRunner::EnsembleRunner(KickFunction kick, double initial_w, EnsembleConfig config)
    : kick_(std::move(kick)), initial_w_(initial_w), config_(config) {
    config_.validate();
    if (!(initial_w_ <= 0.0)) throw ConfigError("initial_w must be <= 0");
    states_.resize(std::size_t(config_.n_trajectories));
    for (std::size_t i = 0; i < states_.size(); ++i) {
        const CounterStream stream(config_.seed, i);
        states_[i].w = initial_w_;
        states_[i].phi = kTwoPi * stream.uniform(0);
    }
    chunk_sums_.assign(chunk_count() * record_count(), 0.0);
    chunk_counts_.assign(chunk_count() * record_count(), 0);
}

std::size_t EnsembleRunner::chunk_count() const {
    return std::size_t((config_.n_trajectories + kChunkSize - 1) / kChunkSize);
}

std::size_t EnsembleRunner::record_count() const {
    return std::size_t(std::min(config_.diffusion_horizon, config_.max_kicks));
}

void EnsembleRunner::advance_to(std::int64_t target_kicks) {
    const std::int64_t target = std::min(target_kicks, config_.max_kicks);
    if (target <= completed_kicks_) return;
    const MapOptions options{config_.w_min};
    const std::size_t records = record_count();
    parallel_for(chunk_count(), config_.threads, [&](std::size_t chunk) {
        const std::size_t begin = chunk * std::size_t(kChunkSize);
        const std::size_t end = std::min(states_.size(), begin + std::size_t(kChunkSize));
        double* sums = chunk_sums_.data() + chunk * records;
        std::int64_t* counts = chunk_counts_.data() + chunk * records;
        for (std::size_t i = begin; i < end; ++i) {
            ClassicalState s = states_[i];
            while (s.status == TrajectoryStatus::bound && s.kicks < target) {
                s = step(s, kick_, options);
                if (s.status == TrajectoryStatus::bound && std::size_t(s.kicks) <= records) {
                    const double d = s.w - initial_w_;
                    sums[s.kicks - 1] += d * d;
                    counts[s.kicks - 1] += 1;
                }
            }
            states_[i] = s;
        }
    });
    completed_kicks_ = target;
}

EnsembleResult EnsembleRunner::result() const {
    EnsembleResult r;
    r.seed = config_.seed;
    r.n_trajectories = config_.n_trajectories;
    r.max_kicks = config_.max_kicks;
    r.initial_w = initial_w_;

    r.escape_times.reserve(states_.size());
    for (std::size_t i = 0; i < states_.size(); ++i) {
        const auto& s = states_[i];
        r.escape_times.push_back({std::int64_t(i), s.kicks, s.elapsed_periods, s.status});
        if (s.status == TrajectoryStatus::escaped) ++r.escaped;
        if (s.status == TrajectoryStatus::sunk) ++r.sunk;
    }

    std::vector<EscapeRecord> escapes;
    for (const auto& e : r.escape_times) {
        if (e.status == TrajectoryStatus::escaped) escapes.push_back(e);
    }
    std::sort(escapes.begin(), escapes.end(), [](const auto& a, const auto& b) {
        return a.periods != b.periods ? a.periods < b.periods : a.trajectory < b.trajectory;
    });
    const double n = double(r.n_trajectories);
    r.survival_curve.reserve(escapes.size());
    for (std::size_t i = 0; i < escapes.size(); ++i) {
        r.survival_curve.push_back({escapes[i].kicks, escapes[i].periods, 1.0 - double(i + 1) / n});
    }

    const std::size_t records =
        std::min(record_count(), std::size_t(std::max<std::int64_t>(completed_kicks_, 0)));
    const std::size_t stride = record_count();
    r.diffusion_series.reserve(records);
    for (std::size_t k = 0; k < records; ++k) {
        double sum = 0.0;
        std::int64_t count = 0;
        for (std::size_t c = 0; c < chunk_count(); ++c) {
            sum += chunk_sums_[c * stride + k];
            count += chunk_counts_[c * stride + k];
        }
        r.diffusion_series.push_back(
            {std::int64_t(k + 1), count > 0 ? sum / double(count) : 0.0, count});
    }
    return r;
}

EnsembleRunner::Snapshot EnsembleRunner::snapshot() const {
    return Snapshot{completed_kicks_, states_, chunk_sums_, chunk_counts_};
}

EnsembleRunner EnsembleRunner::restore(KickFunction kick, double initial_w, EnsembleConfig config,
                                       Snapshot snapshot) {
    EnsembleRunner runner(std::move(kick), initial_w, config);
    if (snapshot.states.size() != runner.states_.size() ||
        snapshot.chunk_sums.size() != runner.chunk_sums_.size() ||
        snapshot.chunk_counts.size() != runner.chunk_counts_.size()) {
        throw CheckpointError("ensemble snapshot does not match the configuration");
    }
    runner.completed_kicks_ = snapshot.completed_kicks;
    runner.states_ = std::move(snapshot.states);
    runner.chunk_sums_ = std::move(snapshot.chunk_sums);
    runner.chunk_counts_ = std::move(snapshot.chunk_counts);
    return runner;
}

EnsembleResult run_ensemble(const KickFunction& kick, double initial_w,
                            const EnsembleConfig& config) {
    EnsembleRunner runner(kick, initial_w, config);
    runner.run();
    return runner.result();
}

EnsembleResult run_ensemble(const BinarySystem& system, const DmpSpec& dmp,
                            const EnsembleConfig& config) {
    if (!(dmp.initial_w <= 0.0)) throw ConfigError("dmp.initial_w must be <= 0");
    return run_ensemble(KickFunction::for_system(system), dmp.initial_w, config);
}

double measure_diffusion(const EnsembleResult& result, KickWindow window) {
    std::vector<double> x, y;
    for (const auto& p : result.diffusion_series) {
        if (p.kicks >= window.first && p.kicks <= window.last && p.survivors > 0) {
            x.push_back(double(p.kicks));
            y.push_back(p.mean_square_displacement);
        }
    }
    if (x.size() < 10) {
        throw EstimationError("measure_diffusion: need at least 10 points in the window, have " +
                              std::to_string(x.size()));
    }
    const double n = double(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

std::vector<SectionPoint> poincare_section(const KickFunction& kick,
                                           std::span<const std::array<double, 2>> initial,
                                           std::int64_t iterations, const MapOptions& options) {
    std::vector<SectionPoint> points;
    for (std::size_t id = 0; id < initial.size(); ++id) {
        ClassicalState s;
        s.w = initial[id][0];
        s.phi = reduce_phase(initial[id][1]);
        if (!(s.w < 0.0)) continue;
        points.push_back({std::int64_t(id), s.w, s.phi});
        for (std::int64_t n = 0; n < iterations; ++n) {
            s = step(s, kick, options);
            if (s.status != TrajectoryStatus::bound) break;
            points.push_back({std::int64_t(id), s.w, s.phi});
        }
    }
    return points;
}

double diffusive_time(const BinarySystem& system, double diffusion_per_kick) {
    if (!(diffusion_per_kick > 0.0)) return std::numeric_limits<double>::infinity();
    // 2 pi r_p E_I^2 / (v_p D) with E_I = 1 in units of w
    return system.period_years() / diffusion_per_kick;
}

double diffusive_time(const BinarySystem& system) {
    return diffusive_time(system, KickFunction::for_system(system).mean_square());
}

}  // namespace keplerdm
