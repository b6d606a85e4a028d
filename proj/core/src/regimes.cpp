#include "keplerdm/regimes.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <limits>

#include "keplerdm/bessel.hpp"
#include "keplerdm/errors.hpp"

namespace keplerdm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLn10 = std::log(10.0);

double from_log10(double v) { return v > 308.0 ? kInf : std::pow(10.0, v); }

void require_sorted(const std::vector<double>& grid) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0)) throw ConfigError("mass-ratio grid values must be positive");
        if (i > 0 && !(grid[i] > grid[i - 1])) {
            throw ConfigError("mass-ratio grid must be sorted ascending");
        }
    }
}

}  // namespace

std::string RegimeReport::label() const {
    switch (regime) {
        case Regime::one_photon: return "one_photon";
        case Regime::few_photon: return "few_photon_" + std::to_string(photon_order);
        case Regime::localized: return "localized";
        case Regime::chaotic_delocalized: return "chaotic_delocalized";
    }
    return "unknown";
}

double localization_length(const BinarySystem& system, const DmpSpec& dmp) {
    dmp.validate();
    const double k = kick_strength(system, dmp);
    return 0.5 * k * k;
}

double delocalization_border(const BinarySystem& system, double initial_w) {
    const auto& c = system.constants();
    const double inverse_ratio = 1.0 / system.mass_ratio();
    const double f0 = system.kick_amplitude();
    const double v = system.orbit_velocity();
    return c.hbar * system.orbital_frequency() * inverse_ratio * inverse_ratio /
           (f0 * f0 * c.electron_mass * v * v) * std::abs(initial_w);
}

double one_photon_border(const BinarySystem& system, double initial_w) {
    return 1.0 / (photons_per_mass_ratio(system) * std::abs(initial_w));
}

double log10_localized_lifetime(double ionization_photons, double localization_length,
                                double diffusive_escape_years) {
    if (!(localization_length >= 1.0) || !(ionization_photons >= localization_length)) {
        throw DomainError("localized lifetime requires ell_phi >= 1 and N_I >= ell_phi");
    }
    const double x = 2.0 * ionization_photons / localization_length;
    return std::log10(diffusive_escape_years) + (x - 2.0) / kLn10 - std::log10(x - 1.0);
}

double log10_photon_lifetime(const BinarySystem& system, int photon_order, double kick_strength) {
    const double log_j = log_abs_bessel_j(photon_order, kick_strength);
    return std::log10(system.period_years()) - 2.0 * log_j / kLn10;
}

RegimeReport classify(const BinarySystem& system, const DmpSpec& dmp,
                      const RegimeOptions& options) {
    dmp.validate();
    if (!(options.diffusive_escape_years > 0.0)) {
        throw ConfigError("diffusive_escape_years (t_H) must be positive");
    }
    RegimeReport r;
    r.mass_ratio = dmp.mass_ratio;
    r.ionization_photons = ionization_photons(system, dmp);
    r.kick_strength = kick_strength(system, dmp);
    r.localization_length = 0.5 * r.kick_strength * r.kick_strength;
    r.one_photon_border = one_photon_border(system, dmp.initial_w);
    r.delocalization_border = delocalization_border(system, dmp.initial_w);
    r.quantum_time_years = system.period_years() * r.localization_length;

    if (r.localization_length >= r.ionization_photons) {
        r.regime = Regime::chaotic_delocalized;
        r.log10_lifetime_years = std::log10(options.diffusive_escape_years);
    } else if (r.localization_length >= 1.0) {
        r.regime = Regime::localized;
        r.log10_lifetime_years = log10_localized_lifetime(
            r.ionization_photons, r.localization_length, options.diffusive_escape_years);
    } else {
        const double n = std::max(1.0, std::ceil(r.ionization_photons));
        if (n > double(INT_MAX / 2)) {
            r.photon_order = INT_MAX / 2;
            r.log10_lifetime_years = kInf;
        } else {
            r.photon_order = int(n);
            r.log10_lifetime_years =
                log10_photon_lifetime(system, r.photon_order, r.kick_strength);
        }
        r.regime = r.photon_order == 1 ? Regime::one_photon : Regime::few_photon;
        r.extrapolated = r.photon_order > options.max_photon_order;
    }
    r.lifetime_years = from_log10(r.log10_lifetime_years);
    r.exceeds_universe_age =
        r.log10_lifetime_years > std::log10(system.constants().universe_age_years);
    return r;
}

IonizationTime ionization_time(const BinarySystem& system, const DmpSpec& dmp,
                               const RegimeOptions& options) {
    const RegimeReport r = classify(system, dmp, options);
    return IonizationTime{r.lifetime_years, r.log10_lifetime_years, r.regime, r.label()};
}

UniverseAgeWindow universe_age_window(const BinarySystem& system, const RegimeOptions& options,
                                      const WindowScan& scan) {
    UniverseAgeWindow window;
    const double t_u = system.constants().universe_age_years;
    if (!std::isfinite(t_u)) return window;
    if (scan.points < 2 || !(scan.log10_mu_max > scan.log10_mu_min)) {
        throw ConfigError("universe_age_window: scan needs >= 2 points over a non-empty range");
    }
    const double log_tu = std::log10(t_u);
    auto above = [&](double log_mu) {
        const DmpSpec dmp{std::pow(10.0, log_mu), scan.initial_w};
        return classify(system, dmp, options).log10_lifetime_years > log_tu;
    };

    const double step = (scan.log10_mu_max - scan.log10_mu_min) / double(scan.points - 1);
    double prev_x = scan.log10_mu_min;
    bool prev = above(prev_x);
    const bool first = prev;
    for (int i = 1; i < scan.points; ++i) {
        const double x = scan.log10_mu_min + step * double(i);
        const bool cur = above(x);
        if (cur != prev) {
            double lo = prev_x, hi = x;
            for (int it = 0; it < 200 && (hi - lo) * kLn10 > 1e-6; ++it) {
                const double mid = 0.5 * (lo + hi);
                (above(mid) == prev ? lo : hi) = mid;
            }
            window.crossings.push_back({std::pow(10.0, 0.5 * (lo + hi)), cur});
        }
        prev = cur;
        prev_x = x;
    }

    bool inside = first;
    double start = 0.0;
    for (const auto& c : window.crossings) {
        if (c.rising) {
            start = c.mass_ratio;
            inside = true;
        } else {
            window.long_lived.emplace_back(inside ? start : 0.0, c.mass_ratio);
            inside = false;
        }
    }
    if (inside) window.long_lived.emplace_back(start, kInf);
    for (const auto& [lo, hi] : window.long_lived) {
        if (lo > 0.0 && std::isfinite(hi)) {
            window.low = lo;
            window.high = hi;
        }
    }
    return window;
}

std::vector<double> log_spaced_grid(double lo, double hi, int count) {
    if (count < 2) throw ConfigError("grid needs at least 2 points");
    if (!(lo > 0.0) || !(hi > lo)) throw ConfigError("grid needs 0 < min < max");
    std::vector<double> grid(static_cast<std::size_t>(count));
    const double a = std::log10(lo), b = std::log10(hi);
    for (int i = 0; i < count; ++i) {
        grid[std::size_t(i)] = std::pow(10.0, a + (b - a) * double(i) / double(count - 1));
    }
    grid.front() = lo;
    grid.back() = hi;
    return grid;
}

std::vector<Figure1Row> figure1_table(const BinarySystem& system, const std::vector<double>& grid,
                                      double initial_w, const RegimeOptions& options) {
    require_sorted(grid);
    std::vector<Figure1Row> rows;
    rows.reserve(grid.size());
    for (double mu : grid) {
        const RegimeReport r = classify(system, DmpSpec{mu, initial_w}, options);
        rows.push_back({mu, r.ionization_photons, r.localization_length, r.label()});
    }
    return rows;
}

std::vector<Figure2Row> figure2_table(const BinarySystem& system, const std::vector<double>& grid,
                                      double initial_w, const RegimeOptions& options) {
    require_sorted(grid);
    std::vector<Figure2Row> rows;
    rows.reserve(grid.size());
    for (double mu : grid) {
        const RegimeReport r = classify(system, DmpSpec{mu, initial_w}, options);
        rows.push_back({mu, r.lifetime_years, r.label()});
    }
    return rows;
}

}  // namespace keplerdm
