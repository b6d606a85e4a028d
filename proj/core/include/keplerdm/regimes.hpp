#pragma once

#include <optional>
#include <string>
#include <vector>

#include "keplerdm/binary_system.hpp"

namespace keplerdm {

enum class Regime { one_photon, few_photon, localized, chaotic_delocalized };

struct RegimeOptions {
    double diffusive_escape_years = 1e7;  // t_H
    int max_photon_order = 3;             // above this the Bessel rate is extrapolated
};

struct RegimeReport {
    double mass_ratio = 0.0;
    double ionization_photons = 0.0;   // N_I
    double localization_length = 0.0; // ell_phi = k^2/2
    double kick_strength = 0.0;        // k
    Regime regime = Regime::chaotic_delocalized;
    int photon_order = 0;              // n for photon regimes, else 0
    bool extrapolated = false;         // n > max_photon_order
    double one_photon_border = 0.0;    // mu at N_I = 1
    double delocalization_border = 0.0;  // mu at ell_phi = N_I
    double lifetime_years = 0.0;       // t_I, may be +inf beyond the double range
    double log10_lifetime_years = 0.0;
    double quantum_time_years = 0.0;   // t_q = T_p ell_phi
    bool exceeds_universe_age = false;

    // "one_photon", "few_photon_<n>", "localized", "chaotic_delocalized"
    std::string label() const;
};

// ell_phi = k^2/2 = 2 f0^2 (m_p/M)^2 N_I(w0 = -1)^2
double localization_length(const BinarySystem& system, const DmpSpec& dmp);

// mu* = hbar omega_p (M/m_p)^2 / (f0^2 m_e v_p^2), times |w0| for w0 != -1.
double delocalization_border(const BinarySystem& system, double initial_w = -1.0);

// mu at which N_I = 1.
double one_photon_border(const BinarySystem& system, double initial_w = -1.0);

// t_H exp(2 N_I/ell - 2) / (2 N_I/ell - 1), in log10 years. Valid for
// ell >= 1 and N_I >= ell; throws DomainError outside.
double log10_localized_lifetime(double ionization_photons, double localization_length,
                                double diffusive_escape_years);

// 1/Gamma_n with Gamma_n = (omega_p / 2 pi) J_n(k)^2, in log10 years.
double log10_photon_lifetime(const BinarySystem& system, int photon_order, double kick_strength);

RegimeReport classify(const BinarySystem& system, const DmpSpec& dmp,
                      const RegimeOptions& options = {});

struct IonizationTime {
    double years = 0.0;
    double log10_years = 0.0;
    Regime mechanism = Regime::chaotic_delocalized;
    std::string label;
};

IonizationTime ionization_time(const BinarySystem& system, const DmpSpec& dmp,
                               const RegimeOptions& options = {});

struct UniverseAgeCrossing {
    double mass_ratio = 0.0;
    bool rising = false;  // t_I goes above t_U as mu increases
};

struct UniverseAgeWindow {
    std::vector<UniverseAgeCrossing> crossings;
    // Mass-ratio intervals where t_I > t_U; 0 or +inf mark an open end of the scan.
    std::vector<std::pair<double, double>> long_lived;
    // Highest bounded long-lived interval; empty when there is none.
    std::optional<double> low;
    std::optional<double> high;
};

struct WindowScan {
    double log10_mu_min = -30.0;
    double log10_mu_max = -8.0;
    int points = 2201;
    double initial_w = -1.0;
};

// Bisection on log mu (relative 1e-6, at most 200 iterations) of every
// sign change of t_I(mu) - t_U found on the scan grid.
UniverseAgeWindow universe_age_window(const BinarySystem& system,
                                      const RegimeOptions& options = {},
                                      const WindowScan& scan = {});

std::vector<double> log_spaced_grid(double lo, double hi, int count);  // throws ConfigError

struct Figure1Row {
    double mass_ratio = 0.0;
    double ionization_photons = 0.0;
    double localization_length = 0.0;
    std::string regime;
};

struct Figure2Row {
    double mass_ratio = 0.0;
    double lifetime_years = 0.0;
    std::string mechanism;
};

// Grids must be sorted ascending (ConfigError otherwise).
std::vector<Figure1Row> figure1_table(const BinarySystem& system, const std::vector<double>& grid,
                                      double initial_w = -1.0, const RegimeOptions& options = {});
std::vector<Figure2Row> figure2_table(const BinarySystem& system, const std::vector<double>& grid,
                                      double initial_w = -1.0, const RegimeOptions& options = {});

}  // namespace keplerdm
