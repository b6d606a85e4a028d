#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace keplerdm {

// SI units unless the field name says otherwise.
struct PhysicalConstants {
    double gravitational_constant = 6.67430e-11;   // m^3 kg^-1 s^-2 (CODATA 2018)
    double hbar = 1.054571817e-34;                 // J s
    double electron_mass = 9.1093837015e-31;       // kg
    double solar_mass = 1.988409870698051e30;      // kg, IAU 2015 nominal GM / G
    double year = 365.25 * 86400.0;                // s, Julian year
    double astronomical_unit = 1.495978707e11;     // m
    double electronvolt = 1.602176634e-19;         // J
    double universe_age_years = 1.38e10;
    double galactic_dm_density_g_cm3 = 4e-25;
    double galactic_velocity_km_s = 220.0;

    void validate() const;
};

// One term a * sin(j*phi + theta) of the kick function.
struct KickHarmonic {
    int index = 1;
    double amplitude = 1.0;
    double phase = 0.0;
};

// Raw description of a binary. Any two of (radius, velocity, period) suffice;
// the third is derived. All three must agree to 1e-3 when given together.
struct BinaryParams {
    std::string name;
    double central_mass_kg = 0.0;
    double planet_mass_kg = 0.0;
    std::optional<double> orbit_radius_m;
    std::optional<double> orbit_velocity_m_s;
    std::optional<double> period_years;
    double kick_amplitude = 2.5;  // f0
    // Relative kick shape; the physical kick is epsilon times this sum.
    std::vector<KickHarmonic> harmonics{KickHarmonic{}};
    // Chaos border measured numerically for multi-harmonic kicks, if known.
    std::optional<double> empirical_chaos_border;
    PhysicalConstants constants{};
};

class BinarySystem {
public:
    // Validates and resolves the orbit triple. Throws ConfigError.
    static BinarySystem from_params(const BinaryParams& params);

    const std::string& name() const { return name_; }
    double central_mass() const { return central_mass_; }
    double planet_mass() const { return planet_mass_; }
    double mass_ratio() const { return planet_mass_ / central_mass_; }
    double orbit_radius() const { return orbit_radius_; }
    double orbit_velocity() const { return orbit_velocity_; }
    double period_years() const { return period_years_; }
    double period_seconds() const { return period_years_ * constants_.year; }
    // omega_p = v_p / r_p, rad/s
    double orbital_frequency() const { return orbit_velocity_ / orbit_radius_; }
    double kick_amplitude() const { return kick_amplitude_; }
    const std::vector<KickHarmonic>& harmonics() const { return harmonics_; }
    const std::optional<double>& empirical_chaos_border() const { return empirical_chaos_border_; }
    const PhysicalConstants& constants() const { return constants_; }

    // Echo of the resolved parameters (all three orbit quantities filled).
    BinaryParams params() const;

    BinarySystem with_kick_amplitude(double f0) const;

private:
    BinarySystem() = default;

    std::string name_;
    double central_mass_ = 0.0;
    double planet_mass_ = 0.0;
    double orbit_radius_ = 0.0;
    double orbit_velocity_ = 0.0;
    double period_years_ = 0.0;
    double kick_amplitude_ = 0.0;
    std::vector<KickHarmonic> harmonics_;
    std::optional<double> empirical_chaos_border_;
    PhysicalConstants constants_;
};

// Dark matter particle: mass in electron masses and initial energy
// w0 = 2E/(m_d v_p^2).
struct DmpSpec {
    double mass_ratio = 0.0;
    double initial_w = -1.0;

    void validate() const;
};

struct AtomicScales {
    double bohr_radius_m = 0.0;        // a_Bd
    double atomic_energy_ev = 0.0;     // E_Bd
    double atomic_frequency = 0.0;     // omega_Bd, s^-1
    double dimensionless_frequency = 0.0;  // omega_p / omega_Bd
    double kick_strength = 0.0;        // k, photons per kick
    double ionization_photons = 0.0;   // N_I
    double ground_state_photons = 0.0; // N_J
};

struct PerihelionKick {
    double f0 = 0.0;
    bool within_validity = true;  // false when q < r_p
};

// f0 ~ 2 (r_p/q)^{1/4} exp(-0.94 (q/r_p)^{3/2}). Throws DomainError for q <= 0.
PerihelionKick kick_amplitude_from_perihelion(const BinarySystem& system, double perihelion_m);

// epsilon = 2 f0 m_p / M: kick amplitude in units of w.
double epsilon(const BinarySystem& system);

// w_ch = 2.5 (2 f0 m_p/M)^{2/5}
double chaos_border(const BinarySystem& system);

// m_e v_p^2 / (2 hbar omega_p): photons to ionize from w = -1, per unit mass ratio.
double photons_per_mass_ratio(const BinarySystem& system);

double ionization_photons(const BinarySystem& system, const DmpSpec& dmp);
double kick_strength(const BinarySystem& system, const DmpSpec& dmp);

AtomicScales atomic_scales(const BinarySystem& system, const DmpSpec& dmp);

// Named presets: sun-jupiter, sun-jupiter-weak, halley-kick, sgrA-s2.
std::vector<std::string> preset_names();
BinaryParams preset_params(std::string_view name);  // throws ConfigError
BinarySystem preset(std::string_view name);
std::string preset_description(std::string_view name);

}  // namespace keplerdm
