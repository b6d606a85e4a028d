#include "keplerdm/capture.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "keplerdm/errors.hpp"

namespace keplerdm {

double capture_cross_section(const BinarySystem& system, double velocity_m_s) {
    if (!(velocity_m_s > 0.0)) throw DomainError("capture_cross_section: velocity must be positive");
    const double r = system.orbit_radius();
    const double ratio = system.orbit_velocity() / velocity_m_s;
    return 8.0 * std::numbers::pi * r * r * ratio * ratio;
}

double quantum_energy_border(const BinarySystem& system, const DmpSpec& dmp) {
    dmp.validate();
    const double w_ch = chaos_border(system);
    const double per_mu = photons_per_mass_ratio(system);
    const double eps = epsilon(system);
    // ell_phi / N_I(w0 = -1) = eps^2 c_N mu / 2
    auto formula = [&](double mu) { return 0.5 * eps * eps * per_mu * mu; };
    const double lower = one_photon_border(system, dmp.initial_w);
    if (dmp.mass_ratio < lower) return std::min(formula(lower), w_ch);
    if (dmp.mass_ratio > delocalization_border(system, dmp.initial_w)) return w_ch;
    return std::min(formula(dmp.mass_ratio), w_ch);
}

double halo_radius(const BinarySystem& system, const DmpSpec& dmp) {
    const double w = dmp.mass_ratio < delocalization_border(system, dmp.initial_w)
                         ? quantum_energy_border(system, dmp)
                         : chaos_border(system);
    return std::max(1.0, 1.0 / w);
}

double captured_mass(const BinarySystem& system, double accumulation_years) {
    if (!(accumulation_years > 0.0)) throw DomainError("captured_mass: time must be positive");
    const auto& c = system.constants();
    const double u = c.galactic_velocity_km_s * 1e5;  // cm/s
    const double v = system.orbit_velocity() * 1e2;   // cm/s
    const double r = system.orbit_radius() * 1e2;     // cm
    const double t = accumulation_years * c.year;     // s
    const double vu = v / u;
    return 100.0 * vu * vu * vu * system.mass_ratio() * c.galactic_dm_density_g_cm3 * r * r * v * t;
}

double maxwell_speed_pdf(double u, double v) {
    if (!(u > 0.0) || !(v >= 0.0)) throw DomainError("maxwell_speed_pdf: need u > 0, v >= 0");
    const double a = 3.0 / (u * u);
    return 4.0 / std::sqrt(std::numbers::pi) * a * std::sqrt(a) * v * v * std::exp(-a * v * v);
}

double maxwell_fraction_below(double u, double v) {
    if (!(u > 0.0) || !(v >= 0.0)) throw DomainError("maxwell_fraction_below: need u > 0, v >= 0");
    const double x = std::sqrt(3.0) * v / u;
    return std::erf(x) - 2.0 * x * std::exp(-x * x) / std::sqrt(std::numbers::pi);
}

CaptureReport capture_report(const BinarySystem& system, const DmpSpec& dmp,
                             const RegimeOptions& options) {
    const RegimeReport regime = classify(system, dmp, options);
    const auto& c = system.constants();
    CaptureReport r;
    r.mass_ratio = dmp.mass_ratio;
    r.chaos_border = chaos_border(system);
    r.quantum_border = quantum_energy_border(system, dmp);
    r.halo_radius = halo_radius(system, dmp);
    r.classical_halo_radius = std::max(1.0, 1.0 / r.chaos_border);
    r.classical_captured_mass_g = captured_mass(system, options.diffusive_escape_years);
    r.accumulation_years = options.diffusive_escape_years;
    if (regime.localization_length < regime.ionization_photons) {
        r.accumulation_years = std::min(regime.quantum_time_years, options.diffusive_escape_years);
    }
    r.reduction_factor = r.accumulation_years / options.diffusive_escape_years;
    r.captured_mass_g = r.classical_captured_mass_g * r.reduction_factor;
    r.one_photon_energy_cut = regime.kick_strength < 1.0;
    const double md = dmp.mass_ratio * c.electron_mass;
    const double v_cut = std::sqrt(2.0 * c.hbar * system.orbital_frequency() / md);
    r.cut_flow_fraction = maxwell_fraction_below(c.galactic_velocity_km_s * 1e3, v_cut);
    r.cross_section_at_vp_m2 = capture_cross_section(system, system.orbit_velocity());
    r.cross_section_at_u_m2 = capture_cross_section(system, c.galactic_velocity_km_s * 1e3);
    r.regime = regime.regime;
    r.regime_label = regime.label();
    return r;
}

}  // namespace keplerdm
