#pragma once

#include "keplerdm/binary_system.hpp"
#include "keplerdm/regimes.hpp"

namespace keplerdm {

// sigma = 8 pi r_p^2 (v_p/v)^2 in m^2. Diverges as v -> 0; throws DomainError for v <= 0.
double capture_cross_section(const BinarySystem& system, double velocity_m_s);

// Quantum-limited energy depth w_q = 2 hbar omega_p ell_phi / (m_d v_p^2),
// held at its one-photon-border value below that border and capped by w_ch.
double quantum_energy_border(const BinarySystem& system, const DmpSpec& dmp);

// Halo extent in units of r_p: 1/w_ch classically, 1/w_q below the
// delocalization border; never below 1.
double halo_radius(const BinarySystem& system, const DmpSpec& dmp);

// M_cap ~ 100 (v_p/u)^3 (m_p/M) rho_g r_p^2 v_p t, in grams.
double captured_mass(const BinarySystem& system, double accumulation_years);

// Speed distribution with the exponent exp(-3 v^2/u^2), normalized to one.
// Mode u/sqrt(3), <v^2> = u^2/2. Units of 1/u.
double maxwell_speed_pdf(double u, double v);

// Fraction of the flow with speed below v.
double maxwell_fraction_below(double u, double v);

struct CaptureReport {
    double mass_ratio = 0.0;
    double chaos_border = 0.0;          // w_ch
    double quantum_border = 0.0;        // w_q
    double halo_radius = 0.0;           // r_p units
    double classical_halo_radius = 0.0; // r_p units
    double accumulation_years = 0.0;    // t_H, or t_q when localized
    double reduction_factor = 1.0;      // t_q / t_H, in (0, 1]
    double captured_mass_g = 0.0;
    double classical_captured_mass_g = 0.0;
    bool one_photon_energy_cut = false; // k < 1
    double cut_flow_fraction = 0.0;     // Maxwell fraction with m_d v^2/2 < hbar omega_p
    double cross_section_at_vp_m2 = 0.0;
    double cross_section_at_u_m2 = 0.0;
    Regime regime = Regime::chaotic_delocalized;
    std::string regime_label;
};

CaptureReport capture_report(const BinarySystem& system, const DmpSpec& dmp,
                             const RegimeOptions& options = {});

}  // namespace keplerdm
