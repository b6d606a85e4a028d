#include <doctest.h>

#include <cmath>

#include "keplerdm/binary_system.hpp"
#include "keplerdm/errors.hpp"
#include "oracles.hpp"

using namespace keplerdm;
using SJ = oracle::SunJupiter;

TEST_CASE("sun-jupiter preset resolves the missing period") {
    const BinarySystem s = preset("sun-jupiter");
    CHECK(s.orbit_radius() == 7.78e11);
    CHECK(s.orbit_velocity() == 13.1e3);
    CHECK(s.period_years() == doctest::Approx(SJ::period_years()).epsilon(1e-12));
    CHECK(s.mass_ratio() == doctest::Approx(1.0 / 1047.0).epsilon(1e-14));
    CHECK(s.kick_amplitude() == 2.5);
}

TEST_CASE("orbit triple consistency") {
    BinaryParams p = preset_params("sun-jupiter");
    p.period_years = SJ::period_years();
    CHECK_NOTHROW(BinarySystem::from_params(p));
    p.period_years = 11.86;  // 3e-3 away from 2 pi r / v
    CHECK_THROWS_AS(BinarySystem::from_params(p), ConfigError);

    BinaryParams q = preset_params("sun-jupiter");
    q.orbit_radius_m.reset();
    q.period_years = SJ::period_years();
    CHECK(BinarySystem::from_params(q).orbit_radius() == doctest::Approx(7.78e11).epsilon(1e-12));

    BinaryParams only_one = preset_params("sun-jupiter");
    only_one.orbit_velocity_m_s.reset();
    CHECK_THROWS_AS(BinarySystem::from_params(only_one), ConfigError);
}

TEST_CASE("invalid binaries are rejected") {
    BinaryParams p = preset_params("sun-jupiter");
    p.planet_mass_kg = 0.5 * p.central_mass_kg;
    CHECK_THROWS_AS(BinarySystem::from_params(p), ConfigError);
    p = preset_params("sun-jupiter");
    p.kick_amplitude = 0.0;
    CHECK_THROWS_AS(BinarySystem::from_params(p), ConfigError);
    CHECK_THROWS_AS(preset("no-such-binary"), ConfigError);
}

TEST_CASE("kick amplitude from perihelion distance") {
    const BinarySystem s = preset("sun-jupiter");
    const auto at_rp = kick_amplitude_from_perihelion(s, s.orbit_radius());
    CHECK(at_rp.f0 == doctest::Approx(2.0 * std::exp(-0.94)).epsilon(1e-14));
    CHECK(at_rp.f0 == doctest::Approx(0.7812).epsilon(1e-4));
    CHECK(at_rp.within_validity);
    CHECK(kick_amplitude_from_perihelion(s, 20.0 * s.orbit_radius()).f0 < 1e-30);
    CHECK_FALSE(kick_amplitude_from_perihelion(s, 0.5 * s.orbit_radius()).within_validity);
    CHECK_THROWS_AS(kick_amplitude_from_perihelion(s, 0.0), DomainError);
    CHECK(preset("sun-jupiter-weak").kick_amplitude() == doctest::Approx(at_rp.f0));
}

TEST_CASE("dimensionless kick and chaos border") {
    const BinarySystem s = preset("sun-jupiter");
    CHECK(epsilon(s) == doctest::Approx(SJ::eps()).epsilon(1e-13));
    CHECK(epsilon(s) == doctest::Approx(4.776e-3).epsilon(1e-3));
    CHECK(chaos_border(s) == doctest::Approx(2.5 * std::pow(SJ::eps(), 0.4)).epsilon(1e-13));
    CHECK(chaos_border(s) == doctest::Approx(0.2948).epsilon(1e-3));
}

TEST_CASE("photon counts scale with the dark matter mass") {
    const BinarySystem s = preset("sun-jupiter");
    CHECK(photons_per_mass_ratio(s) == doctest::Approx(SJ::photons_per_mu()).epsilon(1e-13));
    CHECK(photons_per_mass_ratio(s) == doctest::Approx(4.39e19).epsilon(0.01));
    const DmpSpec d{1e-18, -1.0};
    CHECK(ionization_photons(s, d) == doctest::Approx(SJ::photons_per_mu() * 1e-18).epsilon(1e-13));
    CHECK(ionization_photons(s, DmpSpec{1e-18, -0.5}) ==
          doctest::Approx(0.5 * ionization_photons(s, d)).epsilon(1e-14));
    CHECK(kick_strength(s, d) == doctest::Approx(SJ::eps() * SJ::photons_per_mu() * 1e-18).epsilon(1e-13));
    CHECK(kick_strength(s, d) / 1e-18 == doctest::Approx(2.10e17).epsilon(0.01));
}

TEST_CASE("dark atom scales") {
    const BinarySystem s = preset("sun-jupiter");
    const double mu = 1.14e-20;
    const AtomicScales a = atomic_scales(s, DmpSpec{mu, -1.0});
    const double md = mu * SJ::me;
    const double kappa = SJ::G * md * SJ::M;
    CHECK(a.atomic_energy_ev * 1.602176634e-19 == doctest::Approx(kappa / a.bohr_radius_m).epsilon(1e-10));
    CHECK(a.bohr_radius_m / SJ::r == doctest::Approx(1.0).epsilon(0.01));
    CHECK(a.atomic_energy_ev == doctest::Approx(1.10e-23).epsilon(0.02));
    CHECK(a.ground_state_photons == doctest::Approx(0.5).epsilon(0.02));
    CHECK(a.dimensionless_frequency * a.atomic_frequency == doctest::Approx(SJ::omega()).epsilon(1e-13));
    CHECK_THROWS_AS(atomic_scales(s, DmpSpec{0.0, -1.0}), ConfigError);
    CHECK_THROWS_AS(atomic_scales(s, DmpSpec{1e-20, 0.5}), ConfigError);
}

TEST_CASE("sgrA-s2 preset derives the orbital velocity") {
    const BinarySystem s = preset("sgrA-s2");
    const double au = 1.495978707e11;
    CHECK(s.central_mass() == doctest::Approx(4e6 * SJ::M));
    CHECK(s.mass_ratio() == doctest::Approx(15.0 / 4e6));
    CHECK(s.orbit_radius() == doctest::Approx(980.0 * au));
    const double v = 2.0 * std::numbers::pi * 980.0 * au / (15.0 * 365.25 * 86400.0);
    CHECK(s.orbit_velocity() == doctest::Approx(v).epsilon(1e-12));
    CHECK(s.orbit_velocity() == doctest::Approx(1.9e6).epsilon(0.03));
}

TEST_CASE("every preset is described") {
    for (const auto& name : preset_names()) {
        CHECK_NOTHROW(preset(name));
        CHECK(preset_description(name).find(name) != std::string::npos);
    }
}
