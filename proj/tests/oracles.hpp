#pragma once

// Reference computations that share no code with the library.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

// Composite Simpson rule on [a, b] with an even number of panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
    if (panels % 2) ++panels;
    const double h = (b - a) / panels;
    double s = f(a) + f(b);
    for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

// J_n(x) = (1/pi) int_0^pi cos(n t - x sin t) dt. The trapezoid rule is
// spectrally accurate for this periodic integrand.
inline double bessel_quadrature(int n, double x, int points = 4096) {
    const double h = std::numbers::pi / points;
    double s = 0.5 * (std::cos(0.0) + std::cos(n * std::numbers::pi));
    for (int i = 1; i < points; ++i) {
        const double t = i * h;
        s += std::cos(n * t - x * std::sin(t));
    }
    return s * h / std::numbers::pi;
}

// J_n for any integer n, from the standard library.
inline double bessel_any(int n, double x) {
    const int m = n < 0 ? -n : n;
    const double j = std::cyl_bessel_j(double(m), x);
    return (n < 0 && (m % 2)) ? -j : j;
}

// Explicit evolution with a dense L x L kick matrix built from Bessel values.
struct DenseOracle {
    int size;
    std::int64_t lowest_total;  // total photon number of site 0
    std::vector<std::complex<double>> kick;       // row-major
    std::vector<std::complex<double>> rotation;
    std::vector<bool> continuum;

    DenseOracle(double k, double omega, int L, std::int64_t lowest) : size(L), lowest_total(lowest) {
        kick.assign(std::size_t(L) * L, 0.0);
        for (int j = 0; j < L; ++j) {
            for (int m = 0; m < L; ++m) {
                std::complex<double> sum = 0.0;
                for (int p = -2; p <= 2; ++p) {
                    const int n = j - m + p * L;
                    sum += std::pow(std::complex<double>(0.0, -1.0), n) * bessel_any(n, k);
                }
                kick[std::size_t(j) * L + m] = sum;
            }
        }
        for (int j = 0; j < L; ++j) {
            const double n = double(lowest + j);
            continuum.push_back(n >= 0.0);
            rotation.push_back(n >= 0.0 ? std::complex<double>(1.0) : std::polar(1.0, -2.0 * std::numbers::pi / std::sqrt(-2.0 * omega * n)));
        }
    }

    void step(std::vector<std::complex<double>>& psi) const {
        std::vector<std::complex<double>> out(psi.size(), 0.0);
        for (int j = 0; j < size; ++j) {
            for (int m = 0; m < size; ++m) out[j] += kick[std::size_t(j) * size + m] * psi[m];
        }
        for (int j = 0; j < size; ++j) psi[j] = continuum[j] ? std::complex<double>(0.0) : out[j] * rotation[j];
    }
};

inline double to_years(double seconds) { return seconds / (365.25 * 86400.0); }

// Sun-Jupiter inputs as plain numbers.
struct SunJupiter {
    static constexpr double G = 6.67430e-11;
    static constexpr double hbar = 1.054571817e-34;
    static constexpr double me = 9.1093837015e-31;
    static constexpr double M = 1.988409870698051e30;
    static constexpr double mp = M / 1047.0;
    static constexpr double r = 7.78e11;
    static constexpr double v = 13.1e3;
    static constexpr double f0 = 2.5;
    static double omega() { return v / r; }
    static double period_years() { return to_years(2.0 * std::numbers::pi * r / v); }
    static double photons_per_mu() { return me * v * v / (2.0 * hbar * omega()); }
    static double eps() { return 2.0 * f0 * mp / M; }
};

}  // namespace oracle
