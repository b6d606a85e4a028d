#include "keplerdm/bessel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "keplerdm/errors.hpp"

namespace keplerdm {

namespace {

constexpr double kRescaleAbove = 1e250;
constexpr double kRescaleBy = 1e-250;

double miller(int n, double x) {
    if (x == 0.0) return n == 0 ? 1.0 : 0.0;
    const double order = std::max(double(n), x);
    int start = int(order) + 30 + int(std::sqrt(60.0 * order));
    start += start % 2;

    const double two_over_x = 2.0 / x;
    double above = 0.0;  // J_{k+1}, unnormalized
    double current = 1e-300;
    double even_sum = 0.0;
    double result = 0.0;
    for (int k = start; k > 0; --k) {
        const double below = double(k) * two_over_x * current - above;
        above = current;
        current = below;  // now J_{k-1}
        if (k - 1 == n) result = current;
        if ((k - 1) % 2 == 0 && k - 1 > 0) even_sum += current;
        if (std::abs(current) > kRescaleAbove) {
            current *= kRescaleBy;
            above *= kRescaleBy;
            even_sum *= kRescaleBy;
            result *= kRescaleBy;
        }
    }
    const double norm = current + 2.0 * even_sum;  // current holds J_0
    return result / norm;
}

}  // namespace

double bessel_j(int n, double x) {
    if (n < 0 || n > 50) throw DomainError("bessel_j: order must lie in [0, 50]");
    if (!(x >= 0.0) || x > 1000.0) throw DomainError("bessel_j: argument must lie in [0, 1000]");
    return miller(n, x);
}

double log_abs_bessel_j(int n, double x) {
    if (n < 0 || !(x >= 0.0) || !std::isfinite(x)) {
        throw DomainError("log_abs_bessel_j: need n >= 0 and finite x >= 0");
    }
    if (x == 0.0) return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    const double q = 0.25 * x * x;
    if (x * x <= 0.5 * (n + 1)) {
        // |ratio of successive terms| <= 1/8, alternating: the sum stays in [7/8, 1].
        double term = 1.0, sum = 1.0;
        for (int m = 1; m < 200; ++m) {
            term *= -q / (double(m) * double(n + m));
            sum += term;
            if (std::abs(term) < 1e-17 * sum) break;
        }
        return double(n) * std::log(0.5 * x) - std::lgamma(double(n) + 1.0) + std::log(sum);
    }
    return std::log(std::abs(miller(n, x)));
}

}  // namespace keplerdm
