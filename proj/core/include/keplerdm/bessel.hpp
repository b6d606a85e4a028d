#pragma once

namespace keplerdm {

// J_n(x) by downward Miller recurrence normalized with J_0 + 2 sum J_2k = 1.
// Domain: 0 <= n <= 50, 0 <= x <= 1000; throws DomainError outside it.
double bessel_j(int n, double x);

// ln |J_n(x)| for any n >= 0 and x >= 0. Uses the ascending series when
// x^2 <= (n + 1)/2 so that values far below the double range stay finite.
// Returns -inf when J_n(x) = 0.
double log_abs_bessel_j(int n, double x);

}  // namespace keplerdm
