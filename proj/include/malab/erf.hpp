#pragma once
// Complex error function. Taylor series near the origin, Lentz continued
// fraction for erfc in the right half-plane beyond |z| = 3, odd symmetry
// for the left half-plane.

#include "malab/core.hpp"

namespace malab {

namespace detail {

inline cd erf_series(cd z) {
    // erf z = 2/sqrt(pi) sum (-1)^n z^(2n+1) / (n! (2n+1))
    const cd z2 = z * z;
    cd term = z;
    cd sum = z;
    for (int n = 1; n < 400; ++n) {
        term *= -z2 / static_cast<double>(n);
        const cd add = term / static_cast<double>(2 * n + 1);
        sum += add;
        if (std::abs(add) < 1e-17 * std::abs(sum)) break;
    }
    return sum * (2.0 / std::sqrt(pi));
}

// erfc z for Re z > 0 via the continued fraction
// erfc z = exp(-z²)/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
inline cd erfc_cf(cd z) {
    constexpr double tiny = 1e-300;
    cd f = z;
    if (std::abs(f) < tiny) f = tiny;
    cd c = f, d = 0.0;
    for (int n = 1; n < 5000; ++n) {
        const double a = 0.5 * n;
        d = z + a * d;
        if (std::abs(d) < tiny) d = tiny;
        c = z + a / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const cd delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-z * z) / (std::sqrt(pi) * f);
}

}  // namespace detail

inline cd erfc(cd z);

inline cd erf(cd z) {
    if (z.real() < 0.0) return -erf(-z);
    if (std::abs(z) < 3.0) return detail::erf_series(z);
    return 1.0 - detail::erfc_cf(z);
}

inline cd erfc(cd z) {
    if (z.real() < 0.0) return 2.0 - erfc(-z);
    if (std::abs(z) < 3.0) return 1.0 - detail::erf_series(z);
    return detail::erfc_cf(z);
}

// erf(b) - erf(a) without cancellation when both arguments sit deep in the
// same half-plane.
inline cd erf_diff(cd b, cd a) {
    if (a.real() > 0.0 && b.real() > 0.0) return erfc(a) - erfc(b);
    if (a.real() < 0.0 && b.real() < 0.0) return erfc(-b) - erfc(-a);
    return erf(b) - erf(a);
}

}  // namespace malab
