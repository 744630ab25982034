// special.hpp — Fermi factors, cosine integral, polylogarithm Li_{3/2}

#pragma once

#include <cmath>
#include <limits>

#include "fermiprobe/errors.hpp"
#include "fermiprobe/numerics.hpp"

namespace fermiprobe::special {

// Fermi-Dirac occupation with overflow-safe exponentials.
inline double fermi_occupation(double energy, double mu, double temperature) {
    const double x = (energy - mu) / temperature;
    if (x > 45.0) return std::exp(-x);
    if (x < -45.0) return 1.0;
    return 1.0 / (std::exp(x) + 1.0);
}

// f (1 - f) without cancellation, used in spectral densities.
inline double fermi_window(double energy, double mu, double temperature) {
    const double x = (energy - mu) / temperature;
    const double ax = std::abs(x);
    if (ax > 45.0) return std::exp(-ax);
    const double e = std::exp(-ax);
    return e / ((1.0 + e) * (1.0 + e));
}

// Cosine integral Ci(z) for z > 0: power series below the elbow, the standard
// asymptotic sin/cos form above it.
inline double cosine_integral(double z) {
    if (z <= 0.0) throw Error("cosine_integral: requires z > 0");
    if (z <= 18.0) {
        double sum = 0.0;
        double term = 1.0; // will hold z^{2k} / (2k)!
        for (int k = 1; k <= 60; ++k) {
            term *= z * z / ((2.0 * k - 1.0) * (2.0 * k));
            const double add = ((k % 2) ? -1.0 : 1.0) * term / (2.0 * k);
            sum += add;
            if (std::abs(add) < 1e-17 * (1.0 + std::abs(sum)) && k > 4) break;
        }
        return num::euler_gamma + std::log(z) + sum;
    }
    // Ci(z) = f(z) sin z - g(z) cos z
    const double z2 = z * z;
    double f = 1.0, g = 1.0, fk = 1.0, gk = 1.0;
    for (int k = 1; k <= 9; ++k) {
        fk *= -(2.0 * k) * (2.0 * k - 1.0) / z2;
        gk *= -(2.0 * k) * (2.0 * k + 1.0) / z2;
        f += fk;
        g += gk;
    }
    return (f / z) * std::sin(z) - (g / z2) * std::cos(z);
}

// Complete Fermi-Dirac integral of order 3/2 without the Gamma prefactor:
//   I32(y) = \int_0^infty sqrt(x) / (e^{x-y} + 1) dx.
// Used both directly and through Li_{3/2}(-e^y) = -I32(y) / Gamma(3/2).
inline double fermi_integral_32(double y) {
    if (y <= 0.0) {
        // integrand smooth, decays like e^{-(x-y)}
        const double hi = 50.0 + std::max(0.0, y);
        return num::adaptive_simpson(
            [y](double x) {
                if (x <= 0.0) return 0.0;
                const double t = x - y;
                const double f = t > 45.0 ? std::exp(-t) : 1.0 / (std::exp(t) + 1.0);
                return std::sqrt(x) * f;
            },
            0.0, hi, 1e-13);
    }
    // split around the Fermi edge: exact T=0 part plus two rapidly decaying
    // boundary-layer integrals; u = y - s^2 removes the sqrt kink below the edge
    const double lead = (2.0 / 3.0) * std::pow(y, 1.5);
    const double cap = 50.0;
    const double s_hi = std::sqrt(y);
    const double s_lo = std::sqrt(std::max(0.0, y - cap));
    const double below = num::adaptive_simpson(
        [y](double s) {
            const double u = y - s * s;
            const double f = u > 45.0 ? std::exp(-u) : 1.0 / (std::exp(u) + 1.0);
            return 2.0 * s * s * f;
        },
        s_lo, s_hi, 1e-13);
    const double above = num::adaptive_simpson(
        [y](double u) {
            const double f = u > 45.0 ? std::exp(-u) : 1.0 / (std::exp(u) + 1.0);
            return std::sqrt(y + u) * f;
        },
        0.0, cap, 1e-13);
    return lead - below + above;
}

// Li_{3/2}(-e^y): alternating fugacity series for small z = e^y, integral
// representation otherwise.
inline double li32_negexp(double y) {
    const double z = std::exp(y);
    if (z <= 0.9) {
        double sum = 0.0;
        double zk = 1.0;
        for (int k = 1; k <= 400; ++k) {
            zk *= -z;
            const double add = zk / (k * std::sqrt(static_cast<double>(k)));
            sum += add;
            if (std::abs(add) < 1e-16 * (1.0 + std::abs(sum)))
                return sum;
        }
        throw PolylogDivergence("li32_negexp: series did not converge");
    }
    const double gamma_32 = 0.5 * std::sqrt(num::pi);
    return -fermi_integral_32(y) / gamma_32;
}

} // namespace fermiprobe::special
