// spectrum.hpp — absorption spectrum A(w) = Re \int_0^inf e^{-iwt} e^{-eta t} v(t) dt / pi

#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "fermiprobe/errors.hpp"
#include "fermiprobe/levitov.hpp"
#include "fermiprobe/numerics.hpp"

namespace fermiprobe::spectrum {

using std::complex;

struct Spectrum {
    std::vector<double> frequencies; // omega tau_F
    std::vector<double> values;      // A(omega)
    double eta = 0.0;
    double tail_coefficient = 0.0; // -Re g'(0): A ~ c/(pi w^2) far outside the window

    // Zeroth moment over the stored window plus the analytic c/(pi w^2)
    // tail beyond it.
    double sum_rule() const {
        if (frequencies.size() < 3) throw Error("sum_rule: grid too small");
        double integral = 0.0;
        for (std::size_t i = 1; i < frequencies.size(); ++i)
            integral += 0.5 * (values[i] + values[i - 1]) *
                        (frequencies[i] - frequencies[i - 1]);
        const double lo = frequencies.front(), hi = frequencies.back();
        if (lo >= 0.0 || hi <= 0.0) return integral;
        return integral + tail_coefficient / num::pi * (1.0 / hi - 1.0 / lo);
    }

    double peak_location() const {
        std::size_t best = 0;
        for (std::size_t i = 1; i < values.size(); ++i)
            if (values[i] > values[best]) best = i;
        if (best == 0 || best + 1 == values.size()) return frequencies[best];
        return num::parabola_vertex(frequencies[best - 1], values[best - 1],
                                    frequencies[best], values[best],
                                    frequencies[best + 1], values[best + 1])
            .first;
    }

    // Full width at half maximum by linear interpolation of the crossings.
    double fwhm() const {
        std::size_t best = 0;
        for (std::size_t i = 1; i < values.size(); ++i)
            if (values[i] > values[best]) best = i;
        const double half = 0.5 * values[best];
        double left = frequencies.front(), right = frequencies.back();
        for (std::size_t i = best; i-- > 0;) {
            if (values[i] <= half) {
                const double w = (half - values[i]) / (values[i + 1] - values[i]);
                left = frequencies[i] + w * (frequencies[i + 1] - frequencies[i]);
                break;
            }
        }
        for (std::size_t i = best + 1; i < values.size(); ++i) {
            if (values[i] <= half) {
                const double w = (values[i - 1] - half) / (values[i - 1] - values[i]);
                right = frequencies[i - 1] + w * (frequencies[i] - frequencies[i - 1]);
                break;
            }
        }
        return right - left;
    }
};

namespace detail {

// phi1(z) = (e^z - 1)/z and phi2(z) = (e^z - 1 - z)/z^2, series near 0.
inline complex<double> phi1(complex<double> z) {
    if (std::abs(z) < 1e-2) {
        complex<double> sum = 1.0, term = 1.0;
        for (int k = 2; k <= 12; ++k) {
            term *= z / static_cast<double>(k);
            sum += term;
        }
        return sum;
    }
    return (std::exp(z) - 1.0) / z;
}

inline complex<double> phi2(complex<double> z) {
    if (std::abs(z) < 1e-2) {
        complex<double> sum = 0.5, term = 0.5;
        for (int k = 3; k <= 13; ++k) {
            term *= z / static_cast<double>(k);
            sum += term;
        }
        return sum;
    }
    return (std::exp(z) - 1.0 - z) / (z * z);
}

} // namespace detail

// Composite segment-exact transform: g is taken linear on each stored grid
// segment and int e^{-iwt} g(t) dt is integrated in closed form per segment,
// so oscillatory e^{-iwt} factors cost no grid refinement.
inline Spectrum absorption_spectrum(const levitov::DecoherenceTrace& trace, double eta,
                                    const std::vector<double>& omega_grid) {
    if (trace.size() < 2) throw Error("absorption_spectrum: trace too short");
    if (!(eta > 0.0)) throw Error("absorption_spectrum: eta must be positive");
    const std::size_t n = trace.size();
    const double t_end = trace.times.back();
    const double tail = trace.magnitude.back() * std::exp(-eta * t_end);
    if (tail >= 1e-6)
        throw WindowTooWeak("absorption_spectrum: damped tail " + std::to_string(tail) +
                            " at t = " + std::to_string(t_end) + " exceeds 1e-6");

    std::vector<complex<double>> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = trace.values[i] * std::exp(-eta * trace.times[i]);

    Spectrum sp;
    sp.eta = eta;
    // leading far-tail coefficient of A(w) by integration by parts
    sp.tail_coefficient =
        std::max(0.0, -(g[1].real() - g[0].real()) / (trace.times[1] - trace.times[0]));
    sp.frequencies = omega_grid;
    sp.values.resize(omega_grid.size());
    for (std::size_t iw = 0; iw < omega_grid.size(); ++iw) {
        const double w = omega_grid[iw];
        complex<double> acc = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            const double t0 = trace.times[i - 1];
            const double d = trace.times[i] - t0;
            const complex<double> z(0.0, -w * d);
            const complex<double> e0(std::cos(w * t0), -std::sin(w * t0));
            // int_0^1 e^{zs} ds = phi1, int_0^1 s e^{zs} ds = phi1 - phi2
            acc += e0 * d *
                   (g[i] * detail::phi1(z) - (g[i] - g[i - 1]) * detail::phi2(z));
        }
        sp.values[iw] = acc.real() / num::pi;
    }
    return sp;
}

} // namespace fermiprobe::spectrum
