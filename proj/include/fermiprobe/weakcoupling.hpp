// weakcoupling.hpp — closed-form weak-coupling channel: first-order
// collisional shift (dual-route), Ohmic spectral density, dephasing Gamma(t),
// the approximate decoherence function and its analytic QSNR optimum.
// Everything here is independent of the determinant engine.

#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "fermiprobe/errors.hpp"
#include "fermiprobe/levitov.hpp"
#include "fermiprobe/numerics.hpp"
#include "fermiprobe/special.hpp"

namespace fermiprobe::weak {

using levitov::DecoherenceTrace;
using std::complex;

// Chemical potential of the continuum s-wave sector at fixed density:
// int dE D_s(E) f(E) keeps its T = 0 value, i.e. int_0^inf f(x^2) dx = 1.
inline double continuum_chemical_potential(double temperature) {
    if (!(temperature > 0.0)) throw Error("continuum_chemical_potential: need T > 0");
    auto density = [temperature](double mu) {
        const double cap = std::sqrt(std::max(4.0, mu + 50.0 * temperature));
        return num::adaptive_simpson(
            [mu, temperature](double x) {
                return special::fermi_occupation(x * x, mu, temperature);
            },
            0.0, cap, 1e-13);
    };
    return num::bisect_root([&](double mu) { return density(mu) - 1.0; }, -10.0, 10.0,
                            1e-13);
}

struct FirstOrderShift {
    double quadrature = 0.0;  // route (i): 2a int dE D_s(E) E f(E)
    double closed_form = 0.0; // route (ii): polylogarithm expression
    double value = 0.0;
};

// First-order energy shift (mean work done), by both routes with a 1e-6
// cross-check. Route (i): w = (a/pi) int_0^inf sqrt(E) f(E) dE. Route (ii):
// the same integral through Li_{3/2}; hbar w = -kFa Li_{3/2}(-e^{beta mu})
// / sqrt(4 pi beta^3 E_F).
inline FirstOrderShift first_order_shift(double temperature, double mu, double kFa) {
    if (!(temperature > 0.0)) throw Error("first_order_shift: need T > 0");
    FirstOrderShift out;
    const double cap = std::sqrt(std::max(4.0, mu + 50.0 * temperature));
    const double moment = num::adaptive_simpson(
        [mu, temperature](double x) {
            return 2.0 * x * x * special::fermi_occupation(x * x, mu, temperature);
        },
        0.0, cap, 1e-13);
    out.quadrature = kFa / num::pi * moment;

    const double beta = 1.0 / temperature;
    out.closed_form = -kFa * special::li32_negexp(beta * mu) /
                      std::sqrt(4.0 * num::pi * beta * beta * beta);
    out.value = out.closed_form;
    if (std::abs(out.quadrature - out.closed_form) >
        1e-6 * std::max(1e-30, std::abs(out.closed_form)))
        throw PolylogDivergence("first_order_shift: dual routes disagree beyond 1e-6");
    return out;
}

struct WeakCouplingModel {
    double kFa = 0.0;
    double alpha = 0.0; // (kFa / pi)^2
    double temperature = 0.0;
    double mu = 0.0;
    double cutoff_Lambda = 1.0; // hbar Lambda / E_F
    double shift_w = 0.0;
    bool cutoff_valid = true; // beta hbar Lambda >> 1 condition

    double beta() const { return 1.0 / temperature; }
};

inline WeakCouplingModel make_model(double kFa, double temperature,
                                    double cutoff_Lambda = 1.0) {
    if (!(kFa < 0.0)) throw InvalidCoupling("make_model: kFa must be < 0");
    WeakCouplingModel m;
    m.kFa = kFa;
    m.alpha = (kFa / num::pi) * (kFa / num::pi);
    m.temperature = temperature;
    m.cutoff_Lambda = cutoff_Lambda;
    m.mu = continuum_chemical_potential(temperature);
    m.shift_w = first_order_shift(temperature, m.mu, kFa).value;
    m.cutoff_valid = m.beta() * cutoff_Lambda > 10.0;
    return m;
}

enum class SpectralMode { exact_integral, ohmic_approx };

// Particle-hole coupling density J(w). exact_integral evaluates
//   J(w) = alpha int dE sqrt(E (E + w)) f(E) [1 - f(E + w)]
// by quadrature; ohmic_approx returns (alpha/2) w [1 + coth(beta w / 2)].
inline double spectral_density(double omega, const WeakCouplingModel& m,
                               SpectralMode mode) {
    if (std::abs(omega) >= 10.0)
        throw Error("spectral_density: |omega| must be below 10 E_F");
    if (mode == SpectralMode::ohmic_approx) {
        const double x = 0.5 * m.beta() * omega;
        if (std::abs(x) < 1e-4)
            return 0.5 * m.alpha *
                   (omega + 2.0 / m.beta() + m.beta() * omega * omega / 6.0);
        if (x > 45.0) return m.alpha * omega;
        if (x < -45.0) return 0.0;
        return 0.5 * m.alpha * omega * (1.0 + 1.0 / std::tanh(x));
    }
    const double e0 = std::max(0.0, -omega);
    const double mu = m.mu, T = m.temperature;
    const double span = std::sqrt(std::max(4.0, mu + 50.0 * T + std::abs(omega)) - e0);
    const double integral = num::adaptive_simpson(
        [e0, omega, mu, T](double u) {
            const double e = e0 + u * u;
            const double f1 = special::fermi_occupation(e, mu, T);
            const double f2 = 1.0 - special::fermi_occupation(e + omega, mu, T);
            return 2.0 * u * std::sqrt(std::max(0.0, e * (e + omega))) * f1 * f2;
        },
        0.0, span, 1e-14);
    return m.alpha * integral;
}

namespace detail {

inline double log_sinh(double x) { // ln sinh(x), overflow-safe for x > 0
    if (x > 20.0) return x - std::log(2.0) + std::log1p(-std::exp(-2.0 * x));
    return std::log(std::sinh(x));
}

} // namespace detail

// Gamma(t) = alpha { ln[(Lambda beta / pi) sinh(pi t / beta)] - Ci(Lambda t)
//                    + gamma_E }
inline double dephasing_gamma(double t, const WeakCouplingModel& m) {
    if (t < 0.0) throw Error("dephasing_gamma: t >= 0 required");
    const double lt = m.cutoff_Lambda * t;
    if (lt < 1e-9) return 0.0;
    const double beta = m.beta();
    return m.alpha * (std::log(m.cutoff_Lambda * beta / num::pi) +
                      detail::log_sinh(num::pi * t / beta) -
                      special::cosine_integral(lt) + num::euler_gamma);
}

// Second-order phase in the Ci-negligible regime, Phi(t) = alpha (Lambda t + pi/2).
inline double phase_phi(double t, const WeakCouplingModel& m) {
    return m.alpha * (m.cutoff_Lambda * t + 0.5 * num::pi);
}

// v(t) = e^{i w t} [ (beta / pi) sinh(pi t / beta) ]^{-alpha}, with the
// bracket clamped to >= 1 so |v| <= 1 near t = 0. Phi is excluded by default.
inline complex<double> approx_value(double t, const WeakCouplingModel& m,
                                    bool include_phi = false) {
    const double beta = m.beta();
    double log_bracket = t <= 0.0
                             ? -1.0
                             : std::log(beta / num::pi) + detail::log_sinh(num::pi * t / beta);
    if (log_bracket < 0.0) log_bracket = 0.0;
    const double mag = std::exp(-m.alpha * log_bracket);
    double ph = m.shift_w * t;
    if (include_phi) ph += phase_phi(t, m);
    return mag * complex<double>(std::cos(ph), std::sin(ph));
}

inline DecoherenceTrace approx_decoherence(const std::vector<double>& t_grid,
                                           const WeakCouplingModel& m,
                                           bool include_phi = false) {
    if (t_grid.empty() || t_grid.front() != 0.0)
        throw GridTooCoarse("approx_decoherence: grid must start at 0");
    DecoherenceTrace tr;
    tr.times = t_grid;
    const std::size_t n = t_grid.size();
    tr.values.resize(n);
    tr.magnitude.resize(n);
    tr.phase.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = t_grid[i];
        const double beta = m.beta();
        double log_bracket =
            t <= 0.0 ? 0.0 : std::log(beta / num::pi) + detail::log_sinh(num::pi * t / beta);
        if (log_bracket < 0.0) log_bracket = 0.0;
        tr.magnitude[i] = std::exp(-m.alpha * log_bracket);
        tr.phase[i] = m.shift_w * t + (include_phi ? phase_phi(t, m) : 0.0);
        tr.values[i] = tr.magnitude[i] *
                       complex<double>(std::cos(tr.phase[i]), std::sin(tr.phase[i]));
    }
    tr.regime.temperature = m.temperature;
    tr.regime.kFa = m.kFa;
    tr.regime.geometry = "continuum";
    tr.regime.channel = std::abs(m.kFa) <= 0.5 ? "weak" : "weak(extrapolated)";
    return tr;
}

// Fumi's theorem: hbar w0 = -(1/pi) int_0^{E_F} delta(E) dE with
// delta(E) = -arctan(sqrt(E) a); quadrature to 1e-8.
inline double fumi_shift(double kFa) {
    if (!(kFa < 0.0)) throw InvalidCoupling("fumi_shift: kFa must be < 0");
    const double integral = num::adaptive_simpson(
        [kFa](double x) { return 2.0 * x * std::atan(x * kFa); }, 0.0, 1.0, 1e-10);
    return integral / num::pi;
}

// d w / d T by central difference with the paper-wide step deltaT/T = 1e-2;
// mu is re-solved at the displaced temperatures.
inline double shift_slope(double kFa, double temperature, double delta_rel = 1e-2) {
    const double dT = delta_rel * temperature;
    const double wp =
        first_order_shift(temperature + dT, continuum_chemical_potential(temperature + dT),
                          kFa)
            .value;
    const double wm =
        first_order_shift(temperature - dT, continuum_chemical_potential(temperature - dT),
                          kFa)
            .value;
    return (wp - wm) / (2.0 * dT);
}

struct WeakOptimum {
    double t_max = 0.0;
    double Q_max = 0.0;
    double x_root = 0.0;   // pi t_max / beta
    double residual = 0.0; // stationarity residual at the root
};

// Maximum of Q(t) = t |v(t)| T dw/dT for the sinh-form decoherence: the
// stationarity condition is x coth x = 1/alpha with x = pi t / beta.
inline WeakOptimum weak_coupling_optimum(double temperature, double kFa,
                                         double delta_rel = 1e-2) {
    WeakCouplingModel m = make_model(kFa, temperature);
    if (num::pi * m.alpha * temperature >= 1.0)
        throw ValidityViolation("weak_coupling_optimum: pi alpha T must be below T_F");
    const double target = 1.0 / m.alpha;
    auto f = [target](double x) {
        const double c = x < 1e-8 ? 1.0 + x * x / 3.0 : x / std::tanh(x);
        return c - target;
    };
    const double x = num::bisect_root(f, 1e-8, target + 2.0, 1e-14);
    WeakOptimum out;
    out.x_root = x;
    out.residual = std::abs(f(x));
    out.t_max = x * m.beta() / num::pi;
    const double vmag = std::abs(approx_value(out.t_max, m));
    out.Q_max = out.t_max * vmag * temperature * std::abs(shift_slope(kFa, temperature,
                                                                      delta_rel));
    return out;
}

// Nearest approach of the power-law and exponential asymptotes of ln |v|.
inline double crossover_time(const WeakCouplingModel& m) { return m.beta() / num::pi; }

} // namespace fermiprobe::weak
