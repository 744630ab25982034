// metrology.hpp — temperature-estimation quantities from decoherence traces:
// finite-difference T-derivatives, Fisher information of equatorial
// measurements, QFI and its parallel/perpendicular split, SLD angle, QSNR.

#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fermiprobe/channel.hpp"
#include "fermiprobe/errors.hpp"

namespace fermiprobe::metrology {

using levitov::DecoherenceTrace;
using std::complex;

inline constexpr double purity_floor = 1e-12; // 1 - |v|^2 below this is singular

struct Derivatives {
    DecoherenceTrace center;
    std::vector<double> d_abs_dT;
    std::vector<double> d_phase_dT;
    double deltaT_rel = 0.0;
};

// Central differences of |v| and the unwrapped phase at T (1 +- delta), with
// phase branches aligned by phi(0) = 0 on both sides.
inline Derivatives temperature_derivatives(channel::Channel& ch, double temperature,
                                           const std::vector<double>& t_grid,
                                           double deltaT_rel = 1e-2) {
    ch.prepare(temperature);
    Derivatives d;
    d.deltaT_rel = deltaT_rel;
    d.center = ch.trace(temperature, t_grid);
    const double dT = deltaT_rel * temperature;
    const DecoherenceTrace hi = ch.trace(temperature + dT, t_grid);
    const DecoherenceTrace lo = ch.trace(temperature - dT, t_grid);
    const std::size_t n = t_grid.size();
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(hi.phase[i] - lo.phase[i]) > 0.5 * num::pi)
            throw BranchMisalignment("temperature_derivatives: phase branches differ by more "
                                     "than pi/2 at t = " + std::to_string(t_grid[i]));
    d.d_abs_dT.resize(n);
    d.d_phase_dT.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        d.d_abs_dT[i] = (hi.magnitude[i] - lo.magnitude[i]) / (2.0 * dT);
        d.d_phase_dT[i] = (hi.phase[i] - lo.phase[i]) / (2.0 * dT);
    }
    return d;
}

struct QfiPoint {
    std::optional<double> F_parallel; // missing where 1 - |v|^2 < floor
    double F_perp = 0.0;
    std::optional<double> F_Q;
};

// F_par = (d_T |v|)^2 / (1 - |v|^2),  F_perp = |v|^2 (d_T phi)^2.
inline QfiPoint qfi(double abs_v, double d_abs, double d_phase) {
    QfiPoint p;
    p.F_perp = abs_v * abs_v * d_phase * d_phase;
    const double purity_gap = 1.0 - abs_v * abs_v;
    if (purity_gap >= purity_floor) {
        p.F_parallel = d_abs * d_abs / purity_gap;
        p.F_Q = *p.F_parallel + p.F_perp;
    }
    return p;
}

// Measurement direction attaining the QFI: theta* = phi + varphi with
// tan(varphi) = |v| (1 - |v|^2) d_T phi / d_T |v|.
inline double sld_angle(double abs_v, double d_abs, double d_phase) {
    const double y = abs_v * (1.0 - abs_v * abs_v) * d_phase;
    const double x = d_abs;
    if (std::abs(x) < 1e-14 && std::abs(y) < 1e-14)
        throw UndefinedAngle("sld_angle: no temperature sensitivity");
    return std::atan2(y, x);
}

// Fisher information of the projective equatorial measurement along theta,
// F = (d_T Xbar)^2 / (1 - Xbar^2) with Xbar = cos(theta) Re v + sin(theta) Im v.
inline double fisher_of_equatorial_measurement(complex<double> v, complex<double> dv_dT,
                                               double theta) {
    if (std::abs(v) > 1.0 + 1e-9)
        throw Error("fisher_of_equatorial_measurement: |v| must not exceed 1");
    const double c = std::cos(theta), s = std::sin(theta);
    const double xbar = c * v.real() + s * v.imag();
    const double dxbar = c * dv_dT.real() + s * dv_dT.imag();
    const double var = 1.0 - xbar * xbar;
    if (var < purity_floor)
        throw DegenerateOutcome("fisher_of_equatorial_measurement: deterministic outcome");
    return dxbar * dxbar / var;
}

struct MetrologyResult {
    std::vector<double> times;
    std::vector<double> abs_v;
    std::vector<double> phase;
    std::vector<double> d_abs_dT;
    std::vector<double> d_phase_dT;
    std::vector<double> F_parallel; // NaN where singular
    std::vector<double> F_perp;
    std::vector<double> F_Q;  // NaN where singular
    std::vector<double> QSNR; // 0 at t = 0 by definition
    std::vector<double> sld_angle_varphi;
    double temperature = 0.0;
    double kFa = 0.0;
    std::string channel;
    // filled by maximize_qsnr
    double t_max = 0.0;
    double Q_max = 0.0;
    double t_max_grid = 0.0;
    double Q_max_grid = 0.0;
};

struct Maximum {
    double t_grid = 0.0;
    double q_grid = 0.0;
    double t_refined = 0.0;
    double q_refined = 0.0;
};

// Grid argmax refined by three-point parabolic interpolation; errors out when
// the grid does not cover the peak.
inline Maximum maximize_qsnr(const std::vector<double>& times, const std::vector<double>& q) {
    if (times.size() != q.size() || times.size() < 3)
        throw DimensionMismatch("maximize_qsnr: need matching arrays, n >= 3");
    std::size_t best = 0;
    for (std::size_t i = 1; i < q.size(); ++i)
        if (q[i] > q[best]) best = i; // NaN entries never win
    if (best == 0 || best + 1 == q.size())
        throw ExtendGrid("maximize_qsnr: QSNR not decreasing at the grid edge; extend it");
    Maximum m;
    m.t_grid = times[best];
    m.q_grid = q[best];
    const auto [tv, qv] = num::parabola_vertex(times[best - 1], q[best - 1], times[best],
                                               q[best], times[best + 1], q[best + 1]);
    m.t_refined = tv;
    m.q_refined = qv;
    return m;
}

// Full per-trace pipeline: derivatives, QFI split, SLD angle, QSNR,
// and optionally the optimum over the grid.
inline MetrologyResult analyze(channel::Channel& ch, double temperature,
                               const std::vector<double>& t_grid, double deltaT_rel = 1e-2,
                               bool find_max = true) {
    const Derivatives d = temperature_derivatives(ch, temperature, t_grid, deltaT_rel);
    const std::size_t n = t_grid.size();
    MetrologyResult r;
    r.times = t_grid;
    r.abs_v = d.center.magnitude;
    r.phase = d.center.phase;
    r.d_abs_dT = d.d_abs_dT;
    r.d_phase_dT = d.d_phase_dT;
    r.temperature = temperature;
    r.kFa = d.center.regime.kFa;
    r.channel = d.center.regime.channel;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.F_parallel.assign(n, nan);
    r.F_perp.assign(n, 0.0);
    r.F_Q.assign(n, nan);
    r.QSNR.assign(n, 0.0);
    r.sld_angle_varphi.assign(n, nan);
    for (std::size_t i = 0; i < n; ++i) {
        const QfiPoint p = qfi(r.abs_v[i], r.d_abs_dT[i], r.d_phase_dT[i]);
        r.F_perp[i] = p.F_perp;
        if (p.F_parallel) {
            r.F_parallel[i] = *p.F_parallel;
            r.F_Q[i] = *p.F_Q;
            r.QSNR[i] = temperature * std::sqrt(*p.F_Q);
        }
        if (i > 0) {
            const double y = r.abs_v[i] * (1.0 - r.abs_v[i] * r.abs_v[i]) * r.d_phase_dT[i];
            if (std::abs(r.d_abs_dT[i]) >= 1e-14 || std::abs(y) >= 1e-14)
                r.sld_angle_varphi[i] = std::atan2(y, r.d_abs_dT[i]);
        }
        if (i == 0) r.QSNR[0] = 0.0;
    }
    if (find_max) {
        const Maximum m = maximize_qsnr(r.times, r.QSNR);
        r.t_max = m.t_refined;
        r.Q_max = m.q_refined;
        r.t_max_grid = m.t_grid;
        r.Q_max_grid = m.q_grid;
    }
    return r;
}

} // namespace fermiprobe::metrology
