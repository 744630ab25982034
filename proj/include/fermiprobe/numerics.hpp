// numerics.hpp — root finding, quadrature, fits and small numeric helpers

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <string_view>
#include <vector>

#include "fermiprobe/errors.hpp"

namespace fermiprobe::num {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double euler_gamma = 0.57721566490153286061;

// Bisection on a bracketing interval. f(lo) and f(hi) must differ in sign.
template <typename F>
double bisect_root(F&& f, double lo, double hi, double xtol = 1e-14,
                   int max_iter = 240) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0) == (fhi > 0))
        throw BracketFailure("bisect_root: endpoints do not bracket a root");
    for (int it = 0; it < max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0) == (fhi > 0)) {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
        if (hi - lo < xtol * (1.0 + std::abs(mid))) return 0.5 * (lo + hi);
    }
    throw NoConvergence("bisect_root: iteration cap reached");
}

namespace detail {

template <typename F>
double adaptive_simpson_rec(F& f, double a, double b, double fa, double fm,
                            double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0) throw NoConvergence("adaptive_simpson: depth exhausted");
    if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol, depth - 1);
}

} // namespace detail

template <typename F>
double adaptive_simpson(F&& f, double a, double b, double tol = 1e-12,
                        int max_depth = 48) {
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a);
    const double fm = f(m);
    const double fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol,
                                        max_depth);
}

// Gauss-Legendre nodes/weights on [-1, 1], computed once by Newton iteration.
inline const std::array<std::array<double, 12>, 2>& gl12() {
    static const std::array<std::array<double, 12>, 2> table = [] {
        std::array<std::array<double, 12>, 2> t{};
        const int n = 12;
        for (int i = 0; i < n; ++i) {
            double x = std::cos(pi * (i + 0.75) / (n + 0.5));
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                const double dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double dp = n * (x * p1 - p0) / (x * x - 1.0);
            t[0][i] = x;
            t[1][i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        return t;
    }();
    return table;
}

// Panelled 12-point Gauss-Legendre; intended for smooth or per-panel smooth
// oscillatory integrands (choose panels ~ one per half period).
template <typename F>
double gl_integrate(F&& f, double a, double b, int panels) {
    const auto& [xs, ws] = gl12();
    const double h = (b - a) / panels;
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double c = a + (p + 0.5) * h;
        double acc = 0.0;
        for (int i = 0; i < 12; ++i) acc += ws[i] * f(c + 0.5 * h * xs[i]);
        sum += 0.5 * h * acc;
    }
    return sum;
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

inline LineFit least_squares_line(const std::vector<double>& x,
                                  const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw DimensionMismatch("least_squares_line: need matching arrays, n >= 2");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    LineFit out;
    out.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    out.intercept = (sy - out.slope * sx) / n;
    return out;
}

// Vertex of the parabola through three points; falls back to the middle point
// when the points are collinear.
inline std::pair<double, double> parabola_vertex(double x0, double y0, double x1,
                                                 double y1, double x2, double y2) {
    const double d0 = (x1 - x0) * (y1 - y2);
    const double d2 = (x1 - x2) * (y1 - y0);
    const double denom = 2.0 * (d0 - d2);
    if (denom == 0.0) return {x1, y1};
    const double xv = x1 - ((x1 - x0) * d0 - (x1 - x2) * d2) / denom;
    // evaluate through Lagrange form
    const double l0 = (xv - x1) * (xv - x2) / ((x0 - x1) * (x0 - x2));
    const double l1 = (xv - x0) * (xv - x2) / ((x1 - x0) * (x1 - x2));
    const double l2 = (xv - x0) * (xv - x1) / ((x2 - x0) * (x2 - x1));
    return {xv, y0 * l0 + y1 * l1 + y2 * l2};
}

// Wrap to (-pi, pi].
inline double wrap_pm_pi(double x) {
    x = std::fmod(x, 2.0 * pi);
    if (x <= -pi) x += 2.0 * pi;
    if (x > pi) x -= 2.0 * pi;
    return x;
}

inline std::vector<double> uniform_grid(double start, double stop, double step) {
    if (step <= 0.0) throw Error("uniform_grid: step must be positive");
    std::vector<double> g;
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
    g.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) g.push_back(start + step * static_cast<double>(i));
    return g;
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t double_bits(double x) {
    std::uint64_t u;
    std::memcpy(&u, &x, sizeof u);
    return u;
}

} // namespace fermiprobe::num
