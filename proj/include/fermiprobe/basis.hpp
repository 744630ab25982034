// basis.hpp — truncated single-particle eigenbases: spectra, scattering
// phases and the unperturbed/perturbed overlap matrix U[m][n] = <psi_m|psi'_n>

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fermiprobe/errors.hpp"
#include "fermiprobe/geometry.hpp"
#include "fermiprobe/numerics.hpp"

namespace fermiprobe::basis {

struct BasisSet {
    Geometry geometry;
    CouplingSpec coupling{-1.0};

    Eigen::VectorXd unperturbed_energies; // E_n, strictly increasing
    Eigen::VectorXd perturbed_energies;   // E'_n
    Eigen::VectorXd scattering_phases;    // delta_n (radians)
    Eigen::MatrixXd overlap;              // rows x n_max, row m: <psi_m|psi'_n>

    int n_max = 0;  // solved perturbed levels (columns of overlap)
    int rows = 0;   // unperturbed levels with overlap rows available

    // set by truncate(); 0 means untruncated
    int N = 0;
    int Nprime = 0;
    double epsilon = 0.0;

    bool truncated() const { return N > 0 && Nprime > 0; }
};

namespace detail {

inline void check_solver_inputs(const Geometry& g, const CouplingSpec& c, int n_max) {
    if (!(c.kFa < 0.0)) throw InvalidCoupling("solve_scattering_sector: kFa must be < 0");
    if (n_max < g.shell_count)
        throw Error("solve_scattering_sector: n_max must cover the shell count");
}

} // namespace detail

// Solve the quantization conditions level by level, each root bracketed in
// its own branch so the solution is unique and continuous in kFa.
//   3D box:  k_n R = n pi,        k'_n R + delta_n = n pi,  tan(delta) = -k' a
//   1D box:  k_n L = (2n-1) pi,   k'_n L + 2 delta_n = (2n-1) pi,
//            tan(delta) = 1/(k' a)
inline BasisSet solve_scattering_sector(const Geometry& geometry,
                                        const CouplingSpec& coupling, int n_max) {
    detail::check_solver_inputs(geometry, coupling, n_max);
    if (geometry.kind == GeometryKind::Harmonic1D_even)
        throw Error("solve_scattering_sector: use build_harmonic_sector for traps");

    BasisSet b;
    b.geometry = geometry;
    b.coupling = coupling;
    b.n_max = n_max;
    b.unperturbed_energies.resize(n_max);
    b.perturbed_energies.resize(n_max);
    b.scattering_phases.resize(n_max);

    const double a = coupling.kFa; // k_F = 1
    const double size = geometry.size_parameter;

    for (int n = 1; n <= n_max; ++n) {
        double k, kp, delta;
        if (geometry.kind == GeometryKind::Box3D_sWave) {
            k = n * num::pi / size;
            const double lo = (n - 1) * num::pi / size;
            const double hi = n * num::pi / size;
            auto g = [&](double x) { return x * size + std::atan(-x * a) - n * num::pi; };
            kp = num::bisect_root(g, lo + 1e-300, hi, 1e-15);
            delta = n * num::pi - kp * size; // equals atan(-kp a) in (0, pi/2)
        } else {
            k = (2.0 * n - 1.0) * num::pi / size;
            const double lo = (2.0 * n - 1.0) * num::pi / size;
            const double hi = 2.0 * n * num::pi / size;
            auto g = [&](double x) {
                return x * size + 2.0 * std::atan(1.0 / (x * a)) - (2.0 * n - 1.0) * num::pi;
            };
            kp = num::bisect_root(g, lo * (1.0 + 1e-15), hi, 1e-15);
            delta = 0.5 * ((2.0 * n - 1.0) * num::pi - kp * size); // in (-pi/2, 0)
        }
        b.unperturbed_energies[n - 1] = k * k;
        b.perturbed_energies[n - 1] = kp * kp;
        b.scattering_phases[n - 1] = delta;
    }
    return b;
}

namespace detail {

// Perturbed-state normalization constants from the paper's box solutions.
inline double norm_3d(double kp, double delta, double R) {
    return 1.0 / std::sqrt(1.0 + std::sin(2.0 * delta) / (2.0 * kp * R));
}
inline double norm_1d(double kp, double delta, double L) {
    return 1.0 / std::sqrt(1.0 - std::sin(2.0 * delta) / (kp * L));
}

} // namespace detail

// Closed-form overlap entries. Products of sinusoids integrate to boundary
// terms only, because the quantization conditions kill the oscillatory parts:
//   3D:  U[m][n] = 2 A_n k_m sin(delta_n) / (R (k_m^2 - k'_n^2))
//   1D:  U[m][n] = 4 B_n k'_n sin(delta_n) / (L (k_m^2 - k'_n^2))
// Validated against direct quadrature in the test suite.
inline void build_overlap_matrix(BasisSet& b, int rows) {
    if (b.n_max <= 0) throw Error("build_overlap_matrix: solve the sector first");
    if (rows < 1 || rows > b.n_max)
        throw DimensionMismatch("build_overlap_matrix: rows out of range");
    const double size = b.geometry.size_parameter;
    b.rows = rows;
    b.overlap.resize(rows, b.n_max);

    // k_m^2 - k'_n^2 evaluated through the quantization conditions:
    //   3D: k_m - k'_n = ((m - n) pi + delta_n) / R
    //   1D: k_m - k'_n = (2 (m - n) pi + 2 delta_n) / L
    // so near-degenerate pairs suffer no cancellation.
    for (int n = 0; n < b.n_max; ++n) {
        const double kp = std::sqrt(b.perturbed_energies[n]);
        const double delta = b.scattering_phases[n];
        double coeff;
        if (b.geometry.kind == GeometryKind::Box3D_sWave)
            coeff = 2.0 * detail::norm_3d(kp, delta, size) * std::sin(delta) / size;
        else
            coeff = 4.0 * detail::norm_1d(kp, delta, size) * kp * std::sin(delta) / size;
        for (int m = 0; m < rows; ++m) {
            const double km = std::sqrt(b.unperturbed_energies[m]);
            double diff; // k_m - k'_n
            if (b.geometry.kind == GeometryKind::Box3D_sWave)
                diff = ((m - n) * num::pi + delta) / size;
            else
                diff = (2.0 * (m - n) * num::pi + 2.0 * delta) / size;
            const double denom = diff * (km + kp);
            b.overlap(m, n) =
                (b.geometry.kind == GeometryKind::Box3D_sWave ? coeff * km : coeff) / denom;
        }
    }
}

inline BasisSet solve_box_sector(const Geometry& geometry, const CouplingSpec& coupling,
                                 int n_max, int rows) {
    BasisSet b = solve_scattering_sector(geometry, coupling, n_max);
    build_overlap_matrix(b, rows);
    return b;
}

namespace detail {

// Even harmonic-oscillator wavefunction values at the origin, |chi_{2j}(0)|,
// with signs (-1)^j; c_j^2 follows the recurrence c_j^2 = c_{j-1}^2 (2j-1)/(2j).
inline Eigen::VectorXd even_chi0(double omega0, int count) {
    Eigen::VectorXd chi(count);
    double c2 = std::sqrt(omega0 / (2.0 * num::pi)); // (m omega0 / pi)^{1/2}, m = 1/2
    chi[0] = std::sqrt(c2);
    for (int j = 1; j < count; ++j) {
        c2 *= (2.0 * j - 1.0) / (2.0 * j);
        chi[j] = ((j % 2) ? -1.0 : 1.0) * std::sqrt(c2);
    }
    return chi;
}

// Tail sum  sum_{j >= M} chi_j(0)^2 / E_j  of the contact secular equation.
// The truncated even basis renormalizes the bare contact strength; absorbing
// this tail into lambda restores cutoff-independent spectra.
inline double contact_tail(double omega0, int M) {
    double c2 = std::sqrt(omega0 / (2.0 * num::pi));
    for (int j = 1; j < M; ++j) c2 *= (2.0 * j - 1.0) / (2.0 * j);
    // explicit sum to 64 M, then integral tail of the asymptotic integrand
    double sum = 0.0;
    const int cap = 64 * M;
    double c2j = c2;
    for (int j = M; j < cap; ++j) {
        if (j > M) c2j *= (2.0 * j - 1.0) / (2.0 * j);
        sum += c2j / (omega0 * (2.0 * j + 0.5));
    }
    // a(n) ~ sqrt(omega0/2pi) / (sqrt(pi n) * 2 omega0 n); integral from cap
    const double pref = std::sqrt(omega0 / (2.0 * num::pi)) / (2.0 * omega0 * std::sqrt(num::pi));
    sum += pref * 2.0 / std::sqrt(static_cast<double>(cap));
    return sum;
}

inline BasisSet diagonalize_harmonic(const Geometry& geometry, const CouplingSpec& coupling,
                                     double lambda, int n_max, int rows) {
    const double omega0 = geometry.size_parameter;
    const Eigen::VectorXd chi = even_chi0(omega0, n_max);

    const double tail = contact_tail(omega0, n_max);
    const double lambda_eff = (lambda == 0.0) ? 0.0 : lambda / (1.0 + lambda * tail);

    Eigen::MatrixXd h(n_max, n_max);
    h.noalias() = lambda_eff * (chi * chi.transpose());
    for (int i = 0; i < n_max; ++i) h(i, i) += omega0 * (2.0 * i + 0.5);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
    if (solver.info() != Eigen::Success)
        throw ConvergenceFailure("build_harmonic_sector: diagonalization failed");

    BasisSet b;
    b.geometry = geometry;
    b.coupling = coupling;
    b.n_max = n_max;
    b.rows = rows;
    b.unperturbed_energies.resize(n_max);
    for (int i = 0; i < n_max; ++i) b.unperturbed_energies[i] = omega0 * (2.0 * i + 0.5);
    b.perturbed_energies = solver.eigenvalues();
    // phase-shift analog from the level shift in units of the spacing
    b.scattering_phases.resize(n_max);
    for (int i = 0; i < n_max; ++i)
        b.scattering_phases[i] =
            -num::pi * (b.perturbed_energies[i] - b.unperturbed_energies[i]) / (2.0 * omega0);
    b.overlap = solver.eigenvectors().topRows(rows);
    return b;
}

} // namespace detail

// Perturbed even sector of the 1D harmonic trap from dense diagonalization of
// h1 in the even oscillator basis with contact elements lambda chi_m(0) chi_n(0).
// check_convergence re-runs at twice the basis size and requires the low-lying
// perturbed energies to be stable at 1e-6 E_F.
inline BasisSet build_harmonic_sector(const Geometry& geometry, const CouplingSpec& coupling,
                                      int n_max, int rows, bool check_convergence = false) {
    if (geometry.kind != GeometryKind::Harmonic1D_even)
        throw Error("build_harmonic_sector: geometry must be harmonic1d");
    if (rows < 1 || rows > n_max) throw DimensionMismatch("build_harmonic_sector: bad rows");
    const double lambda = coupling.lambda_1d();
    BasisSet b = detail::diagonalize_harmonic(geometry, coupling, lambda, n_max, rows);
    if (check_convergence) {
        const BasisSet wide = detail::diagonalize_harmonic(geometry, coupling, lambda,
                                                           2 * n_max, rows);
        const int probe = std::min(rows, 8);
        for (int i = 0; i < probe; ++i) {
            const double shift =
                std::abs(b.perturbed_energies[i] - wide.perturbed_energies[i]);
            if (shift > 1e-6)
                throw ConvergenceFailure("build_harmonic_sector: spectrum not converged, "
                                         "low level moved by " + std::to_string(shift));
        }
    }
    return b;
}

// ---------------------------------------------------------------------------
// Serialization: self-describing text, values round-trip bit-exactly.

inline void save_basis(const BasisSet& b, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("save_basis: cannot open " + path);
    char buf[64];
    auto put = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        out << buf;
    };
    out << "fermiprobe-basis v1\n";
    out << "kind " << to_string(b.geometry.kind) << "\n";
    out << "size_parameter ";
    put(b.geometry.size_parameter);
    out << "\nshell_count " << b.geometry.shell_count << "\n";
    out << "kFa ";
    put(b.coupling.kFa);
    out << "\nn_max " << b.n_max << "\nrows " << b.rows << "\n";
    out << "N " << b.N << "\nNprime " << b.Nprime << "\nepsilon ";
    put(b.epsilon);
    out << "\nenergies\n";
    for (int i = 0; i < b.n_max; ++i) {
        put(b.unperturbed_energies[i]);
        out << "\n";
    }
    out << "perturbed\n";
    for (int i = 0; i < b.n_max; ++i) {
        put(b.perturbed_energies[i]);
        out << "\n";
    }
    out << "phases\n";
    for (int i = 0; i < b.n_max; ++i) {
        put(b.scattering_phases[i]);
        out << "\n";
    }
    out << "overlap row-major " << b.rows << " " << b.n_max << "\n";
    for (int m = 0; m < b.rows; ++m) {
        for (int n = 0; n < b.n_max; ++n) {
            put(b.overlap(m, n));
            out << (n + 1 == b.n_max ? "\n" : " ");
        }
    }
    if (!out) throw Error("save_basis: write failed for " + path);
}

inline BasisSet load_basis(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("load_basis: cannot open " + path);
    std::string tok, version;
    in >> tok >> version;
    if (tok != "fermiprobe-basis" || version != "v1")
        throw Error("load_basis: bad header in " + path);
    BasisSet b;
    std::string kind;
    double size = 0, kfa = 0, eps = 0;
    int shells = 0;
    in >> tok >> kind;
    in >> tok >> size;
    in >> tok >> shells;
    in >> tok >> kfa;
    in >> tok >> b.n_max;
    in >> tok >> b.rows;
    in >> tok >> b.N;
    in >> tok >> b.Nprime;
    in >> tok >> eps;
    b.geometry = Geometry{geometry_kind_from_string(kind), size, shells};
    b.coupling = CouplingSpec(kfa);
    b.epsilon = eps;
    b.unperturbed_energies.resize(b.n_max);
    b.perturbed_energies.resize(b.n_max);
    b.scattering_phases.resize(b.n_max);
    in >> tok; // energies
    for (int i = 0; i < b.n_max; ++i) in >> b.unperturbed_energies[i];
    in >> tok; // perturbed
    for (int i = 0; i < b.n_max; ++i) in >> b.perturbed_energies[i];
    in >> tok; // phases
    for (int i = 0; i < b.n_max; ++i) in >> b.scattering_phases[i];
    int r = 0, c = 0;
    in >> tok >> tok >> r >> c; // overlap row-major r c
    if (r != b.rows || c != b.n_max) throw Error("load_basis: inconsistent overlap shape");
    b.overlap.resize(r, c);
    for (int m = 0; m < r; ++m)
        for (int n = 0; n < c; ++n) in >> b.overlap(m, n);
    if (!in) throw Error("load_basis: truncated file " + path);
    return b;
}

} // namespace fermiprobe::basis
