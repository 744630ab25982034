// thermal.hpp — Fermi-Dirac thermal state of the gas and basis truncation

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "fermiprobe/basis.hpp"
#include "fermiprobe/errors.hpp"
#include "fermiprobe/special.hpp"

namespace fermiprobe::basis {

struct ThermalState {
    double temperature = 0.0;     // T / T_F
    double chemical_potential = 0.0; // mu / E_F
    Eigen::VectorXd occupations;  // f_n for the basis levels
    int shell_count = 0;
};

namespace detail {

// Occupation sum over a large auxiliary unperturbed spectrum (closed form
// energies, so the auxiliary basis costs nothing to generate).
inline double occupation_sum(const Geometry& g, double mu, double T, int n_aux) {
    double sum = 0.0;
    for (int i = n_aux; i >= 1; --i)
        sum += special::fermi_occupation(g.unperturbed_energy(i), mu, T);
    return sum;
}

inline int auxiliary_count(const Geometry& g, double T, int /*n_max*/) {
    // states up to E ~ mu_max + 45 T always land inside the default 1e4;
    // growth pattern fixed so mu is independent of the caller's basis size
    const int floor_states = 10000;
    int est = 1024;
    const double e_cap = 12.0 + 50.0 * T;
    while (g.unperturbed_energy(est) < e_cap) est = est * 2;
    return std::max(floor_states, est);
}

} // namespace detail

// Chemical potential from Tr[n] = shell_count by bisection on mu in
// [-10, 10] E_F; occupancy tolerance 1e-8.
inline ThermalState solve_chemical_potential(const BasisSet& basis, double temperature,
                                             int shell_count) {
    if (!(temperature > 0.0)) throw Error("solve_chemical_potential: need T > 0");
    if (shell_count < 1) throw Error("solve_chemical_potential: need shell_count >= 1");
    const Geometry& g = basis.geometry;
    const int n_aux = detail::auxiliary_count(g, temperature, basis.n_max);

    double lo = -10.0, hi = 10.0;
    double slo = detail::occupation_sum(g, lo, temperature, n_aux) - shell_count;
    double shi = detail::occupation_sum(g, hi, temperature, n_aux) - shell_count;
    if (slo > 0.0 || shi < 0.0)
        throw BracketFailure("solve_chemical_potential: occupation sum does not straddle "
                             "shell_count on [-10, 10] E_F");
    double mu = 0.0, smid = 0.0;
    for (int it = 0; it < 200; ++it) {
        mu = 0.5 * (lo + hi);
        smid = detail::occupation_sum(g, mu, temperature, n_aux) - shell_count;
        if (std::abs(smid) < 1e-8 && (hi - lo) < 1e-12) break;
        if (smid > 0.0)
            hi = mu;
        else
            lo = mu;
    }
    if (std::abs(smid) >= 1e-8)
        throw NoConvergence("solve_chemical_potential: bisection stalled");

    ThermalState st;
    st.temperature = temperature;
    st.chemical_potential = mu;
    st.shell_count = shell_count;
    st.occupations.resize(basis.n_max);
    const bool have_levels = basis.unperturbed_energies.size() >= basis.n_max;
    for (int i = 0; i < basis.n_max; ++i) {
        const double e = have_levels ? basis.unperturbed_energies[i]
                                     : g.unperturbed_energy(i + 1);
        st.occupations[i] = special::fermi_occupation(e, mu, temperature);
    }
    return st;
}

inline ThermalState solve_chemical_potential(const BasisSet& basis, double temperature) {
    return solve_chemical_potential(basis, temperature, basis.geometry.shell_count);
}

// Truncation per the unitarity rule: keep the smallest N with
// |sum_{n<=N} f_n - shell_count| < eps and the smallest N' with
// sum_{n<=N'} |U[m][n]|^2 > 1 - eps for every retained row m.
inline BasisSet truncate(const BasisSet& basis, const ThermalState& thermal,
                         double epsilon = 1e-4) {
    if (basis.overlap.size() == 0) throw Error("truncate: overlap not built");
    if (!(epsilon > 0.0)) throw Error("truncate: epsilon must be positive");

    double cum = 0.0;
    int N = 0;
    for (int i = 0; i < basis.n_max; ++i) {
        cum += thermal.occupations[i];
        if (std::abs(cum - thermal.shell_count) < epsilon) {
            N = i + 1;
            break;
        }
    }
    if (N == 0)
        throw TruncationOverflow("truncate: thermal tail exceeds the solved basis; "
                                 "enlarge n_max");
    if (N > basis.rows)
        throw TruncationOverflow("truncate: occupied block exceeds available overlap rows");

    int Nprime = N;
    for (int m = 0; m < N; ++m) {
        double row = 0.0;
        int need = 0;
        for (int n = 0; n < basis.n_max; ++n) {
            row += basis.overlap(m, n) * basis.overlap(m, n);
            if (row > 1.0 - epsilon) {
                need = n + 1;
                break;
            }
        }
        if (need == 0)
            throw TruncationOverflow("truncate: unitarity unreachable within n_max for row " +
                                     std::to_string(m + 1));
        Nprime = std::max(Nprime, need);
    }

    BasisSet out = basis;
    out.N = N;
    out.Nprime = Nprime;
    out.epsilon = epsilon;
    return out;
}

} // namespace fermiprobe::basis
