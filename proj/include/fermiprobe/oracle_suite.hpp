// oracle_suite.hpp — randomized small-system cross-check of the determinant
// engine against the Fock-space trace (the `oracle-check` CLI command and the
// first acceptance gate both run this).

#pragma once

#include <complex>
#include <random>
#include <vector>

#include "fermiprobe/fock.hpp"
#include "fermiprobe/levitov.hpp"

namespace fermiprobe::oracle {

struct SmallSystem {
    basis::BasisSet basis;
    basis::ThermalState thermal;
};

// Synthetic truncated basis with a random orthogonal overlap, used where any
// valid (E, E', U, f) tuple must agree between the two representations.
inline SmallSystem random_small_system(std::mt19937_64& rng, int modes) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    SmallSystem s;
    basis::BasisSet& b = s.basis;
    b.geometry = basis::Geometry::box3d(1);
    b.coupling = basis::CouplingSpec(-0.5);
    b.n_max = modes;
    b.rows = modes;
    b.N = modes;
    b.Nprime = modes;
    b.epsilon = 1e-4;

    b.unperturbed_energies.resize(modes);
    b.perturbed_energies.resize(modes);
    b.scattering_phases = Eigen::VectorXd::Zero(modes);
    double e = 0.1;
    for (int i = 0; i < modes; ++i) {
        e += 0.1 + 2.0 * uni(rng) / modes;
        b.unperturbed_energies[i] = e;
        b.perturbed_energies[i] = e - 0.35 * uni(rng);
    }
    std::sort(b.perturbed_energies.data(), b.perturbed_energies.data() + modes);

    Eigen::MatrixXd m(modes, modes);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < modes; ++i)
        for (int j = 0; j < modes; ++j) m(i, j) = gauss(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    b.overlap = qr.householderQ() * Eigen::MatrixXd::Identity(modes, modes);

    s.thermal.temperature = 0.05 + 0.55 * uni(rng);
    s.thermal.chemical_potential = 0.5 + 1.0 * uni(rng);
    s.thermal.shell_count = modes / 2 + 1;
    s.thermal.occupations.resize(modes);
    for (int i = 0; i < modes; ++i)
        s.thermal.occupations[i] = special::fermi_occupation(
            b.unperturbed_energies[i], s.thermal.chemical_potential, s.thermal.temperature);
    return s;
}

struct OracleReport {
    int systems = 0;
    int points = 0;
    double max_abs_error = 0.0;
    bool pass = false;
};

inline OracleReport run_suite(int n_systems, int points_per_system, double tolerance,
                              std::uint64_t seed, int max_modes = 6) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    OracleReport rep;
    rep.systems = n_systems;
    for (int k = 0; k < n_systems; ++k) {
        const int modes = 2 + static_cast<int>(uni(rng) * (max_modes - 1));
        SmallSystem s = random_small_system(rng, std::min(modes, max_modes));
        for (int p = 0; p < points_per_system; ++p) {
            const double t = 8.0 * uni(rng);
            const auto det_form = levitov::decoherence_value(s.basis, s.thermal, t);
            const auto trace_form = fock::many_body_oracle(s.basis, s.thermal, t);
            rep.max_abs_error = std::max(rep.max_abs_error, std::abs(det_form - trace_form));
            ++rep.points;
        }
    }
    rep.pass = rep.max_abs_error < tolerance;
    return rep;
}

} // namespace fermiprobe::oracle
