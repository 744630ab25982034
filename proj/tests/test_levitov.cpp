#include <catch2/catch.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <random>

#include "fermiprobe/fock.hpp"
#include "fermiprobe/levitov.hpp"
#include "fermiprobe/oracle_suite.hpp"

namespace fp = fermiprobe;
using fp::basis::CouplingSpec;
using fp::basis::Geometry;
using std::complex;

TEST_CASE("evolution matrix is the identity at t = 0 and in the free limit") {
    auto sys = fp::levitov::ExactSystem::prepare(Geometry::box3d(10), CouplingSpec(-0.8),
                                                 0.1);
    const auto a0 = fp::levitov::decoherence_matrix(sys.truncated_basis, sys.thermal, 0.0);
    for (int m = 0; m < a0.rows(); ++m)
        for (int k = 0; k < a0.cols(); ++k) {
            const double want = m == k ? 1.0 : 0.0;
            CHECK(std::abs(a0(m, k) - want) < 2e-4); // truncated-block unitarity deficit
        }

    auto free_sys = fp::levitov::ExactSystem::prepare(Geometry::box3d(10),
                                                      CouplingSpec(-1e-9), 0.1);
    for (const double t : {0.7, 3.1}) {
        const auto a =
            fp::levitov::decoherence_matrix(free_sys.truncated_basis, free_sys.thermal, t);
        for (int m = 0; m < a.rows(); ++m)
            for (int k = 0; k < a.cols(); ++k) {
                const double want = m == k ? 1.0 : 0.0;
                CHECK(std::abs(a(m, k) - want) < 1e-7);
            }
    }
}

TEST_CASE("evolution matrix matches dense matrix exponentials on a toy basis") {
    // explicit 4-mode system with a random rotation between the two spectra
    std::mt19937_64 rng(41);
    auto s = fp::oracle::random_small_system(rng, 4);
    s.thermal.temperature = 0.5;
    for (int i = 0; i < 4; ++i)
        s.thermal.occupations[i] = fp::special::fermi_occupation(
            s.basis.unperturbed_energies[i], s.thermal.chemical_potential, 0.5);

    const double t = 1.3;
    const Eigen::MatrixXd U = s.basis.overlap;
    const Eigen::MatrixXcd h0 = s.basis.unperturbed_energies.asDiagonal();
    const Eigen::MatrixXcd h1 =
        U * s.basis.perturbed_energies.asDiagonal() * U.transpose();

    auto expm = [](const Eigen::MatrixXcd& h, complex<double> factor) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
        Eigen::VectorXcd ph(h.rows());
        for (int i = 0; i < h.rows(); ++i) ph[i] = std::exp(factor * es.eigenvalues()[i]);
        return Eigen::MatrixXcd(es.eigenvectors() * ph.asDiagonal() *
                                es.eigenvectors().adjoint());
    };
    const Eigen::MatrixXcd prop =
        expm(h1, complex<double>(0, t)) * expm(h0, complex<double>(0, -t));
    Eigen::MatrixXcd want = Eigen::MatrixXcd::Identity(4, 4);
    for (int m = 0; m < 4; ++m)
        for (int k = 0; k < 4; ++k) {
            want(m, k) = (m == k ? 1.0 - s.thermal.occupations[m] : 0.0) +
                         s.thermal.occupations[m] * prop(m, k);
        }
    const auto got = fp::levitov::decoherence_matrix(s.basis, s.thermal, t);
    for (int m = 0; m < 4; ++m)
        for (int k = 0; k < 4; ++k) CHECK(std::abs(got(m, k) - want(m, k)) < 1e-12);
}

TEST_CASE("single-mode closed form") {
    std::mt19937_64 rng(7);
    auto s = fp::oracle::random_small_system(rng, 1);
    const double f = s.thermal.occupations[0];
    const double E = s.basis.unperturbed_energies[0];
    const double Ep = s.basis.perturbed_energies[0];
    for (const double t : {0.0, 0.9, 4.2}) {
        const auto v = fp::levitov::decoherence_value(s.basis, s.thermal, t);
        const auto want =
            1.0 - f + f * std::exp(complex<double>(0.0, (Ep - E) * t));
        CHECK(std::abs(v - want) < 1e-13);
        const auto oracle = fp::fock::many_body_oracle(s.basis, s.thermal, t);
        CHECK(std::abs(v - oracle) < 1e-13);
    }
}

TEST_CASE("determinant equals the Fock-space trace on random small systems") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int k = 0; k < 6; ++k) {
        auto s = fp::oracle::random_small_system(rng, 2 + k % 5);
        for (int p = 0; p < 20; ++p) {
            const double t = 10.0 * uni(rng);
            const auto det_form = fp::levitov::decoherence_value(s.basis, s.thermal, t);
            const auto trace_form = fp::fock::many_body_oracle(s.basis, s.thermal, t);
            CHECK(std::abs(det_form - trace_form) < 1e-10);
        }
    }
    CHECK(std::abs(fp::fock::many_body_oracle(
                       fp::oracle::random_small_system(rng, 3).basis,
                       fp::oracle::random_small_system(rng, 3).thermal, 0.0) -
                   1.0) < 1e-12);
}

TEST_CASE("Fock space cap is enforced") {
    std::mt19937_64 rng(5);
    auto s = fp::oracle::random_small_system(rng, 6);
    s.basis.N = 13;
    s.basis.Nprime = 13;
    CHECK_THROWS_AS(fp::fock::many_body_oracle(s.basis, s.thermal, 1.0),
                    fp::FockSpaceTooLarge);
}

TEST_CASE("trace invariants: v(0) = 1, contractivity, continuous phase") {
    auto sys = fp::levitov::ExactSystem::prepare(Geometry::box3d(60), CouplingSpec(-1.5),
                                                 0.1);
    const auto grid = fp::num::uniform_grid(0.0, 150.0, 0.5);
    const auto tr = sys.trace(grid, 2);
    CHECK(tr.values[0] == complex<double>(1.0, 0.0));
    CHECK(tr.phase[0] == 0.0);
    double worst_rise = -1.0;
    for (std::size_t i = 1; i < tr.size(); ++i) {
        CHECK(tr.magnitude[i] <= 1.0 + 1e-9);
        CHECK(std::abs(tr.phase[i] - tr.phase[i - 1]) < fp::num::pi);
        worst_rise = std::max(worst_rise, tr.magnitude[i] - tr.magnitude[i - 1]);
    }
    CHECK(worst_rise < 1e-4); // |v| non-increasing up to numerical ripple
}

TEST_CASE("a too-coarse grid raises GridTooCoarse") {
    auto sys = fp::levitov::ExactSystem::prepare(Geometry::box3d(40), CouplingSpec(-6.0),
                                                 0.1);
    // phase advances ~0.42 rad per tau_F here; 8 tau_F steps alias past pi
    const auto grid = fp::num::uniform_grid(0.0, 80.0, 8.0);
    CHECK_THROWS_AS(sys.trace(grid, 1), fp::GridTooCoarse);
    CHECK_THROWS_AS(fp::levitov::decoherence_function(sys.truncated_basis, sys.thermal,
                                                      {0.5, 1.0}, 1),
                    fp::GridTooCoarse); // grid must start at zero
}

TEST_CASE("tightening the truncation tolerance moves the determinant at O(eps)") {
    const auto g = Geometry::box3d(200);
    const CouplingSpec c(-0.5);
    const auto b = fp::basis::solve_box_sector(g, c, 4000, 400);
    const auto th = fp::basis::solve_chemical_potential(b, 0.1);
    const auto t4 = fp::basis::truncate(b, th, 1e-4);
    const auto t5 = fp::basis::truncate(b, th, 1e-5);
    const auto t6 = fp::basis::truncate(b, th, 1e-6);
    CHECK(t5.Nprime > t4.Nprime);
    const auto v4 = fp::levitov::decoherence_value(t4, th, 10.0);
    const auto v5 = fp::levitov::decoherence_value(t5, th, 10.0);
    const auto v6 = fp::levitov::decoherence_value(t6, th, 10.0);
    // truncation bias is linear in eps: per-mille at 1e-4, ten times smaller
    // after each tightening
    CHECK(std::abs(v4 - v5) < 2e-3);
    CHECK(std::abs(v5 - v6) < 0.2 * std::abs(v4 - v5));
}

TEST_CASE("density fixing: doubling the shell count converges v(t)") {
    const auto grid = fp::num::uniform_grid(0.0, 50.0, 1.0);
    auto s1 = fp::levitov::ExactSystem::prepare(Geometry::box3d(100), CouplingSpec(-0.5),
                                                0.1);
    auto s2 = fp::levitov::ExactSystem::prepare(Geometry::box3d(200), CouplingSpec(-0.5),
                                                0.1);
    auto s4 = fp::levitov::ExactSystem::prepare(Geometry::box3d(400), CouplingSpec(-0.5),
                                                0.1);
    const auto t1 = s1.trace(grid, 2);
    const auto t2 = s2.trace(grid, 2);
    const auto t4 = s4.trace(grid, 2);
    double dmag = 0.0, dph12 = 0.0, dph24 = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        dmag = std::max(dmag, std::abs(t1.magnitude[i] - t2.magnitude[i]));
        dph12 = std::max(dph12, std::abs(t1.phase[i] - t2.phase[i]));
        dph24 = std::max(dph24, std::abs(t2.phase[i] - t4.phase[i]));
    }
    CHECK(dmag < 2.5e-3); // magnitudes pinned at the truncation-bias level
    // the residual phase-rate offset from the midgap chemical potential
    // halves per doubling (O(1/shell_count) approach to the thermodynamic limit)
    CHECK(dph24 < 0.65 * dph12);
    CHECK(dph12 < 0.05);
}

TEST_CASE("thermodynamic ladder converges by shell count 800 at tol 1e-3") {
    const auto grid = fp::num::uniform_grid(0.0, 200.0, 8.0);
    const auto conv = fp::levitov::converge_thermodynamic(Geometry::box3d(100),
                                                          CouplingSpec(-0.5), 0.1, grid,
                                                          1e-3, 1e-5, 0, 100, 6);
    CHECK(conv.shell_count <= 800);
}

TEST_CASE("thermodynamic ladder converges trivially in the free limit") {
    const auto grid = fp::num::uniform_grid(0.0, 20.0, 1.0);
    const auto conv = fp::levitov::converge_thermodynamic(Geometry::box3d(100),
                                                          CouplingSpec(-1e-8), 0.1, grid,
                                                          1e-3, 1e-4, 2, 50, 3);
    CHECK(conv.shell_count == 100);
    for (std::size_t i = 0; i < grid.size(); ++i)
        CHECK(std::abs(conv.trace.values[i] - 1.0) < 1e-6);
}

TEST_CASE("thermodynamic ladder reports non-convergence at an impossible tolerance") {
    const auto grid = fp::num::uniform_grid(0.0, 20.0, 2.0);
    CHECK_THROWS_AS(fp::levitov::converge_thermodynamic(Geometry::box3d(25),
                                                        CouplingSpec(-0.5), 0.1, grid, 1e-16,
                                                        1e-4, 2, 25, 2),
                    fp::NonConvergence);
}

TEST_CASE("harmonic traces refuse times beyond the trap half-period") {
    const auto g = Geometry::harmonic1d(13); // omega0 = 1/24.5
    auto sys = fp::levitov::ExactSystem::prepare(g, CouplingSpec(-1.0), 0.1, 1e-4, 0, 512);
    const double half_period = fp::num::pi / g.size_parameter;
    CHECK_THROWS_AS(sys.trace(fp::num::uniform_grid(0.0, 1.2 * half_period, 1.0), 1),
                    fp::ValidityViolation);
    CHECK_NOTHROW(sys.trace(fp::num::uniform_grid(0.0, 0.8 * half_period, 1.0), 1));
}
