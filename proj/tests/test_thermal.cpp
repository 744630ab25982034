#include <catch2/catch.hpp>

#include <cmath>

#include "fermiprobe/thermal.hpp"

namespace fp = fermiprobe;
using fp::basis::CouplingSpec;
using fp::basis::Geometry;

namespace {

fp::basis::BasisSet probe_basis(const Geometry& g, int n_levels) {
    fp::basis::BasisSet b;
    b.geometry = g;
    b.n_max = n_levels;
    return b;
}

} // namespace

TEST_CASE("chemical potential hits E_F in the zero-temperature limit") {
    const auto g = Geometry::box3d(4000);
    const auto th = fp::basis::solve_chemical_potential(probe_basis(g, 1), 1e-4, 4000);
    CHECK(th.chemical_potential == Approx(1.0).margin(1e-3));
}

TEST_CASE("occupation at the chemical potential is exactly one half") {
    const auto g = Geometry::box3d(100);
    for (const double T : {0.03, 0.2, 0.7}) {
        const auto th = fp::basis::solve_chemical_potential(probe_basis(g, 1), T, 100);
        CHECK(fp::special::fermi_occupation(th.chemical_potential, th.chemical_potential, T) ==
              Approx(0.5));
    }
}

TEST_CASE("chemical potential matches an independent dense scan (T=0.2, Ns=200)") {
    const auto g = Geometry::box3d(200);
    const auto th = fp::basis::solve_chemical_potential(probe_basis(g, 1), 0.2, 200);
    CHECK(th.chemical_potential == Approx(1.042504497723).margin(3e-6)); // frozen scan value
    // occupation sum closes at the solver tolerance
    double sum = 0.0;
    for (int i = 1; i <= 40000; ++i)
        sum += fp::special::fermi_occupation(g.unperturbed_energy(i), th.chemical_potential,
                                             0.2);
    CHECK(sum == Approx(200.0).margin(1e-7));
}

TEST_CASE("occupations are bounded and stored for every solved level") {
    const auto b = fp::basis::solve_box_sector(Geometry::box3d(40), CouplingSpec(-0.5), 160,
                                               40);
    const auto th = fp::basis::solve_chemical_potential(b, 0.15);
    REQUIRE(th.occupations.size() == 160);
    for (int i = 0; i < 160; ++i) {
        CHECK(th.occupations[i] >= 0.0);
        CHECK(th.occupations[i] <= 1.0);
        if (i > 0) CHECK(th.occupations[i] <= th.occupations[i - 1]);
    }
}

TEST_CASE("bracket failure surfaces as a typed error") {
    const auto g = Geometry::box3d(10);
    CHECK_THROWS_AS(fp::basis::solve_chemical_potential(probe_basis(g, 1), 0.1, 2000000000),
                    fp::BracketFailure);
}

TEST_CASE("truncation: occupied block at T -> 0 is the shell count") {
    const auto b = fp::basis::solve_box_sector(Geometry::box3d(30), CouplingSpec(-0.5), 300,
                                               40);
    const auto th = fp::basis::solve_chemical_potential(b, 1e-3);
    const auto t = fp::basis::truncate(b, th, 1e-4);
    CHECK(t.N >= 30);
    CHECK(t.N <= 32);
    CHECK(t.Nprime >= t.N);
    CHECK(t.epsilon == 1e-4);
}

TEST_CASE("truncation at finite T includes the thermal tail and is stable in n_max") {
    const auto g = Geometry::box3d(200);
    const auto b1 = fp::basis::solve_box_sector(g, CouplingSpec(-0.5), 1200, 300);
    const auto th1 = fp::basis::solve_chemical_potential(b1, 0.1);
    const auto t1 = fp::basis::truncate(b1, th1, 1e-4);
    CHECK(t1.N > 200); // thermal tail included

    const auto b2 = fp::basis::solve_box_sector(g, CouplingSpec(-0.5), 1800, 300);
    const auto th2 = fp::basis::solve_chemical_potential(b2, 0.1);
    const auto t2 = fp::basis::truncate(b2, th2, 1e-4);
    CHECK(t2.N == t1.N);           // N fixed by the occupation rule
    CHECK(t2.Nprime == t1.Nprime); // N' stable once n_max is sufficient
}

TEST_CASE("truncation overflow is reported when the solved basis is too small") {
    const auto b = fp::basis::solve_box_sector(Geometry::box3d(50), CouplingSpec(-0.5), 55,
                                               55);
    const auto th = fp::basis::solve_chemical_potential(b, 0.5);
    CHECK_THROWS_AS(fp::basis::truncate(b, th, 1e-4), fp::TruncationOverflow);
}
