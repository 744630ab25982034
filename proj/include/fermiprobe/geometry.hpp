// geometry.hpp — trap geometries and the impurity-gas coupling
//
// Natural Fermi units throughout: E_F = hbar = k_B = k_F = 1, so tau_F = 1
// and temperatures are in units of T_F. With k_F = 1 the atomic mass is 1/2
// and energies are just k^2.

#pragma once

#include <cmath>
#include <string>

#include "fermiprobe/errors.hpp"
#include "fermiprobe/numerics.hpp"

namespace fermiprobe::basis {

enum class GeometryKind { Box3D_sWave, Box1D_even, Harmonic1D_even };

inline const char* to_string(GeometryKind k) {
    switch (k) {
        case GeometryKind::Box3D_sWave: return "box3d";
        case GeometryKind::Box1D_even: return "box1d";
        case GeometryKind::Harmonic1D_even: return "harmonic1d";
    }
    return "?";
}

inline GeometryKind geometry_kind_from_string(const std::string& s) {
    if (s == "box3d") return GeometryKind::Box3D_sWave;
    if (s == "box1d") return GeometryKind::Box1D_even;
    if (s == "harmonic1d") return GeometryKind::Harmonic1D_even;
    throw ConfigError("unknown geometry kind: " + s);
}

// size_parameter is R k_F (3D box), L k_F (1D box) or omega0 / E_F (trap).
// The density-fixing relations pin it to shell_count so that E_F = 1:
//   3D box:    k_F R = pi N_s
//   1D box:    k_F L = (2 N_e - 1) pi
//   1D trap:   E_F  = omega0 (2 N_e - 3/2)
struct Geometry {
    GeometryKind kind = GeometryKind::Box3D_sWave;
    double size_parameter = 0.0;
    int shell_count = 0;

    static Geometry box3d(int shells) {
        require_shells(shells);
        return {GeometryKind::Box3D_sWave, num::pi * shells, shells};
    }
    static Geometry box1d(int shells) {
        require_shells(shells);
        return {GeometryKind::Box1D_even, (2.0 * shells - 1.0) * num::pi, shells};
    }
    static Geometry harmonic1d(int shells) {
        require_shells(shells);
        return {GeometryKind::Harmonic1D_even, 1.0 / (2.0 * shells - 1.5), shells};
    }
    // Nearest valid sector for a requested trap frequency; omega0 is snapped
    // so that E_F = 1 holds exactly.
    static Geometry harmonic1d_from_omega(double omega0) {
        if (omega0 <= 0.0) throw Error("harmonic1d: omega0 must be positive");
        const int shells = std::max(1, static_cast<int>(std::lround((1.0 / omega0 + 1.5) / 2.0)));
        return harmonic1d(shells);
    }

    // Geometry regenerated at a different shell count, size rescaled per the
    // density-fixing relation (thermodynamic-limit ladder).
    Geometry with_shells(int shells) const {
        switch (kind) {
            case GeometryKind::Box3D_sWave: return box3d(shells);
            case GeometryKind::Box1D_even: return box1d(shells);
            case GeometryKind::Harmonic1D_even: return harmonic1d(shells);
        }
        throw Error("with_shells: bad kind");
    }

    // Unperturbed single-particle energy of level i = 1, 2, ... within the
    // participating symmetry sector.
    double unperturbed_energy(int i) const {
        switch (kind) {
            case GeometryKind::Box3D_sWave: {
                const double k = i * num::pi / size_parameter;
                return k * k;
            }
            case GeometryKind::Box1D_even: {
                const double k = (2.0 * i - 1.0) * num::pi / size_parameter;
                return k * k;
            }
            case GeometryKind::Harmonic1D_even:
                return size_parameter * (2.0 * (i - 1) + 0.5);
        }
        throw Error("unperturbed_energy: bad kind");
    }

    std::string describe() const {
        return std::string(to_string(kind)) + " size=" + std::to_string(size_parameter) +
               " shells=" + std::to_string(shell_count);
    }

  private:
    static void require_shells(int shells) {
        if (shells < 1) throw Error("geometry: shell_count must be >= 1");
    }
};

struct CouplingSpec {
    double kFa = 0.0;

    explicit CouplingSpec(double kfa) : kFa(kfa) {
        if (!(kFa < 0.0))
            throw InvalidCoupling("coupling: only attractive-branch kFa < 0 is supported");
    }

    // 1D contact strength lambda = -hbar^2/(m a); with m = 1/2, k_F = 1 this
    // is -2/kFa (positive for kFa < 0).
    double lambda_1d() const { return -2.0 / kFa; }
};

} // namespace fermiprobe::basis
