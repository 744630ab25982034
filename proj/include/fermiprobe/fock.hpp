// fock.hpp — brute-force many-body oracle for small mode counts:
// v(t) = Tr[e^{i H1 t} e^{-i H0 t} rho] on the full 2^M Fock space.
// Validation channel for the determinant engine; capped at M = 12 modes.

#pragma once

#include <Eigen/Dense>

#include <complex>

#include "fermiprobe/basis.hpp"
#include "fermiprobe/errors.hpp"
#include "fermiprobe/thermal.hpp"

namespace fermiprobe::fock {

using std::complex;

inline constexpr int mode_cap = 12;

// Second-quantized one-body operator sum_{l,n} h[l][n] c^dag_l c_n on
// occupation bitstrings with Jordan-Wigner signs.
inline Eigen::MatrixXd one_body_operator(const Eigen::MatrixXd& h) {
    const int M = static_cast<int>(h.rows());
    if (M > mode_cap) throw FockSpaceTooLarge("one_body_operator: too many modes");
    const int dim = 1 << M;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
    for (int s = 0; s < dim; ++s) {
        for (int n = 0; n < M; ++n) {
            if (!(s & (1 << n))) continue;
            const int mid = s & ~(1 << n);
            for (int l = 0; l < M; ++l) {
                if (mid & (1 << l)) continue;
                const int target = mid | (1 << l);
                // fermion sign: count occupied modes passed by each operator
                int sign = 0;
                for (int j = 0; j < n; ++j) sign += (mid >> j) & 1;
                for (int j = 0; j < l; ++j) sign += (mid >> j) & 1;
                H(target, s) += (sign % 2 ? -1.0 : 1.0) * h(l, n);
            }
        }
    }
    return H;
}

// Grand-canonical thermal trace with rho ~ e^{-beta (H0 - mu N)}; H0 is the
// diagonal unperturbed one-body spectrum, so rho factorizes over modes.
inline complex<double> many_body_oracle(const basis::BasisSet& b,
                                        const basis::ThermalState& th, double t) {
    const int M = b.truncated() ? b.Nprime : b.n_max;
    if (M > mode_cap)
        throw FockSpaceTooLarge("many_body_oracle: " + std::to_string(M) + " modes > cap");
    if (b.overlap.rows() < M || b.overlap.cols() < M)
        throw DimensionMismatch("many_body_oracle: need a square overlap block");

    const Eigen::MatrixXd U = b.overlap.topLeftCorner(M, M);
    const Eigen::MatrixXd h1 =
        U * b.perturbed_energies.head(M).asDiagonal() * U.transpose();

    const Eigen::MatrixXd H1 = one_body_operator(h1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H1);
    if (es.info() != Eigen::Success)
        throw Error("many_body_oracle: Fock-space diagonalization failed");

    const int dim = 1 << M;
    Eigen::VectorXd weight(dim), e0(dim);
    for (int s = 0; s < dim; ++s) {
        double w = 1.0, e = 0.0;
        for (int n = 0; n < M; ++n) {
            const double f = th.occupations[n];
            if (s & (1 << n)) {
                w *= f;
                e += b.unperturbed_energies[n];
            } else {
                w *= 1.0 - f;
            }
        }
        weight[s] = w;
        e0[s] = e;
    }

    // (e^{i H1 t})_{ss} via the eigendecomposition, then the diagonal thermal sum
    const Eigen::MatrixXd& V = es.eigenvectors();
    Eigen::VectorXcd phase(dim);
    for (int k = 0; k < dim; ++k)
        phase[k] = complex<double>(std::cos(es.eigenvalues()[k] * t),
                                   std::sin(es.eigenvalues()[k] * t));
    complex<double> v = 0.0;
    for (int s = 0; s < dim; ++s) {
        complex<double> diag = 0.0;
        for (int k = 0; k < dim; ++k) diag += V(s, k) * phase[k] * V(s, k);
        v += weight[s] * diag *
             complex<double>(std::cos(e0[s] * t), -std::sin(e0[s] * t));
    }
    return v;
}

} // namespace fermiprobe::fock
