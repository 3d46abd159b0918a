#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <optional>
#include <vector>

#include "sdisc/errors.hpp"
#include "sdisc/state_space.hpp"

namespace sdisc {
namespace detail {

// Swap the adjacent diagonal entries (k, k+1) of a complex upper-triangular
// Schur factor by a unitary similarity, accumulating the rotation into Q.
// Same construction as LAPACK ztrexc: the rotation's first column is the
// normalized eigenvector [t12; t22 - t11] of the trailing eigenvalue.
inline void swap_schur_entries(ComplexMatrix& T, ComplexMatrix& Q, Eigen::Index k) {
    const Complex t11 = T(k, k), t12 = T(k, k + 1), t22 = T(k + 1, k + 1);
    const double scale = std::abs(t11) + std::abs(t12) + std::abs(t22);
    Complex v0 = t12, v1 = t22 - t11;
    const double nv = std::hypot(std::abs(v0), std::abs(v1));
    if (nv <= 1e-300 || std::abs(v1) <= 1e-16 * scale) {
        // Coincident eigenvalues: order is immaterial.
        return;
    }
    v0 /= nv;
    v1 /= nv;
    Eigen::Matrix2cd G;
    G << v0, -std::conj(v1), v1, std::conj(v0);
    T.block(k, k, 2, T.cols() - k) = G.adjoint() * T.block(k, k, 2, T.cols() - k);
    T.block(0, k, k + 2, 2) = T.block(0, k, k + 2, 2) * G;
    Q.middleCols(k, 2) = Q.middleCols(k, 2) * G;
    T(k + 1, k) = Complex(0, 0);
}

// Complex Schur form with the selected eigenvalues moved to the leading
// diagonal positions.  `flags[i]` marks whether the i-th diagonal entry is
// selected; flags are permuted along with the factorization.
inline void reorder_schur(ComplexMatrix& T, ComplexMatrix& Q, std::vector<bool>& flags) {
    const Eigen::Index n = T.rows();
    Eigen::Index target = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (!flags[j]) continue;
        for (Eigen::Index k = j; k > target; --k) {
            swap_schur_entries(T, Q, k - 1);
            std::swap(flags[k], flags[k - 1]);
        }
        ++target;
    }
}

struct GameCareSolution {
    Matrix X;
    double relative_residual;
};

// Stabilizing solution of the game-type continuous Riccati equation encoded
// by the Hamiltonian
//   H = [A 0; -C'C -A'] - [B; -C'D] R^{-1} [D'C B'],  R = D'D - diag(g^2 I_mw, 0).
// Returns nothing when H has eigenvalues within axis_tol of the imaginary
// axis or the stable subspace has no graph representation; both mean the
// level g is infeasible.
inline std::optional<GameCareSolution> game_care(const Matrix& A, const Matrix& B,
                                                 const Matrix& C, const Matrix& D, double gamma,
                                                 Eigen::Index mw, double axis_tol = 1e-9) {
    const Eigen::Index n = A.rows(), mt = B.cols();
    Matrix R = D.transpose() * D;
    R.topLeftCorner(mw, mw) -= gamma * gamma * Matrix::Identity(mw, mw);
    Eigen::PartialPivLU<Matrix> Rlu(R);
    const double rdiag = Rlu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (rdiag < 1e-12 * std::max(1.0, R.cwiseAbs().maxCoeff())) return std::nullopt;
    const Matrix RiDC = Rlu.solve(D.transpose() * C);
    const Matrix RiBt = Rlu.solve(B.transpose());

    const Matrix M11 = A - B * RiDC;
    const Matrix M12 = -B * RiBt;
    const Matrix M21 = -C.transpose() * C + C.transpose() * D * RiDC;
    if (n == 0) return GameCareSolution{Matrix(0, 0), 0.0};

    Matrix H(2 * n, 2 * n);
    H << M11, M12, M21, -M11.transpose();

    Eigen::ComplexSchur<ComplexMatrix> schur(H.cast<Complex>(), /*computeU=*/true);
    if (schur.info() != Eigen::Success) return std::nullopt;
    ComplexMatrix T = schur.matrixT();
    ComplexMatrix Q = schur.matrixU();

    const double scale = std::max(1.0, T.diagonal().cwiseAbs().maxCoeff());
    std::vector<bool> stable_flag(2 * n);
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
        const Complex lam = T(i, i);
        if (std::abs(lam.real()) <= axis_tol * scale) return std::nullopt;  // axis eigenvalue
        stable_flag[i] = lam.real() < 0.0;
        if (stable_flag[i]) ++count;
    }
    if (count != n) return std::nullopt;
    reorder_schur(T, Q, stable_flag);

    const ComplexMatrix X1 = Q.topLeftCorner(n, n);
    const ComplexMatrix X2 = Q.bottomLeftCorner(n, n);
    Eigen::PartialPivLU<ComplexMatrix> lu(X1);
    const double x1_min = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (x1_min < 1e-12 * std::max(1.0, X1.cwiseAbs().maxCoeff())) return std::nullopt;
    // X = X2 X1^{-1}, obtained from the transposed system X1^T X^T = X2^T.
    Matrix X = (X1.transpose().partialPivLu().solve(X2.transpose())).transpose().real();
    X = 0.5 * (X + X.transpose()).eval();

    const Matrix res = M11.transpose() * X + X * M11 + X * M12 * X - M21;
    const double denom = (1.0 + X.norm()) *
                         (1.0 + M11.norm() + M12.norm() * (1.0 + X.norm())) +
                         M21.norm();
    return GameCareSolution{std::move(X), res.norm() / denom};
}

inline double spectral_radius(const Matrix& M) {
    if (M.rows() == 0) return 0.0;
    return M.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace detail

// Stabilizing solution of the discrete algebraic Riccati equation
//   X = A'XA - (A'XB + S)(R + B'XB)^{-1}(B'XA + S') + Q
// by the structure-preserving doubling algorithm, with an a-posteriori
// residual check.
inline Matrix dare_solve(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                         std::optional<Matrix> S_opt = std::nullopt,
                         double residual_tol = 1e-8) {
    const Eigen::Index n = A.rows(), m = B.cols();
    if (A.rows() != A.cols()) throw validation_error("dare_solve: A must be square");
    if (B.rows() != n) throw validation_error("dare_solve: B row count must match A");
    if (Q.rows() != n || Q.cols() != n) throw validation_error("dare_solve: Q must be n-by-n");
    if (R.rows() != m || R.cols() != m) throw validation_error("dare_solve: R must be m-by-m");
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + Q.cwiseAbs().maxCoeff()))
        throw validation_error("dare_solve: Q must be symmetric");
    if ((R - R.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + R.cwiseAbs().maxCoeff()))
        throw validation_error("dare_solve: R must be symmetric");
    const Matrix S = S_opt ? *S_opt : Matrix::Zero(n, m);
    if (S.rows() != n || S.cols() != m) throw validation_error("dare_solve: S must be n-by-m");

    Eigen::LDLT<Matrix> Rldlt(0.5 * (R + R.transpose()));
    if (Rldlt.info() != Eigen::Success || !Rldlt.isPositive())
        throw numerical_error("dare_solve: R is not positive definite");

    // Remove the cross term, then double:  E <- E (I + G H)^{-1} E, etc.
    const Matrix Ahat = A - B * Rldlt.solve(S.transpose());
    const Matrix Qhat = 0.5 * ((Q - S * Rldlt.solve(S.transpose())) +
                               (Q - S * Rldlt.solve(S.transpose())).transpose());
    const Matrix G0 = B * Rldlt.solve(B.transpose());

    Matrix E = Ahat, G = G0, Hk = Qhat;
    const Matrix I = Matrix::Identity(n, n);
    bool converged = (n == 0);
    for (int iter = 0; iter < 100 && !converged; ++iter) {
        Eigen::PartialPivLU<Matrix> lu(I + G * Hk);
        const double dmin = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
        if (dmin < 1e-14 * std::max(1.0, (I + G * Hk).cwiseAbs().maxCoeff()))
            throw numerical_error("dare_solve: doubling iteration broke down; "
                                  "no stabilizing solution found");
        const Matrix W = lu.solve(E);   // (I + G H)^{-1} E
        const Matrix GH = lu.solve(G);  // (I + G H)^{-1} G  ==  G (I + H G)^{-1}
        const Matrix Enext = E * W;
        const Matrix Gnext = G + E * GH * E.transpose();
        const Matrix Hnext = Hk + W.transpose() * Hk * E;
        const double step = (Hnext - Hk).norm();
        E = Enext;
        G = 0.5 * (Gnext + Gnext.transpose()).eval();
        Hk = 0.5 * (Hnext + Hnext.transpose()).eval();
        if (step <= 1e-14 * std::max(1.0, Hk.norm())) converged = true;
    }
    if (!converged)
        throw numerical_error("dare_solve: doubling iteration did not converge; "
                              "no stabilizing solution found");
    const Matrix X = Hk;

    const Matrix RB = R + B.transpose() * X * B;
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (RB + RB.transpose()));
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw numerical_error("dare_solve: R + B'XB is not positive definite");
    const Matrix gain = RB.ldlt().solve(B.transpose() * X * A + S.transpose());
    const Matrix res =
        A.transpose() * X * A - X - (A.transpose() * X * B + S) * gain + Q;
    if (res.norm() > residual_tol * (1.0 + X.norm()))
        throw numerical_error("dare_solve: residual " + std::to_string(res.norm()) +
                              " exceeds tolerance");
    if (n > 0 && detail::spectral_radius(A - B * gain) >= 1.0)
        throw numerical_error("dare_solve: solution is not stabilizing "
                              "(closed-loop eigenvalue on or outside the unit circle)");
    return X;
}

}  // namespace sdisc
