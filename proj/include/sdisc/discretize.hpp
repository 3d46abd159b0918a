#pragma once

#include <cmath>

#include "sdisc/matrix_exponential.hpp"
#include "sdisc/state_space.hpp"

namespace sdisc {

// Zero-order-hold discretization via the augmented exponential
//   exp([A B; 0 0] h) = [Ad Bd; 0 I],
// which yields Bd = integral of e^{At} B without inverting A.
inline StateSpaceModel c2d_zoh(const StateSpaceModel& sys, double h) {
    if (sys.is_discrete()) throw validation_error("c2d_zoh: model is already discrete-time");
    if (!(h > 0.0)) throw validation_error("c2d_zoh: period must be positive, got " + std::to_string(h));
    const Eigen::Index n = sys.states(), m = sys.inputs();
    if (n == 0) return StateSpaceModel::static_gain(sys.D, h);
    Matrix aug = Matrix::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = sys.A;
    aug.topRightCorner(n, m) = sys.B;
    const Matrix E = matrix_exponential(aug * h);
    return StateSpaceModel(E.topLeftCorner(n, n), E.topRightCorner(n, m), sys.C, sys.D, h);
}

// Step-invariant filter discretization: the held output of the discrete
// filter reproduces the continuous filter exactly for staircase inputs.
// Identical to ZOH discretization (C and D carry over unchanged).
inline StateSpaceModel step_invariant(const StateSpaceModel& sys, double h) {
    return c2d_zoh(sys, h);
}

namespace detail {

// Shared bilinear core with half-step parameter mu (h/2 for the plain
// transform, 1/c(omega0) when prewarped):
//   Ad = (I - mu A)^{-1} (I + mu A)
//   Bd = mu (I - mu A)^{-1} B
//   Cd = C (I + Ad)
//   Dd = D + C Bd
inline StateSpaceModel bilinear_core(const StateSpaceModel& sys, double mu, double h) {
    const Eigen::Index n = sys.states();
    if (n == 0) return StateSpaceModel::static_gain(sys.D, h);
    const Matrix M = Matrix::Identity(n, n) - mu * sys.A;
    Eigen::PartialPivLU<Matrix> lu(M);
    const double diag_min = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (diag_min < 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff()))
        throw numerical_error("bilinear: 1/mu = " + std::to_string(1.0 / mu) +
                              " is an eigenvalue of A; transform is singular");
    Matrix Ad = lu.solve(Matrix::Identity(n, n) + mu * sys.A);
    Matrix Bd = mu * lu.solve(sys.B);
    Matrix Cd = sys.C * (Matrix::Identity(n, n) + Ad);
    Matrix Dd = sys.D + sys.C * Bd;
    return StateSpaceModel(std::move(Ad), std::move(Bd), std::move(Cd), std::move(Dd), h);
}

}  // namespace detail

// Bilinear (trapezoidal) transform; maps the open left half plane onto the
// open unit disk, so stability is preserved exactly.
inline StateSpaceModel bilinear(const StateSpaceModel& sys, double h) {
    if (sys.is_discrete()) throw validation_error("bilinear: model is already discrete-time");
    if (!(h > 0.0)) throw validation_error("bilinear: period must be positive, got " + std::to_string(h));
    return detail::bilinear_core(sys, h / 2.0, h);
}

// Bilinear transform with the frequency axis warped so the response at
// omega0 is matched exactly: mu = 1/c with c = omega0 / tan(omega0 h / 2).
inline StateSpaceModel bilinear_prewarp(const StateSpaceModel& sys, double h, double omega0) {
    if (sys.is_discrete())
        throw validation_error("bilinear_prewarp: model is already discrete-time");
    if (!(h > 0.0))
        throw validation_error("bilinear_prewarp: period must be positive, got " + std::to_string(h));
    if (omega0 == 0.0)
        throw validation_error("bilinear_prewarp: omega0 = 0 has no warp; use bilinear()");
    if (!(omega0 > 0.0) || !(omega0 * h < M_PI))
        throw validation_error("bilinear_prewarp: omega0 must lie in (0, pi/h), got " +
                               std::to_string(omega0));
    const double c = omega0 / std::tan(omega0 * h / 2.0);
    return detail::bilinear_core(sys, 1.0 / c, h);
}

}  // namespace sdisc
