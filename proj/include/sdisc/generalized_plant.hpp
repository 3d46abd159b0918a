#pragma once

#include <string>
#include <utility>

#include "sdisc/discretize.hpp"
#include "sdisc/lifting.hpp"
#include "sdisc/state_space.hpp"

namespace sdisc {

// Parameters of one sampled-data design.
//   h        slow sample period of the digital filter
//   m        reconstruction delay granted to the filter, in slow steps
//   N        fast-discretization factor (fast period h/N)
//   L        hold-rate factor: filter updates its held output L times per
//            slow step (L = 1 is the single-rate design); L must divide N
//   eps_reg  fictitious measurement-noise weight that keeps the measurement
//            channel full rank (the characteristic filter is strictly proper)
struct DesignSpec {
    double h = 1.0;
    int m = 4;
    int N = 12;
    int L = 1;
    double eps_reg = 1e-4;
    double gamma_rel_tol = 1e-3;
    double riccati_residual_tol = 1e-8;
    double unit_circle_tol = 1e-7;

    double fast_period() const { return h / N; }

    void validate() const {
        if (!(h > 0.0)) throw validation_error("DesignSpec: h must be positive, got " + std::to_string(h));
        if (m < 0) throw validation_error("DesignSpec: m must be >= 0, got " + std::to_string(m));
        if (N < 1) throw validation_error("DesignSpec: N must be >= 1, got " + std::to_string(N));
        if (L < 1) throw validation_error("DesignSpec: L must be >= 1, got " + std::to_string(L));
        if (N % L != 0)
            throw validation_error("DesignSpec: L = " + std::to_string(L) +
                                   " must divide N = " + std::to_string(N));
        if (!(eps_reg > 0.0))
            throw validation_error("DesignSpec: eps_reg must be positive, got " + std::to_string(eps_reg));
        if (!(gamma_rel_tol > 0.0))
            throw validation_error("DesignSpec: gamma_rel_tol must be positive");
    }
};

// Discrete-time synthesis plant
//   x+ = A x  + B1 w  + B2 u
//   e  = C1 x + D11 w + D12 u
//   y  = C2 x + D21 w + D22 u
// The trailing `noise_inputs` columns of the disturbance channel are the
// regularization inputs added during construction; strip them with
// without_noise() before evaluating the true error norm.
struct GeneralizedPlant {
    Matrix A, B1, B2, C1, C2, D11, D12, D21, D22;
    double period = 1.0;
    int noise_inputs = 0;

    GeneralizedPlant(Matrix A_, Matrix B1_, Matrix B2_, Matrix C1_, Matrix C2_, Matrix D11_,
                     Matrix D12_, Matrix D21_, Matrix D22_, double period_, int noise_inputs_ = 0)
        : A(std::move(A_)), B1(std::move(B1_)), B2(std::move(B2_)), C1(std::move(C1_)),
          C2(std::move(C2_)), D11(std::move(D11_)), D12(std::move(D12_)), D21(std::move(D21_)),
          D22(std::move(D22_)), period(period_), noise_inputs(noise_inputs_) {
        const Eigen::Index n = A.rows();
        if (A.rows() != A.cols()) throw validation_error("GeneralizedPlant: A must be square");
        if (B1.rows() != n || B2.rows() != n)
            throw validation_error("GeneralizedPlant: B1/B2 row count must match A");
        if (C1.cols() != n || C2.cols() != n)
            throw validation_error("GeneralizedPlant: C1/C2 column count must match A");
        if (D11.rows() != C1.rows() || D11.cols() != B1.cols())
            throw validation_error("GeneralizedPlant: D11 must be e-by-w");
        if (D12.rows() != C1.rows() || D12.cols() != B2.cols())
            throw validation_error("GeneralizedPlant: D12 must be e-by-u");
        if (D21.rows() != C2.rows() || D21.cols() != B1.cols())
            throw validation_error("GeneralizedPlant: D21 must be y-by-w");
        if (D22.rows() != C2.rows() || D22.cols() != B2.cols())
            throw validation_error("GeneralizedPlant: D22 must be y-by-u");
        if (noise_inputs < 0 || noise_inputs > D11.cols())
            throw validation_error("GeneralizedPlant: noise_inputs out of range");
        if (!(period > 0.0)) throw validation_error("GeneralizedPlant: period must be positive");
    }

    Eigen::Index states() const { return A.rows(); }
    Eigen::Index dist_inputs() const { return B1.cols(); }
    Eigen::Index ctrl_inputs() const { return B2.cols(); }
    Eigen::Index error_outputs() const { return C1.rows(); }
    Eigen::Index meas_outputs() const { return C2.rows(); }

    // w -> e with the control input held at zero.
    StateSpaceModel open_loop() const { return StateSpaceModel(A, B1, C1, D11, period); }

    // w -> y path seen by the filter.
    StateSpaceModel measurement_path() const { return StateSpaceModel(A, B1, C2, D21, period); }

    // Copy with the regularization inputs removed.
    GeneralizedPlant without_noise() const {
        const Eigen::Index mw = dist_inputs() - noise_inputs;
        return GeneralizedPlant(A, B1.leftCols(mw), B2, C1, C2, D11.leftCols(mw), D12,
                                D21.leftCols(mw), D22, period, 0);
    }

    // Close the loop u = K y (lower linear fractional transformation).
    // Requires D22 = 0, which holds for every plant built here.
    StateSpaceModel close(const StateSpaceModel& K) const {
        if (D22.cwiseAbs().maxCoeff() != 0.0)
            throw validation_error("GeneralizedPlant::close: D22 must be zero");
        if (!K.is_discrete() || std::abs(*K.period - period) > 1e-9 * period)
            throw validation_error("GeneralizedPlant::close: filter period must match plant period");
        if (K.inputs() != meas_outputs() || K.outputs() != ctrl_inputs())
            throw validation_error("GeneralizedPlant::close: filter must be " +
                                   std::to_string(ctrl_inputs()) + "x" +
                                   std::to_string(meas_outputs()) + ", got " +
                                   std::to_string(K.outputs()) + "x" + std::to_string(K.inputs()));
        const Eigen::Index n = states(), nk = K.states();
        Matrix Acl = Matrix::Zero(n + nk, n + nk);
        Acl.topLeftCorner(n, n) = A + B2 * K.D * C2;
        Acl.topRightCorner(n, nk) = B2 * K.C;
        Acl.bottomLeftCorner(nk, n) = K.B * C2;
        Acl.bottomRightCorner(nk, nk) = K.A;
        Matrix Bcl(n + nk, dist_inputs());
        Bcl.topRows(n) = B1 + B2 * K.D * D21;
        Bcl.bottomRows(nk) = K.B * D21;
        Matrix Ccl(error_outputs(), n + nk);
        Ccl.leftCols(n) = C1 + D12 * K.D * C2;
        Ccl.rightCols(nk) = D12 * K.C;
        Matrix Dcl = D11 + D12 * K.D * D21;
        return StateSpaceModel(std::move(Acl), std::move(Bcl), std::move(Ccl), std::move(Dcl),
                               period);
    }
};

namespace detail {

inline void require_design_models(const StateSpaceModel& G, const StateSpaceModel& F) {
    if (G.is_discrete()) throw validation_error("build_error_plant: G must be continuous-time");
    if (F.is_discrete()) throw validation_error("build_error_plant: F must be continuous-time");
    if (G.inputs() != F.outputs())
        throw validation_error("build_error_plant: G inputs must match F outputs");
    if (F.inputs() != 1 || F.outputs() != 1 || G.inputs() != 1 || G.outputs() != 1)
        throw validation_error("build_error_plant: G and F must be single-input single-output");
    if (F.D.cwiseAbs().maxCoeff() != 0.0)
        throw validation_error("build_error_plant: F must be strictly proper (D_F = 0)");
    const Stability sg = stability_of(G);
    if (sg != Stability::stable)
        throw validation_error(std::string("build_error_plant: G must be stable, got ") +
                               to_string(sg));
    const Stability sf = stability_of(F);
    if (sf != Stability::stable)
        throw validation_error(std::string("build_error_plant: F must be stable, got ") +
                               to_string(sf));
}

}  // namespace detail

// Sampled-data error system on the lifted slow clock:
//   e = [z^{-m} G_N - H K(z) S] F_N w  -  fictitious noise keeps y full rank.
// Branches share the state of F_N, so the plant is assembled around the
// composed target path T1 = delay * G_N * F_N with states [x_F; x_G; x_delay]:
//   e  = T1 w - H u,    y = S F_N w + eps_reg * n,    u = K y.
// The filter enters only through the static hold H, hence B2 = 0 and the
// plant is open-loop stable whenever G and F are.
inline GeneralizedPlant build_error_plant(const StateSpaceModel& G, const StateSpaceModel& F,
                                          const DesignSpec& spec) {
    spec.validate();
    detail::require_design_models(G, F);

    const int N = spec.N;
    const double fast = spec.fast_period();
    const LiftedSystem GN = lift(c2d_zoh(G, fast), N);
    const LiftedSystem FN = lift(c2d_zoh(F, fast), N);
    const StateSpaceModel GNs = GN.slow_system();
    const StateSpaceModel FNs = FN.slow_system();
    const StateSpaceModel delay = delay_chain(spec.m, N, spec.h);

    // series() stacks states [inner; outer], giving [x_F; x_G; x_delay].
    const StateSpaceModel T1 = series(delay, series(GNs, FNs));
    const Eigen::Index nF = FNs.states(), n = T1.states();

    const Matrix H = multirate_hold_matrix(N, spec.L);
    const Matrix S = sample_matrix(N);

    // One extra disturbance column per measurement carries the noise.
    Matrix B1 = Matrix::Zero(n, N + 1);
    B1.leftCols(N) = T1.B;
    Matrix D11 = Matrix::Zero(N, N + 1);
    D11.leftCols(N) = T1.D;
    Matrix C2 = Matrix::Zero(1, n);
    C2.leftCols(nF) = S * FNs.C;
    Matrix D21 = Matrix::Zero(1, N + 1);
    D21.leftCols(N) = S * FNs.D;  // zero row: F is strictly proper
    D21(0, N) = spec.eps_reg;

    return GeneralizedPlant(T1.A, std::move(B1), Matrix::Zero(n, spec.L), T1.C, std::move(C2),
                            std::move(D11), -H, std::move(D21), Matrix::Zero(1, spec.L), spec.h,
                            /*noise_inputs=*/1);
}

inline GeneralizedPlant build_error_system_singlerate(const StateSpaceModel& G,
                                                      const StateSpaceModel& F,
                                                      const DesignSpec& spec) {
    if (spec.L != 1)
        throw validation_error("build_error_system_singlerate: spec.L must be 1, got " +
                               std::to_string(spec.L) + " (use build_error_system_multirate)");
    return build_error_plant(G, F, spec);
}

// L = 1 degenerates to the single-rate construction (one hold block of N ones).
inline GeneralizedPlant build_error_system_multirate(const StateSpaceModel& G,
                                                     const StateSpaceModel& F,
                                                     const DesignSpec& spec) {
    return build_error_plant(G, F, spec);
}

}  // namespace sdisc
