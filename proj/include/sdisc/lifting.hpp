#pragma once

#include <vector>

#include "sdisc/state_space.hpp"

namespace sdisc {

// Discrete-time lifting: N consecutive fast samples are stacked into one
// block signal on a clock N times slower.  The block matrices keep the
// original state dimension and the map is norm-preserving.
struct LiftedSystem {
    StateSpaceModel block;   // block system; period tag stays at the fast rate
    int blocking;            // N, samples per block
    double slow_period;      // blocking * fast period

    LiftedSystem(StateSpaceModel block_, int blocking_)
        : block(std::move(block_)), blocking(blocking_),
          slow_period(blocking_ * block.sample_period()) {
        if (blocking < 1) throw validation_error("LiftedSystem: blocking must be >= 1");
    }

    // Same matrices advanced on the slow clock; use for frequency responses
    // and norms of the block system.
    StateSpaceModel slow_system() const {
        return StateSpaceModel(block.A, block.B, block.C, block.D, slow_period);
    }
};

//   A_N = A^N
//   B_N = [A^{N-1}B  ...  AB  B]
//   C_N = [C; CA; ...; CA^{N-1}]
///   D_N = block lower triangular Toeplitz: D on the diagonal, CA^{i-j-1}B below.
inline LiftedSystem lift_system(const StateSpaceModel& sys, int N);

inline LiftedSystem lift(const StateSpaceModel& sys, int N) {
    if (!sys.is_discrete()) throw validation_error("lift: model must be discrete-time");
    if (N < 1) throw validation_error("lift: blocking factor must be >= 1, got " + std::to_string(N));
    const Eigen::Index n = sys.states(), m = sys.inputs(), p = sys.outputs();

    std::vector<Matrix> Apow(N + 1);  // A^0 .. A^N
    Apow[0] = Matrix::Identity(n, n);
    for (int k = 1; k <= N; ++k) Apow[k] = Apow[k - 1] * sys.A;

    Matrix BN(n, N * m);
    for (int j = 0; j < N; ++j) BN.middleCols(j * m, m) = Apow[N - 1 - j] * sys.B;
    Matrix CN(N * p, n);
    for (int i = 0; i < N; ++i) CN.middleRows(i * p, p) = sys.C * Apow[i];
    Matrix DN = Matrix::Zero(N * p, N * m);
    for (int i = 0; i < N; ++i) {
        DN.block(i * p, i * m, p, m) = sys.D;
        for (int j = 0; j < i; ++j)
            DN.block(i * p, j * m, p, m) = sys.C * Apow[i - j - 1] * sys.B;
    }
    return LiftedSystem(StateSpaceModel(Apow[N], std::move(BN), std::move(CN), std::move(DN),
                                        sys.period),
                        N);
}

inline LiftedSystem lift_system(const StateSpaceModel& sys, int N) { return lift(sys, N); }

// Hold pattern for one slow step: the scalar filter output is repeated over
// all N fast samples.
inline Matrix hold_matrix(int N) {
    if (N < 1) throw validation_error("hold_matrix: N must be >= 1");
    return Matrix::Ones(N, 1);
}

// Multirate hold: L filter outputs per slow step, each held over p = N/L
// fast samples -> block-diagonal of ones columns.
inline Matrix multirate_hold_matrix(int N, int L) {
    if (N < 1 || L < 1) throw validation_error("multirate_hold_matrix: N and L must be >= 1");
    if (N % L != 0)
        throw validation_error("multirate_hold_matrix: L = " + std::to_string(L) +
                               " must divide N = " + std::to_string(N));
    const int p = N / L;
    Matrix H = Matrix::Zero(N, L);
    for (int j = 0; j < L; ++j) H.block(j * p, j, p, 1).setOnes();
    return H;
}

// Ideal sampler at the slow rate: picks the first fast sample of each block.
inline Matrix sample_matrix(int N) {
    if (N < 1) throw validation_error("sample_matrix: N must be >= 1");
    Matrix S = Matrix::Zero(1, N);
    S(0, 0) = 1.0;
    return S;
}

// Turn a synthesized multirate filter (slow clock, 1 input, L outputs) into
// the equivalent single-input single-output filter on the L-times-faster
// clock: K(z) = [1, z^{-1}, ..., z^{-L+1}] Ktilde(z^L).  Output r of Ktilde
// becomes the fast samples at offset r within each slow step.
inline StateSpaceModel recover_multirate_filter(const StateSpaceModel& Ktilde, int L) {
    if (!Ktilde.is_discrete())
        throw validation_error("recover_multirate_filter: filter must be discrete-time");
    if (L < 1) throw validation_error("recover_multirate_filter: L must be >= 1");
    if (Ktilde.inputs() != 1)
        throw validation_error("recover_multirate_filter: filter must have one input, got " +
                               std::to_string(Ktilde.inputs()));
    if (Ktilde.outputs() != L)
        throw validation_error("recover_multirate_filter: filter has " +
                               std::to_string(Ktilde.outputs()) + " outputs, expected L = " +
                               std::to_string(L));
    if (L == 1) return Ktilde;
    const double fast_period = Ktilde.sample_period() / L;
    const Eigen::Index nk = Ktilde.states();

    // Ktilde(z^L): a ring of L state blocks advances one slot per fast step,
    // so block 0 sees the Ktilde update exactly every L steps.
    const Eigen::Index n_exp = nk * L;
    Matrix Ae = Matrix::Zero(n_exp, n_exp);
    for (int k = 0; k + 1 < L; ++k)
        Ae.block(k * nk, (k + 1) * nk, nk, nk).setIdentity();
    Ae.block((L - 1) * nk, 0, nk, nk) = Ktilde.A;
    Matrix Be = Matrix::Zero(n_exp, 1);
    Be.bottomRows(nk) = Ktilde.B;
    Matrix Ce = Matrix::Zero(L, n_exp);
    Ce.leftCols(nk) = Ktilde.C;
    const StateSpaceModel expanded(std::move(Ae), std::move(Be), std::move(Ce), Ktilde.D,
                                   fast_period);

    // [1, z^{-1}, ..., z^{-L+1}]: channel r delayed by r fast steps, summed.
    // sigma_j[t+1] = sigma_{j+1}[t] + u_j[t]  collects the staggered tails.
    Matrix Ar = Matrix::Zero(L - 1, L - 1);
    Ar.topRightCorner(L - 2, L - 2).setIdentity();
    Matrix Br = Matrix::Zero(L - 1, L);
    for (int j = 1; j < L; ++j) Br(j - 1, j) = 1.0;
    Matrix Cr = Matrix::Zero(1, L - 1);
    Cr(0, 0) = 1.0;
    Matrix Dr = Matrix::Zero(1, L);
    Dr(0, 0) = 1.0;
    const StateSpaceModel interleave(std::move(Ar), std::move(Br), std::move(Cr), std::move(Dr),
                                     fast_period);

    return series(interleave, expanded);
}

}  // namespace sdisc
