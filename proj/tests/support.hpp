#pragma once

#include <limits>
#include <numbers>
#include <random>

#include "sdisc/sdisc.hpp"

namespace support {

using sdisc::Matrix;
using sdisc::StateSpaceModel;
using sdisc::Vector;

// Sixth-order elliptic low-pass target, coefficients highest degree first.
inline StateSpaceModel elliptic_target() {
    return sdisc::from_transfer_function(
        {0.0031623, 0.0, 0.0428143797, 0.0, 0.113263023918, 0.0, 0.08234520954471},
        {1.0, 0.56567, 1.932787457, 0.841441079126, 1.0442031862402, 0.2870731743954,
         0.11639733171});
}

// Third-order Butterworth-style anti-aliasing weight 1/(s+1)^3.
inline StateSpaceModel cubic_lowpass() {
    return sdisc::from_transfer_function({1.0}, {1.0, 3.0, 3.0, 1.0});
}

inline Matrix random_matrix(std::mt19937& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = dist(rng);
    return M;
}

// Random discrete model with spectral radius drawn from (0.2, rho_cap).
inline StateSpaceModel random_stable_discrete(std::mt19937& rng, int n, int m, int p,
                                              double rho_cap = 0.9, double period = 1.0) {
    std::uniform_real_distribution<double> rho_dist(0.2, rho_cap);
    Matrix A = random_matrix(rng, n, n);
    const double rho = A.eigenvalues().cwiseAbs().maxCoeff();
    if (rho > 0.0) A *= rho_dist(rng) / rho;
    return StateSpaceModel(std::move(A), random_matrix(rng, n, m), random_matrix(rng, p, n),
                           random_matrix(rng, p, m), period);
}

// Random continuous model with spectral abscissa shifted into (-inf, -margin).
inline StateSpaceModel random_stable_continuous(std::mt19937& rng, int n, int m, int p) {
    std::uniform_real_distribution<double> margin_dist(0.3, 1.0);
    Matrix A = random_matrix(rng, n, n);
    const double alpha = A.eigenvalues().real().maxCoeff();
    A.diagonal().array() -= alpha + margin_dist(rng);
    return StateSpaceModel(std::move(A), random_matrix(rng, n, m), random_matrix(rng, p, n),
                           random_matrix(rng, p, m));
}

inline double max_abs_diff(const Matrix& A, const Matrix& B) {
    return (A - B).cwiseAbs().maxCoeff();
}

inline bool same_matrices(const StateSpaceModel& a, const StateSpaceModel& b) {
    return a.A == b.A && a.B == b.B && a.C == b.C && a.D == b.D;
}

// Largest response gain over a uniform grid of unit-circle angles (discrete)
// or the given frequencies (continuous).
inline double grid_max_gain_discrete(const StateSpaceModel& sys, int points) {
    const sdisc::FrequencyEvaluator eval(sys);
    const double h = sys.sample_period();
    double best = 0.0;
    for (int k = 0; k < points; ++k) {
        const double theta = std::numbers::pi * k / (points - 1);
        best = std::max(best, eval.peak_gain(theta / h));
    }
    return best;
}

inline sdisc::SampledSignal random_signal(std::mt19937& rng, long length, Eigen::Index channels,
                                          double period) {
    std::normal_distribution<double> dist(0.0, 1.0);
    sdisc::SampledSignal sig;
    sig.period = period;
    sig.values.reserve(static_cast<std::size_t>(length));
    for (long k = 0; k < length; ++k) {
        Vector v(channels);
        for (Eigen::Index i = 0; i < channels; ++i) v(i) = dist(rng);
        sig.values.push_back(std::move(v));
    }
    return sig;
}

}  // namespace support
