#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdisc/errors.hpp"

namespace sdisc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

// Linear time-invariant model
//   x' = A x + B u        (continuous)     x[k+1] = A x[k] + B u[k]   (discrete)
//   y  = C x + D u
// `period` is empty for continuous time and holds the sample period otherwise.
struct StateSpaceModel {
    Matrix A, B, C, D;
    std::optional<double> period;

    StateSpaceModel(Matrix A_, Matrix B_, Matrix C_, Matrix D_,
                    std::optional<double> period_ = std::nullopt)
        : A(std::move(A_)), B(std::move(B_)), C(std::move(C_)), D(std::move(D_)),
          period(period_) {
        if (A.rows() != A.cols())
            throw validation_error("StateSpaceModel: A must be square, got " +
                                   std::to_string(A.rows()) + "x" + std::to_string(A.cols()));
        if (D.rows() < 1 || D.cols() < 1)
            throw validation_error("StateSpaceModel: D must have at least one row and column");
        if (B.rows() != A.rows() || B.cols() != D.cols())
            throw validation_error("StateSpaceModel: B must be " + std::to_string(A.rows()) +
                                   "x" + std::to_string(D.cols()) + ", got " +
                                   std::to_string(B.rows()) + "x" + std::to_string(B.cols()));
        if (C.rows() != D.rows() || C.cols() != A.rows())
            throw validation_error("StateSpaceModel: C must be " + std::to_string(D.rows()) +
                                   "x" + std::to_string(A.rows()) + ", got " +
                                   std::to_string(C.rows()) + "x" + std::to_string(C.cols()));
        if (!A.allFinite() || !B.allFinite() || !C.allFinite() || !D.allFinite())
            throw validation_error("StateSpaceModel: matrices must be finite");
        if (period && !(*period > 0.0))
            throw validation_error("StateSpaceModel: period must be positive, got " +
                                   std::to_string(*period));
    }

    static StateSpaceModel static_gain(Matrix D,
                                       std::optional<double> period = std::nullopt) {
        const Eigen::Index p = D.rows(), m = D.cols();
        return StateSpaceModel(Matrix(0, 0), Matrix(0, m), Matrix(p, 0), std::move(D), period);
    }

    Eigen::Index states() const { return A.rows(); }
    Eigen::Index inputs() const { return B.cols(); }
    Eigen::Index outputs() const { return C.rows(); }
    bool is_discrete() const { return period.has_value(); }

    double sample_period() const {
        if (!period) throw validation_error("sample_period: model is continuous-time");
        return *period;
    }
};

namespace detail {

inline void require_same_domain(const StateSpaceModel& a, const StateSpaceModel& b,
                                const std::string& op) {
    if (a.is_discrete() != b.is_discrete())
        throw validation_error(op + ": cannot mix continuous and discrete models");
    if (a.is_discrete()) {
        const double ha = *a.period, hb = *b.period;
        if (std::abs(ha - hb) > 1e-9 * std::max(ha, hb))
            throw validation_error(op + ": sample periods differ (" + std::to_string(ha) +
                                   " vs " + std::to_string(hb) + ")");
    }
}

}  // namespace detail

enum class Stability { stable, marginal, unstable };

// Three-way verdict with a +-band around the stability boundary so that
// near-boundary eigenvalues are reported as marginal instead of being forced
// to either side by rounding.
inline Stability stability_of(const StateSpaceModel& sys, double band = 1e-9) {
    if (sys.states() == 0) return Stability::stable;
    const Eigen::VectorXcd ev = sys.A.eigenvalues();
    double worst;  // signed distance past the boundary
    if (sys.is_discrete())
        worst = ev.cwiseAbs().maxCoeff() - 1.0;
    else
        worst = ev.real().maxCoeff();
    if (worst < -band) return Stability::stable;
    if (worst > band) return Stability::unstable;
    return Stability::marginal;
}

inline bool is_stable(const StateSpaceModel& sys, double band = 1e-9) {
    return stability_of(sys, band) == Stability::stable;
}

inline const char* to_string(Stability s) {
    switch (s) {
        case Stability::stable: return "stable";
        case Stability::marginal: return "marginal";
        default: return "unstable";
    }
}

// G(jw) for continuous models, G(e^{jwh}) for discrete ones; omega in rad/s.
inline ComplexMatrix frequency_response(const StateSpaceModel& sys, double omega) {
    if (!std::isfinite(omega))
        throw validation_error("frequency_response: omega must be finite");
    const Complex point = sys.is_discrete()
                              ? std::exp(Complex(0.0, omega * *sys.period))
                              : Complex(0.0, omega);
    if (sys.states() == 0) return sys.D.cast<Complex>();

    ComplexMatrix resolvent = -sys.A.cast<Complex>();
    resolvent.diagonal().array() += point;
    Eigen::PartialPivLU<ComplexMatrix> lu(resolvent);
    // Pole detection: |det U| collapses when the evaluation point hits an
    // eigenvalue of A.
    const double diag_min = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    const double scale = std::max(1.0, sys.A.cwiseAbs().maxCoeff() + std::abs(point));
    if (diag_min < 1e-12 * scale)
        throw numerical_error("frequency_response: omega = " + std::to_string(omega) +
                              " coincides with a pole of the model");
    return sys.C.cast<Complex>() * lu.solve(sys.B.cast<Complex>()) + sys.D.cast<Complex>();
}

// second after first:  y = second(first(u)).  States stack as [x_first; x_second]:
//   A = [A1        0 ]     B = [B1   ]
//       [B2 C1     A2]         [B2 D1]
//   C = [D2 C1     C2]     D = D2 D1
inline StateSpaceModel series(const StateSpaceModel& second, const StateSpaceModel& first) {
    detail::require_same_domain(second, first, "series");
    if (second.inputs() != first.outputs())
        throw validation_error("series: second stage expects " + std::to_string(second.inputs()) +
                               " inputs, first stage produces " + std::to_string(first.outputs()));
    const Eigen::Index n1 = first.states(), n2 = second.states();
    Matrix A = Matrix::Zero(n1 + n2, n1 + n2);
    A.topLeftCorner(n1, n1) = first.A;
    A.bottomLeftCorner(n2, n1) = second.B * first.C;
    A.bottomRightCorner(n2, n2) = second.A;
    Matrix B(n1 + n2, first.inputs());
    B.topRows(n1) = first.B;
    B.bottomRows(n2) = second.B * first.D;
    Matrix C(second.outputs(), n1 + n2);
    C.leftCols(n1) = second.D * first.C;
    C.rightCols(n2) = second.C;
    return StateSpaceModel(std::move(A), std::move(B), std::move(C), second.D * first.D,
                           first.period);
}

// y = sys1(u) - sys2(u)
inline StateSpaceModel subtract(const StateSpaceModel& sys1, const StateSpaceModel& sys2) {
    detail::require_same_domain(sys1, sys2, "subtract");
    if (sys1.inputs() != sys2.inputs() || sys1.outputs() != sys2.outputs())
        throw validation_error("subtract: dimension mismatch (" +
                               std::to_string(sys1.outputs()) + "x" + std::to_string(sys1.inputs()) +
                               " vs " + std::to_string(sys2.outputs()) + "x" +
                               std::to_string(sys2.inputs()) + ")");
    const Eigen::Index n1 = sys1.states(), n2 = sys2.states();
    Matrix A = Matrix::Zero(n1 + n2, n1 + n2);
    A.topLeftCorner(n1, n1) = sys1.A;
    A.bottomRightCorner(n2, n2) = sys2.A;
    Matrix B(n1 + n2, sys1.inputs());
    B.topRows(n1) = sys1.B;
    B.bottomRows(n2) = sys2.B;
    Matrix C(sys1.outputs(), n1 + n2);
    C.leftCols(n1) = sys1.C;
    C.rightCols(n2) = -sys2.C;
    return StateSpaceModel(std::move(A), std::move(B), std::move(C), sys1.D - sys2.D,
                           sys1.period);
}

// Pure delay of `steps` samples on a `width`-channel discrete signal,
// y[k] = u[k - steps].  steps = 0 degenerates to a static identity.
inline StateSpaceModel delay_chain(int steps, int width, double period) {
    if (steps < 0) throw validation_error("delay_chain: steps must be >= 0");
    if (width < 1) throw validation_error("delay_chain: width must be >= 1");
    if (!(period > 0.0)) throw validation_error("delay_chain: period must be positive");
    if (steps == 0)
        return StateSpaceModel::static_gain(Matrix::Identity(width, width), period);
    const Eigen::Index n = static_cast<Eigen::Index>(steps) * width;
    // Shift register of `steps` blocks; newest sample enters block 0.
    Matrix A = Matrix::Zero(n, n);
    for (int j = 0; j + 1 < steps; ++j)
        A.block((j + 1) * width, j * width, width, width).setIdentity();
    Matrix B = Matrix::Zero(n, width);
    B.topRows(width).setIdentity();
    Matrix C = Matrix::Zero(width, n);
    C.rightCols(width).setIdentity();
    return StateSpaceModel(std::move(A), std::move(B), std::move(C),
                           Matrix::Zero(width, width), period);
}

// SISO transfer function -> controllable canonical state space.  Coefficients
// are highest degree first; continuous-time unless a period is given.
inline StateSpaceModel from_transfer_function(const std::vector<double>& num,
                                              const std::vector<double>& den,
                                              std::optional<double> period = std::nullopt) {
    if (den.empty() || den.front() == 0.0)
        throw validation_error("from_transfer_function: denominator leading coefficient must be nonzero");
    if (num.empty())
        throw validation_error("from_transfer_function: numerator is empty");
    if (num.size() > den.size())
        throw validation_error("from_transfer_function: numerator degree exceeds denominator degree");
    const int n = static_cast<int>(den.size()) - 1;
    // Normalize monic, pad numerator to full length: b[0] s^n + ... + b[n].
    std::vector<double> a(n + 1), b(n + 1, 0.0);
    for (int i = 0; i <= n; ++i) a[i] = den[i] / den[0];
    const int pad = n + 1 - static_cast<int>(num.size());
    for (size_t i = 0; i < num.size(); ++i) b[pad + i] = num[i] / den[0];
    const double d = b[0];
    if (n == 0) return StateSpaceModel::static_gain(Matrix::Constant(1, 1, d), period);

    Matrix A = Matrix::Zero(n, n);
    A.topRightCorner(n - 1, n - 1).setIdentity();
    Matrix C(1, n);
    for (int i = 0; i < n; ++i) {
        A(n - 1, i) = -a[n - i];          // ascending powers along the bottom row
        C(0, i) = b[n - i] - d * a[n - i];
    }
    Matrix B = Matrix::Zero(n, 1);
    B(n - 1, 0) = 1.0;
    return StateSpaceModel(std::move(A), std::move(B), std::move(C),
                           Matrix::Constant(1, 1, d), period);
}

// Uniformly sampled vector-valued signal; values[k] is the sample at
// (start_index + k) * period.
struct SampledSignal {
    std::vector<Vector> values;
    double period = 1.0;
    long start_index = 0;

    Eigen::Index channels() const { return values.empty() ? 0 : values.front().size(); }
    Eigen::Index length() const { return static_cast<Eigen::Index>(values.size()); }
};

// Forward simulation of a discrete model from initial state x0 (zero if omitted).
inline SampledSignal simulate(const StateSpaceModel& sys, const SampledSignal& input,
                              std::optional<Vector> x0 = std::nullopt) {
    if (!sys.is_discrete()) throw validation_error("simulate: model must be discrete-time");
    if (!input.values.empty() && input.channels() != sys.inputs())
        throw validation_error("simulate: input has " + std::to_string(input.channels()) +
                               " channels, model expects " + std::to_string(sys.inputs()));
    if (std::abs(input.period - *sys.period) > 1e-9 * *sys.period)
        throw validation_error("simulate: input period does not match model period");
    Vector x = x0 ? *x0 : Vector::Zero(sys.states());
    if (x.size() != sys.states())
        throw validation_error("simulate: x0 has wrong dimension");
    SampledSignal out;
    out.period = input.period;
    out.start_index = input.start_index;
    out.values.reserve(input.values.size());
    for (const Vector& u : input.values) {
        out.values.push_back(sys.C * x + sys.D * u);
        x = sys.A * x + sys.B * u;
    }
    return out;
}

inline SampledSignal fast_simulate(const StateSpaceModel& sys, const SampledSignal& input,
                                   std::optional<Vector> x0 = std::nullopt) {
    return simulate(sys, input, std::move(x0));
}

}  // namespace sdisc
