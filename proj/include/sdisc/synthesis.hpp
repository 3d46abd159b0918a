#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "sdisc/errors.hpp"
#include "sdisc/generalized_plant.hpp"
#include "sdisc/hinf_norm.hpp"
#include "sdisc/lifting.hpp"
#include "sdisc/riccati.hpp"
#include "sdisc/state_space.hpp"

namespace sdisc {

// Cayley (bilinear) domain maps z = (1+s)/(1-s).  They carry the open unit
// disc onto the open left half-plane and the unit circle onto the imaginary
// axis, preserve H-infinity norms, and commute with feedback interconnection,
// so a controller synthesized on the continuous image solves the discrete
// problem after mapping back.
inline StateSpaceModel continuous_equivalent(const StateSpaceModel& sys) {
    if (!sys.is_discrete())
        throw validation_error("continuous_equivalent: system must be discrete-time");
    const Eigen::Index n = sys.states();
    const Matrix I = Matrix::Identity(n, n);
    const Matrix ApI = sys.A + I;
    Eigen::PartialPivLU<Matrix> lu(ApI);
    if (n > 0) {
        const double dmin = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
        if (dmin < 1e-13 * std::max(1.0, ApI.cwiseAbs().maxCoeff()))
            throw numerical_error("continuous_equivalent: A has an eigenvalue at -1; "
                                  "the map z = (1+s)/(1-s) is undefined there");
    }
    const double s2 = std::numbers::sqrt2;
    const Matrix CAinv = ApI.transpose().partialPivLu().solve(sys.C.transpose()).transpose();
    return StateSpaceModel(lu.solve(sys.A - I), s2 * lu.solve(sys.B), s2 * CAinv,
                           sys.D - CAinv * sys.B, std::nullopt);
}

inline StateSpaceModel discrete_equivalent(const StateSpaceModel& sys, double period) {
    if (sys.is_discrete())
        throw validation_error("discrete_equivalent: system must be continuous-time");
    const Eigen::Index n = sys.states();
    const Matrix I = Matrix::Identity(n, n);
    const Matrix ImA = I - sys.A;
    Eigen::PartialPivLU<Matrix> lu(ImA);
    if (n > 0) {
        const double dmin = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
        if (dmin < 1e-13 * std::max(1.0, ImA.cwiseAbs().maxCoeff()))
            throw numerical_error("discrete_equivalent: A has an eigenvalue at +1; "
                                  "the map s = (z-1)/(z+1) is undefined there");
    }
    const double s2 = std::numbers::sqrt2;
    const Matrix CAinv = ImA.transpose().partialPivLu().solve(sys.C.transpose()).transpose();
    return StateSpaceModel(lu.solve(I + sys.A), s2 * lu.solve(sys.B), s2 * CAinv,
                           sys.D + CAinv * sys.B, period);
}

namespace detail {

// Remove a plant feedthrough D22 that was set aside during synthesis: if K
// was designed for the loop y' = y - D22 u, the controller for the true loop
// is K (I + D22 K)^{-1} in transfer terms.
inline StateSpaceModel absorb_feedthrough(const StateSpaceModel& K, const Matrix& D22) {
    const Matrix IKD = Matrix::Identity(K.outputs(), K.outputs()) + K.D * D22;
    Eigen::PartialPivLU<Matrix> lu(IKD);
    const double dmin = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (dmin < 1e-13 * std::max(1.0, IKD.cwiseAbs().maxCoeff()))
        throw numerical_error("absorb_feedthrough: algebraic loop I + D_K D22 is singular");
    const Matrix MC = lu.solve(K.C);
    const Matrix MD = lu.solve(K.D);
    return StateSpaceModel(K.A - K.B * D22 * MC, K.B - K.B * D22 * MD, MC, MD, K.period);
}

inline std::optional<Matrix> spd_solve(const Matrix& G, const Matrix& rhs) {
    if (G.rows() == 0) return Matrix::Zero(0, rhs.cols());
    Eigen::LLT<Matrix> llt(G);
    if (llt.info() != Eigen::Success) return std::nullopt;
    return llt.solve(rhs);
}

}  // namespace detail

// Suboptimal output-feedback synthesis for one discrete generalized plant.
// The plant is mapped to continuous time once (Cayley), the error and
// measurement feedthroughs are reduced to [0; I] and [0, I] by orthogonal
// input/output transforms and invertible scalings, and each level gamma is
// then tested with the two-Riccati central-controller formulas for a fully
// general D11.  try_gamma returns the discrete central controller when the
// level is feasible and nothing when it is not (including any numerical
// breakdown, which near the optimum is the expected failure mode).
class SuboptimalSynthesizer {
public:
    explicit SuboptimalSynthesizer(const GeneralizedPlant& plant,
                                   double riccati_residual_tol = 1e-8,
                                   double axis_tol = 1e-9)
        : plant_(plant), residual_tol_(riccati_residual_tol), axis_tol_(axis_tol) {
        if (plant.D22.cwiseAbs().maxCoeff() != 0.0)
            throw validation_error("SuboptimalSynthesizer: plant must have D22 = 0 "
                                   "(absorb the feedthrough first)");
        n_ = plant.states();
        m1_ = plant.dist_inputs();
        m2_ = plant.ctrl_inputs();
        p1_ = plant.error_outputs();
        p2_ = plant.meas_outputs();
        if (p1_ < m2_)
            throw validation_error("SuboptimalSynthesizer: D12 cannot have full column "
                                   "rank (fewer error outputs than control inputs)");
        if (m1_ < p2_)
            throw validation_error("SuboptimalSynthesizer: D21 cannot have full row "
                                   "rank (fewer disturbance inputs than measurements)");

        // One Cayley map of the whole four-block plant.
        Matrix B(n_, m1_ + m2_), C(p1_ + p2_, n_), D(p1_ + p2_, m1_ + m2_);
        B << plant.B1, plant.B2;
        C << plant.C1, plant.C2;
        D << plant.D11, plant.D12, plant.D21, plant.D22;
        const StateSpaceModel cont =
            continuous_equivalent(StateSpaceModel(plant.A, B, C, D, plant.period));
        Matrix B1 = cont.B.leftCols(m1_), B2 = cont.B.rightCols(m2_);
        Matrix C1 = cont.C.topRows(p1_), C2 = cont.C.bottomRows(p2_);
        Matrix D11 = cont.D.topLeftCorner(p1_, m1_);
        const Matrix D12 = cont.D.topRightCorner(p1_, m2_);
        const Matrix D21 = cont.D.bottomLeftCorner(p2_, m1_);
        D22c_ = cont.D.bottomRightCorner(p2_, m2_);

        // Error/control side: rotate e so that D12 becomes [0; I].
        Eigen::JacobiSVD<Matrix> svd12(D12, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const auto& s12 = svd12.singularValues();
        if (m2_ > 0 && (s12.size() < m2_ || s12(m2_ - 1) <= 1e-9 * std::max(1.0, s12(0))))
            throw validation_error("SuboptimalSynthesizer: D12 must have full column rank");
        Matrix Te(p1_, p1_);  // e_norm = Te * e, bottom block aligned with u
        Te.topRows(p1_ - m2_) = svd12.matrixU().rightCols(p1_ - m2_).transpose();
        Te.bottomRows(m2_) = svd12.matrixU().leftCols(m2_).transpose();
        u_backmap_ = svd12.matrixV() * s12.head(m2_).cwiseInverse().asDiagonal();

        // Measurement/disturbance side: rotate w so that D21 becomes [0, I].
        Eigen::JacobiSVD<Matrix> svd21(D21, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const auto& s21 = svd21.singularValues();
        if (p2_ > 0 && (s21.size() < p2_ || s21(p2_ - 1) <= 1e-9 * std::max(1.0, s21(0))))
            throw validation_error("SuboptimalSynthesizer: D21 must have full row rank "
                                   "(is the measurement noise regularization present?)");
        Matrix Tw(m1_, m1_);  // w = Tw * w_norm, last block aligned with y
        Tw.leftCols(m1_ - p2_) = svd21.matrixV().rightCols(m1_ - p2_);
        Tw.rightCols(p2_) = svd21.matrixV().leftCols(p2_);
        y_premap_ = s21.head(p2_).cwiseInverse().asDiagonal() * svd21.matrixU().transpose();

        A_ = cont.A;
        B1_ = B1 * Tw;
        B2_ = B2 * u_backmap_;
        C1_ = Te * C1;
        C2_ = y_premap_ * C2;
        D11_ = Te * D11 * Tw;

        // Static feasibility floor: no controller can push the norm below the
        // largest singular value of the fixed D11 sub-blocks.
        const double f1 = detail::max_singular_value(
            Matrix(D11_.topRows(p1_ - m2_)));
        const double f2 = detail::max_singular_value(
            Matrix(D11_.leftCols(m1_ - p2_)));
        gamma_floor_ = std::max(f1, f2);
    }

    double gamma_floor() const { return gamma_floor_; }

    std::optional<StateSpaceModel> try_gamma(double gamma) const {
        if (!(gamma > gamma_floor_ * (1.0 + 1e-12)) || gamma <= 0.0) return std::nullopt;
        const double g2 = gamma * gamma;

        Matrix Ball(n_, m1_ + m2_), Call(p1_ + p2_, n_);
        Ball << B1_, B2_;
        Call << C1_, C2_;
        Matrix D1e(p1_, m1_ + m2_);  // [D11, D12] with D12 = [0; I]
        D1e.setZero();
        D1e.leftCols(m1_) = D11_;
        D1e.block(p1_ - m2_, m1_, m2_, m2_) = Matrix::Identity(m2_, m2_);
        Matrix Dw1(p1_ + p2_, m1_);  // [D11; D21] with D21 = [0, I]
        Dw1.setZero();
        Dw1.topRows(p1_) = D11_;
        Dw1.block(p1_, m1_ - p2_, p2_, p2_) = Matrix::Identity(p2_, p2_);

        const auto Xsol = detail::game_care(A_, Ball, C1_, D1e, gamma, m1_, axis_tol_);
        if (!Xsol || Xsol->relative_residual > residual_tol_) return std::nullopt;
        const auto Ysol = detail::game_care(A_.transpose(), Call.transpose(),
                                            B1_.transpose(), Dw1.transpose(), gamma, p1_,
                                            axis_tol_);
        if (!Ysol || Ysol->relative_residual > residual_tol_) return std::nullopt;
        const Matrix& X = Xsol->X;
        const Matrix& Y = Ysol->X;
        if (n_ > 0) {
            Eigen::SelfAdjointEigenSolver<Matrix> esx(X), esy(Y);
            const double psd_tol = 1e-8;
            if (esx.eigenvalues().minCoeff() <
                -psd_tol * (1.0 + std::abs(esx.eigenvalues().maxCoeff())))
                return std::nullopt;
            if (esy.eigenvalues().minCoeff() <
                -psd_tol * (1.0 + std::abs(esy.eigenvalues().maxCoeff())))
                return std::nullopt;
            if (detail::spectral_radius(X * Y) >= g2) return std::nullopt;
        }

        // Gain and injection matrices of the game Riccati solutions.
        Matrix R = D1e.transpose() * D1e;
        R.topLeftCorner(m1_, m1_) -= g2 * Matrix::Identity(m1_, m1_);
        Eigen::PartialPivLU<Matrix> Rlu(R);
        if (Rlu.matrixLU().diagonal().cwiseAbs().minCoeff() <
            1e-12 * std::max(1.0, R.cwiseAbs().maxCoeff()))
            return std::nullopt;
        const Matrix F = -Rlu.solve(D1e.transpose() * C1_ + Ball.transpose() * X);

        Matrix Rt = Dw1 * Dw1.transpose();
        Rt.topLeftCorner(p1_, p1_) -= g2 * Matrix::Identity(p1_, p1_);
        Eigen::PartialPivLU<Matrix> Rtlu(Rt.transpose());
        if (Rtlu.matrixLU().diagonal().cwiseAbs().minCoeff() <
            1e-12 * std::max(1.0, Rt.cwiseAbs().maxCoeff()))
            return std::nullopt;
        const Matrix H =
            -(Rtlu.solve((B1_ * Dw1.transpose() + Y * Call.transpose()).transpose()))
                 .transpose();

        const Matrix F1 = F.topRows(m1_), F2 = F.bottomRows(m2_);
        const Matrix F12 = F1.bottomRows(p2_);
        const Matrix H1 = H.leftCols(p1_), H2 = H.rightCols(p2_);
        const Matrix H12 = H1.rightCols(m2_);

        Eigen::PartialPivLU<Matrix> Zlu(Matrix::Identity(n_, n_) - Y * X / g2);
        if (n_ > 0 && Zlu.matrixLU().diagonal().cwiseAbs().minCoeff() <
                          1e-12 * std::max(1.0, 1.0 + (Y * X).cwiseAbs().maxCoeff() / g2))
            return std::nullopt;

        // Static part: general-D11 central formulas on the partition
        //   D11 = [ D1111 D1112 ]   rows: p1-m2 | m2,  cols: m1-p2 | p2.
        //         [ D1121 D1122 ]
        const Matrix D1111 = D11_.topLeftCorner(p1_ - m2_, m1_ - p2_);
        const Matrix D1112 = D11_.topRightCorner(p1_ - m2_, p2_);
        const Matrix D1121 = D11_.bottomLeftCorner(m2_, m1_ - p2_);
        const Matrix D1122 = D11_.bottomRightCorner(m2_, p2_);

        const Matrix G1 = g2 * Matrix::Identity(p1_ - m2_, p1_ - m2_) - D1111 * D1111.transpose();
        const Matrix G2 = g2 * Matrix::Identity(m1_ - p2_, m1_ - p2_) - D1111.transpose() * D1111;
        const auto G1iD1112 = detail::spd_solve(G1, D1112);
        const auto G2iD1121t = detail::spd_solve(G2, D1121.transpose());
        if (!G1iD1112 || !G2iD1121t) return std::nullopt;

        const Matrix Dk11 = -D1121 * D1111.transpose() * (*G1iD1112) - D1122;
        // Feasibility of the static part: both Gram matrices of the
        // controller parametrization must be positive definite.  Only their
        // definiteness matters for the central controller.
        const Matrix M12 = Matrix::Identity(m2_, m2_) - D1121 * (*G2iD1121t);
        const Matrix M21 = Matrix::Identity(p2_, p2_) - D1112.transpose() * (*G1iD1112);
        Eigen::LLT<Matrix> llt12(M12), llt21(M21);
        if (llt12.info() != Eigen::Success || llt21.info() != Eigen::Success)
            return std::nullopt;

        // Ck2 = Dk21 W2 and Bk2 = P1 Dk12 never appear on their own: the
        // dynamic formulas only use Dk21^{-1} Ck2 = W2 and Bk2 Dk12^{-1} = P1.
        const Matrix P1 = Zlu.solve(B2_ + H12);
        const Matrix W2 = -(C2_ + F12);
        const Matrix Bk1 = -Zlu.solve(H2) + P1 * Dk11;
        const Matrix Ck1 = F2 + Dk11 * W2;
        const Matrix Ak = A_ + Ball * F + Bk1 * W2;

        StateSpaceModel K(Ak, Bk1 * y_premap_, u_backmap_ * Ck1,
                          u_backmap_ * Dk11 * y_premap_, std::nullopt);
        try {
            if (D22c_.cwiseAbs().maxCoeff() > 0.0) K = detail::absorb_feedthrough(K, D22c_);
            K = discrete_equivalent(K, plant_.period);
        } catch (const numerical_error&) {
            return std::nullopt;
        }

        // Internal stability of the actual discrete loop.
        const Eigen::Index nk = K.states();
        Matrix Acl(n_ + nk, n_ + nk);
        Acl << plant_.A + plant_.B2 * K.D * plant_.C2, plant_.B2 * K.C, K.B * plant_.C2, K.A;
        if (detail::spectral_radius(Acl) >= 1.0) return std::nullopt;
        return K;
    }

private:
    GeneralizedPlant plant_;
    Matrix A_, B1_, B2_, C1_, C2_, D11_;
    Matrix u_backmap_, y_premap_, D22c_;
    double gamma_floor_ = 0.0;
    double residual_tol_, axis_tol_;
    Eigen::Index n_ = 0, m1_ = 0, m2_ = 0, p1_ = 0, p2_ = 0;
};

inline std::optional<StateSpaceModel> synthesize_suboptimal(const GeneralizedPlant& plant,
                                                            double gamma,
                                                            double riccati_residual_tol = 1e-8) {
    return SuboptimalSynthesizer(plant, riccati_residual_tol).try_gamma(gamma);
}

struct SynthesisResult {
    StateSpaceModel filter;    // designed controller, one output block per slow step
    double gamma_achieved;     // smallest feasible level found by the bisection
    double gamma_certified;    // independently computed closed-loop norm, noise removed
    int bisection_steps;       // number of suboptimal syntheses performed
};

// Bisection on the closed-loop level.  The open loop (K = 0) is admissible
// because the error plant is stable, so twice its norm brackets the optimum
// from above; the static floor from the D11 blocks brackets it from below.
inline SynthesisResult gamma_iterate(const GeneralizedPlant& plant, const DesignSpec& spec) {
    const StateSpaceModel open = plant.open_loop();
    if (stability_of(open) != Stability::stable)
        throw validation_error(std::string("gamma_iterate: the open-loop plant must be "
                                           "stable, got ") +
                               to_string(stability_of(open)));
    const SuboptimalSynthesizer synth(plant, spec.riccati_residual_tol);
    const double norm_tol = std::min(1e-7, 0.1 * spec.gamma_rel_tol);
    const double open_norm = hinf_norm_discrete(open, norm_tol, spec.unit_circle_tol);

    if (open_norm == 0.0) {
        // Zero target: the zero filter is already optimal and the bisection
        // bracket would degenerate.
        StateSpaceModel zero_filter = StateSpaceModel::static_gain(
            Matrix::Zero(plant.ctrl_inputs(), plant.meas_outputs()), plant.period);
        const double certified = hinf_norm_discrete(
            plant.without_noise().close(zero_filter), norm_tol, spec.unit_circle_tol);
        return SynthesisResult{std::move(zero_filter), 0.0, certified, 0};
    }

    const int max_steps = 60;
    int steps = 0;
    double lo = synth.gamma_floor();
    double hi = std::max(2.0 * open_norm, lo * 2.0 + 1e-12);
    const double cap = 2.0 * hi;

    std::optional<StateSpaceModel> best;
    double trial = hi;
    while (steps < max_steps) {
        best = synth.try_gamma(trial);
        ++steps;
        if (best) {
            hi = trial;
            break;
        }
        lo = std::max(lo, trial);
        trial *= 2.0;
        if (trial > cap)
            throw numerical_error("gamma_iterate: no feasible level found up to " +
                                  std::to_string(cap) +
                                  "; synthesis assumptions appear violated");
    }
    while (steps < max_steps && (hi - lo) > spec.gamma_rel_tol * hi) {
        const double mid = 0.5 * (lo + hi);
        auto K = synth.try_gamma(mid);
        ++steps;
        if (K) {
            best = std::move(K);
            hi = mid;
        } else {
            lo = mid;
        }
    }

    SynthesisResult result{*best, hi, 0.0, steps};
    if (stability_of(result.filter) != Stability::stable)
        throw numerical_error("gamma_iterate: synthesized filter is not strictly stable");
    const GeneralizedPlant true_plant = plant.without_noise();
    const StateSpaceModel closed = true_plant.close(result.filter);
    result.gamma_certified = hinf_norm_discrete(closed, norm_tol, spec.unit_circle_tol);
    if (result.gamma_certified > result.gamma_achieved * (1.0 + 10.0 * spec.gamma_rel_tol))
        throw numerical_error(
            "gamma_iterate: certified closed-loop norm " +
            std::to_string(result.gamma_certified) + " exceeds the synthesis level " +
            std::to_string(result.gamma_achieved));
    return result;
}

struct FilterDesign {
    StateSpaceModel filter;         // deployable filter at period h/L (h when L = 1)
    StateSpaceModel lifted_filter;  // slow-rate design: L output samples per input sample
    double gamma_achieved;
    double gamma_certified;
    int bisection_steps;
};

// End-to-end design: build the lifted error plant for (G, F), run the level
// iteration, and expand the slow-rate solution into the deployable filter.
inline FilterDesign design_filter(const StateSpaceModel& G, const StateSpaceModel& F,
                                  const DesignSpec& spec) {
    const GeneralizedPlant plant = build_error_plant(G, F, spec);
    const SynthesisResult res = gamma_iterate(plant, spec);
    StateSpaceModel fast = recover_multirate_filter(res.filter, spec.L);
    return FilterDesign{std::move(fast), res.filter, res.gamma_achieved,
                        res.gamma_certified, res.bisection_steps};
}

}  // namespace sdisc
