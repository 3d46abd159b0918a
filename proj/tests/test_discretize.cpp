#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "support.hpp"

using namespace sdisc;
using support::max_abs_diff;
using support::random_matrix;
using support::random_stable_continuous;

namespace {

// Truncated Taylor series at heavy scaling: exp(M) = (exp(M/2^s))^(2^s).
Matrix taylor_expm(const Matrix& M, int terms = 60, int squarings = 8) {
    const double scale = std::pow(2.0, squarings);
    const Matrix S = M / scale;
    Matrix sum = Matrix::Identity(M.rows(), M.cols());
    Matrix term = sum;
    for (int k = 1; k <= terms; ++k) {
        term = (term * S) / static_cast<double>(k);
        sum += term;
    }
    for (int k = 0; k < squarings; ++k) sum = sum * sum;
    return sum;
}

// Exact ZOH sample of the continuous step response via the augmented
// exponential: x(t) = \int_0^t e^{As}B ds for a unit step from rest.
double continuous_step_sample(const StateSpaceModel& sys, double t) {
    const Eigen::Index n = sys.states(), m = sys.inputs();
    Matrix aug = Matrix::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = sys.A * t;
    aug.topRightCorner(n, m) = sys.B * t;
    const Matrix E = matrix_exponential(aug);
    const Matrix x = E.topRightCorner(n, m);
    return (sys.C * x + sys.D)(0, 0);
}

}  // namespace

TEST_CASE("matrix exponential closed forms") {
    REQUIRE(max_abs_diff(matrix_exponential(Matrix::Zero(2, 2)), Matrix::Identity(2, 2)) == 0.0);

    Matrix D2 = Matrix::Zero(2, 2);
    D2(0, 0) = 1.0;
    D2(1, 1) = -1.0;
    const Matrix E = matrix_exponential(D2);
    REQUIRE_THAT(E(0, 0), Catch::Matchers::WithinRel(std::exp(1.0), 1e-14));
    REQUIRE_THAT(E(1, 1), Catch::Matchers::WithinRel(std::exp(-1.0), 1e-14));
    REQUIRE(std::abs(E(0, 1)) == 0.0);

    REQUIRE_THROWS_AS(matrix_exponential(Matrix::Zero(2, 3)), validation_error);
    Matrix bad = Matrix::Zero(2, 2);
    bad(1, 1) = std::numeric_limits<double>::infinity();
    REQUIRE_THROWS_AS(matrix_exponential(bad), validation_error);
}

TEST_CASE("matrix exponential agrees with a long Taylor series") {
    std::mt19937 rng(42);
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix M = random_matrix(rng, 4, 4);
        const Matrix pade = matrix_exponential(M);
        const Matrix taylor = taylor_expm(M);
        REQUIRE(max_abs_diff(pade, taylor) < 1e-11 * (1.0 + taylor.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("exponentials of commuting matrices multiply") {
    std::mt19937 rng(43);
    const Matrix M = random_matrix(rng, 3, 3);
    const Matrix P = 0.4 * M * M - 0.7 * M;  // polynomial in M commutes with M
    const Matrix lhs = matrix_exponential(M + P);
    const Matrix rhs = matrix_exponential(M) * matrix_exponential(P);
    REQUIRE(max_abs_diff(lhs, rhs) < 1e-10 * (1.0 + rhs.cwiseAbs().maxCoeff()));
}

TEST_CASE("zero-order hold closed forms") {
    SECTION("integrator") {
        const StateSpaceModel integ(Matrix::Zero(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1),
                                    Matrix::Zero(1, 1));
        const auto d = c2d_zoh(integ, 0.5);
        REQUIRE(d.is_discrete());
        REQUIRE(d.sample_period() == 0.5);
        REQUIRE_THAT(d.A(0, 0), Catch::Matchers::WithinAbs(1.0, 1e-15));
        REQUIRE_THAT(d.B(0, 0), Catch::Matchers::WithinAbs(0.5, 1e-15));
    }
    SECTION("scalar pole") {
        const auto g = from_transfer_function({1.0}, {1.0, 1.0});
        const auto d = c2d_zoh(g, 1.0);
        REQUIRE_THAT(d.A(0, 0), Catch::Matchers::WithinAbs(std::exp(-1.0), 1e-14));
        REQUIRE_THAT(d.B(0, 0), Catch::Matchers::WithinAbs(1.0 - std::exp(-1.0), 1e-14));
    }
    SECTION("static gain passes through") {
        const auto g = StateSpaceModel::static_gain(Matrix::Constant(1, 1, 2.5));
        const auto d = c2d_zoh(g, 0.1);
        REQUIRE(d.states() == 0);
        REQUIRE(d.D(0, 0) == 2.5);
    }
    SECTION("validation") {
        const auto g = from_transfer_function({1.0}, {1.0, 1.0});
        REQUIRE_THROWS_AS(c2d_zoh(g, 0.0), validation_error);
        REQUIRE_THROWS_AS(c2d_zoh(g, -1.0), validation_error);
        REQUIRE_THROWS_AS(c2d_zoh(c2d_zoh(g, 1.0), 1.0), validation_error);
    }
}

TEST_CASE("zero-order hold matches sampled continuous step responses") {
    std::mt19937 rng(44);
    for (int trial = 0; trial < 5; ++trial) {
        const auto g = random_stable_continuous(rng, 4, 1, 1);
        const double h = 0.3;
        const auto d = c2d_zoh(g, h);
        SampledSignal step;
        step.period = h;
        step.values.assign(21, Vector::Ones(1));
        const auto y = simulate(d, step);
        for (int n = 0; n <= 20; ++n) {
            const double v = continuous_step_sample(g, n * h);
            REQUIRE_THAT(y.values[static_cast<std::size_t>(n)](0),
                         Catch::Matchers::WithinAbs(v, 1e-9));
        }
    }
}

TEST_CASE("hold discretization approaches the DC gain as h shrinks") {
    std::mt19937 rng(45);
    const auto g = random_stable_continuous(rng, 3, 1, 1);
    const double dc = frequency_response(g, 0.0)(0, 0).real();
    double prev = std::numeric_limits<double>::infinity();
    for (double h : {1.0, 0.1, 0.01}) {
        const auto d = c2d_zoh(g, h);
        const double low = frequency_response(d, 1e-8)(0, 0).real();
        const double err = std::abs(low - dc);
        REQUIRE(err < prev + 1e-12);
        prev = err;
    }
}

TEST_CASE("step-invariant discretization") {
    SECTION("keeps C and D verbatim") {
        std::mt19937 rng(46);
        const auto g = random_stable_continuous(rng, 4, 2, 3);
        const auto d = step_invariant(g, 0.7);
        REQUIRE(d.C == g.C);
        REQUIRE(d.D == g.D);
    }
    SECTION("static gain unchanged") {
        const auto g = StateSpaceModel::static_gain(Matrix::Constant(2, 2, -1.5));
        REQUIRE(step_invariant(g, 1.0).D == g.D);
    }
    SECTION("scalar closed form") {
        const auto d = step_invariant(from_transfer_function({1.0}, {1.0, 1.0}), 1.0);
        REQUIRE_THAT(d.A(0, 0), Catch::Matchers::WithinAbs(std::exp(-1.0), 1e-14));
        REQUIRE_THAT(d.B(0, 0), Catch::Matchers::WithinAbs(1.0 - std::exp(-1.0), 1e-14));
        REQUIRE(d.C(0, 0) == 1.0);
        REQUIRE(d.D(0, 0) == 0.0);
    }
    SECTION("matches the fine-grid step response of the bundled target") {
        const auto g = support::elliptic_target();
        const double h = 1.0;
        const auto coarse = step_invariant(g, h);
        const auto fine = c2d_zoh(g, h / 1000.0);
        SampledSignal step_c, step_f;
        step_c.period = h;
        step_c.values.assign(11, Vector::Ones(1));
        step_f.period = h / 1000.0;
        step_f.values.assign(10 * 1000 + 1, Vector::Ones(1));
        const auto yc = simulate(coarse, step_c);
        const auto yf = simulate(fine, step_f);
        for (int n = 0; n <= 10; ++n) {
            const double a = yc.values[static_cast<std::size_t>(n)](0);
            const double b = yf.values[static_cast<std::size_t>(n * 1000)](0);
            REQUIRE_THAT(a, Catch::Matchers::WithinAbs(b, 1e-6));
        }
    }
}

TEST_CASE("bilinear transformation") {
    SECTION("hand-computed map of 1/(s+1) at h=2") {
        // (2/h)(z-1)/(z+1) with h=2 gives K(z) = (z+1)/(2z).
        const auto d = bilinear(from_transfer_function({1.0}, {1.0, 1.0}), 2.0);
        REQUIRE_THAT(d.A(0, 0), Catch::Matchers::WithinAbs(0.0, 1e-15));
        REQUIRE_THAT(d.B(0, 0), Catch::Matchers::WithinAbs(0.5, 1e-15));
        REQUIRE_THAT(d.C(0, 0), Catch::Matchers::WithinAbs(1.0, 1e-15));
        REQUIRE_THAT(d.D(0, 0), Catch::Matchers::WithinAbs(0.5, 1e-15));
    }
    SECTION("no error at DC") {
        std::mt19937 rng(47);
        for (int trial = 0; trial < 10; ++trial) {
            const auto g = random_stable_continuous(rng, 4, 1, 1);
            const auto d = bilinear(g, 0.8);
            const Complex kdc = frequency_response(d, 0.0)(0, 0);
            const Complex gdc = frequency_response(g, 0.0)(0, 0);
            REQUIRE(std::abs(kdc - gdc) < 1e-10);
        }
    }
    SECTION("static gain unchanged") {
        const auto g = StateSpaceModel::static_gain(Matrix::Constant(1, 1, 4.0));
        REQUIRE(bilinear(g, 1.0).D(0, 0) == 4.0);
    }
    SECTION("mapping singularity is reported") {
        // Pole at 2/h makes I - (h/2)A singular.
        const StateSpaceModel g(Matrix::Constant(1, 1, 2.0), Matrix::Ones(1, 1),
                                Matrix::Ones(1, 1), Matrix::Zero(1, 1));
        REQUIRE_THROWS_WITH(bilinear(g, 1.0), Catch::Matchers::ContainsSubstring("eigenvalue"));
    }
    SECTION("preserves stability for random plants") {
        std::mt19937 rng(48);
        std::uniform_real_distribution<double> hdist(1e-3, 2.0);
        for (int trial = 0; trial < 100; ++trial) {
            const auto g = random_stable_continuous(rng, 4, 1, 1);
            const auto d = bilinear(g, hdist(rng));
            REQUIRE(d.A.eigenvalues().cwiseAbs().maxCoeff() < 1.0);
        }
    }
    SECTION("frequency mapping identity") {
        std::mt19937 rng(49);
        const auto g = random_stable_continuous(rng, 4, 1, 1);
        const double h = 0.6;
        const auto d = bilinear(g, h);
        std::uniform_real_distribution<double> wdist(0.01, 0.95 * std::numbers::pi / h);
        for (int k = 0; k < 32; ++k) {
            const double w = wdist(rng);
            const Complex lhs = frequency_response(d, w)(0, 0);
            const double warped = (2.0 / h) * std::tan(w * h / 2.0);
            const Complex rhs = frequency_response(g, warped)(0, 0);
            REQUIRE(std::abs(lhs - rhs) < 1e-9);
        }
    }
}

TEST_CASE("prewarped bilinear transformation") {
    SECTION("matches the analog response exactly at omega0") {
        std::mt19937 rng(50);
        for (int trial = 0; trial < 10; ++trial) {
            const auto g = random_stable_continuous(rng, 4, 1, 1);
            const auto d = bilinear_prewarp(g, 1.0, 1.0);
            const Complex lhs = frequency_response(d, 1.0)(0, 0);
            const Complex rhs = frequency_response(g, 1.0)(0, 0);
            REQUIRE(std::abs(lhs - rhs) < 1e-10);
        }
    }
    SECTION("tiny omega0 converges to the plain bilinear map") {
        std::mt19937 rng(51);
        const auto g = random_stable_continuous(rng, 3, 1, 1);
        const auto a = bilinear_prewarp(g, 1.0, 1e-4);
        const auto b = bilinear(g, 1.0);
        REQUIRE(max_abs_diff(a.A, b.A) < 1e-6);
        REQUIRE(max_abs_diff(a.B, b.B) < 1e-6);
        REQUIRE(max_abs_diff(a.C, b.C) < 1e-6);
        REQUIRE(max_abs_diff(a.D, b.D) < 1e-6);
    }
    SECTION("rejects out-of-range match frequencies") {
        const auto g = from_transfer_function({1.0}, {1.0, 1.0});
        REQUIRE_THROWS_AS(bilinear_prewarp(g, 1.0, std::numbers::pi), validation_error);
        REQUIRE_THROWS_AS(bilinear_prewarp(g, 1.0, 4.0), validation_error);
        REQUIRE_THROWS_WITH(bilinear_prewarp(g, 1.0, 0.0),
                            Catch::Matchers::ContainsSubstring("bilinear"));
        REQUIRE_THROWS_AS(bilinear_prewarp(g, 1.0, -1.0), validation_error);
    }
    SECTION("bundled target magnitude anchored at omega0 = 1") {
        const auto g = support::elliptic_target();
        const auto d = bilinear_prewarp(g, 1.0, 1.0);
        const double lhs = std::abs(frequency_response(d, 1.0)(0, 0));
        const double rhs = std::abs(frequency_response(g, 1.0)(0, 0));
        REQUIRE_THAT(lhs, Catch::Matchers::WithinAbs(rhs, 1e-8));
    }
}
