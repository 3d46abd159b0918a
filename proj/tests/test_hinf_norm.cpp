#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "support.hpp"

using namespace sdisc;
using support::grid_max_gain_discrete;
using support::random_matrix;
using support::random_stable_discrete;

TEST_CASE("norm of static and degenerate systems") {
    std::mt19937 rng(80);
    const Matrix D = random_matrix(rng, 3, 2);
    const double sigma = D.jacobiSvd().singularValues()(0);
    REQUIRE(hinf_norm_discrete(StateSpaceModel::static_gain(D, 1.0)) == sigma);
    REQUIRE(hinf_norm_continuous(StateSpaceModel::static_gain(D)) == sigma);

    REQUIRE(hinf_norm_discrete(StateSpaceModel::static_gain(Matrix::Zero(2, 2), 1.0)) == 0.0);

    // Zero input path: the response is identically D.
    const StateSpaceModel decoupled(Matrix::Constant(1, 1, 0.5), Matrix::Zero(1, 1),
                                    Matrix::Ones(1, 1), Matrix::Constant(1, 1, 3.0), 1.0);
    REQUIRE(hinf_norm_discrete(decoupled) == 3.0);
}

TEST_CASE("norm of scalar systems with known peaks") {
    SECTION("discrete first-order peak at angle zero") {
        const StateSpaceModel sys(Matrix::Constant(1, 1, 0.5), Matrix::Ones(1, 1),
                                  Matrix::Ones(1, 1), Matrix::Zero(1, 1), 1.0);
        const double norm = hinf_norm_discrete(sys, 1e-8);
        REQUIRE_THAT(norm, Catch::Matchers::WithinRel(2.0, 1e-6));
        const double grid = grid_max_gain_discrete(sys, 4096);
        REQUIRE(norm >= grid - 1e-12);
        REQUIRE(norm <= grid * (1.0 + 1e-6));
    }
    SECTION("continuous first-order peak at DC") {
        const auto g = from_transfer_function({1.0}, {1.0, 1.0});
        REQUIRE_THAT(hinf_norm_continuous(g, 1e-8), Catch::Matchers::WithinRel(1.0, 1e-6));
    }
    SECTION("lightly damped resonance") {
        const double zeta = 0.05;
        const auto g = from_transfer_function({1.0}, {1.0, 2.0 * zeta, 1.0});
        const double expected = 1.0 / (2.0 * zeta * std::sqrt(1.0 - zeta * zeta));
        REQUIRE_THAT(hinf_norm_continuous(g, 1e-8), Catch::Matchers::WithinRel(expected, 1e-6));
    }
    SECTION("all-pass systems sit at one") {
        REQUIRE_THAT(hinf_norm_discrete(delay_chain(3, 2, 0.25), 1e-6),
                     Catch::Matchers::WithinAbs(1.0, 1e-5));
        const auto allpass = from_transfer_function({1.0, -1.0}, {1.0, 1.0});
        REQUIRE_THAT(hinf_norm_continuous(allpass, 1e-6),
                     Catch::Matchers::WithinAbs(1.0, 1e-5));
    }
}

TEST_CASE("norm rejects unstable and mismatched inputs") {
    const StateSpaceModel grow(Matrix::Constant(1, 1, 1.5), Matrix::Ones(1, 1),
                               Matrix::Ones(1, 1), Matrix::Zero(1, 1), 1.0);
    REQUIRE_THROWS_WITH(hinf_norm_discrete(grow), Catch::Matchers::ContainsSubstring("unstable"));
    const StateSpaceModel edge(Matrix::Constant(1, 1, 1.0), Matrix::Ones(1, 1),
                               Matrix::Ones(1, 1), Matrix::Zero(1, 1), 1.0);
    REQUIRE_THROWS_WITH(hinf_norm_discrete(edge), Catch::Matchers::ContainsSubstring("marginal"));

    const auto g = from_transfer_function({1.0}, {1.0, 1.0});
    REQUIRE_THROWS_AS(hinf_norm_discrete(g), validation_error);
    REQUIRE_THROWS_AS(hinf_norm_continuous(c2d_zoh(g, 1.0)), validation_error);
}

TEST_CASE("norm upper-bounds every grid gain and stays tight") {
    std::mt19937 rng(81);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + trial % 6;
        const int m = 1 + trial % 2;
        const int p = 1 + (trial / 2) % 2;
        const auto sys = random_stable_discrete(rng, n, m, p);
        const double norm = hinf_norm_discrete(sys, 1e-3);
        const double grid = grid_max_gain_discrete(sys, 1024);
        REQUIRE(norm >= grid - 1e-12 * (1.0 + grid));
        REQUIRE(norm <= grid * (1.0 + 5e-3));
    }
}
