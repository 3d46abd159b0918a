#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "support.hpp"

using namespace sdisc;
using support::random_stable_continuous;
using support::random_stable_discrete;
using support::same_matrices;

namespace {

// Unique scratch path per test run; removed by the fixture below.
struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name)
        : path((std::filesystem::temp_directory_path() /
                ("sdisc_test_" + std::to_string(::getpid()) + "_" + name))
                   .string()) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("model JSON round trips are bitwise exact") {
    std::mt19937 rng(110);
    SECTION("discrete") {
        const auto sys = random_stable_discrete(rng, 4, 2, 3, 0.9, 0.125);
        const auto back = model_from_json(to_json(sys));
        REQUIRE(back.is_discrete());
        REQUIRE(back.sample_period() == sys.sample_period());
        REQUIRE(same_matrices(back, sys));
    }
    SECTION("continuous") {
        const auto sys = random_stable_continuous(rng, 3, 1, 2);
        const auto back = model_from_json(to_json(sys));
        REQUIRE_FALSE(back.is_discrete());
        REQUIRE(same_matrices(back, sys));
    }
    SECTION("through a file") {
        const auto sys = random_stable_discrete(rng, 5, 1, 1, 0.9, 0.1);
        TempFile tmp("roundtrip.json");
        save_model(tmp.path, sys);
        const auto back = load_model(tmp.path);
        REQUIRE(same_matrices(back, sys));
        REQUIRE(back.sample_period() == sys.sample_period());
    }
    SECTION("static gains survive the empty-matrix encoding") {
        Matrix D(2, 3);
        D << 1, 2, 3, 4, 5, 6;
        const auto sys = StateSpaceModel::static_gain(D, 0.5);
        const auto back = model_from_json(to_json(sys));
        REQUIRE(back.states() == 0);
        REQUIRE(back.inputs() == 3);
        REQUIRE(back.outputs() == 2);
        REQUIRE(back.D == D);
    }
}

TEST_CASE("model JSON validation names the offending field") {
    const nlohmann::json good = to_json(
        StateSpaceModel(Matrix::Identity(2, 2) * 0.5, Matrix::Ones(2, 1), Matrix::Ones(1, 2),
                        Matrix::Zero(1, 1), 1.0));
    REQUIRE_NOTHROW(model_from_json(good));

    SECTION("missing fields") {
        for (const char* field : {"domain", "A", "B", "C", "D"}) {
            nlohmann::json j = good;
            j.erase(field);
            REQUIRE_THROWS_WITH(model_from_json(j),
                                Catch::Matchers::ContainsSubstring(std::string("'") + field + "'"));
        }
    }
    SECTION("domain and period rules") {
        nlohmann::json j = good;
        j["domain"] = "sampled";
        REQUIRE_THROWS_WITH(model_from_json(j), Catch::Matchers::ContainsSubstring("domain"));
        j["domain"] = 7;
        REQUIRE_THROWS_WITH(model_from_json(j), Catch::Matchers::ContainsSubstring("string"));
        j = good;
        j.erase("period");
        REQUIRE_THROWS_WITH(model_from_json(j), Catch::Matchers::ContainsSubstring("period"));
        j = good;
        j["domain"] = "continuous";
        REQUIRE_THROWS_WITH(model_from_json(j),
                            Catch::Matchers::ContainsSubstring("must not carry 'period'"));
        j = good;
        j["period"] = -1.0;
        REQUIRE_THROWS_WITH(model_from_json(j), Catch::Matchers::ContainsSubstring("period"));
    }
    SECTION("matrix shape rules") {
        nlohmann::json j = good;
        j["A"] = {{0.5, 0.0}, {0.0}};
        REQUIRE_THROWS_WITH(model_from_json(j),
                            Catch::Matchers::ContainsSubstring("inconsistent length"));
        j = good;
        j["B"] = {{1.0}, {"x"}};
        REQUIRE_THROWS_WITH(model_from_json(j),
                            Catch::Matchers::ContainsSubstring("not a number"));
        j = good;
        j["C"] = "rows";
        REQUIRE_THROWS_WITH(model_from_json(j), Catch::Matchers::ContainsSubstring("'C'"));
        j = good;
        j["B"] = {{1.0}};  // 1x1 against a 2-state A
        REQUIRE_THROWS_WITH(model_from_json(j), Catch::Matchers::ContainsSubstring("B"));
        REQUIRE_THROWS_AS(model_from_json(nlohmann::json::array()), validation_error);
    }
    SECTION("file errors") {
        REQUIRE_THROWS_WITH(load_model("/nonexistent/path/model.json"),
                            Catch::Matchers::ContainsSubstring("cannot open"));
        TempFile tmp("broken.json");
        {
            std::ofstream out(tmp.path);
            out << "{ not json";
        }
        REQUIRE_THROWS_WITH(load_model(tmp.path),
                            Catch::Matchers::ContainsSubstring("parse failure"));
    }
}

TEST_CASE("lifted system JSON keeps the blocking factor") {
    std::mt19937 rng(111);
    const auto sys = random_stable_discrete(rng, 3, 2, 2, 0.9, 0.25);
    const auto lifted = lift(sys, 4);
    const auto j = to_json(lifted);
    REQUIRE(j["blocking"] == 4);
    const auto back = lifted_from_json(j);
    REQUIRE(back.blocking == 4);
    REQUIRE(back.slow_period == lifted.slow_period);
    REQUIRE(same_matrices(back.block, lifted.block));

    nlohmann::json no_block = to_json(sys);
    REQUIRE_THROWS_WITH(lifted_from_json(no_block),
                        Catch::Matchers::ContainsSubstring("blocking"));
}

TEST_CASE("certificate JSON carries all verdict fields") {
    StabilityCertificate cert;
    cert.norm_GF = 0.25;
    cert.norm_E = 0.125;
    cert.margin = 0.625;
    cert.verdict = CertificateVerdict::certified_stable;
    cert.N = 8;
    cert.note = "";
    const auto j = to_json(cert);
    REQUIRE(j["norm_GF"] == 0.25);
    REQUIRE(j["norm_E"] == 0.125);
    REQUIRE(j["margin"] == 0.625);
    REQUIRE(j["verdict"] == "certified-stable");
    REQUIRE(j["N"] == 8);
    REQUIRE(j["note"] == "");

    cert.verdict = CertificateVerdict::not_certified;
    cert.note = "reason";
    const auto j2 = to_json(cert);
    REQUIRE(j2["verdict"] == "not-certified");
    REQUIRE(j2["note"] == "reason");
}
