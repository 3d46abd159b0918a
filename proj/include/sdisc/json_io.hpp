#pragma once

#include <nlohmann/json.hpp>

#include <fstream>
#include <optional>
#include <string>

#include "sdisc/analysis.hpp"
#include "sdisc/errors.hpp"
#include "sdisc/lifting.hpp"
#include "sdisc/state_space.hpp"

namespace sdisc {
namespace detail {

// Nested row-major arrays -> matrix.  A 0-row matrix serializes as [] and
// loses its column count, so callers resolve those against D's dimensions.
inline Matrix matrix_from_json(const nlohmann::json& j, const std::string& field) {
    if (!j.is_array())
        throw validation_error("model JSON: field '" + field + "' must be an array of rows");
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) return Matrix(0, 0);
    if (!j[0].is_array())
        throw validation_error("model JSON: field '" + field + "' rows must be arrays");
    const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
    Matrix M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[i];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw validation_error("model JSON: field '" + field + "' row " + std::to_string(i) +
                                   " has inconsistent length");
        for (Eigen::Index k = 0; k < cols; ++k) {
            if (!row[k].is_number())
                throw validation_error("model JSON: field '" + field + "' entry (" +
                                       std::to_string(i) + "," + std::to_string(k) +
                                       ") is not a number");
            M(i, k) = row[k].get<double>();
        }
    }
    return M;
}

inline nlohmann::json matrix_to_json(const Matrix& M) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index k = 0; k < M.cols(); ++k) row.push_back(M(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace detail

inline nlohmann::json to_json(const StateSpaceModel& sys) {
    nlohmann::json j;
    j["domain"] = sys.is_discrete() ? "discrete" : "continuous";
    if (sys.is_discrete()) j["period"] = sys.sample_period();
    j["A"] = detail::matrix_to_json(sys.A);
    j["B"] = detail::matrix_to_json(sys.B);
    j["C"] = detail::matrix_to_json(sys.C);
    j["D"] = detail::matrix_to_json(sys.D);
    return j;
}

inline StateSpaceModel model_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw validation_error("model JSON: document must be an object");
    for (const char* field : {"domain", "A", "B", "C", "D"})
        if (!j.contains(field))
            throw validation_error(std::string("model JSON: missing field '") + field + "'");
    if (!j["domain"].is_string())
        throw validation_error("model JSON: field 'domain' must be a string");
    const std::string domain = j["domain"].get<std::string>();
    std::optional<double> period;
    if (domain == "discrete") {
        if (!j.contains("period") || !j["period"].is_number())
            throw validation_error("model JSON: discrete model requires numeric field 'period'");
        period = j["period"].get<double>();
    } else if (domain == "continuous") {
        if (j.contains("period"))
            throw validation_error("model JSON: continuous model must not carry 'period'");
    } else {
        throw validation_error("model JSON: field 'domain' must be 'continuous' or 'discrete', "
                               "got '" + domain + "'");
    }

    Matrix A = detail::matrix_from_json(j["A"], "A");
    Matrix B = detail::matrix_from_json(j["B"], "B");
    Matrix C = detail::matrix_from_json(j["C"], "C");
    Matrix D = detail::matrix_from_json(j["D"], "D");
    // Empty matrices dropped their column counts; restore them from D.
    const Eigen::Index n = A.rows();
    if (n == 0) {
        if (B.rows() != 0)
            throw validation_error("model JSON: field 'B' must be empty when A is empty");
        B = Matrix(0, D.cols());
        if (C.size() == 0) C = Matrix(D.rows(), 0);
    }
    try {
        return StateSpaceModel(std::move(A), std::move(B), std::move(C), std::move(D), period);
    } catch (const validation_error& e) {
        throw validation_error(std::string("model JSON: ") + e.what());
    }
}

inline StateSpaceModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open model file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw validation_error("model JSON parse failure in " + path + ": " + e.what());
    }
    return model_from_json(j);
}

inline void save_model(const std::string& path, const StateSpaceModel& sys) {
    std::ofstream out(path);
    if (!out) throw validation_error("cannot open output file for writing: " + path);
    out << to_json(sys).dump(2) << "\n";
}

// Lifted systems carry their blocking factor alongside the inner fast-rate model.
inline nlohmann::json to_json(const LiftedSystem& lifted) {
    nlohmann::json j = to_json(lifted.block);
    j["blocking"] = lifted.blocking;
    return j;
}

inline LiftedSystem lifted_from_json(const nlohmann::json& j) {
    if (!j.contains("blocking") || !j["blocking"].is_number_integer())
        throw validation_error("model JSON: lifted system requires integer field 'blocking'");
    nlohmann::json inner = j;
    inner.erase("blocking");
    return LiftedSystem(model_from_json(inner), j["blocking"].get<int>());
}

inline nlohmann::json to_json(const StabilityCertificate& cert) {
    nlohmann::json j;
    j["norm_GF"] = cert.norm_GF;
    j["norm_E"] = cert.norm_E;
    j["margin"] = cert.margin;
    j["verdict"] = to_string(cert.verdict);
    j["N"] = cert.N;
    j["note"] = cert.note;
    return j;
}

}  // namespace sdisc
