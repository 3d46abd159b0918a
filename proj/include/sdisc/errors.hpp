#pragma once

#include <stdexcept>
#include <string>

namespace sdisc {

// Caller mistakes: malformed models, inconsistent dimensions, out-of-range
// parameters.  Messages name the offending field or argument.
class validation_error : public std::invalid_argument {
public:
    explicit validation_error(const std::string& what) : std::invalid_argument(what) {}
};

// Numerical breakdown: singular solves, residuals beyond tolerance, failed
// convergence.  Kept distinct from validation_error so callers (and the CLI
// exit codes) can tell bad input from a computation that fell over.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sdisc
