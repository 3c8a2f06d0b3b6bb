#pragma once

#include <stdexcept>
#include <string>

namespace dpconic {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad dimensions, out-of-range parameters, malformed input files.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// The KKT system could not be factored even after regularization.
class NumericalBreakdown : public Error {
public:
    using Error::Error;
};

/// A solve that had to succeed did not; carries the sample index when the
/// failure happened inside a Monte Carlo loop.
class SolveFailure : public Error {
public:
    SolveFailure(const std::string& what, long sample_index = -1)
        : Error(what), sample_index_(sample_index) {}

    long sample_index() const { return sample_index_; }

private:
    long sample_index_;
};

/// The recourse equalities of a privatized program contradict the query
/// constraint (e.g. 1'X = 0 from a balance row against 1'X = 1).
class ConflictingConstraints : public Error {
public:
    using Error::Error;
};

}  // namespace dpconic
