#pragma once

#include <stdexcept>
#include <string>

namespace cpd {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// FieldSpec construction with a non-prime modulus.
struct NotPrimeError : Error {
    using Error::Error;
};

// Inverse of zero in GF(p).
struct ZeroInverseError : Error {
    using Error::Error;
};

// Inverse of a non-unit ring element (constant coefficient zero).
struct NotInvertibleError : Error {
    using Error::Error;
};

// Inverse of a singular matrix.
struct SingularError : Error {
    using Error::Error;
};

// Dimension / shape mismatches and malformed values.
struct ShapeError : Error {
    using Error::Error;
};

// Operation not available for the given configuration
// (e.g. pruners outside D=3, the main search over a border ring).
struct UnsupportedError : Error {
    using Error::Error;
};

// A search or enumeration would exceed its configured step budget.
struct BudgetError : Error {
    using Error::Error;
};

// A supposedly-impossible internal state (e.g. an accepted assignment whose
// corrected slice fails the rank-1 decomposition). Always indicates a bug.
struct InternalError : Error {
    using Error::Error;
};

// Malformed input files.
struct ParseError : Error {
    using Error::Error;
};

// Tensor-family generator called with a name it does not know.
struct UnknownFamilyError : Error {
    using Error::Error;
};

// A conciseness certificate applied to a CPD it does not fit
// (wrong factor count, row counts, or ring).
struct CertificateMismatchError : Error {
    using Error::Error;
};

} // namespace cpd
