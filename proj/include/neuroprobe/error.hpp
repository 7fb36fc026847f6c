#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace neuroprobe {

// Base of every error thrown by the library. The CLI maps subclasses onto
// stable exit codes (see tools/neuroprobe.cpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Tensor or array dimensions disagree with what an operation expects.
class ShapeError : public Error {
public:
    using Error::Error;
};

// A caller-supplied callback or argument broke an operation's contract.
class ContractError : public Error {
public:
    using Error::Error;
};

// Malformed binary file. Carries the byte offset where parsing stopped.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::uint64_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

// Rate table / model / feature files that do not belong together.
class DigestError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Numerical failure (non-PSD matrix, insufficient samples for a covariance).
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace neuroprobe
