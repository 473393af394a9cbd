#pragma once

#include <stdexcept>
#include <string>

namespace gtrie {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Probability vector fails the range/sum checks.
struct NotAProbabilityVector final : Error {
    using Error::Error;
};

// Instance violates the non-explosive condition sum(p_j^2) < 1/M.
struct Explosive final : Error {
    using Error::Error;
};

// Construction or simulation hit a depth or node budget.
struct CapExceeded final : Error {
    enum class Kind { Depth, Nodes };
    CapExceeded(Kind k, const std::string& what) : Error(what), kind(k) {}
    Kind kind;
};

struct PoleAt final : Error {
    using Error::Error;
};

// Variance constant c is undefined for uniform probabilities.
struct UniformCase final : Error {
    using Error::Error;
};

struct AlphaTooSmall final : Error {
    using Error::Error;
};

// Series evaluation could not push the certified tail bound below epsilon.
struct TruncationNotCertified final : Error {
    using Error::Error;
};

}  // namespace gtrie
