#pragma once

#include <stdexcept>
#include <string>

namespace serlfd {

/// Raised when a caller breaks an operation's precondition (dimension
/// mismatch, out-of-range action, empty batch...).
class ContractViolation : public std::invalid_argument {
public:
    explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

/// Runtime failure that is not the caller's fault in the contract sense:
/// corrupt files, rejected updates, non-convergence.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ContractViolation(message);
}

}  // namespace serlfd
