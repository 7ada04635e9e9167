#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace spcl {

/// Precondition or invariant violation on caller-supplied values.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An iterative routine ran out of budget. Carries the last iterate so callers
/// can keep going with a feasible (if approximate) answer.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, std::vector<double> last_iterate = {},
                   double objective_gap = 0.0)
        : std::runtime_error(what), last_iterate_(std::move(last_iterate)),
          objective_gap_(objective_gap) {}

    const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }
    double objective_gap() const noexcept { return objective_gap_; }

private:
    std::vector<double> last_iterate_;
    double objective_gap_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dataset generation could not satisfy the requested per-round counts.
class GenerationError : public std::runtime_error {
public:
    GenerationError(const std::string& what, int starved_round)
        : std::runtime_error(what), starved_round_(starved_round) {}

    int starved_round() const noexcept { return starved_round_; }

private:
    int starved_round_;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
    if (!condition) throw DomainError(message);
}

}  // namespace detail
}  // namespace spcl
