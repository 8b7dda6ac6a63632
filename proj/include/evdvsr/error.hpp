#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace evdvsr {

/// Precondition violation on caller-supplied data (shapes, ranges, ordering).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Missing, unreadable or malformed files.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by the optimizer loop when the loss stops being finite.
class TrainingDivergence : public std::runtime_error {
public:
    TrainingDivergence(std::int64_t iteration, const std::string& what)
        : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
          iteration_(iteration) {}

    std::int64_t iteration() const noexcept { return iteration_; }

private:
    std::int64_t iteration_;
};

}  // namespace evdvsr
