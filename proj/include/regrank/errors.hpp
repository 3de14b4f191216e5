#pragma once

#include <stdexcept>
#include <string>

namespace regrank {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad input data: unreadable files, malformed rows, inconsistent ids.
struct InputError : Error {
    explicit InputError(const std::string& msg) : Error(msg) {}
};

// An iterative kernel produced a non-finite value.
struct NumericError : Error {
    NumericError(const std::string& msg, int iteration)
        : Error(msg + " (iteration " + std::to_string(iteration) + ")"),
          iteration(iteration) {}
    int iteration;
};

// An eigensolve ran out of its iteration budget.
struct ConvergenceError : Error {
    ConvergenceError(const std::string& msg, double best_residual, int iterations)
        : Error(msg + " (best residual " + std::to_string(best_residual) + " after " +
                std::to_string(iterations) + " iterations)"),
          best_residual(best_residual),
          iterations(iterations) {}
    double best_residual;
    int iterations;
};

}  // namespace regrank
