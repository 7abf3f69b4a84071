#pragma once

#include <stdexcept>
#include <string>

namespace cograte {

// Argument outside the mathematical domain of a function (p outside (0,1), x <= 0, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Adaptive quadrature ran out of subdivisions before meeting its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Queue quantity requested for a model with mu <= lambda.
class InstabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A parameter record violates one of its invariants (tau_s >= T, gain <= 0, ...).
class InvariantError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Rate exponent bits/(bandwidth*duration) above the configured cap.
class OverflowError : public std::overflow_error {
public:
    using std::overflow_error::overflow_error;
};

}  // namespace cograte
