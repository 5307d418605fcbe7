#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace surb {

// Violated operation precondition (empty input, bad ordering of lengths, ...).
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class IndexError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A step that cannot be applied at the current system state.
class InfeasibleStep : public std::runtime_error {
public:
    InfeasibleStep(std::size_t step, const std::string& what)
        : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class ScenarioError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class TraceParseError : public std::runtime_error {
public:
    TraceParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class SpliceError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class StateBoundExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace surb
