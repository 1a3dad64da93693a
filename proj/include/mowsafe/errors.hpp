#pragma once

#include <stdexcept>
#include <string>

namespace mowsafe {

// Configuration or input data failed validation. `field` is a JSON-pointer-ish
// path ("lawn.width_m", "entities[2].radius_m") when one is known.
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string field, const std::string& what)
        : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed persisted content (flag file, frame stream line, table file).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A caller broke an operation's precondition.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace mowsafe
