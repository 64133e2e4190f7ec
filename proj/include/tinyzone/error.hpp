#pragma once

#include <stdexcept>
#include <string>

namespace tinyzone {

// One exception type per failure class used across the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : Error { using Error::Error; };       // input outside documented domain
struct ShapeError : Error { using Error::Error; };        // inconsistent tensor/layer dimensions
struct CapacityError : Error { using Error::Error; };     // exceeds a configured memory budget
struct AddressError : Error { using Error::Error; };      // address outside the planned range
struct FormatError : Error { using Error::Error; };       // malformed file or byte stream
struct ProtocolError : Error { using Error::Error; };     // command issued in the wrong state
struct IntegrityError : Error { using Error::Error; };    // checksum mismatch on decrypt
struct FitError : Error { using Error::Error; };          // curve fit not defined on the data
struct ConversionError : Error { using Error::Error; };   // unsupported or dangling op in conversion

struct MathDomainError : DomainError {
    MathDomainError(const std::string& function, double input)
        : DomainError(function + ": input " + std::to_string(input) + " outside domain"),
          function_name(function), offending_input(input) {}
    std::string function_name;
    double offending_input;
};

// Config parse failure; keeps the 1-based line number.
struct ParseError : Error {
    ParseError(int line_, const std::string& what)
        : Error("line " + std::to_string(line_) + ": " + what), line(line_) {}
    int line;
};

} // namespace tinyzone
