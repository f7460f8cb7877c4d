#pragma once

#include <stdexcept>
#include <string>

namespace zonoref {

/// Raised by the file-format parsers (NNet, JSON nets, VNN-LIB, witnesses).
/// Messages carry a location: a line number, a JSON path, or an s-expression
/// path, depending on the format.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace zonoref
