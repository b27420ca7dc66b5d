#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace treehom {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : Error {
  using Error::Error;
};

struct ValidationError : Error {
  using Error::Error;
};

struct InvalidPositionError : Error {
  using Error::Error;
};

struct DivisionByZeroError : Error {
  using Error::Error;
};

// Carries one message per violated clause; what() is the joined form.
struct PreconditionError : Error {
  std::vector<std::string> diagnostics;
  PreconditionError(std::string summary, std::vector<std::string> diags)
      : Error(join(summary, diags)), diagnostics(std::move(diags)) {}

 private:
  static std::string join(const std::string& summary,
                          const std::vector<std::string>& diags) {
    std::string out = summary;
    for (const auto& d : diags) {
      out += "\n  - ";
      out += d;
    }
    return out;
  }
};

// An enumeration grew past its cap; message reports the count reached.
struct EnumerationLimitError : Error {
  using Error::Error;
};

}  // namespace treehom
