#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace hopbench {

// Exception carrying a module-specific error code. Each module declares an
// enum plus a `to_string(Enum)` overload and aliases CodedError<Enum>.
template <typename Code>
class CodedError : public std::runtime_error {
 public:
  CodedError(Code code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code) {}

  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

}  // namespace hopbench
