#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace wic {

// Exception carrying a stable machine-readable code ("undefined-alpha",
// "degenerate-embedding", ...) alongside the human-readable message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

}  // namespace wic
