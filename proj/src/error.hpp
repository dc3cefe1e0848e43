// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace ltshap {

enum class Errc {
  invalid_argument,
  parse,       // malformed document / schema violation
  validation,  // weight or structural violation
  unsupported, // exceeds a documented limit
  numeric,     // non-finite input
  io,
  internal,
};

class Error : public std::runtime_error {
public:
  Error(Errc code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}
  Errc code() const { return code_; }

private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, std::string message) {
  throw Error(code, std::move(message));
}

} // namespace ltshap
