#pragma once

#include <stdexcept>
#include <string>

namespace dcl {

// Bad input data: unreadable files, malformed records, schema violations.
// The CLI maps this to exit code 2.
struct io_error : std::runtime_error {
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

// Bad invocation: unknown flags, unknown config keys, invalid values.
// The CLI maps this to exit code 1.
struct usage_error : std::runtime_error {
  explicit usage_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dcl
