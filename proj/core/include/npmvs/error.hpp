#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace npmvs {

enum class ErrorKind {
  InvalidArgument,  // precondition violated by the caller
  Geometry,         // degenerate camera or projection
  Parse,            // malformed input file
  Io,               // filesystem failure
  Config,           // inconsistent configuration or scene
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library. `kind()` is stable and is what the
/// command line tool reports in its machine-readable error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorKind::InvalidArgument, what);
}

}  // namespace npmvs
