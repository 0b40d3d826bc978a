#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace hybasis {

/// Broad failure classes. The CLI maps these onto process exit codes.
enum class ErrorKind {
  Config,      ///< invalid parameters or inconsistent inputs
  Io,          ///< missing/corrupt files, payload size mismatch
  Validation,  ///< data that loaded but violates an invariant (NaN, ...)
  Numerical,   ///< singular systems, non-finite draws, degenerate series
  Lookup,      ///< unknown ROI id, unknown preset name
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::Config, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorKind::Io, w) {}
};
struct ValidationError : Error {
  explicit ValidationError(const std::string& w) : Error(ErrorKind::Validation, w) {}
};
struct NumericalError : Error {
  explicit NumericalError(const std::string& w) : Error(ErrorKind::Numerical, w) {}
};
struct LookupError : Error {
  explicit LookupError(const std::string& w) : Error(ErrorKind::Lookup, w) {}
};

/// Rethrows the in-flight exception with `context` prepended to its message,
/// keeping the error kind. Call only from inside a catch block.
[[noreturn]] void rethrow_with_context(const std::string& context);

// Non-fatal diagnostics (grid mismatches, ridge regularisation, ...).
// Default sink prints to stderr; tests swap it to capture messages.
using WarningSink = std::function<void(const std::string&)>;
/// Installs `sink` and returns the previous one.
WarningSink set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace hybasis
