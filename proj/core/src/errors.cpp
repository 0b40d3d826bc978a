#include "hybasis/errors.hpp"

#include <iostream>
#include <mutex>

namespace hybasis {
namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

WarningSink& sink() {
  static WarningSink s = [](const std::string& msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return s;
}

}  // namespace

void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const Error& e) {
    const std::string msg = context + ": " + e.what();
    switch (e.kind()) {
      case ErrorKind::Config: throw ConfigError(msg);
      case ErrorKind::Io: throw IoError(msg);
      case ErrorKind::Validation: throw ValidationError(msg);
      case ErrorKind::Numerical: throw NumericalError(msg);
      case ErrorKind::Lookup: throw LookupError(msg);
    }
    throw;
  } catch (const std::exception& e) {
    throw std::runtime_error(context + ": " + e.what());
  }
}

WarningSink set_warning_sink(WarningSink s) {
  std::lock_guard lock(sink_mutex());
  std::swap(sink(), s);
  return s;
}

void warn(const std::string& message) {
  std::lock_guard lock(sink_mutex());
  if (sink()) sink()(message);
}

}  // namespace hybasis
