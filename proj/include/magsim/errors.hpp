#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace magsim {

enum class ErrorKind {
  InvalidDimension,
  DispersiveRegime,
  DegenerateInput,
  NoSolution,
  Assembly,
  IntegratorAccuracy,
  InvalidState,
  InvalidObservable,
  InvalidSelector,
  Calibration,
  Resolution,
  Conditioning,
  Informativeness,
  Config,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Non-fatal diagnostics (truncation heuristics and the like). The default
// handler writes to stderr; tests install their own.
using WarningHandler = std::function<void(std::string_view)>;

void warn(std::string_view message);
WarningHandler set_warning_handler(WarningHandler handler);

class ScopedWarningCapture {
 public:
  ScopedWarningCapture();
  ~ScopedWarningCapture();
  ScopedWarningCapture(const ScopedWarningCapture&) = delete;
  ScopedWarningCapture& operator=(const ScopedWarningCapture&) = delete;

  const std::vector<std::string>& messages() const { return messages_; }

 private:
  std::vector<std::string> messages_;
  WarningHandler previous_;
};

}  // namespace magsim
