#include "magsim/errors.hpp"

#include <iostream>
#include <mutex>
#include <vector>

namespace magsim {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidDimension: return "invalid-dimension";
    case ErrorKind::DispersiveRegime: return "dispersive-regime";
    case ErrorKind::DegenerateInput: return "degenerate-input";
    case ErrorKind::NoSolution: return "no-solution";
    case ErrorKind::Assembly: return "assembly";
    case ErrorKind::IntegratorAccuracy: return "integrator-accuracy";
    case ErrorKind::InvalidState: return "invalid-state";
    case ErrorKind::InvalidObservable: return "invalid-observable";
    case ErrorKind::InvalidSelector: return "invalid-selector";
    case ErrorKind::Calibration: return "calibration";
    case ErrorKind::Resolution: return "resolution";
    case ErrorKind::Conditioning: return "conditioning";
    case ErrorKind::Informativeness: return "informativeness";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

namespace {

std::mutex& handler_mutex() {
  static std::mutex m;
  return m;
}

WarningHandler& handler_slot() {
  static WarningHandler h = [](std::string_view msg) { std::cerr << "magsim warning: " << msg << '\n'; };
  return h;
}

}  // namespace

void warn(std::string_view message) {
  std::lock_guard lock(handler_mutex());
  if (handler_slot()) handler_slot()(message);
}

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(handler_mutex());
  std::swap(handler_slot(), handler);
  return handler;
}

ScopedWarningCapture::ScopedWarningCapture() {
  previous_ = set_warning_handler([this](std::string_view msg) { messages_.emplace_back(msg); });
}

ScopedWarningCapture::~ScopedWarningCapture() { set_warning_handler(std::move(previous_)); }

}  // namespace magsim
