#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wavex {

enum class Errc {
  MismatchedFrequency,
  InvalidSpeed,
  InvalidFrequency,
  InvalidWavenumber,
  DegenerateField,
  NoConvergence,
  SingularSystem,
  UnknownDomain,
  ZeroDenominator,
  ZeroWeight,
  ZeroNorm,
  MissingReference,
  EmptyInput,
  ModeOverflow,
  ShapeMismatch,
  FrozenModel,
  NotFrozen,
  MissingCondition,
  NonFinite,
  BadMagic,
  TruncatedFile,
  VersionMismatch,
  UnknownFrequency,
  InsufficientFrequencies,
  IoError,
  BadConfig,
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::MismatchedFrequency: return "MismatchedFrequency";
    case Errc::InvalidSpeed: return "InvalidSpeed";
    case Errc::InvalidFrequency: return "InvalidFrequency";
    case Errc::InvalidWavenumber: return "InvalidWavenumber";
    case Errc::DegenerateField: return "DegenerateField";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::UnknownDomain: return "UnknownDomain";
    case Errc::ZeroDenominator: return "ZeroDenominator";
    case Errc::ZeroWeight: return "ZeroWeight";
    case Errc::ZeroNorm: return "ZeroNorm";
    case Errc::MissingReference: return "MissingReference";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::ModeOverflow: return "ModeOverflow";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::FrozenModel: return "FrozenModel";
    case Errc::NotFrozen: return "NotFrozen";
    case Errc::MissingCondition: return "MissingCondition";
    case Errc::NonFinite: return "NonFinite";
    case Errc::BadMagic: return "BadMagic";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::UnknownFrequency: return "UnknownFrequency";
    case Errc::InsufficientFrequencies: return "InsufficientFrequencies";
    case Errc::IoError: return "IoError";
    case Errc::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

/// Library-wide exception. `code()` identifies the failure class; the message
/// carries context (sample index, stage label, file name).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code), detail_(what) {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

/// Runs fn and prefixes any library error with "stage <label>: ".
template <class Fn>
decltype(auto) in_stage(const std::string& label, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), "stage " + label + ": " + e.detail());
  }
}

}  // namespace wavex
