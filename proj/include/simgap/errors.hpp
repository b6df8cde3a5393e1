#pragma once

#include <stdexcept>
#include <string>

namespace simgap {

enum class Errc {
  IncompatibleVariant,
  KLUndefined,
  InvalidGamma,
  InvalidEta,
  NonpositiveSigma,
  IncompatibleHint,
  EmptyInterval,
  MeshTooCoarse,
  AlphaOutOfRange,
  MissingSecondSimulator,
  MixedBudgets,
  SchemaError,
  ValidationFailed,
  IoFailure,
};

const char* errc_name(Errc c) noexcept;

// Every library failure surfaces as Error; code() drives the CLI exit-code
// mapping (validation -> 2, numerical -> 3, io -> 4).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void raise(Errc code, const std::string& message);

}  // namespace simgap
