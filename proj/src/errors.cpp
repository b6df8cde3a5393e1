#include "simgap/errors.hpp"

namespace simgap {

const char* errc_name(Errc c) noexcept {
  switch (c) {
    case Errc::IncompatibleVariant: return "IncompatibleVariant";
    case Errc::KLUndefined: return "KLUndefined";
    case Errc::InvalidGamma: return "InvalidGamma";
    case Errc::InvalidEta: return "InvalidEta";
    case Errc::NonpositiveSigma: return "NonpositiveSigma";
    case Errc::IncompatibleHint: return "IncompatibleHint";
    case Errc::EmptyInterval: return "EmptyInterval";
    case Errc::MeshTooCoarse: return "MeshTooCoarse";
    case Errc::AlphaOutOfRange: return "AlphaOutOfRange";
    case Errc::MissingSecondSimulator: return "MissingSecondSimulator";
    case Errc::MixedBudgets: return "MixedBudgets";
    case Errc::SchemaError: return "SchemaError";
    case Errc::ValidationFailed: return "ValidationFailed";
    case Errc::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

void raise(Errc code, const std::string& message) { throw Error(code, message); }

}  // namespace simgap
