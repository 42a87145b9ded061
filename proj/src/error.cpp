#include "specpredict/error.hpp"

namespace specpredict {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DegenerateChain: return "DegenerateChain";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::FrequencyOutOfRange: return "FrequencyOutOfRange";
    case Errc::DistanceOutOfRange: return "DistanceOutOfRange";
    case Errc::EnvironmentUnsupported: return "EnvironmentUnsupported";
    case Errc::ParseError: return "ParseError";
    case Errc::NonMonotoneDistances: return "NonMonotoneDistances";
    case Errc::InvalidBracket: return "InvalidBracket";
    case Errc::Validation: return "Validation";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace specpredict
