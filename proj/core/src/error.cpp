#include "cyclesim/error.hpp"

namespace cyclesim {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::EmptyRide: return "EmptyRide";
    case ErrorCode::InvalidBandwidth: return "InvalidBandwidth";
    case ErrorCode::InvalidAlpha: return "InvalidAlpha";
    case ErrorCode::DegenerateTrace: return "DegenerateTrace";
    case ErrorCode::EmptySeries: return "EmptySeries";
    case ErrorCode::EmptyList: return "EmptyList";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::QuantileDomain: return "QuantileDomain";
    case ErrorCode::InvalidParameters: return "InvalidParameters";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NonPositiveSample: return "NonPositiveSample";
    case ErrorCode::InvalidGeometry: return "InvalidGeometry";
    case ErrorCode::InvalidSignalPlan: return "InvalidSignalPlan";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InternalInconsistency: return "InternalInconsistency";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace cyclesim
