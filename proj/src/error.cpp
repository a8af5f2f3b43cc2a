#include "streamhar/error.hpp"

namespace streamhar {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonFiniteChannel: return "NonFiniteChannel";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyChunk: return "EmptyChunk";
    case ErrorCode::EmptyStream: return "EmptyStream";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::UnknownActivity: return "UnknownActivity";
    case ErrorCode::UnknownAlgorithm: return "UnknownAlgorithm";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::MalformedMessage: return "MalformedMessage";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::BindFailure: return "BindFailure";
    case ErrorCode::SnapshotFormat: return "SnapshotFormat";
  }
  return "Unknown";
}

}  // namespace streamhar
