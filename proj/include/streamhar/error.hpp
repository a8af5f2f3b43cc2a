#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace streamhar {

enum class ErrorCode {
  InvalidArgument = 1,
  NonFiniteChannel,
  LengthMismatch,
  DimensionMismatch,
  EmptyChunk,
  EmptyStream,
  EmptySplit,
  UnknownActivity,
  UnknownAlgorithm,
  UnknownSession,
  MalformedRow,
  MalformedMessage,
  IoError,
  BindFailure,
  SnapshotFormat,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace streamhar
