#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace inscribin {

enum class ErrorKind {
  EmptyMask,
  EmptyRegion,
  EmptySet,
  InvalidDims,
  InvalidParam,
  DimMismatch,
  MissingGroundTruth,
  ModelLoadError,
  SignatureMismatch,
  InferenceError,
  UnmatchedPair,
  UnknownMethod,
  Io,
  DataContract,
};

std::string_view to_string(ErrorKind kind);

// Every library failure is an Error carrying its kind, so the CLI can map it
// to an exit code without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace inscribin
