#include "inscribin/error.hpp"

namespace inscribin {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyMask: return "EmptyMask";
    case ErrorKind::EmptyRegion: return "EmptyRegion";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::InvalidDims: return "InvalidDims";
    case ErrorKind::InvalidParam: return "InvalidParam";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::MissingGroundTruth: return "MissingGroundTruth";
    case ErrorKind::ModelLoadError: return "ModelLoadError";
    case ErrorKind::SignatureMismatch: return "SignatureMismatch";
    case ErrorKind::InferenceError: return "InferenceError";
    case ErrorKind::UnmatchedPair: return "UnmatchedPair";
    case ErrorKind::UnknownMethod: return "UnknownMethod";
    case ErrorKind::Io: return "Io";
    case ErrorKind::DataContract: return "DataContract";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace inscribin
