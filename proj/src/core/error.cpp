#include "ffcac/error.hpp"

namespace ffcac {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config error";
    case ErrorKind::kUsage: return "usage error";
    case ErrorKind::kDimension: return "dimension error";
    case ErrorKind::kIo: return "io error";
    case ErrorKind::kIngestion: return "ingestion error";
    case ErrorKind::kLoad: return "load error";
    case ErrorKind::kNumeric: return "numeric error";
    case ErrorKind::kProtocol: return "protocol violation";
  }
  return "error";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kUsage:
    case ErrorKind::kDimension:
      return 2;
    case ErrorKind::kIo:
    case ErrorKind::kIngestion:
    case ErrorKind::kLoad:
      return 3;
    case ErrorKind::kNumeric:
      return 4;
    case ErrorKind::kProtocol:
      return 5;
  }
  return 1;
}

const char* to_string(LoadFailure failure) {
  switch (failure) {
    case LoadFailure::kBadMagic: return "bad magic";
    case LoadFailure::kTruncated: return "truncated file";
    case LoadFailure::kBadDtype: return "bad dtype";
    case LoadFailure::kShapeMismatch: return "shape mismatch";
    case LoadFailure::kMissingTensor: return "missing tensor";
  }
  return "load failure";
}

}  // namespace ffcac
