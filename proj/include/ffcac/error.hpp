#pragma once

#include <stdexcept>
#include <string>

namespace ffcac {

enum class ErrorKind {
  kConfig,
  kUsage,
  kDimension,
  kIo,
  kIngestion,
  kLoad,
  kNumeric,
  kProtocol,
};

const char* to_string(ErrorKind kind);

// Process exit code for the CLI: 2 config, 3 IO, 4 numeric, 5 protocol.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::kUsage, what) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(ErrorKind::kDimension, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

// Audio input that violates the accepted WAV / clip contract.
class IngestionError : public Error {
 public:
  explicit IngestionError(const std::string& what) : Error(ErrorKind::kIngestion, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::kNumeric, what) {}
};

class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what) : Error(ErrorKind::kProtocol, what) {}
};

enum class LoadFailure {
  kBadMagic,
  kTruncated,
  kBadDtype,
  kShapeMismatch,
  kMissingTensor,
};

const char* to_string(LoadFailure failure);

// Weight-container decode failure. The reason distinguishes the failure modes.
class LoadError : public Error {
 public:
  LoadError(LoadFailure reason, const std::string& what)
      : Error(ErrorKind::kLoad, std::string(to_string(reason)) + ": " + what), reason_(reason) {}
  LoadFailure reason() const noexcept { return reason_; }

 private:
  LoadFailure reason_;
};

}  // namespace ffcac
