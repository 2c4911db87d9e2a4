#pragma once

#include <stdexcept>
#include <string>

namespace sdd {

/// Base class for every error raised by the library. `code()` is a short
/// machine-readable category used by the CLI's one-line error report.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& m) : Error("shape_mismatch", m) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& m) : Error("invalid_argument", m) {}
};

class FormatError : public Error {
 public:
  FormatError(std::string code, const std::string& m) : Error(std::move(code), m) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};

class MissingArtifact : public Error {
 public:
  explicit MissingArtifact(const std::string& m) : Error("missing_artifact", m) {}
};

class MaskExhausted : public Error {
 public:
  explicit MaskExhausted(const std::string& m) : Error("mask_exhausted", m) {}
};

/// Non-finite loss or update.
class Divergence : public Error {
 public:
  explicit Divergence(const std::string& m) : Error("divergence", m) {}
};

}  // namespace sdd
