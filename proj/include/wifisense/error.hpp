#pragma once

#include <stdexcept>
#include <string>

namespace wifisense {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or model shape disagreement; the message names the offending axis/layer.
class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (files, records, labels).
class DataError : public Error {
 public:
  using Error::Error;
};

class BadMagicError : public DataError {
 public:
  using DataError::DataError;
};

class ChecksumError : public DataError {
 public:
  using DataError::DataError;
};

class TruncatedRecordError : public DataError {
 public:
  using DataError::DataError;
};

// A receiver stream went backwards in sequence number without wrapping.
class StreamCorruptionError : public DataError {
 public:
  StreamCorruptionError(int receiver, const std::string& what)
      : DataError(what), receiver_(receiver) {}
  int receiver() const noexcept { return receiver_; }

 private:
  int receiver_;
};

// Parameter-count audit against the reference table failed.
class AuditError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or degenerate statistics during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace wifisense
