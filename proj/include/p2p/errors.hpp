#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace p2p {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// core
class InvalidTypeError : public Error {
 public:
  explicit InvalidTypeError(const std::string& msg) : Error(msg) {}
};

// preprocess
class FileUnreadableError : public Error {
 public:
  explicit FileUnreadableError(const std::string& msg) : Error(msg) {}
};

class MalformedRowError : public Error {
 public:
  MalformedRowError(std::size_t row, const std::string& msg)
      : Error("row " + std::to_string(row) + ": " + msg), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class EmptyCorpusError : public Error {
 public:
  explicit EmptyCorpusError(const std::string& msg) : Error(msg) {}
};

// embedding
class EmptyMatrixError : public Error {
 public:
  explicit EmptyMatrixError(const std::string& msg) : Error(msg) {}
};

class ProviderError : public Error {
 public:
  explicit ProviderError(const std::string& msg) : Error(msg) {}
};

class TransportError : public ProviderError {
 public:
  explicit TransportError(const std::string& msg) : ProviderError(msg) {}
};

class ApiError : public ProviderError {
 public:
  ApiError(int status, const std::string& body_excerpt)
      : ProviderError("api error, status " + std::to_string(status) + ": " + body_excerpt),
        status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

class DimensionMismatchError : public ProviderError {
 public:
  explicit DimensionMismatchError(const std::string& msg) : ProviderError(msg) {}
};

// vector_index
class WidthMismatchError : public Error {
 public:
  explicit WidthMismatchError(const std::string& msg) : Error(msg) {}
};

class NonFiniteVectorError : public Error {
 public:
  explicit NonFiniteVectorError(const std::string& msg) : Error(msg) {}
};

class EmptyIndexError : public Error {
 public:
  explicit EmptyIndexError(const std::string& msg) : Error(msg) {}
};

class CorruptFileError : public Error {
 public:
  explicit CorruptFileError(const std::string& msg) : Error(msg) {}
};

class TruncatedFileError : public Error {
 public:
  explicit TruncatedFileError(const std::string& msg) : Error(msg) {}
};

// smote
class ShapeMismatchError : public Error {
 public:
  explicit ShapeMismatchError(const std::string& msg) : Error(msg) {}
};

class NoSameLabelNeighborError : public Error {
 public:
  explicit NoSameLabelNeighborError(const std::string& msg) : Error(msg) {}
};

// rag_predict
class MissingPlaceholderError : public Error {
 public:
  explicit MissingPlaceholderError(const std::string& msg) : Error(msg) {}
};

// eval
class EmptyDemosError : public Error {
 public:
  explicit EmptyDemosError(const std::string& msg) : Error(msg) {}
};

class DegenerateClassesError : public Error {
 public:
  explicit DegenerateClassesError(const std::string& msg) : Error(msg) {}
};

class EmptyRunError : public Error {
 public:
  explicit EmptyRunError(const std::string& msg) : Error(msg) {}
};

class MissingTruthError : public Error {
 public:
  explicit MissingTruthError(const std::string& msg) : Error(msg) {}
};

// io / cli
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace p2p
