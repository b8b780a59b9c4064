#pragma once

#include <stdexcept>
#include <string>

namespace nbr {

// Base class for all library failures.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input data: JSONL corpora, ARPA models, templates, fixtures.
class FormatError : public Error {
 public:
  using Error::Error;
};

// LLM backend failure that must not be retried (4xx, missing fixture entry).
class BackendError : public Error {
 public:
  using Error::Error;
};

// LLM backend failure eligible for retry: transport error, 5xx, timeout.
class RetryableBackendError : public BackendError {
 public:
  enum class Kind { transport, http_status, timeout };

  RetryableBackendError(Kind kind, const std::string& msg)
      : BackendError(msg), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace nbr
