#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dialectic {

/// Input data failed a schema or invariant check. Carries every problem found,
/// not just the first one.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> problems);
  explicit ValidationError(const std::string& problem)
      : ValidationError(std::vector<std::string>{problem}) {}

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Base class for failures talking to a generation, critic or judge service.
class BackendError : public std::runtime_error {
 public:
  BackendError(const std::string& what, bool retryable)
      : std::runtime_error(what), retryable_(retryable) {}
  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

/// Connection refused, timeout, TLS failure...
class TransportError : public BackendError {
 public:
  explicit TransportError(const std::string& what) : BackendError(what, true) {}
};

class HttpStatusError : public BackendError {
 public:
  HttpStatusError(int status, const std::string& body);
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class RateLimitError : public HttpStatusError {
 public:
  explicit RateLimitError(const std::string& body) : HttpStatusError(429, body) {}
};

/// The service answered 2xx but the body does not follow the wire protocol.
class MalformedPayloadError : public BackendError {
 public:
  explicit MalformedPayloadError(const std::string& what)
      : BackendError("malformed payload: " + what, false) {}
};

}  // namespace dialectic
