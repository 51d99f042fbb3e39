#pragma once

#include <stdexcept>
#include <string>

namespace irm {

// Input violates a documented precondition (bad span, empty dataset, ...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Matrix dimensions do not line up.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A backend could not be reached or ran out of retries.
class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& message, std::string request_id)
      : std::runtime_error(message), request_id_(std::move(request_id)) {}

  const std::string& request_id() const noexcept { return request_id_; }

 private:
  std::string request_id_;
};

// A backend answered, but not with something we can use.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(const std::string& message, int status, std::string body)
      : std::runtime_error(message), status_(status), body_(std::move(body)) {}

  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

}  // namespace irm
