#pragma once

#include <stdexcept>
#include <string>

namespace chase {

// Malformed or inconsistent input (CLI exit code 2).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Trace retrieval failed (network, HTTP status, schema).
class FetchError : public InputError {
 public:
  FetchError(const std::string& what, int status = 0)
      : InputError(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

// Failure while replaying a job (CLI exit code 3).
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace chase
