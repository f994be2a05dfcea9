#ifndef DRIFTFORGE_ERROR_H_
#define DRIFTFORGE_ERROR_H_

#include <stdexcept>
#include <string>

namespace driftforge {

// Base of every error the library throws. The CLI maps the subclasses onto
// exit codes: IoError -> 2, everything else -> 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input record. `line` is 1-based, 0 when not applicable.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Raised when the trainer bridge fails or answers with an error reply.
class TrainerError : public Error {
 public:
  using Error::Error;
};

}  // namespace driftforge

#endif  // DRIFTFORGE_ERROR_H_
