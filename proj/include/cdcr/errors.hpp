#pragma once

#include <stdexcept>
#include <string>

namespace cdcr {

enum class ErrorCode {
  invalid_argument = 1,
  parse = 2,
  validation = 3,
  io = 4,
  not_found = 5,
  schema = 6,
  runtime = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct ParseError : Error {
  explicit ParseError(const std::string& m) : Error(ErrorCode::parse, m) {}
};
struct ValidationError : Error {
  explicit ValidationError(const std::string& m) : Error(ErrorCode::validation, m) {}
};
struct IoError : Error {
  explicit IoError(const std::string& m) : Error(ErrorCode::io, m) {}
};
struct NotFoundError : Error {
  explicit NotFoundError(const std::string& m) : Error(ErrorCode::not_found, m) {}
};
struct SchemaError : Error {
  explicit SchemaError(const std::string& m) : Error(ErrorCode::schema, m) {}
};
struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& m) : Error(ErrorCode::invalid_argument, m) {}
};

}  // namespace cdcr
