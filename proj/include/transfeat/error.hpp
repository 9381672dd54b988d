#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace transfeat {

// Base for every error the library raises. kind() is a stable identifier
// used as the prefix of CLI diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("IoError", message) {}
};

class MissingAttribute : public Error {
 public:
  explicit MissingAttribute(const std::string& name)
      : Error("MissingAttribute", "missing attribute '" + name + "'"), name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : Error("ParseError", "line " + std::to_string(line) + ": " + reason),
        line_(line),
        reason_(reason) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

class OutOfOrderError : public Error {
 public:
  OutOfOrderError(const std::string& source, std::size_t line)
      : Error("OutOfOrderError",
              "source '" + source + "' record " + std::to_string(line) +
                  ": timestamp decreases"),
        source_(source),
        line_(line) {}
  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

class EmptyStream : public Error {
 public:
  EmptyStream() : Error("EmptyStream", "event stream is empty") {}
};

class VersionMismatch : public Error {
 public:
  explicit VersionMismatch(const std::string& message)
      : Error("VersionMismatch", message) {}
};

class DuplicateLabel : public Error {
 public:
  explicit DuplicateLabel(const std::string& label)
      : Error("DuplicateLabel", "duplicate visible label '" + label + "'") {}
};

class UnknownCase : public Error {
 public:
  explicit UnknownCase(const std::string& case_id)
      : Error("UnknownCase", "case '" + case_id + "' is not open") {}
};

class FormatError : public Error {
 public:
  FormatError(std::size_t line, const std::string& reason)
      : Error("FormatError", "line " + std::to_string(line) + ": " + reason),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& message)
      : Error("DimensionMismatch", message) {}
};

class SingleClassError : public Error {
 public:
  SingleClassError()
      : Error("SingleClassError", "labels contain only one class") {}
};

class InvalidTemplate : public Error {
 public:
  explicit InvalidTemplate(const std::string& message)
      : Error("InvalidTemplate", message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("ConfigError", message) {}
};

}  // namespace transfeat
