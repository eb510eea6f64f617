#pragma once

#include <stdexcept>
#include <string>

namespace codemap {

// Exit-code classes used by the CLI: 1 usage, 2 I/O, 3 data/validation.
enum class ErrorClass { usage = 1, io = 2, data = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what)
      : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const noexcept { return cls_; }
  int exit_code() const noexcept { return static_cast<int>(cls_); }

 private:
  ErrorClass cls_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& what) : Error(ErrorClass::usage, what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorClass::io, what) {}
};

struct ArgumentError : Error {
  explicit ArgumentError(const std::string& what) : Error(ErrorClass::data, what) {}
};

// Malformed input text. Carries the 1-based line (and column when known).
class ParseError : public Error {
 public:
  ParseError(const std::string& source, int line, int column, const std::string& msg)
      : Error(ErrorClass::data, format(source, line, column, msg)),
        line_(line),
        column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& source, int line, int column,
                            const std::string& msg) {
    std::string out = source.empty() ? std::string("<input>") : source;
    out += ":" + std::to_string(line);
    if (column > 0) out += ":" + std::to_string(column);
    return out + ": " + msg;
  }
  int line_;
  int column_;
};

}  // namespace codemap
