#pragma once

#include <stdexcept>
#include <string>

namespace stground {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimMismatchError : Error {
  explicit DimMismatchError(const std::string& msg) : Error("dim mismatch: " + msg) {}
};

struct ZeroVectorError : Error {
  explicit ZeroVectorError(const std::string& msg) : Error("zero vector: " + msg) {}
};

struct NonFiniteError : Error {
  explicit NonFiniteError(const std::string& msg) : Error("non-finite value: " + msg) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& msg) : Error("parse error: " + msg) {}
};

struct SchemaError : Error {
  explicit SchemaError(const std::string& msg) : Error("schema error: " + msg) {}
};

struct BadParamsError : Error {
  explicit BadParamsError(const std::string& msg) : Error("bad parameters: " + msg) {}
};

struct NoSamplesError : Error {
  explicit NoSamplesError(const std::string& msg) : Error("no samples: " + msg) {}
};

struct NoPointsError : Error {
  explicit NoPointsError(const std::string& msg) : Error("no points: " + msg) {}
};

struct EmptyQueryError : Error {
  explicit EmptyQueryError(const std::string& msg) : Error("empty query: " + msg) {}
};

struct InfeasibleAlignmentError : Error {
  explicit InfeasibleAlignmentError(const std::string& msg)
      : Error("infeasible alignment: " + msg) {}
};

struct BadTError : Error {
  explicit BadTError(const std::string& msg) : Error("bad T: " + msg) {}
};

}  // namespace stground
