#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace converse {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CONVERSE_DEFINE_ERROR(Name)        \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  };

CONVERSE_DEFINE_ERROR(InvalidArgument)
CONVERSE_DEFINE_ERROR(EmptyCandidateSet)
CONVERSE_DEFINE_ERROR(NoUserUtterance)
CONVERSE_DEFINE_ERROR(LayoutMismatch)
CONVERSE_DEFINE_ERROR(EmptySplit)
CONVERSE_DEFINE_ERROR(TooFewExamples)
CONVERSE_DEFINE_ERROR(ZeroBehaviorProbability)
CONVERSE_DEFINE_ERROR(EmptyLogs)
CONVERSE_DEFINE_ERROR(BackendUnavailable)
CONVERSE_DEFINE_ERROR(SearchUnavailable)
CONVERSE_DEFINE_ERROR(ProtocolError)

#undef CONVERSE_DEFINE_ERROR

/// Raised by line-oriented readers; carries the 1-based offending line.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit SchemaError(const std::string& what) : Error(what), line_(0) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace converse
