#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace semiauto {

enum class ErrorCode {
  kMalformedInput,
  kNotInControl,
  kAuthorization,
  kOrdering,
  kCorruptLog,
  kScript,
  kEmptyInput,
  kIncompleteRecord,
  kUndefinedCorrelation,
  kShape,
  kJoin,
  kConfig,
  kNoSuchSession,
  kSchema,
};

// Wire-level name, e.g. "not_in_control".
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace semiauto
