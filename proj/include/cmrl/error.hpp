#pragma once

#include <stdexcept>
#include <string>

namespace cmrl {

/// Broad failure class; the CLI maps each to a distinct exit code.
enum class ErrorCategory { config, data, numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define CMRL_DEFINE_ERROR(Name, Category)                               \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& what)                              \
        : Error(ErrorCategory::Category, std::string(#Name ": ") + what) {} \
  };

CMRL_DEFINE_ERROR(ConfigError, config)

CMRL_DEFINE_ERROR(SchemaViolation, data)
CMRL_DEFINE_ERROR(EmptyDataset, data)
CMRL_DEFINE_ERROR(ParseError, data)
CMRL_DEFINE_ERROR(IoError, data)
CMRL_DEFINE_ERROR(IndexError, data)
CMRL_DEFINE_ERROR(DimensionMismatch, data)
CMRL_DEFINE_ERROR(SteppedAfterDone, data)
CMRL_DEFINE_ERROR(UnknownState, data)

CMRL_DEFINE_ERROR(AllZeroWeights, numeric)
CMRL_DEFINE_ERROR(MalformedPmf, numeric)
CMRL_DEFINE_ERROR(DegenerateBall, numeric)
CMRL_DEFINE_ERROR(NoFiniteGain, numeric)
CMRL_DEFINE_ERROR(NonconvergenceGuard, numeric)
CMRL_DEFINE_ERROR(ClassAbsent, numeric)

#undef CMRL_DEFINE_ERROR

}  // namespace cmrl
