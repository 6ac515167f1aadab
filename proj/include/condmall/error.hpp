#ifndef CONDMALL_ERROR_HPP
#define CONDMALL_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace condmall {

enum class ErrorCode {
  InvalidModel,
  SizeCapExceeded,
  UnknownIndex,
  MismatchedModel,
  IndexOutOfRange,
  NotCentered,
  NegativeTime,
  DegenerateVariance,
  NotStandardized,
  NotHomogeneous,
  NotPureChaos,
  NonProductForm,
  ConditionFailed,
  MotifTooLarge,
  DecompositionTooLarge,
  EmptyFamily,
  BudgetExceeded,
  ZeroVariance,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace condmall

#endif  // CONDMALL_ERROR_HPP
