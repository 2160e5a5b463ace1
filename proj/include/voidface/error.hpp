#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace voidface {

// Values double as CLI exit codes; never renumber.
enum class ErrorCode : int {
  io = 2,
  format = 3,
  dimension = 4,
  landmark_bounds = 5,
  incomplete_landmarks = 6,
  conflict = 7,
  not_found = 8,
  authorization = 9,
  no_data = 10,
  incomplete_share = 11,
  capacity = 12,
  config = 13,
  ordering = 14,
  insufficient_capacity = 15,
  invalid_argument = 16,
  trainer = 17,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace voidface
