#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cloudbridge {

// Every failure the library surfaces carries one of these codes. The CLI maps
// each code to exactly one process exit code (see exit_code_for).
enum class ErrorCode {
  // usage / caller mistakes
  usage,
  illegal_state,
  read_failure,
  invalid_argument,
  // configuration
  config_invalid,
  parse_error,
  io_error,
  // authentication and remote resources
  unauthorized,
  bad_credentials,
  not_found,
  lab_not_found,
  interstitial_bypass_failure,
  // wire protocol / transport
  connection_refused,
  session_not_created,
  timeout,
  protocol_error,
  transport,
  closed_session,
  stale_session,
  invalid_url,
  // page interaction
  not_found_timeout,
  no_such_element,
  stale_element,
  element_not_interactable,
  unknown_key,
  no_focused_element,
  invalid_sequence,
  // mock service
  bind_failure,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

// Process exit codes used by the command-line tool.
namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kConfig = 2;
inline constexpr int kAuth = 3;
inline constexpr int kCompile = 4;
inline constexpr int kTransport = 5;
}  // namespace exit_code

int exit_code_for(ErrorCode code);

}  // namespace cloudbridge
