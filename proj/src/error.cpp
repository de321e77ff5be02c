#include "cloudbridge/error.hpp"

namespace cloudbridge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::usage: return "usage";
    case ErrorCode::illegal_state: return "illegal-state";
    case ErrorCode::read_failure: return "read-failure";
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::config_invalid: return "config-invalid";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::io_error: return "io-error";
    case ErrorCode::unauthorized: return "unauthorized";
    case ErrorCode::bad_credentials: return "bad-credentials";
    case ErrorCode::not_found: return "not-found";
    case ErrorCode::lab_not_found: return "lab-not-found";
    case ErrorCode::interstitial_bypass_failure: return "interstitial-bypass-failure";
    case ErrorCode::connection_refused: return "connection-refused";
    case ErrorCode::session_not_created: return "session-not-created";
    case ErrorCode::timeout: return "timeout";
    case ErrorCode::protocol_error: return "protocol-error";
    case ErrorCode::transport: return "transport";
    case ErrorCode::closed_session: return "closed-session";
    case ErrorCode::stale_session: return "stale-session";
    case ErrorCode::invalid_url: return "invalid-url";
    case ErrorCode::not_found_timeout: return "not-found-timeout";
    case ErrorCode::no_such_element: return "no-such-element";
    case ErrorCode::stale_element: return "stale-element";
    case ErrorCode::element_not_interactable: return "element-not-interactable";
    case ErrorCode::unknown_key: return "unknown-key";
    case ErrorCode::no_focused_element: return "no-focused-element";
    case ErrorCode::invalid_sequence: return "invalid-sequence";
    case ErrorCode::bind_failure: return "bind-failure";
  }
  return "unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::usage:
    case ErrorCode::illegal_state:
    case ErrorCode::read_failure:
    case ErrorCode::invalid_argument:
      return exit_code::kUsage;
    case ErrorCode::config_invalid:
    case ErrorCode::parse_error:
    case ErrorCode::io_error:
      return exit_code::kConfig;
    case ErrorCode::unauthorized:
    case ErrorCode::bad_credentials:
    case ErrorCode::not_found:
    case ErrorCode::lab_not_found:
    case ErrorCode::interstitial_bypass_failure:
      return exit_code::kAuth;
    case ErrorCode::connection_refused:
    case ErrorCode::session_not_created:
    case ErrorCode::timeout:
    case ErrorCode::protocol_error:
    case ErrorCode::transport:
    case ErrorCode::closed_session:
    case ErrorCode::stale_session:
    case ErrorCode::invalid_url:
    case ErrorCode::not_found_timeout:
    case ErrorCode::no_such_element:
    case ErrorCode::stale_element:
    case ErrorCode::element_not_interactable:
    case ErrorCode::unknown_key:
    case ErrorCode::no_focused_element:
    case ErrorCode::invalid_sequence:
    case ErrorCode::bind_failure:
      return exit_code::kTransport;
  }
  return exit_code::kTransport;
}

}  // namespace cloudbridge
