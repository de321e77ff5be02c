#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <variant>

#include "json.hpp"

namespace cloudbridge::wire {

using json = nlohmann::json;
using std::chrono::milliseconds;

// W3C web element identifier key.
inline constexpr std::string_view kElementKey = "element-6066-11e4-a52e-4f735466cecf";

inline constexpr milliseconds kDefaultCommandTimeout{30000};

struct SessionCapabilities {
  std::string browser_name = "chrome";
  bool headless = false;
  milliseconds implicit_wait{0};
  bool accept_insecure_certs = false;

  // Throws Error(invalid_argument).
  void validate() const;

  // Body of POST /session. The vendor options carry a headless argument iff
  // `headless` is set.
  json to_payload() const;

  // Reads either a POST /session body or the capabilities object a remote
  // end echoes back.
  static SessionCapabilities from_payload(const json& payload);

  friend bool operator==(const SessionCapabilities&, const SessionCapabilities&) = default;
};

enum class HttpMethod { get, post, del };
std::string_view to_string(HttpMethod method);

enum class CommandScope {
  session,  // path is relative to /session/{sid}
  root,     // path is relative to the automation server root
};

struct WireCommand {
  HttpMethod method = HttpMethod::get;
  std::string path;  // may contain {name} placeholders bound by `params`
  json body = json::object();
  std::map<std::string, std::string> params;
  CommandScope scope = CommandScope::session;

  // Substitutes placeholders and prefixes the session path. Throws
  // Error(protocol_error) if a placeholder is left unresolved.
  std::string resolve(std::string_view session_id) const;
};

struct WireError {
  std::string error;  // W3C error code, e.g. "no such element"
  std::string message;
};

struct WireResponse {
  int status = 0;
  std::variant<json, WireError> payload;

  bool ok() const { return std::holds_alternative<json>(payload); }
  const json& value() const { return std::get<json>(payload); }
  const WireError& error() const { return std::get<WireError>(payload); }

  // Returns the success value, or throws the Error mapped from the W3C error
  // code. `context` prefixes the message.
  const json& value_or_throw(std::string_view context) const;

  // Parses an HTTP response body. Throws Error(protocol_error) when the body
  // is not a JSON object with a "value" member.
  static WireResponse parse(int status, std::string_view body);
};

enum class SessionState { open, closed };

namespace detail {
class HttpTransport;
}

struct SessionOptions {
  milliseconds command_timeout = kDefaultCommandTimeout;
  // Receives one line per exchange ("POST /session/x/url -> 200"). Bodies are
  // never passed to the trace.
  std::function<void(std::string_view)> trace;
};

// A live session against a remote automation endpoint. Commands on one
// session are strictly serialized: execute_command returns only after the
// HTTP exchange has completed. Movable, not copyable.
class Session {
 public:
  Session(Session&&) noexcept;
  Session& operator=(Session&&) noexcept;
  ~Session();

  // Re-binds to a session created earlier (possibly by another process).
  // Verifies the remote still knows the id; throws Error(stale_session) if not.
  static Session attach(std::string endpoint, std::string session_id,
                        SessionCapabilities caps, SessionOptions options = {});

  const std::string& id() const { return id_; }
  const std::string& endpoint() const { return endpoint_; }
  // Capabilities as echoed by the remote end.
  const SessionCapabilities& capabilities() const { return caps_; }
  SessionState state() const { return state_; }
  bool is_open() const { return state_ == SessionState::open; }

  // Implicit wait currently installed on the remote end. Starts at
  // capabilities().implicit_wait.
  milliseconds active_implicit_wait() const { return active_implicit_wait_; }
  void set_implicit_wait(milliseconds wait);

  WireResponse execute_command(const WireCommand& cmd);

  // Validates `url` locally (Error(invalid_url)) before sending.
  void navigate(std::string_view url);
  std::string current_url();

  // Releases the remote session. Idempotent; on transport failure the local
  // state still becomes closed and Error(transport) is thrown.
  void delete_session();

 private:
  friend Session new_session(std::string_view, const SessionCapabilities&, SessionOptions);

  Session(std::string endpoint, std::string id, SessionCapabilities caps,
          std::unique_ptr<detail::HttpTransport> transport);

  std::string endpoint_;
  std::string id_;
  SessionCapabilities caps_;
  SessionState state_ = SessionState::open;
  milliseconds active_implicit_wait_{0};
  std::unique_ptr<detail::HttpTransport> transport_;
};

// POST /session. Throws Error(connection_refused) when nothing listens at
// `endpoint`, Error(session_not_created) when the remote rejects `caps`.
Session new_session(std::string_view endpoint, const SessionCapabilities& caps,
                    SessionOptions options = {});

// GET /status without a session.
WireResponse query_status(std::string_view endpoint, milliseconds timeout = kDefaultCommandTimeout);

}  // namespace cloudbridge::wire
