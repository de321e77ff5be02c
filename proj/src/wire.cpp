#include "cloudbridge/wire.hpp"

#include <mutex>

#include "cloudbridge/error.hpp"
#include "cloudbridge/util.hpp"
#include "httplib.h"

namespace cloudbridge::wire {
namespace {

std::string_view vendor_options_key(std::string_view browser) {
  if (browser == "firefox") return "moz:firefoxOptions";
  if (browser == "msedge" || browser == "MicrosoftEdge") return "ms:edgeOptions";
  return "goog:chromeOptions";
}

std::string_view headless_argument(std::string_view browser) {
  return browser == "firefox" ? "-headless" : "--headless";
}

ErrorCode map_w3c_error(std::string_view error, std::string_view message) {
  if (error == "no such element") return ErrorCode::no_such_element;
  if (error == "stale element reference") return ErrorCode::stale_element;
  if (error == "element not interactable") {
    return message.starts_with("no focused element") ? ErrorCode::no_focused_element
                                                    : ErrorCode::element_not_interactable;
  }
  if (error == "invalid session id") return ErrorCode::stale_session;
  if (error == "session not created") return ErrorCode::session_not_created;
  if (error == "timeout" || error == "script timeout") return ErrorCode::timeout;
  if (error == "invalid argument") {
    return message.starts_with("unknown key") ? ErrorCode::unknown_key
                                              : ErrorCode::invalid_argument;
  }
  return ErrorCode::protocol_error;
}

}  // namespace

// ---------------------------------------------------------------------------
// SessionCapabilities

void SessionCapabilities::validate() const {
  if (browser_name.empty()) {
    throw Error(ErrorCode::invalid_argument, "browser_name must not be empty");
  }
  if (implicit_wait.count() < 0) {
    throw Error(ErrorCode::invalid_argument, "implicit_wait_ms must be >= 0");
  }
}

json SessionCapabilities::to_payload() const {
  json args = json::array();
  if (headless) args.push_back(headless_argument(browser_name));
  json always = {
      {"browserName", browser_name},
      {"acceptInsecureCerts", accept_insecure_certs},
      {"timeouts", {{"implicit", implicit_wait.count()}}},
      {std::string(vendor_options_key(browser_name)), {{"args", args}}},
  };
  return {{"capabilities", {{"alwaysMatch", always}, {"firstMatch", json::array({json::object()})}}}};
}

SessionCapabilities SessionCapabilities::from_payload(const json& payload) {
  const json* caps = &payload;
  if (payload.contains("capabilities")) {
    caps = &payload.at("capabilities");
    if (caps->contains("alwaysMatch")) caps = &caps->at("alwaysMatch");
  }
  if (!caps->is_object()) {
    throw Error(ErrorCode::protocol_error, "capabilities must be an object");
  }
  SessionCapabilities out;
  out.browser_name = caps->value("browserName", std::string("chrome"));
  out.accept_insecure_certs = caps->value("acceptInsecureCerts", false);
  if (auto t = caps->find("timeouts"); t != caps->end() && t->contains("implicit")) {
    out.implicit_wait = milliseconds(t->at("implicit").get<long long>());
  }
  out.headless = false;
  for (const auto& [key, options] : caps->items()) {
    if (!key.ends_with("Options") || !options.is_object()) continue;
    auto args = options.find("args");
    if (args == options.end() || !args->is_array()) continue;
    for (const auto& arg : *args) {
      if (arg.is_string() && arg.get<std::string>().find("headless") != std::string::npos) {
        out.headless = true;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// WireCommand / WireResponse

std::string_view to_string(HttpMethod method) {
  switch (method) {
    case HttpMethod::get: return "GET";
    case HttpMethod::post: return "POST";
    case HttpMethod::del: return "DELETE";
  }
  return "GET";
}

std::string WireCommand::resolve(std::string_view session_id) const {
  std::string out;
  if (scope == CommandScope::session) {
    out = "/session/" + std::string(session_id);
  }
  std::size_t pos = 0;
  while (pos < path.size()) {
    auto open = path.find('{', pos);
    if (open == std::string::npos) {
      out.append(path, pos);
      break;
    }
    out.append(path, pos, open - pos);
    auto close = path.find('}', open);
    if (close == std::string::npos) {
      throw Error(ErrorCode::protocol_error, "unterminated placeholder in '" + path + "'");
    }
    std::string name = path.substr(open + 1, close - open - 1);
    if (name == "sid") {
      out += session_id;
    } else if (auto it = params.find(name); it != params.end()) {
      out += it->second;
    } else {
      throw Error(ErrorCode::protocol_error,
                  "unresolved placeholder {" + name + "} in '" + path + "'");
    }
    pos = close + 1;
  }
  return out;
}

const json& WireResponse::value_or_throw(std::string_view context) const {
  if (ok()) return value();
  const auto& err = error();
  throw Error(map_w3c_error(err.error, err.message),
              std::string(context) + ": " + err.error +
                  (err.message.empty() ? "" : " (" + err.message + ")"));
}

WireResponse WireResponse::parse(int status, std::string_view body) {
  json doc = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("value")) {
    throw Error(ErrorCode::protocol_error,
                "HTTP " + std::to_string(status) + ": response is not a JSON object with \"value\"");
  }
  WireResponse out;
  out.status = status;
  const json& value = doc.at("value");
  bool is_error = status >= 400 || (value.is_object() && value.contains("error") &&
                                    value.at("error").is_string());
  if (is_error) {
    WireError err;
    if (value.is_object()) {
      err.error = value.value("error", std::string("unknown error"));
      err.message = value.value("message", std::string());
    } else {
      err.error = "unknown error";
    }
    out.payload = std::move(err);
  } else {
    out.payload = value;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transport

namespace detail {

class HttpTransport {
 public:
  HttpTransport(std::string_view endpoint, SessionOptions opts)
      : options(std::move(opts)) {
    UrlParts parts = parse_url(endpoint);
    prefix = parts.path == "/" ? "" : parts.path;
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    client = std::make_unique<httplib::Client>(origin_of(parts));
    client->set_keep_alive(true);
    client->set_tcp_nodelay(true);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(options.command_timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options.command_timeout - secs);
    client->set_read_timeout(secs.count(), usecs.count());
    client->set_write_timeout(secs.count(), usecs.count());
    client->set_connection_timeout(std::min<long long>(secs.count(), 10), 0);
  }

  WireResponse send(HttpMethod method, const std::string& path, const json& body) {
    std::lock_guard lock(mu);
    const std::string full = prefix + path;
    auto started = std::chrono::steady_clock::now();
    httplib::Result result;
    switch (method) {
      case HttpMethod::get:
        result = client->Get(full);
        break;
      case HttpMethod::post:
        result = client->Post(full, body.dump(), "application/json");
        break;
      case HttpMethod::del:
        result = client->Delete(full);
        break;
    }
    if (!result) {
      auto err = result.error();
      if (options.trace) {
        options.trace(std::string(to_string(method)) + " " + path + " -> " + httplib::to_string(err));
      }
      if (err == httplib::Error::Connection) {
        throw Error(ErrorCode::connection_refused,
                    "cannot reach automation server (" + httplib::to_string(err) + ")");
      }
      auto elapsed = std::chrono::steady_clock::now() - started;
      if (err == httplib::Error::ConnectionTimeout ||
          (err == httplib::Error::Read && elapsed >= options.command_timeout)) {
        throw Error(ErrorCode::timeout, std::string(to_string(method)) + " " + path +
                                            " did not answer within " +
                                            std::to_string(options.command_timeout.count()) + " ms");
      }
      throw Error(ErrorCode::transport,
                  std::string(to_string(method)) + " " + path + ": " + httplib::to_string(err));
    }
    if (options.trace) {
      options.trace(std::string(to_string(method)) + " " + path + " -> " + std::to_string(result->status));
    }
    return WireResponse::parse(result->status, result->body);
  }

  SessionOptions options;
  std::string prefix;
  std::unique_ptr<httplib::Client> client;
  std::mutex mu;
};

}  // namespace detail

using detail::HttpTransport;

// ---------------------------------------------------------------------------
// Session

Session::Session(std::string endpoint, std::string id, SessionCapabilities caps,
                 std::unique_ptr<HttpTransport> transport)
    : endpoint_(std::move(endpoint)),
      id_(std::move(id)),
      caps_(std::move(caps)),
      active_implicit_wait_(caps_.implicit_wait),
      transport_(std::move(transport)) {}

Session::Session(Session&&) noexcept = default;
Session& Session::operator=(Session&&) noexcept = default;
Session::~Session() = default;

Session new_session(std::string_view endpoint, const SessionCapabilities& caps,
                    SessionOptions options) {
  caps.validate();
  auto transport = std::make_unique<HttpTransport>(endpoint, std::move(options));
  WireResponse response = transport->send(HttpMethod::post, "/session", caps.to_payload());
  const json& value = response.value_or_throw("new session");
  if (!value.is_object() || !value.contains("sessionId") || !value.at("sessionId").is_string() ||
      value.at("sessionId").get<std::string>().empty()) {
    throw Error(ErrorCode::protocol_error, "new session response lacks a sessionId");
  }
  SessionCapabilities echoed = caps;
  if (auto it = value.find("capabilities"); it != value.end() && it->is_object()) {
    echoed = SessionCapabilities::from_payload(*it);
  }
  return Session(std::string(endpoint), value.at("sessionId").get<std::string>(),
                 std::move(echoed), std::move(transport));
}

Session Session::attach(std::string endpoint, std::string session_id, SessionCapabilities caps,
                        SessionOptions options) {
  if (session_id.empty()) {
    throw Error(ErrorCode::invalid_argument, "session id must not be empty");
  }
  auto transport = std::make_unique<HttpTransport>(endpoint, std::move(options));
  Session session(std::move(endpoint), std::move(session_id), std::move(caps), std::move(transport));
  // Any session-scoped command proves liveness; invalid ids map to stale_session.
  session.current_url();
  return session;
}

WireResponse Session::execute_command(const WireCommand& cmd) {
  if (!is_open() || !transport_) {
    throw Error(ErrorCode::closed_session, "session is closed");
  }
  std::string path = cmd.resolve(id_);
  return transport_->send(cmd.method, path, cmd.body);
}

void Session::set_implicit_wait(milliseconds wait) {
  if (wait.count() < 0) {
    throw Error(ErrorCode::invalid_argument, "implicit wait must be >= 0");
  }
  WireCommand cmd{HttpMethod::post, "/timeouts", {{"implicit", wait.count()}}};
  execute_command(cmd).value_or_throw("set timeouts");
  active_implicit_wait_ = wait;
}

void Session::navigate(std::string_view url) {
  if (!is_open()) throw Error(ErrorCode::closed_session, "session is closed");
  parse_url(url);
  WireCommand cmd{HttpMethod::post, "/url", {{"url", std::string(url)}}};
  execute_command(cmd).value_or_throw("navigate");
}

std::string Session::current_url() {
  WireCommand cmd{HttpMethod::get, "/url"};
  auto response = execute_command(cmd);
  const json& value = response.value_or_throw("get current url");
  if (!value.is_string()) {
    throw Error(ErrorCode::protocol_error, "current url is not a string");
  }
  return value.get<std::string>();
}

void Session::delete_session() {
  if (!is_open()) return;
  state_ = SessionState::closed;
  try {
    transport_->send(HttpMethod::del, "/session/" + id_, json::object());
  } catch (const Error& e) {
    transport_.reset();
    throw Error(ErrorCode::transport, std::string("delete session: ") + e.what());
  }
  transport_.reset();
}

WireResponse query_status(std::string_view endpoint, milliseconds timeout) {
  SessionOptions options;
  options.command_timeout = timeout;
  HttpTransport transport(endpoint, std::move(options));
  return transport.send(HttpMethod::get, "/status", json::object());
}

}  // namespace cloudbridge::wire
