#include "cloudbridge/mock/server.hpp"

#include <sys/socket.h>

#include <mutex>
#include <regex>
#include <thread>

#include "cloudbridge/error.hpp"
#include "cloudbridge/util.hpp"
#include "httplib.h"

namespace cloudbridge::mock {
namespace {

using httplib::Request;
using httplib::Response;
using Handler = std::function<void(const Request&, Response&)>;

void reply(Response& res, int status, const json& value) {
  res.status = status;
  res.set_content(json{{"value", value}}.dump(), "application/json; charset=utf-8");
}

void reply_error(Response& res, const MockError& err) {
  reply(res, err.http_status,
        {{"error", err.error}, {"message", err.message}, {"stacktrace", ""}});
}

json parse_body(const Request& req) {
  if (req.body.empty()) return json::object();
  json body = json::parse(req.body, nullptr, /*allow_exceptions=*/false);
  if (body.is_discarded() || !body.is_object()) {
    throw MockError{400, "invalid argument", "request body must be a JSON object"};
  }
  return body;
}

std::string session_of(const std::string& path) {
  static const std::regex kSession(R"(^/session/([^/]+))");
  std::smatch m;
  if (std::regex_search(path, m, kSession)) return m[1].str();
  return {};
}

json echo_capabilities(const json& payload, const wire::SessionCapabilities& caps) {
  json echo = json::object();
  if (payload.contains("capabilities") && payload.at("capabilities").contains("alwaysMatch")) {
    echo = payload.at("capabilities").at("alwaysMatch");
  }
  echo["browserName"] = caps.browser_name;
  echo["acceptInsecureCerts"] = caps.accept_insecure_certs;
  echo["timeouts"] = {{"implicit", caps.implicit_wait.count()}, {"pageLoad", 300000}, {"script", 30000}};
  echo["pageLoadStrategy"] = "normal";
  echo["cloudbridge:mock"] = true;
  return echo;
}

}  // namespace

json StateSnapshot::to_json() const {
  json log = json::array();
  for (const auto& e : request_log) {
    log.push_back({{"seq", e.seq},
                   {"timestamp_ns", e.timestamp_ns},
                   {"phase", e.phase == RequestLogEntry::Phase::request ? "request" : "response"},
                   {"method", e.method},
                   {"path", e.path},
                   {"session_id", e.session_id},
                   {"status", e.status},
                   {"body_digest", e.body_digest}});
  }
  json ev = json::array();
  for (const auto& e : events) {
    ev.push_back({{"seq", e.seq},
                  {"session_id", e.session_id},
                  {"type", e.type},
                  {"target", e.target},
                  {"detail", e.detail}});
  }
  json acts = json::array();
  for (const auto& a : actions) {
    acts.push_back({{"seq", a.seq}, {"session_id", a.session_id}, {"steps", a.steps}, {"applied", a.applied}});
  }
  return {{"scenario", mock::to_json(scenario)},
          {"sessions", sessions},
          {"capability_log", capability_log},
          {"request_log", log},
          {"events", ev},
          {"actions", acts},
          {"pages", pages}};
}

struct MockServer::Impl {
  explicit Impl(ServiceScenario scenario) : model(std::move(scenario)), epoch(Clock::now()) {}

  void log(RequestLogEntry::Phase phase, const std::string& method, const std::string& path,
           int status, std::string_view body) {
    std::lock_guard lock(mu);
    std::int64_t ts = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - epoch).count();
    if (ts <= last_ts) ts = last_ts + 1;
    last_ts = ts;
    request_log.push_back({request_log.size() + 1, ts, phase, method, path, session_of(path), status,
                           fnv1a_hex(body)});
  }

  // Wraps a handler with error mapping, and with request/response logging
  // unless the route is a /mock/ control endpoint.
  Handler wrap(Handler inner, bool logged = true) {
    return [this, inner = std::move(inner), logged](const Request& req, Response& res) {
      if (logged) log(RequestLogEntry::Phase::request, req.method, req.path, 0, req.body);
      try {
        inner(req, res);
      } catch (const MockError& e) {
        reply_error(res, e);
      } catch (const json::exception& e) {
        reply_error(res, {400, "invalid argument", e.what()});
      } catch (const Error& e) {
        reply_error(res, {400, "invalid argument", e.detail()});
      } catch (const std::exception& e) {
        reply_error(res, {500, "unknown error", e.what()});
      }
      if (logged) log(RequestLogEntry::Phase::response, req.method, req.path, res.status, res.body);
    };
  }

  void find_element(const Request& req, Response& res) {
    const std::string sid = req.matches[1];
    json body = parse_body(req);
    if (!body.contains("using") || !body.contains("value") || !body.at("using").is_string() ||
        !body.at("value").is_string()) {
      throw MockError{400, "invalid argument", "find element needs string 'using' and 'value'"};
    }
    const std::string strategy = body.at("using");
    const std::string expression = body.at("value");

    const auto started = Clock::now();
    TimePoint deadline;
    TimePoint ready;
    {
      std::lock_guard lock(mu);
      deadline = started + model.implicit_wait(sid);
      ready = model.page_ready_at(sid);
    }
    // Implicit waiting resolves only once the whole page has loaded (or the
    // implicit timeout runs out); with a zero implicit wait it is one lookup.
    if (deadline > started) std::this_thread::sleep_until(std::min(ready, deadline));
    for (;;) {
      {
        std::lock_guard lock(mu);
        if (auto found = model.find(sid, strategy, expression, Clock::now())) {
          reply(res, 200, {{std::string(wire::kElementKey), found->element_id},
                           {"cloudbridge:kind", page::to_string(found->kind)}});
          return;
        }
      }
      auto now = Clock::now();
      if (now >= deadline) break;
      std::this_thread::sleep_until(std::min(deadline, now + std::chrono::milliseconds(5)));
    }
    throw MockError{404, "no such element", "no element matches " + strategy + " '" + expression + "'"};
  }

  void install_routes() {
    http.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    // Small request/response pairs; without this every exchange waits out a
    // delayed ACK.
    http.set_tcp_nodelay(true);

    http.Get("/status", wrap([](const Request&, Response& res) {
               reply(res, 200, {{"ready", true}, {"message", "cloudbridge mock ready"}});
             }));

    http.Post("/session", wrap([this](const Request& req, Response& res) {
                json body = parse_body(req);
                std::lock_guard lock(mu);
                std::string id = model.create_session(body, Clock::now());
                auto caps = wire::SessionCapabilities::from_payload(body);
                reply(res, 200, {{"sessionId", id}, {"capabilities", echo_capabilities(body, caps)}});
              }));

    http.Delete(R"(/session/([^/]+))", wrap([this](const Request& req, Response& res) {
                  std::lock_guard lock(mu);
                  model.delete_session(req.matches[1].str());
                  reply(res, 200, nullptr);
                }));

    http.Post(R"(/session/([^/]+)/url)", wrap([this](const Request& req, Response& res) {
                json body = parse_body(req);
                if (!body.contains("url") || !body.at("url").is_string()) {
                  throw MockError{400, "invalid argument", "missing 'url'"};
                }
                std::lock_guard lock(mu);
                model.navigate(req.matches[1].str(), body.at("url").get<std::string>(), Clock::now());
                reply(res, 200, nullptr);
              }));

    http.Get(R"(/session/([^/]+)/url)", wrap([this](const Request& req, Response& res) {
               std::lock_guard lock(mu);
               reply(res, 200, model.current_url(req.matches[1].str()));
             }));

    http.Post(R"(/session/([^/]+)/timeouts)", wrap([this](const Request& req, Response& res) {
                json body = parse_body(req);
                std::lock_guard lock(mu);
                const std::string sid = req.matches[1];
                if (!model.has_session(sid)) throw MockError{404, "invalid session id", "no session " + sid};
                if (body.contains("implicit")) {
                  const json& v = body.at("implicit");
                  if (!v.is_number_integer() || v.get<long long>() < 0) {
                    throw MockError{400, "invalid argument", "implicit must be a non-negative integer"};
                  }
                  model.set_implicit_wait(sid, milliseconds(v.get<long long>()));
                }
                reply(res, 200, nullptr);
              }));

    http.Post(R"(/session/([^/]+)/element)",
              wrap([this](const Request& req, Response& res) { find_element(req, res); }));

    http.Post(R"(/session/([^/]+)/element/([^/]+)/click)", wrap([this](const Request& req, Response& res) {
                std::lock_guard lock(mu);
                model.element_click(req.matches[1].str(), req.matches[2].str(), Clock::now());
                reply(res, 200, nullptr);
              }));

    http.Post(R"(/session/([^/]+)/element/([^/]+)/value)", wrap([this](const Request& req, Response& res) {
                json body = parse_body(req);
                if (!body.contains("text") || !body.at("text").is_string()) {
                  throw MockError{400, "invalid argument", "missing 'text'"};
                }
                std::lock_guard lock(mu);
                model.element_send_keys(req.matches[1].str(), req.matches[2].str(),
                                        body.at("text").get<std::string>(), Clock::now());
                reply(res, 200, nullptr);
              }));

    http.Get(R"(/session/([^/]+)/element/([^/]+)/text)", wrap([this](const Request& req, Response& res) {
               std::lock_guard lock(mu);
               reply(res, 200, model.element_text(req.matches[1].str(), req.matches[2].str(), Clock::now()));
             }));

    http.Post(R"(/session/([^/]+)/actions)", wrap([this](const Request& req, Response& res) {
                json body = parse_body(req);
                const std::string sid = req.matches[1];
                std::lock_guard lock(mu);
                if (!model.has_session(sid)) throw MockError{404, "invalid session id", "no session " + sid};
                auto primitives = decode_actions(body);
                actions.push_back({actions.size() + 1, sid, model.describe(sid, primitives), false});
                model.perform(sid, primitives, Clock::now());
                actions.back().applied = true;
                reply(res, 200, nullptr);
              }));

    http.Get(R"(/api/labs/([^/]+)/program)", wrap([this](const Request& req, Response& res) {
               std::optional<std::pair<std::string, std::string>> basic;
               std::optional<std::string> token;
               if (req.has_header("X-Session-Token")) token = req.get_header_value("X-Session-Token");
               std::string auth = req.get_header_value("Authorization");
               if (auth.starts_with("Basic ")) {
                 std::string decoded;
                 if (base64_decode(auth.substr(6), decoded)) {
                   auto colon = decoded.find(':');
                   if (colon != std::string::npos) {
                     basic.emplace(decoded.substr(0, colon), decoded.substr(colon + 1));
                   }
                 }
               }
               std::string code;
               SiteModel::PullStatus status;
               {
                 std::lock_guard lock(mu);
                 status = model.pull(basic, token, req.matches[1].str(), code);
               }
               res.set_header("Content-Type", "application/json; charset=utf-8");
               switch (status) {
                 case SiteModel::PullStatus::ok:
                   res.status = 200;
                   res.set_content(json{{"code", code}}.dump(), "application/json; charset=utf-8");
                   break;
                 case SiteModel::PullStatus::unauthorized:
                   res.status = 401;
                   res.set_header("WWW-Authenticate", "Basic realm=\"labs\"");
                   res.set_content(json{{"error", "unauthorized"}}.dump(), "application/json");
                   break;
                 case SiteModel::PullStatus::not_found:
                   res.status = 404;
                   res.set_content(json{{"error", "not found"}}.dump(), "application/json");
                   break;
               }
             }));

    http.Put(R"(/mock/session/([^/]+)/clipboard)", wrap(
                                                       [this](const Request& req, Response& res) {
                                                         json body = parse_body(req);
                                                         if (!body.contains("text") || !body.at("text").is_string()) {
                                                           throw MockError{400, "invalid argument", "missing 'text'"};
                                                         }
                                                         std::lock_guard lock(mu);
                                                         model.set_clipboard(req.matches[1].str(),
                                                                             body.at("text").get<std::string>());
                                                         reply(res, 200, nullptr);
                                                       },
                                                       /*logged=*/false));

    http.Get("/mock/state", wrap([this](const Request&, Response& res) { reply(res, 200, snapshot().to_json()); },
                                 /*logged=*/false));

    http.Post("/mock/scenario", wrap(
                                    [this](const Request& req, Response& res) {
                                      json body = json::parse(req.body);
                                      ServiceScenario scenario = scenario_from_json(body);
                                      reset(std::move(scenario));
                                      reply(res, 200, nullptr);
                                    },
                                    /*logged=*/false));

    http.set_error_handler([](const Request& req, Response& res) {
      if (!res.body.empty()) return;
      reply_error(res, {404, "unknown command", req.method + " " + req.path});
    });
  }

  StateSnapshot snapshot() {
    std::lock_guard lock(mu);
    model.advance(Clock::now());
    StateSnapshot s;
    s.scenario = model.scenario();
    s.sessions = model.session_ids();
    s.capability_log = model.capability_log();
    s.request_log = request_log;
    s.events = model.events();
    s.actions = actions;
    for (const auto& id : s.sessions) s.pages[id] = model.dump_page(id);
    return s;
  }

  void reset(ServiceScenario scenario) {
    std::lock_guard lock(mu);
    model = SiteModel(std::move(scenario));
    request_log.clear();
    actions.clear();
  }

  httplib::Server http;
  std::thread thread;
  std::string host;
  int port = 0;

  std::mutex mu;
  SiteModel model;
  std::vector<RequestLogEntry> request_log;
  std::vector<ActionsRecord> actions;
  TimePoint epoch;
  std::int64_t last_ts = 0;
};

MockServer::MockServer(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}

MockServer::~MockServer() { stop(); }

int MockServer::port() const { return impl_->port; }

std::string MockServer::url() const { return "http://" + impl_->host + ":" + std::to_string(impl_->port); }

StateSnapshot MockServer::dump_state() const { return impl_->snapshot(); }

void MockServer::load_scenario(ServiceScenario scenario) {
  scenario.validate();
  impl_->reset(std::move(scenario));
}

void MockServer::stop() {
  if (!impl_ || !impl_->thread.joinable()) return;
  impl_->http.stop();
  impl_->thread.join();
}

std::unique_ptr<MockServer> serve(ServiceScenario scenario, std::string_view bind_address) {
  scenario.validate();
  std::string host = "127.0.0.1";
  int port = 0;
  if (auto colon = bind_address.rfind(':'); colon != std::string_view::npos) {
    host = std::string(bind_address.substr(0, colon));
    try {
      port = std::stoi(std::string(bind_address.substr(colon + 1)));
    } catch (const std::exception&) {
      throw Error(ErrorCode::invalid_argument, "bad bind address '" + std::string(bind_address) + "'");
    }
  } else if (!bind_address.empty()) {
    host = std::string(bind_address);
  }

  auto impl = std::make_unique<MockServer::Impl>(std::move(scenario));
  impl->host = host;
  impl->install_routes();
  if (port == 0) {
    port = impl->http.bind_to_any_port(host);
    if (port < 0) throw Error(ErrorCode::bind_failure, "cannot bind " + host + ":0");
  } else if (!impl->http.bind_to_port(host, port)) {
    throw Error(ErrorCode::bind_failure, "cannot bind " + host + ":" + std::to_string(port));
  }
  impl->port = port;
  auto* raw = impl.get();
  impl->thread = std::thread([raw] { raw->http.listen_after_bind(); });
  impl->http.wait_until_ready();
  return std::unique_ptr<MockServer>(new MockServer(std::move(impl)));
}

}  // namespace cloudbridge::mock
