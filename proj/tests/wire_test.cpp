#include <gtest/gtest.h>

#include <random>
#include <thread>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "cloudbridge/error.hpp"
#include "cloudbridge/mock/server.hpp"
#include "cloudbridge/wire.hpp"
#include "httplib.h"
#include "support.hpp"

using namespace cloudbridge;
using namespace cloudbridge::wire;
using namespace std::chrono_literals;

namespace {

ErrorCode error_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::usage;
}

// A port with nothing listening on it.
// A port that was free a moment ago. Bound but never listened on, so nothing
// can be accepting there once the socket is closed.
int dead_port() {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

// Malformed bodies and a navigation that answers late.
class OddServer {
 public:
  OddServer() {
    http_.Post("/session", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"value":{"sessionId":"odd","capabilities":{}}})", "application/json");
    });
    http_.Get("/session/odd/url", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("<html>not json</html>", "text/html");
    });
    http_.Post("/session/odd/url", [](const httplib::Request&, httplib::Response& res) {
      std::this_thread::sleep_for(1500ms);
      res.set_content(R"({"value":null})", "application/json");
    });
    port_ = http_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { http_.listen_after_bind(); });
    http_.wait_until_ready();
  }
  ~OddServer() {
    http_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server http_;
  std::thread thread_;
  int port_ = 0;
};

class WireTest : public ::testing::Test {
 protected:
  void SetUp() override { server = mock::serve(mock::ServiceScenario::default_scenario()); }
  std::unique_ptr<mock::MockServer> server;
};

}  // namespace

TEST(Capabilities, HeadlessArgumentPresentIffRequested) {
  for (std::string browser : {"chrome", "firefox", "msedge"}) {
    for (bool headless : {false, true}) {
      SessionCapabilities caps;
      caps.browser_name = browser;
      caps.headless = headless;
      std::string dumped = caps.to_payload().dump();
      EXPECT_EQ(dumped.find("headless") != std::string::npos, headless) << dumped;
      EXPECT_EQ(SessionCapabilities::from_payload(caps.to_payload()), caps);
    }
  }
  SessionCapabilities ff;
  ff.browser_name = "firefox";
  ff.headless = true;
  EXPECT_EQ(ff.to_payload()["capabilities"]["alwaysMatch"]["moz:firefoxOptions"]["args"][0], "-headless");
}

TEST(Capabilities, RejectsNegativeImplicitWait) {
  SessionCapabilities caps;
  caps.implicit_wait = -1ms;
  EXPECT_EQ(error_code([&] { caps.validate(); }), ErrorCode::invalid_argument);
}

TEST(Command, ResolvesPlaceholders) {
  WireCommand cmd{HttpMethod::post, "/element/{eid}/click", json::object(), {{"eid", "el-4"}}};
  EXPECT_EQ(cmd.resolve("abc"), "/session/abc/element/el-4/click");
  WireCommand root{HttpMethod::get, "/status", json::object(), {}, CommandScope::root};
  EXPECT_EQ(root.resolve("abc"), "/status");
  WireCommand missing{HttpMethod::get, "/element/{eid}/text"};
  EXPECT_EQ(error_code([&] { missing.resolve("abc"); }), ErrorCode::protocol_error);
  WireCommand open{HttpMethod::get, "/element/{eid"};
  EXPECT_EQ(error_code([&] { open.resolve("abc"); }), ErrorCode::protocol_error);
}

TEST(Response, ExactlyOneAlternative) {
  auto ok = WireResponse::parse(200, R"({"value":{"ready":true}})");
  ASSERT_TRUE(ok.ok());
  EXPECT_TRUE(ok.value()["ready"].get<bool>());

  auto err = WireResponse::parse(404, R"({"value":{"error":"no such element","message":"m","stacktrace":""}})");
  ASSERT_FALSE(err.ok());
  EXPECT_EQ(err.error().error, "no such element");
  EXPECT_EQ(error_code([&] { err.value_or_throw("find"); }), ErrorCode::no_such_element);

  EXPECT_EQ(error_code([] { WireResponse::parse(200, "nope"); }), ErrorCode::protocol_error);
  EXPECT_EQ(error_code([] { WireResponse::parse(200, R"({"status":0})"); }), ErrorCode::protocol_error);
  EXPECT_EQ(error_code([] { WireResponse::parse(200, "[1,2]"); }), ErrorCode::protocol_error);
}

TEST(Response, MapsW3cErrorCodes) {
  auto code_for = [](const std::string& error, const std::string& message) {
    json body = {{"value", {{"error", error}, {"message", message}}}};
    auto r = WireResponse::parse(400, body.dump());
    return error_code([&] { r.value_or_throw("x"); });
  };
  EXPECT_EQ(code_for("stale element reference", ""), ErrorCode::stale_element);
  EXPECT_EQ(code_for("element not interactable", "cannot type"), ErrorCode::element_not_interactable);
  EXPECT_EQ(code_for("element not interactable", "no focused element"), ErrorCode::no_focused_element);
  EXPECT_EQ(code_for("invalid session id", ""), ErrorCode::stale_session);
  EXPECT_EQ(code_for("session not created", ""), ErrorCode::session_not_created);
  EXPECT_EQ(code_for("invalid argument", "unknown key U+E0FF"), ErrorCode::unknown_key);
  EXPECT_EQ(code_for("invalid argument", "bad"), ErrorCode::invalid_argument);
  EXPECT_EQ(code_for("unknown command", ""), ErrorCode::protocol_error);
}

TEST_F(WireTest, HeadlessSessionIsRecordedAndEchoed) {
  SessionCapabilities caps;
  caps.headless = true;
  caps.implicit_wait = 1500ms;
  Session s = new_session(server->url(), caps);
  EXPECT_TRUE(s.is_open());
  EXPECT_FALSE(s.id().empty());
  EXPECT_TRUE(s.capabilities().headless);
  EXPECT_EQ(s.active_implicit_wait(), 1500ms);

  auto state = server->dump_state();
  ASSERT_EQ(state.capability_log.size(), 1u);
  EXPECT_NE(state.capability_log[0].dump().find("--headless"), std::string::npos);
  EXPECT_EQ(state.pages.at(s.id())["implicit_wait_ms"], 1500);
}

TEST_F(WireTest, PlainSessionHasZeroImplicitWait) {
  Session s = new_session(server->url(), {});
  EXPECT_FALSE(s.capabilities().headless);
  EXPECT_EQ(s.active_implicit_wait(), 0ms);
  EXPECT_EQ(server->dump_state().capability_log[0].dump().find("headless"), std::string::npos);
}

TEST_F(WireTest, StatusWithoutSession) {
  auto r = query_status(server->url());
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.status, 200);
  EXPECT_TRUE(r.value()["ready"].get<bool>());
}

TEST_F(WireTest, UnknownBrowserIsNotCreated) {
  SessionCapabilities caps;
  caps.browser_name = "netscape";
  EXPECT_EQ(error_code([&] { new_session(server->url(), caps); }), ErrorCode::session_not_created);
  EXPECT_TRUE(server->dump_state().sessions.empty());
}

TEST(WireNoServer, ConnectionRefused) {
  std::string url = "http://127.0.0.1:" + std::to_string(dead_port());
  EXPECT_EQ(error_code([&] { new_session(url, {}); }), ErrorCode::connection_refused);
}

TEST_F(WireTest, NavigateAndReadBack) {
  Session s = new_session(server->url(), {});
  s.navigate(server->url() + "/login");
  EXPECT_EQ(s.current_url(), server->url() + "/login");
  s.navigate(server->url() + "/lab/mp1");
  EXPECT_EQ(s.current_url(), server->url() + "/login?next=/lab/mp1");
}

TEST_F(WireTest, InterstitialWhenCertificateFails) {
  auto scenario = mock::ServiceScenario::default_scenario();
  scenario.ssl_fail = true;
  server->load_scenario(scenario);
  Session s = new_session(server->url(), {});
  s.navigate(server->url() + "/lab/mp1");
  EXPECT_EQ(server->dump_state().pages.at(s.id())["kind"], "interstitial");
}

TEST_F(WireTest, InvalidUrlRejectedLocally) {
  Session s = new_session(server->url(), {});
  s.navigate(server->url() + "/login");
  auto before = server->dump_state().request_log.size();
  EXPECT_EQ(error_code([&] { s.navigate("not a url"); }), ErrorCode::invalid_url);
  EXPECT_EQ(error_code([&] { s.navigate("/relative"); }), ErrorCode::invalid_url);
  EXPECT_EQ(server->dump_state().request_log.size(), before);
  EXPECT_EQ(s.current_url(), server->url() + "/login");
}

TEST_F(WireTest, DeleteIsIdempotentAndClosesLocally) {
  Session s = new_session(server->url(), {});
  std::string id = s.id();
  s.delete_session();
  EXPECT_FALSE(s.is_open());
  EXPECT_TRUE(server->dump_state().sessions.empty());
  auto before = server->dump_state().request_log.size();
  EXPECT_NO_THROW(s.delete_session());
  EXPECT_EQ(error_code([&] { s.current_url(); }), ErrorCode::closed_session);
  EXPECT_EQ(error_code([&] { s.navigate(server->url()); }), ErrorCode::closed_session);
  EXPECT_EQ(error_code([&] { s.execute_command({HttpMethod::get, "/url"}); }), ErrorCode::closed_session);
  EXPECT_EQ(error_code([&] { s.set_implicit_wait(10ms); }), ErrorCode::closed_session);
  EXPECT_EQ(server->dump_state().request_log.size(), before);
}

TEST_F(WireTest, DeleteAfterServerDeathStillCloses) {
  Session s = new_session(server->url(), {});
  server.reset();
  EXPECT_EQ(error_code([&] { s.delete_session(); }), ErrorCode::transport);
  EXPECT_EQ(s.state(), SessionState::closed);
  EXPECT_NO_THROW(s.delete_session());
}

TEST_F(WireTest, AttachChecksLiveness) {
  Session s = new_session(server->url(), {});
  Session again = Session::attach(server->url(), s.id(), s.capabilities());
  EXPECT_EQ(again.current_url(), "about:blank");
  s.delete_session();
  EXPECT_EQ(error_code([&] { Session::attach(server->url(), s.id(), {}); }), ErrorCode::stale_session);
}

TEST_F(WireTest, TraceCarriesNoBodies) {
  std::vector<std::string> lines;
  SessionOptions opts;
  opts.trace = [&](std::string_view l) { lines.emplace_back(l); };
  Session s = new_session(server->url(), {}, opts);
  s.navigate(server->url() + "/login?secret-marker=1");
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], "POST /session -> 200");
  EXPECT_EQ(lines[1], "POST /session/" + s.id() + "/url -> 200");
}

TEST_F(WireTest, UnknownCommandIsProtocolError) {
  Session s = new_session(server->url(), {});
  auto r = s.execute_command({HttpMethod::get, "/window/handles"});
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.status, 404);
  EXPECT_EQ(r.error().error, "unknown command");
}

TEST(WireOdd, MalformedBodyIsProtocolError) {
  OddServer odd;
  Session s = new_session(odd.url(), {});
  EXPECT_EQ(s.id(), "odd");
  EXPECT_EQ(error_code([&] { s.current_url(); }), ErrorCode::protocol_error);
}

TEST(WireOdd, SlowAnswerTimesOut) {
  OddServer odd;
  SessionOptions opts;
  opts.command_timeout = 300ms;
  Session s = new_session(odd.url(), {}, opts);
  auto t0 = std::chrono::steady_clock::now();
  EXPECT_EQ(error_code([&] { s.navigate(odd.url() + "/x"); }), ErrorCode::timeout);
  EXPECT_LT(std::chrono::steady_clock::now() - t0, 1400ms);
}

// Each response lands before the next request on the same session.
TEST_F(WireTest, RandomCommandsNeverInterleave) {
  Session s = new_session(server->url(), {});
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> pick(0, 3);
  for (int i = 0; i < 100; ++i) {
    switch (pick(rng)) {
      case 0: s.navigate(server->url() + "/login"); break;
      case 1: s.current_url(); break;
      case 2: s.set_implicit_wait(std::chrono::milliseconds(pick(rng))); break;
      case 3: s.execute_command({HttpMethod::post, "/element", {{"using", "xpath"}, {"value", "//nothing"}}}); break;
    }
  }
  const auto log = server->dump_state().request_log;
  ASSERT_EQ(log.size(), 2u * 101u);
  for (std::size_t i = 0; i < log.size(); ++i) {
    auto expected = i % 2 == 0 ? mock::RequestLogEntry::Phase::request : mock::RequestLogEntry::Phase::response;
    EXPECT_EQ(log[i].phase, expected) << i;
    if (i > 0) EXPECT_LT(log[i - 1].timestamp_ns, log[i].timestamp_ns) << i;
    if (i % 2 == 1) EXPECT_EQ(log[i].path, log[i - 1].path);
  }
}
