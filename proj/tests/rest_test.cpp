#include <gtest/gtest.h>

#include "cloudbridge/error.hpp"
#include "cloudbridge/mock/server.hpp"
#include "cloudbridge/rest.hpp"
#include "support.hpp"

using namespace cloudbridge;
using namespace cloudbridge::rest;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

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

AuthContext good_auth() { return {testsupport::kAccount, Secret(testsupport::kPassword), std::nullopt}; }

class RestTest : public ::testing::Test {
 protected:
  void SetUp() override {
    auto scenario = mock::ServiceScenario::default_scenario();
    scenario.program_store["crlf"] = "line1\r\nline2\ttab\n\xE6\xBC\xA2\n";
    scenario.program_store["empty"] = "";
    scenario.api_tokens = {"tok-1"};
    server = mock::serve(scenario);
  }
  std::unique_ptr<mock::MockServer> server;
};

}  // namespace

TEST(LabIds, Pattern) {
  for (const char* ok : {"mp1", "MP_2", "lab-3.v1", "a"}) EXPECT_TRUE(is_valid_lab_id(ok)) << ok;
  for (const char* bad : {"", "a/b", "../x", "..", ".", "lab 1", "l?x", "l%2F"}) EXPECT_FALSE(is_valid_lab_id(bad)) << bad;
}

TEST_F(RestTest, FetchesStoredBytesExactly) {
  auto doc = fetch_program(server->url(), good_auth(), "crlf");
  EXPECT_EQ(doc.lab_id, "crlf");
  EXPECT_EQ(doc.content, "line1\r\nline2\ttab\n\xE6\xBC\xA2\n");
  EXPECT_EQ(fetch_program(server->url(), good_auth(), "empty").content, "");
  EXPECT_EQ(fetch_program(server->url(), good_auth(), "mp1").content, "// skeleton\n");
}

TEST_F(RestTest, TokenAuth) {
  AuthContext token{"", Secret(), std::string("tok-1")};
  EXPECT_EQ(fetch_program(server->url(), token, "mp1").content, "// skeleton\n");
  token.session_token = "tok-2";
  EXPECT_EQ(error_code([&] { fetch_program(server->url(), token, "mp1"); }), ErrorCode::unauthorized);
}

TEST_F(RestTest, ErrorsMapToCodes) {
  AuthContext wrong{testsupport::kAccount, Secret("nope"), std::nullopt};
  EXPECT_EQ(error_code([&] { fetch_program(server->url(), wrong, "mp1"); }), ErrorCode::unauthorized);
  AuthContext stranger{"mallory", Secret(testsupport::kPassword), std::nullopt};
  EXPECT_EQ(error_code([&] { fetch_program(server->url(), stranger, "mp1"); }), ErrorCode::unauthorized);
  EXPECT_EQ(error_code([&] { fetch_program(server->url(), good_auth(), "mp404"); }), ErrorCode::not_found);
  EXPECT_EQ(error_code([&] { fetch_program(server->url(), good_auth(), "../etc"); }), ErrorCode::invalid_argument);
  EXPECT_EQ(error_code([&] { fetch_program("nonsense", good_auth(), "mp1"); }), ErrorCode::invalid_url);
}

TEST_F(RestTest, UnreachableServer) {
  std::string url = server->url();
  server.reset();
  EXPECT_EQ(error_code([&] { fetch_program(url, good_auth(), "mp1", 1000ms); }), ErrorCode::connection_refused);
}

TEST_F(RestTest, PasswordNeverInErrorText) {
  AuthContext wrong{testsupport::kAccount, Secret("Sup3r-Secret-Value"), std::nullopt};
  try {
    fetch_program(server->url(), wrong, "mp1");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).find("Sup3r-Secret-Value"), std::string::npos);
  }
}

TEST(Workspace, WritesAtomicallyAndReplaces) {
  testsupport::TempDir dir;
  SourceDocument doc{"mp1", "first\r\n", {}};
  write_workspace(doc, dir / "mp1.cu");
  EXPECT_EQ(testsupport::read_file(dir / "mp1.cu"), "first\r\n");
  doc.content = std::string("second\0with nul", 15);
  write_workspace(doc, dir / "mp1.cu");
  EXPECT_EQ(testsupport::read_file(dir / "mp1.cu"), doc.content);
  // No temp files left behind.
  int entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path())) ++entries;
  EXPECT_EQ(entries, 1);
}

TEST(Workspace, MissingParentIsIoError) {
  testsupport::TempDir dir;
  SourceDocument doc{"mp1", "x", {}};
  EXPECT_EQ(error_code([&] { write_workspace(doc, dir / "no/such/dir/mp1.cu"); }), ErrorCode::io_error);
}

TEST(Workspace, TargetIsADirectory) {
  testsupport::TempDir dir;
  fs::create_directories(dir / "taken" / "inner");
  SourceDocument doc{"mp1", "x", {}};
  EXPECT_EQ(error_code([&] { write_workspace(doc, dir / "taken"); }), ErrorCode::io_error);
  int entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path())) ++entries;
  EXPECT_EQ(entries, 1);
}
