#include <gtest/gtest.h>

#include "cloudbridge/cli.hpp"
#include "cloudbridge/mock/server.hpp"
#include "support.hpp"

using namespace cloudbridge;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

EnvLookup no_env() {
  return [](std::string_view) { return std::optional<std::string>{}; };
}

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    server = mock::serve(mock::ServiceScenario::default_scenario());
    write_config(testsupport::mock_config(server->url(), dir.path()));
  }

  void write_config(const RemoteConfig& c) {
    config = c;
    testsupport::write_file(conf(), serialize_config(c));
  }
  fs::path conf() const { return dir / "cloudbridge.conf"; }

  CliRun cli(std::vector<std::string> args) {
    args.push_back("--config");
    args.push_back(conf().string());
    std::ostringstream out, err;
    int code = cli::cli_main(args, out, err, no_env());
    return {code, out.str(), err.str()};
  }

  testsupport::TempDir dir;
  std::unique_ptr<mock::MockServer> server;
  RemoteConfig config;
};

}  // namespace

TEST(CliUsage, NoSubcommandIsUsageError) {
  std::ostringstream out, err;
  EXPECT_EQ(cli::cli_main({}, out, err, no_env()), 1);
  EXPECT_NE(err.str().find("login"), std::string::npos);
  EXPECT_EQ(cli::cli_main({"frobnicate"}, out, err, no_env()), 1);
  EXPECT_EQ(cli::cli_main({"push"}, out, err, no_env()), 1);
  EXPECT_EQ(cli::cli_main({"run", "x.cu", "--format", "yaml"}, out, err, no_env()), 1);
  std::ostringstream help;
  EXPECT_EQ(cli::cli_main({"--help"}, help, err, no_env()), 0);
  EXPECT_NE(help.str().find("serve-mock"), std::string::npos);
}

TEST(CliUsage, StateFileSitsNextToConfig) {
  EXPECT_EQ(cli::state_file_for("/x/y.conf"), fs::path("/x/y.conf.session"));
}

TEST_F(CliTest, RunReportsSuccess) {
  testsupport::write_file(dir / "good.cu", "int good;\n");
  auto r = cli({"run", (dir / "good.cu").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("[success]"), std::string::npos) << r.out;
  EXPECT_TRUE(server->dump_state().sessions.empty());
}

TEST_F(CliTest, JsonReportSchema) {
  testsupport::write_file(dir / "bad.cu", "TRIGGER_COMPILE_ERROR\n");
  auto r = cli({"run", (dir / "bad.cu").string(), "--format", "json"});
  EXPECT_EQ(r.code, 4);
  // Exactly one JSON document on stdout, nothing else.
  auto doc = json::parse(r.out);
  ASSERT_TRUE(doc.is_object());
  EXPECT_EQ(doc.size(), 3u);
  EXPECT_EQ(doc["status"], "compile_error");
  ASSERT_TRUE(doc["messages"].is_array());
  for (const auto& m : doc["messages"]) EXPECT_TRUE(m.is_string());
  EXPECT_TRUE(doc["elapsed_ms"].is_number_integer());
  EXPECT_GE(doc["elapsed_ms"].get<long long>(), 0);

  testsupport::write_file(dir / "rt.cu", "TRIGGER_RUNTIME_ERROR\n");
  r = cli({"--format", "json", "run", (dir / "rt.cu").string()});
  EXPECT_EQ(r.code, 4);
  EXPECT_EQ(json::parse(r.out)["status"], "runtime_error");
}

TEST_F(CliTest, TimeoutReportExitsFive) {
  auto scenario = mock::ServiceScenario::default_scenario();
  scenario.compile_never_finishes = true;
  server->load_scenario(scenario);
  config.compile_timeout = std::chrono::milliseconds(300);
  write_config(config);
  testsupport::write_file(dir / "a.cu", "int a;\n");
  auto r = cli({"run", (dir / "a.cu").string(), "--format", "json"});
  EXPECT_EQ(r.code, 5);
  EXPECT_EQ(json::parse(r.out)["status"], "timeout");
}

TEST_F(CliTest, StepwiseLoginPushPullExit) {
  auto r = cli({"login", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out), json({{"phase", "logged_in"}}));
  EXPECT_TRUE(fs::exists(cli::state_file_for(conf())));

  testsupport::write_file(dir / "src.cu", "int pushed;\r\n");
  r = cli({"push", (dir / "src.cu").string()});
  EXPECT_EQ(r.code, 0) << r.err;

  r = cli({"pull", "--format", "json"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["bytes"], 13);
  EXPECT_EQ(testsupport::read_file(config.workspace_file), "int pushed;\r\n");

  // A second login replaces the first session.
  ASSERT_EQ(cli({"login"}).code, 0);
  EXPECT_EQ(server->dump_state().sessions.size(), 1u);

  r = cli({"exit", "--format", "json"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(json::parse(r.out), json({{"phase", "closed"}}));
  EXPECT_FALSE(fs::exists(cli::state_file_for(conf())));
  EXPECT_TRUE(server->dump_state().sessions.empty());
  EXPECT_EQ(cli({"exit"}).code, 0);
}

TEST_F(CliTest, PullOrPushWithoutLoginIsIllegalState) {
  testsupport::write_file(dir / "a.cu", "x");
  auto r = cli({"pull", "--format", "json"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(json::parse(r.out)["error"], "illegal-state");
  EXPECT_EQ(cli({"push", (dir / "a.cu").string()}).code, 1);
  EXPECT_TRUE(server->dump_state().request_log.empty());
}

TEST_F(CliTest, ConfigErrorsExitTwo) {
  testsupport::write_file(conf(), "account = a\nnonsense\n");
  auto r = cli({"login", "--format", "json"});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(json::parse(r.out)["error"], "parse-error");
  fs::remove(conf());
  EXPECT_EQ(cli({"login"}).code, 2);
  auto c = config;
  c.password = Secret();
  write_config(c);
  EXPECT_EQ(cli({"login"}).code, 2);
}

TEST_F(CliTest, BadCredentialsExitThree) {
  auto c = config;
  c.password = Secret("nope");
  write_config(c);
  auto r = cli({"login", "--format", "json"});
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(json::parse(r.out)["error"], "bad-credentials");
  EXPECT_FALSE(fs::exists(cli::state_file_for(conf())));
  EXPECT_TRUE(server->dump_state().sessions.empty());
}

TEST_F(CliTest, ServerGoneExitsFive) {
  server.reset();
  testsupport::write_file(dir / "a.cu", "x");
  EXPECT_EQ(cli({"run", (dir / "a.cu").string()}).code, 5);
}

TEST_F(CliTest, PasswordEnvironmentOverride) {
  auto c = config;
  c.password = Secret("stale");
  write_config(c);
  std::ostringstream out, err;
  auto env = [](std::string_view name) -> std::optional<std::string> {
    if (name == kPasswordEnvVar) return testsupport::kPassword;
    return std::nullopt;
  };
  EXPECT_EQ(cli::cli_main({"login", "--config", conf().string()}, out, err, env), 0) << err.str();
  cli({"exit"});
}

TEST_F(CliTest, VerboseNeverPrintsPassword) {
  testsupport::write_file(dir / "a.cu", "int a;\n");
  auto r = cli({"run", (dir / "a.cu").string(), "--verbose"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("wire: POST /session -> 200"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("********"), std::string::npos);
  EXPECT_EQ((r.out + r.err).find(testsupport::kPassword), std::string::npos);
}

TEST_F(CliTest, ServeMock) {
  std::ostringstream out, err;
  EXPECT_EQ(cli::cli_main({"serve-mock", "--port", "0", "--for-ms", "100"}, out, err, no_env()), 0) << err.str();
  EXPECT_EQ(out.str().rfind("mock listening on http://127.0.0.1:", 0), 0u) << out.str();

  std::ostringstream out2, err2;
  int busy = cli::cli_main({"serve-mock", "--port", std::to_string(server->port()), "--for-ms", "100"}, out2, err2,
                           no_env());
  EXPECT_EQ(busy, 5);
  EXPECT_NE(err2.str().find("error:"), std::string::npos);

  testsupport::write_file(dir / "s.json", "{broken");
  std::ostringstream out3, err3;
  EXPECT_EQ(cli::cli_main({"serve-mock", "--port", "0", "--scenario", (dir / "s.json").string()}, out3, err3,
                          no_env()),
            2);
}
