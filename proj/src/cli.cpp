#include "cloudbridge/cli.hpp"

#include <atomic>
#include <csignal>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "cloudbridge/error.hpp"
#include "cloudbridge/mock/server.hpp"
#include "cloudbridge/workflow.hpp"

namespace cloudbridge::cli {
namespace {

using workflow::CompileReport;
using workflow::Phase;
using workflow::WorkflowHandle;
using json = wire::json;

struct SavedSession {
  std::string session_id;
  std::string endpoint;
  Phase phase = Phase::initialized;
};

std::optional<SavedSession> read_state(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorCode::parse_error, "corrupt session state file " + path.string());
  }
  try {
    return SavedSession{doc.at("session_id").get<std::string>(), doc.at("endpoint").get<std::string>(),
                        workflow::parse_phase(doc.at("phase").get<std::string>())};
  } catch (const json::exception&) {
    throw Error(ErrorCode::parse_error, "corrupt session state file " + path.string());
  }
}

void write_state(const std::filesystem::path& path, const WorkflowHandle& handle, wire::Session& session) {
  json doc = {{"session_id", session.id()},
              {"endpoint", session.endpoint()},
              {"phase", workflow::to_string(handle.phase())}};
  std::ofstream outf(path, std::ios::trunc);
  outf << doc.dump() << "\n";
  if (!outf) throw Error(ErrorCode::io_error, "cannot write session state " + path.string());
}

std::atomic<bool> g_stop{false};
extern "C" void on_stop_signal(int) { g_stop = true; }

struct Options {
  std::string config_path = "cloudbridge.conf";
  std::string format = "text";
  bool verbose = false;
  std::string source;
  std::string bind_host = "127.0.0.1";
  int port = 4444;
  std::string scenario_path;
  long long serve_for_ms = 0;
};

class Runner {
 public:
  Runner(const Options& opts, std::ostream& out, std::ostream& err, const EnvLookup& env)
      : opts_(opts), out_(out), err_(err), env_(env) {}

  int run(const std::string& command) {
    try {
      if (command == "serve-mock") return serve_mock();
      config_ = load_config(opts_.config_path, env_);
      if (opts_.verbose) {
        err_ << "config: account=" << config_->account << " password=" << config_->password
             << " base_url=" << config_->base_url << " lab_id=" << config_->lab_id
             << " endpoint=" << config_->automation_endpoint << "\n";
      }
      if (command == "login") return login();
      if (command == "pull") return pull();
      if (command == "push") return push();
      if (command == "exit") return exit_session();
      if (command == "run") return run_cycle();
      throw Error(ErrorCode::usage, "unknown command " + command);
    } catch (const Error& e) {
      return fail(e);
    } catch (const std::exception& e) {
      return fail(Error(ErrorCode::transport, e.what()));
    }
  }

 private:
  bool json_output() const { return opts_.format == "json"; }

  int fail(const Error& e) {
    err_ << "error: " << e.what() << "\n";
    if (json_output()) {
      out_ << json{{"error", to_string(e.code())}, {"message", e.detail()}}.dump() << "\n";
    }
    return exit_code_for(e.code());
  }

  workflow::WorkflowOptions workflow_options() {
    workflow::WorkflowOptions o;
    if (opts_.verbose) o.trace = [this](std::string_view line) { err_ << "wire: " << line << "\n"; };
    return o;
  }

  std::shared_ptr<workflow::OutputChannel> channel() {
    // Human-readable reports go to stdout; the JSON form prints the report
    // object alone, so the channel stays quiet there.
    auto sink = json_output() ? workflow::OutputChannel::Sink{}
                              : [this](std::string_view line) { out_ << line << "\n"; };
    return std::make_shared<workflow::OutputChannel>(std::string(workflow::kDefaultChannelName), sink);
  }

  std::filesystem::path state_path() const { return state_file_for(opts_.config_path); }

  WorkflowHandle resume_logged_in(const char* command) {
    auto saved = read_state(state_path());
    if (!saved || saved->phase != Phase::logged_in) {
      throw Error(ErrorCode::illegal_state, std::string(command) + " needs a logged-in session; run login first");
    }
    return WorkflowHandle::resume(*config_, saved->session_id, saved->phase, channel(), workflow_options());
  }

  void print_phase(const WorkflowHandle& handle) {
    if (json_output()) out_ << json{{"phase", workflow::to_string(handle.phase())}}.dump() << "\n";
  }

  int login() {
    // A previous login is replaced rather than reused.
    if (auto saved = read_state(state_path())) {
      try {
        WorkflowHandle::resume(*config_, saved->session_id, saved->phase, channel(), workflow_options()).exit();
      } catch (const Error&) {
      }
      std::filesystem::remove(state_path());
    }
    WorkflowHandle handle(*config_, channel(), workflow_options());
    try {
      handle.start();
      handle.login();
    } catch (...) {
      handle.exit();
      throw;
    }
    write_state(state_path(), handle, *handle.session());
    print_phase(handle);
    return exit_code::kOk;
  }

  int pull() {
    auto handle = resume_logged_in("pull");
    auto doc = handle.pull();
    if (json_output()) {
      out_ << json{{"lab_id", doc.lab_id},
                   {"bytes", doc.content.size()},
                   {"workspace_file", config_->workspace_file.string()}}
                  .dump()
           << "\n";
    }
    return exit_code::kOk;
  }

  int report(const CompileReport& r) {
    if (json_output()) out_ << r.to_json().dump() << "\n";
    return workflow::exit_code_for(r);
  }

  int push() {
    auto handle = resume_logged_in("push");
    return report(handle.push(opts_.source));
  }

  int exit_session() {
    auto path = state_path();
    auto saved = read_state(path);
    if (saved) {
      try {
        WorkflowHandle::resume(*config_, saved->session_id, saved->phase, channel(), workflow_options()).exit();
      } catch (const Error& e) {
        // Already gone on the remote end; nothing left to release.
        if (opts_.verbose) err_ << "exit: " << e.what() << "\n";
      }
      std::filesystem::remove(path);
    }
    if (json_output()) out_ << json{{"phase", "closed"}}.dump() << "\n";
    return exit_code::kOk;
  }

  int run_cycle() {
    return report(workflow::run_cycle(*config_, opts_.source, channel(), workflow_options()));
  }

  int serve_mock() {
    auto scenario = mock::ServiceScenario::default_scenario();
    if (!opts_.scenario_path.empty()) {
      std::ifstream in(opts_.scenario_path);
      if (!in) throw Error(ErrorCode::config_invalid, "cannot open scenario " + opts_.scenario_path);
      json doc = json::parse(in, nullptr, false);
      if (doc.is_discarded()) throw Error(ErrorCode::parse_error, opts_.scenario_path + " is not JSON");
      scenario = mock::scenario_from_json(doc);
    }
    auto server = mock::serve(scenario, opts_.bind_host + ":" + std::to_string(opts_.port));
    out_ << "mock listening on " << server->url() << std::endl;

    g_stop = false;
    auto old_int = std::signal(SIGINT, on_stop_signal);
    auto old_term = std::signal(SIGTERM, on_stop_signal);
    const auto until = std::chrono::steady_clock::now() + std::chrono::milliseconds(opts_.serve_for_ms);
    while (!g_stop && (opts_.serve_for_ms == 0 || std::chrono::steady_clock::now() < until)) {
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    std::signal(SIGINT, old_int);
    std::signal(SIGTERM, old_term);
    server->stop();
    return exit_code::kOk;
  }

  const Options& opts_;
  std::ostream& out_;
  std::ostream& err_;
  const EnvLookup& env_;
  std::optional<RemoteConfig> config_;
};

}  // namespace

std::filesystem::path state_file_for(const std::filesystem::path& config_path) {
  auto p = config_path;
  p += ".session";
  return p;
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
  Options opts;
  CLI::App app{"Drive a remote lab's browser editor from the command line.", "cloudbridge"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  app.add_option("--config", opts.config_path, "Config file")->capture_default_str();
  app.add_option("--format", opts.format, "Report format")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  app.add_flag("--verbose", opts.verbose, "Trace wire exchanges on stderr");

  app.add_subcommand("login", "Open a browser session and log in to the lab page");
  app.add_subcommand("pull", "Download the stored program into the workspace file");
  auto* push = app.add_subcommand("push", "Paste a file into the remote editor, compile and run it");
  push->add_option("file", opts.source, "Source file")->required();
  app.add_subcommand("exit", "Close the browser session");
  auto* run = app.add_subcommand("run", "start, login, push and exit in one go");
  run->add_option("file", opts.source, "Source file")->required();
  auto* serve = app.add_subcommand("serve-mock", "Serve the hermetic mock site");
  serve->add_option("--bind", opts.bind_host, "Address to bind")->capture_default_str();
  serve->add_option("--port", opts.port, "Port, 0 for any free port")->capture_default_str();
  serve->add_option("--scenario", opts.scenario_path, "Scenario JSON file");
  serve->add_option("--for-ms", opts.serve_for_ms, "Stop after this long (0 = until signalled)");

  // CLI11 consumes the vector from the back.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_code::kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return exit_code::kUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  Runner runner(opts, out, err, env);
  return runner.run(command);
}

}  // namespace cloudbridge::cli
