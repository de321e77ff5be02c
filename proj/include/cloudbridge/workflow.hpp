#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cloudbridge/config.hpp"
#include "cloudbridge/rest.hpp"
#include "cloudbridge/wire.hpp"

namespace cloudbridge::workflow {

using std::chrono::milliseconds;
using json = wire::json;

inline constexpr std::string_view kDefaultChannelName = "WebGPU";

enum class Phase { uninitialized, initialized, logged_in, closed };
std::string_view to_string(Phase phase);
// Throws Error(parse_error).
Phase parse_phase(std::string_view name);

// Append-only text destination. Thread-safe.
class OutputChannel {
 public:
  using Sink = std::function<void(std::string_view)>;

  explicit OutputChannel(std::string name = std::string(kDefaultChannelName), Sink sink = {});

  const std::string& name() const { return name_; }
  void append(std::string_view text);
  std::vector<std::string> lines() const;

 private:
  std::string name_;
  Sink sink_;
  mutable std::mutex mu_;
  std::vector<std::string> lines_;
};

// Channels by name; opening an existing name returns the same channel and
// ignores the sink argument.
class ChannelRegistry {
 public:
  std::shared_ptr<OutputChannel> open(std::string_view name, OutputChannel::Sink sink = {});
  bool contains(std::string_view name) const;
  std::size_t size() const;

  static ChannelRegistry& global();

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<OutputChannel>, std::less<>> channels_;
};

enum class ReportStatus { success, compile_error, runtime_error, timeout };
std::string_view to_string(ReportStatus status);

struct CompileReport {
  ReportStatus status = ReportStatus::success;
  std::vector<std::string> messages;
  milliseconds elapsed{0};

  // {"status": string, "messages": [string], "elapsed_ms": number}
  json to_json() const;
  std::string to_text() const;
};

// Process exit code for a finished push: 0, 4 for compile/runtime errors,
// 5 for a compile timeout.
int exit_code_for(const CompileReport& report);

// Removes every occurrence of `source` from `text`, repeating until none is
// left so that the removal cannot splice a new one together.
std::string strip_echo(std::string text, std::string_view source);

struct WorkflowOptions {
  // One line per wire exchange; never sees request or response bodies.
  std::function<void(std::string_view)> trace;
};

class WorkflowHandle {
 public:
  // Phase uninitialized; nothing is opened yet. A null channel means the
  // registry's default channel.
  explicit WorkflowHandle(RemoteConfig config, std::shared_ptr<OutputChannel> channel = nullptr,
                          WorkflowOptions options = {});
  WorkflowHandle(WorkflowHandle&&) noexcept;
  WorkflowHandle& operator=(WorkflowHandle&&) noexcept;
  ~WorkflowHandle();

  // Re-binds to a session created by an earlier process (the CLI keeps the id
  // between invocations). `phase` must be initialized or logged_in.
  static WorkflowHandle resume(RemoteConfig config, std::string session_id, Phase phase,
                               std::shared_ptr<OutputChannel> channel = nullptr,
                               WorkflowOptions options = {});

  Phase phase() const { return phase_; }
  const RemoteConfig& config() const { return config_; }
  OutputChannel& output() { return *channel_; }
  std::shared_ptr<OutputChannel> output_channel() const { return channel_; }
  // Non-null iff phase is initialized or logged_in.
  wire::Session* session() { return session_ ? session_.get() : nullptr; }

  // uninitialized -> initialized. Opens the automation session.
  void start();
  // initialized -> logged_in. Bypasses an SSL interstitial if one is shown.
  void login();
  // logged_in. Fetches the stored program and writes config.workspace_file.
  rest::SourceDocument pull();
  // logged_in. Pastes the file into the remote editor, saves, compiles, runs
  // and collects the filtered output.
  CompileReport push(const std::filesystem::path& source_path);
  // Any phase -> closed. Idempotent; never throws.
  void exit() noexcept;

 private:
  void require(Phase expected, std::string_view operation) const;
  wire::SessionCapabilities capabilities() const;
  void load_paste_buffer(const std::string& text);

  RemoteConfig config_;
  std::shared_ptr<OutputChannel> channel_;
  WorkflowOptions options_;
  Phase phase_ = Phase::uninitialized;
  std::unique_ptr<wire::Session> session_;
};

// Validates the config (Error(config_invalid)) and starts a handle.
WorkflowHandle start(RemoteConfig config, std::shared_ptr<OutputChannel> channel = nullptr,
                     WorkflowOptions options = {});

// start, login, push, exit. The session is torn down on every path; the first
// failing step's error is rethrown afterwards.
CompileReport run_cycle(const RemoteConfig& config, const std::filesystem::path& source_path,
                        std::shared_ptr<OutputChannel> channel = nullptr, WorkflowOptions options = {});

}  // namespace cloudbridge::workflow
