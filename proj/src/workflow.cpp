#include "cloudbridge/workflow.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include "cloudbridge/error.hpp"
#include "cloudbridge/page.hpp"
#include "cloudbridge/util.hpp"
#include "httplib.h"

namespace cloudbridge::workflow {
namespace {

namespace names = element_names;
using Clock = std::chrono::steady_clock;
using page::ElementRef;
using page::Locator;

milliseconds since(Clock::time_point start) {
  return std::chrono::duration_cast<milliseconds>(Clock::now() - start);
}

// Explicit lookups need the remote to answer immediately.
void zero_implicit_wait(wire::Session& session) {
  if (session.active_implicit_wait() != milliseconds(0)) session.set_implicit_wait(milliseconds(0));
}

// Polls for whichever of `candidates` shows up first. Returns its index and
// element, or nullopt once `timeout` has passed.
std::optional<std::pair<std::size_t, ElementRef>> first_present(wire::Session& session,
                                                                 const std::vector<Locator>& candidates,
                                                                 milliseconds timeout, milliseconds poll) {
  zero_implicit_wait(session);
  const auto deadline = Clock::now() + timeout;
  for (;;) {
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (auto found = page::try_find_element(session, candidates[i])) return std::pair{i, *found};
    }
    auto now = Clock::now();
    if (now >= deadline) return std::nullopt;
    std::this_thread::sleep_for(std::min(poll, std::chrono::duration_cast<milliseconds>(deadline - now)));
  }
}

ReportStatus status_from_result(std::string_view text) {
  if (text == "success") return ReportStatus::success;
  if (text == "compile_error") return ReportStatus::compile_error;
  if (text == "runtime_error") return ReportStatus::runtime_error;
  throw Error(ErrorCode::protocol_error, "unrecognised result marker '" + std::string(text) + "'");
}

std::string read_source(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::read_failure, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::read_failure, "error while reading " + path.string());
  std::string text = buf.str();
  if (!is_valid_utf8(text)) throw Error(ErrorCode::read_failure, path.string() + " is not UTF-8 text");
  return text;
}

}  // namespace

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::uninitialized: return "uninitialized";
    case Phase::initialized: return "initialized";
    case Phase::logged_in: return "logged_in";
    case Phase::closed: return "closed";
  }
  return "uninitialized";
}

Phase parse_phase(std::string_view name) {
  for (Phase p : {Phase::uninitialized, Phase::initialized, Phase::logged_in, Phase::closed}) {
    if (to_string(p) == name) return p;
  }
  throw Error(ErrorCode::parse_error, "unknown phase '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

OutputChannel::OutputChannel(std::string name, Sink sink) : name_(std::move(name)), sink_(std::move(sink)) {}

void OutputChannel::append(std::string_view text) {
  std::lock_guard lock(mu_);
  lines_.emplace_back(text);
  if (sink_) sink_(text);
}

std::vector<std::string> OutputChannel::lines() const {
  std::lock_guard lock(mu_);
  return lines_;
}

std::shared_ptr<OutputChannel> ChannelRegistry::open(std::string_view name, OutputChannel::Sink sink) {
  std::lock_guard lock(mu_);
  if (auto it = channels_.find(name); it != channels_.end()) return it->second;
  auto channel = std::make_shared<OutputChannel>(std::string(name), std::move(sink));
  channels_.emplace(std::string(name), channel);
  return channel;
}

bool ChannelRegistry::contains(std::string_view name) const {
  std::lock_guard lock(mu_);
  return channels_.find(name) != channels_.end();
}

std::size_t ChannelRegistry::size() const {
  std::lock_guard lock(mu_);
  return channels_.size();
}

ChannelRegistry& ChannelRegistry::global() {
  static ChannelRegistry registry;
  return registry;
}

// ---------------------------------------------------------------------------

std::string_view to_string(ReportStatus status) {
  switch (status) {
    case ReportStatus::success: return "success";
    case ReportStatus::compile_error: return "compile_error";
    case ReportStatus::runtime_error: return "runtime_error";
    case ReportStatus::timeout: return "timeout";
  }
  return "success";
}

json CompileReport::to_json() const {
  return {{"status", to_string(status)}, {"messages", messages}, {"elapsed_ms", elapsed.count()}};
}

std::string CompileReport::to_text() const {
  std::string text = "[" + std::string(to_string(status)) + "] after " + std::to_string(elapsed.count()) + " ms";
  for (const auto& m : messages) {
    text += "\n";
    text += m;
  }
  return text;
}

int exit_code_for(const CompileReport& report) {
  switch (report.status) {
    case ReportStatus::success: return exit_code::kOk;
    case ReportStatus::compile_error:
    case ReportStatus::runtime_error: return exit_code::kCompile;
    case ReportStatus::timeout: return exit_code::kTransport;
  }
  return exit_code::kCompile;
}

std::string strip_echo(std::string text, std::string_view source) {
  if (source.empty()) return text;
  for (auto pos = text.find(source); pos != std::string::npos; pos = text.find(source)) {
    text.erase(pos, source.size());
  }
  return text;
}

// ---------------------------------------------------------------------------

WorkflowHandle::WorkflowHandle(RemoteConfig config, std::shared_ptr<OutputChannel> channel,
                               WorkflowOptions options)
    : config_(std::move(config)),
      channel_(channel ? std::move(channel) : ChannelRegistry::global().open(kDefaultChannelName)),
      options_(std::move(options)) {}

WorkflowHandle::WorkflowHandle(WorkflowHandle&&) noexcept = default;
WorkflowHandle& WorkflowHandle::operator=(WorkflowHandle&&) noexcept = default;
WorkflowHandle::~WorkflowHandle() = default;

WorkflowHandle WorkflowHandle::resume(RemoteConfig config, std::string session_id, Phase phase,
                                      std::shared_ptr<OutputChannel> channel, WorkflowOptions options) {
  if (phase != Phase::initialized && phase != Phase::logged_in) {
    throw Error(ErrorCode::illegal_state, "cannot resume a session in phase " + std::string(to_string(phase)));
  }
  config.validate();
  WorkflowHandle handle(std::move(config), std::move(channel), std::move(options));
  handle.session_ = std::make_unique<wire::Session>(
      wire::Session::attach(handle.config_.automation_endpoint, std::move(session_id), handle.capabilities(),
                            {handle.config_.command_timeout, handle.options_.trace}));
  handle.phase_ = phase;
  return handle;
}

void WorkflowHandle::require(Phase expected, std::string_view operation) const {
  if (phase_ != expected) {
    throw Error(ErrorCode::illegal_state, std::string(operation) + " needs phase " +
                                              std::string(to_string(expected)) + ", handle is " +
                                              std::string(to_string(phase_)));
  }
}

wire::SessionCapabilities WorkflowHandle::capabilities() const {
  wire::SessionCapabilities caps;
  caps.headless = config_.headless;
  caps.implicit_wait = config_.implicit_wait;
  return caps;
}

void WorkflowHandle::start() {
  require(Phase::uninitialized, "start");
  config_.validate();
  auto session = wire::new_session(config_.automation_endpoint, capabilities(),
                                   {config_.command_timeout, options_.trace});
  session_ = std::make_unique<wire::Session>(std::move(session));
  phase_ = Phase::initialized;
  channel_->append("Session " + session_->id() + " opened" + (config_.headless ? " (headless)" : ""));
}

void WorkflowHandle::login() {
  require(Phase::initialized, "login");
  auto& s = *session_;
  const auto poll = config_.explicit_poll;
  const auto budget = config_.implicit_wait;
  auto loc = [&](std::string_view name) { return Locator::xpath(config_.xpath(name)); };
  auto find = [&](std::string_view name) {
    zero_implicit_wait(s);
    return page::find_element(s, loc(name), page::WaitPolicy::explicit_wait(budget, poll));
  };

  s.navigate(config_.base_url + "/lab/" + config_.lab_id);

  auto landing = first_present(s, {loc(names::kSslAdvanced), loc(names::kUsername)}, budget, poll);
  if (!landing) throw Error(ErrorCode::not_found_timeout, "neither a login form nor a certificate warning appeared");
  if (landing->first == 0) {
    // Certificate warning: open the details, then follow the proceed link.
    try {
      page::click(s, landing->second);
      page::click(s, find(names::kSslProceed));
    } catch (const Error& e) {
      throw Error(ErrorCode::interstitial_bypass_failure, e.what());
    }
    auto form = first_present(s, {loc(names::kUsername)}, budget, poll);
    if (!form) throw Error(ErrorCode::interstitial_bypass_failure, "login form did not appear after the warning");
    landing = form;
  }

  page::send_keys_to_element(s, landing->second, config_.account);
  page::send_keys_to_element(s, find(names::kPassword), config_.password.reveal());
  page::click(s, find(names::kLoginSubmit));

  zero_implicit_wait(s);
  const auto deadline = Clock::now() + budget;
  for (;;) {
    if (page::try_find_element(s, loc(names::kEditor))) break;
    if (page::try_find_element(s, loc(names::kLabNotFound))) {
      throw Error(ErrorCode::lab_not_found, "lab " + config_.lab_id + " does not exist");
    }
    if (auto err = page::try_find_element(s, loc(names::kLoginError))) {
      if (!page::get_text(s, *err).empty()) {
        throw Error(ErrorCode::bad_credentials, "login rejected for account " + config_.account);
      }
    }
    if (Clock::now() >= deadline) throw Error(ErrorCode::not_found_timeout, "lab page did not load after login");
    std::this_thread::sleep_for(poll);
  }
  phase_ = Phase::logged_in;
  channel_->append("Logged in as " + config_.account + ", lab " + config_.lab_id);
}

rest::SourceDocument WorkflowHandle::pull() {
  require(Phase::logged_in, "pull");
  rest::AuthContext auth{config_.account, config_.password, config_.session_token};
  auto doc = rest::fetch_program(config_.base_url, auth, config_.lab_id, config_.command_timeout);
  rest::write_workspace(doc, config_.workspace_file);
  channel_->append("Pulled lab " + doc.lab_id + " (" + std::to_string(doc.content.size()) + " bytes) into " +
                   config_.workspace_file.string());
  return doc;
}

void WorkflowHandle::load_paste_buffer(const std::string& text) {
  if (config_.browser != BrowserKind::mock) return;
  // The mock's session-scoped clipboard stands in for the desktop clipboard,
  // which a headless remote browser does not have.
  UrlParts parts = parse_url(config_.automation_endpoint);
  std::string prefix = parts.path == "/" ? "" : parts.path;
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  httplib::Client client(origin_of(parts));
  client.set_tcp_nodelay(true);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.command_timeout);
  client.set_read_timeout(secs.count(), 0);
  auto res = client.Put(prefix + "/mock/session/" + session_->id() + "/clipboard", json{{"text", text}}.dump(),
                        "application/json");
  if (!res) throw Error(ErrorCode::transport, "clipboard upload failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw Error(ErrorCode::protocol_error, "clipboard upload answered HTTP " + std::to_string(res->status));
  }
}

CompileReport WorkflowHandle::push(const std::filesystem::path& source_path) {
  require(Phase::logged_in, "push");
  const std::string source = read_source(source_path);
  auto& s = *session_;
  const auto poll = config_.explicit_poll;
  auto find = [&](std::string_view name) {
    zero_implicit_wait(s);
    return page::find_element(s, Locator::xpath(config_.xpath(name)),
                              page::WaitPolicy::explicit_wait(config_.implicit_wait, poll));
  };

  const auto editor = find(names::kEditor);
  const auto compile = find(names::kCompileButton);
  const auto all = find(names::kAllButton);
  const auto mod = config_.modifier_key;

  page::ActionSequence train;
  if (config_.browser == BrowserKind::mock) {
    load_paste_buffer(source);
    train.click(editor).key_down(mod).type_text("a").type_text("v").type_text("s").key_up(mod);
  } else {
    // No paste buffer we can reach: select everything and type over it.
    train.click(editor).key_down(mod).type_text("a").key_up(mod);
    train.type_text(source);
    train.key_down(mod).type_text("s").key_up(mod);
  }
  train.click(compile).click(all);

  const auto started = Clock::now();
  page::perform_actions(s, train);

  CompileReport report;
  const auto status_locator = Locator::xpath(config_.xpath(names::kStatus));
  const auto deadline = started + config_.compile_timeout;
  bool done = false;
  while (!done) {
    if (auto status = page::try_find_element(s, status_locator)) done = page::get_text(s, *status) == "DONE";
    if (done) break;
    auto now = Clock::now();
    if (now >= deadline) break;
    std::this_thread::sleep_for(std::min(poll, std::chrono::duration_cast<milliseconds>(deadline - now)));
  }
  report.elapsed = since(started);

  if (!done) {
    report.status = ReportStatus::timeout;
    report.messages.push_back("No result after " + std::to_string(config_.compile_timeout.count()) + " ms.");
  } else {
    report.status = status_from_result(page::get_text(s, find(names::kResult)));
    const std::string echo_xpath = config_.xpath(names::kCodeEcho);
    for (auto name : {names::kOutputCompile, names::kOutputRun}) {
      if (config_.xpath(name) == echo_xpath) continue;
      std::string text = strip_echo(page::get_text(s, find(name)), source);
      if (!text.empty()) report.messages.push_back(std::move(text));
    }
  }
  channel_->append(report.to_text());
  return report;
}

void WorkflowHandle::exit() noexcept {
  if (session_) {
    try {
      session_->delete_session();
    } catch (const std::exception& e) {
      try {
        channel_->append(std::string("Session teardown failed: ") + e.what());
      } catch (...) {
      }
    }
    session_.reset();
  }
  phase_ = Phase::closed;
}

// ---------------------------------------------------------------------------

WorkflowHandle start(RemoteConfig config, std::shared_ptr<OutputChannel> channel, WorkflowOptions options) {
  config.validate();
  WorkflowHandle handle(std::move(config), std::move(channel), std::move(options));
  handle.start();
  return handle;
}

CompileReport run_cycle(const RemoteConfig& config, const std::filesystem::path& source_path,
                        std::shared_ptr<OutputChannel> channel, WorkflowOptions options) {
  WorkflowHandle handle(config, std::move(channel), std::move(options));
  try {
    handle.start();
    handle.login();
    CompileReport report = handle.push(source_path);
    handle.exit();
    return report;
  } catch (...) {
    handle.exit();
    throw;
  }
}

}  // namespace cloudbridge::workflow
