#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "cloudbridge/page.hpp"
#include "cloudbridge/secret.hpp"

namespace cloudbridge {

using std::chrono::milliseconds;

enum class BrowserKind { mock, external };

inline constexpr std::string_view kPasswordEnvVar = "CLOUDBRIDGE_PASSWORD";

// Names of the page elements the workflow locates, with their default xpaths.
// Every name can be overridden in the config file as `xpath.<name> = ...`.
namespace element_names {
inline constexpr std::string_view kSslAdvanced = "ssl_advanced";
inline constexpr std::string_view kSslProceed = "ssl_proceed";
inline constexpr std::string_view kUsername = "username";
inline constexpr std::string_view kPassword = "password";
inline constexpr std::string_view kLoginSubmit = "login_submit";
inline constexpr std::string_view kLoginError = "login_error";
inline constexpr std::string_view kLabNotFound = "lab_not_found";
inline constexpr std::string_view kEditor = "editor";
inline constexpr std::string_view kCompileButton = "compile_button";
inline constexpr std::string_view kAllButton = "all_button";
inline constexpr std::string_view kStatus = "status";
inline constexpr std::string_view kResult = "result";
inline constexpr std::string_view kOutputCompile = "output_compile";
inline constexpr std::string_view kOutputRun = "output_run";
inline constexpr std::string_view kCodeEcho = "code_echo";
}  // namespace element_names

const std::map<std::string, std::string, std::less<>>& default_xpaths();

struct RemoteConfig {
  std::string account;
  Secret password;
  std::string base_url;
  std::string lab_id;
  std::string automation_endpoint;
  BrowserKind browser = BrowserKind::mock;
  bool headless = false;
  milliseconds implicit_wait{5000};
  milliseconds explicit_poll{100};
  milliseconds command_timeout{30000};
  milliseconds compile_timeout{60000};
  std::filesystem::path workspace_file;
  std::map<std::string, std::string, std::less<>> xpath_overrides;
  // Modifier held for the select-all/paste/save chords; CONTROL on non-mac remotes.
  page::Key modifier_key = page::Key::meta;
  std::optional<std::string> session_token;

  // Throws Error(config_invalid) naming the offending key.
  void validate() const;

  // Override if present, otherwise the default.
  std::string xpath(std::string_view name) const;

  friend bool operator==(const RemoteConfig&, const RemoteConfig&) = default;
};

using EnvLookup = std::function<std::optional<std::string>(std::string_view)>;
EnvLookup process_environment();

// Flat `key = value` text, '#' starts a comment line. Keys are the
// RemoteConfig field names: account, password, base_url, lab_id,
// automation_endpoint, browser, headless, implicit_wait_ms, explicit_poll_ms,
// command_timeout_ms, compile_timeout_ms, workspace_file, modifier_key,
// session_token, xpath.<name>.
// Throws Error(parse_error) with "origin:line" diagnostics, or
// Error(config_invalid) naming the key.
RemoteConfig parse_config(std::string_view text, std::string_view origin = "<config>",
                          const EnvLookup& env = {});

RemoteConfig load_config(const std::filesystem::path& path,
                         const EnvLookup& env = process_environment());

std::string serialize_config(const RemoteConfig& config);

}  // namespace cloudbridge
