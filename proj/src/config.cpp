#include "cloudbridge/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "cloudbridge/error.hpp"
#include "cloudbridge/rest.hpp"
#include "cloudbridge/util.hpp"

namespace cloudbridge {
namespace {

constexpr std::string_view kXpathPrefix = "xpath.";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void parse_fail(std::string_view origin, int line, const std::string& what) {
  throw Error(ErrorCode::parse_error, std::string(origin) + ":" + std::to_string(line) + ": " + what);
}

bool parse_bool(std::string_view value, std::string_view origin, int line, std::string_view key) {
  if (value == "true" || value == "yes" || value == "1") return true;
  if (value == "false" || value == "no" || value == "0") return false;
  parse_fail(origin, line, std::string(key) + ": expected true or false, got '" + std::string(value) + "'");
}

milliseconds parse_ms(std::string_view value, std::string_view origin, int line, std::string_view key) {
  long long n = 0;
  std::size_t used = 0;
  try {
    n = std::stoll(std::string(value), &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) {
    parse_fail(origin, line, std::string(key) + ": expected an integer number of milliseconds");
  }
  return milliseconds(n);
}

std::string_view browser_name(BrowserKind kind) {
  return kind == BrowserKind::mock ? "mock" : "external";
}

}  // namespace

const std::map<std::string, std::string, std::less<>>& default_xpaths() {
  static const std::map<std::string, std::string, std::less<>> kDefaults = {
      {std::string(element_names::kSslAdvanced), "//a[@id='details-button']"},
      {std::string(element_names::kSslProceed), "//a[@id='proceed-link']"},
      {std::string(element_names::kUsername), "//input[@id='username']"},
      {std::string(element_names::kPassword), "//input[@id='password']"},
      {std::string(element_names::kLoginSubmit), "//button[@id='login-submit']"},
      {std::string(element_names::kLoginError), "//div[@id='login-error']"},
      {std::string(element_names::kLabNotFound), "//div[@id='lab-not-found']"},
      {std::string(element_names::kEditor), "//a[@id='code-editor']"},
      {std::string(element_names::kCompileButton), "//button[@id='compile-run']"},
      {std::string(element_names::kAllButton), "//button[@id='all-datasets']"},
      {std::string(element_names::kStatus), "//div[@id='run-status']"},
      {std::string(element_names::kResult), "//div[@id='run-result']"},
      {std::string(element_names::kOutputCompile), "//pre[@id='compile-output']"},
      {std::string(element_names::kOutputRun), "//pre[@id='program-output']"},
      {std::string(element_names::kCodeEcho), "//pre[@id='code-echo']"},
  };
  return kDefaults;
}

void RemoteConfig::validate() const {
  auto invalid = [](std::string_view key, std::string_view why) {
    throw Error(ErrorCode::config_invalid, std::string(key) + ": " + std::string(why));
  };
  if (account.empty()) invalid("account", "required key missing or empty");
  if (password.empty()) {
    invalid("password", "required key missing or empty (or set " + std::string(kPasswordEnvVar) + ")");
  }
  if (base_url.empty()) invalid("base_url", "required key missing or empty");
  if (!is_absolute_url(base_url)) invalid("base_url", "not an absolute URL");
  if (lab_id.empty()) invalid("lab_id", "required key missing or empty");
  if (!rest::is_valid_lab_id(lab_id)) invalid("lab_id", "must match [A-Za-z0-9_.-]+");
  if (automation_endpoint.empty()) invalid("automation_endpoint", "required key missing or empty");
  if (!is_absolute_url(automation_endpoint)) invalid("automation_endpoint", "not an absolute URL");
  if (implicit_wait.count() <= 0) invalid("implicit_wait_ms", "must be positive");
  if (explicit_poll.count() <= 0) invalid("explicit_poll_ms", "must be positive");
  if (command_timeout.count() <= 0) invalid("command_timeout_ms", "must be positive");
  if (compile_timeout.count() <= 0) invalid("compile_timeout_ms", "must be positive");
  if (workspace_file.empty()) invalid("workspace_file", "must not be empty");
  if (page::is_modifier(modifier_key) == false || modifier_key == page::Key::shift) {
    invalid("modifier_key", "must be META or CONTROL");
  }
  if (session_token && session_token->empty()) invalid("session_token", "must not be empty");
  const auto& defaults = default_xpaths();
  for (const auto& [name, xpath] : xpath_overrides) {
    std::string key = std::string(kXpathPrefix) + name;
    if (!defaults.contains(name)) invalid(key, "unknown element name");
    if (xpath.empty()) invalid(key, "must not be empty");
  }
}

std::string RemoteConfig::xpath(std::string_view name) const {
  if (auto it = xpath_overrides.find(name); it != xpath_overrides.end()) return it->second;
  const auto& defaults = default_xpaths();
  if (auto it = defaults.find(name); it != defaults.end()) return it->second;
  throw Error(ErrorCode::invalid_argument, "no xpath for element '" + std::string(name) + "'");
}

EnvLookup process_environment() {
  return [](std::string_view name) -> std::optional<std::string> {
    const char* value = std::getenv(std::string(name).c_str());
    if (value == nullptr) return std::nullopt;
    return std::string(value);
  };
}

RemoteConfig parse_config(std::string_view text, std::string_view origin, const EnvLookup& env) {
  RemoteConfig config;
  std::set<std::string, std::less<>> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    std::string_view raw = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) parse_fail(origin, line_no, "expected 'key = value'");
    std::string_view key = trim(line.substr(0, eq));
    std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) parse_fail(origin, line_no, "missing key before '='");
    if (!seen.insert(std::string(key)).second) {
      parse_fail(origin, line_no, "duplicate key '" + std::string(key) + "'");
    }
    if (!is_valid_utf8(value)) parse_fail(origin, line_no, std::string(key) + ": value is not UTF-8");

    if (key == "account") {
      config.account = value;
    } else if (key == "password") {
      config.password = Secret(std::string(value));
    } else if (key == "base_url") {
      config.base_url = value;
    } else if (key == "lab_id") {
      config.lab_id = value;
    } else if (key == "automation_endpoint") {
      config.automation_endpoint = value;
    } else if (key == "browser") {
      if (value == "mock") {
        config.browser = BrowserKind::mock;
      } else if (value == "external") {
        config.browser = BrowserKind::external;
      } else {
        parse_fail(origin, line_no, "browser: expected mock or external");
      }
    } else if (key == "headless") {
      config.headless = parse_bool(value, origin, line_no, key);
    } else if (key == "implicit_wait_ms") {
      config.implicit_wait = parse_ms(value, origin, line_no, key);
    } else if (key == "explicit_poll_ms") {
      config.explicit_poll = parse_ms(value, origin, line_no, key);
    } else if (key == "command_timeout_ms") {
      config.command_timeout = parse_ms(value, origin, line_no, key);
    } else if (key == "compile_timeout_ms") {
      config.compile_timeout = parse_ms(value, origin, line_no, key);
    } else if (key == "workspace_file") {
      config.workspace_file = std::filesystem::path(std::string(value));
    } else if (key == "modifier_key") {
      try {
        config.modifier_key = page::parse_key(value);
      } catch (const Error&) {
        parse_fail(origin, line_no, "modifier_key: expected META or CONTROL");
      }
    } else if (key == "session_token") {
      config.session_token = std::string(value);
    } else if (key.starts_with(kXpathPrefix)) {
      config.xpath_overrides[std::string(key.substr(kXpathPrefix.size()))] = value;
    } else {
      parse_fail(origin, line_no, "unknown key '" + std::string(key) + "'");
    }
  }

  if (env) {
    if (auto pw = env(kPasswordEnvVar); pw && !pw->empty()) config.password = Secret(*pw);
  }
  if (config.workspace_file.empty() && !config.lab_id.empty()) {
    config.workspace_file = config.lab_id + ".cu";
  }
  config.validate();
  return config;
}

RemoteConfig load_config(const std::filesystem::path& path, const EnvLookup& env) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::config_invalid, "cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string(), env);
}

std::string serialize_config(const RemoteConfig& config) {
  std::ostringstream out;
  out << "account = " << config.account << "\n"
      << "password = " << config.password.reveal() << "\n"
      << "base_url = " << config.base_url << "\n"
      << "lab_id = " << config.lab_id << "\n"
      << "automation_endpoint = " << config.automation_endpoint << "\n"
      << "browser = " << browser_name(config.browser) << "\n"
      << "headless = " << (config.headless ? "true" : "false") << "\n"
      << "implicit_wait_ms = " << config.implicit_wait.count() << "\n"
      << "explicit_poll_ms = " << config.explicit_poll.count() << "\n"
      << "command_timeout_ms = " << config.command_timeout.count() << "\n"
      << "compile_timeout_ms = " << config.compile_timeout.count() << "\n"
      << "workspace_file = " << config.workspace_file.string() << "\n"
      << "modifier_key = " << page::key_name(config.modifier_key) << "\n";
  if (config.session_token) out << "session_token = " << *config.session_token << "\n";
  for (const auto& [name, xpath] : config.xpath_overrides) {
    out << kXpathPrefix << name << " = " << xpath << "\n";
  }
  return out.str();
}

}  // namespace cloudbridge
