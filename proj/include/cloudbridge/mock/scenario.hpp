#pragma once

#include <chrono>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace cloudbridge::mock {

using json = nlohmann::json;
using std::chrono::milliseconds;

enum class CompileStatus { success, compile_error, runtime_error };
std::string_view to_string(CompileStatus status);
CompileStatus parse_compile_status(std::string_view name);

// Source containing `pattern` produces the canned result. An empty pattern
// matches everything and must terminate the table.
struct CompilerRule {
  std::string pattern;
  CompileStatus status = CompileStatus::success;
  std::string compile_output;
  std::string run_output;

  friend bool operator==(const CompilerRule&, const CompilerRule&) = default;
};

struct CompileResult {
  CompileStatus status = CompileStatus::success;
  std::string compile_output;
  std::string run_output;

  friend bool operator==(const CompileResult&, const CompileResult&) = default;
};

std::vector<CompilerRule> default_compiler_table();

// First matching rule wins.
CompileResult fake_compile(std::string_view source, const std::vector<CompilerRule>& table);

struct ServiceScenario {
  bool ssl_fail = false;
  std::map<std::string, std::string> login_table;    // account -> password
  std::map<std::string, std::string> program_store;  // lab id -> source
  std::vector<CompilerRule> compiler_table = default_compiler_table();
  // Element xpath -> delay after page render before the element exists.
  std::map<std::string, milliseconds> latency_schedule;
  milliseconds compile_duration{250};
  bool compile_never_finishes = false;
  std::set<std::string> api_tokens;  // accepted X-Session-Token values
  std::set<std::string> accepted_browsers = {"chrome", "firefox", "msedge", "mock"};

  // One account ("student1"), one lab ("mp1") seeded with "// skeleton\n".
  static ServiceScenario default_scenario();

  // Throws Error(invalid_argument) when the compiler table lacks a terminal
  // default rule or a delay is negative.
  void validate() const;

  friend bool operator==(const ServiceScenario&, const ServiceScenario&) = default;
};

json to_json(const ServiceScenario& scenario, bool redact_passwords = true);
// Throws Error(parse_error) on malformed input.
ServiceScenario scenario_from_json(const json& doc);

}  // namespace cloudbridge::mock
