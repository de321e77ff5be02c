#include "cloudbridge/mock/scenario.hpp"

#include "cloudbridge/error.hpp"

namespace cloudbridge::mock {

std::string_view to_string(CompileStatus status) {
  switch (status) {
    case CompileStatus::success: return "success";
    case CompileStatus::compile_error: return "compile_error";
    case CompileStatus::runtime_error: return "runtime_error";
  }
  return "success";
}

CompileStatus parse_compile_status(std::string_view name) {
  if (name == "success") return CompileStatus::success;
  if (name == "compile_error") return CompileStatus::compile_error;
  if (name == "runtime_error") return CompileStatus::runtime_error;
  throw Error(ErrorCode::parse_error, "unknown compile status '" + std::string(name) + "'");
}

std::vector<CompilerRule> default_compiler_table() {
  return {
      {"TRIGGER_COMPILE_ERROR", CompileStatus::compile_error,
       "template.cu(42): error: identifier \"undeclared_symbol\" is undefined\n"
       "1 error detected in the compilation of \"template.cu\".\n"
       "Compilation failed.",
       ""},
      {"TRIGGER_RUNTIME_ERROR", CompileStatus::runtime_error, "Compilation succeeded.",
       "CUDA error: an illegal memory access was encountered\nProgram terminated abnormally."},
      {"", CompileStatus::success, "Compilation succeeded.",
       "Dataset 0: Solution is correct.\nDataset 1: Solution is correct.\nAll datasets passed."},
  };
}

CompileResult fake_compile(std::string_view source, const std::vector<CompilerRule>& table) {
  for (const auto& rule : table) {
    if (rule.pattern.empty() || source.find(rule.pattern) != std::string_view::npos) {
      return {rule.status, rule.compile_output, rule.run_output};
    }
  }
  // validate() guarantees a default rule; an unvalidated table falls through here.
  return {CompileStatus::success, "", ""};
}

ServiceScenario ServiceScenario::default_scenario() {
  ServiceScenario s;
  s.login_table = {{"student1", "Gpu-L4b-Pa55!"}};
  s.program_store = {{"mp1", "// skeleton\n"}};
  return s;
}

void ServiceScenario::validate() const {
  if (compiler_table.empty() || !compiler_table.back().pattern.empty()) {
    throw Error(ErrorCode::invalid_argument, "compiler table needs a terminal default rule");
  }
  for (const auto& [xpath, delay] : latency_schedule) {
    if (delay.count() < 0) {
      throw Error(ErrorCode::invalid_argument, "negative delay for " + xpath);
    }
  }
  if (compile_duration.count() < 0) {
    throw Error(ErrorCode::invalid_argument, "negative compile duration");
  }
}

json to_json(const ServiceScenario& s, bool redact_passwords) {
  json logins = json::object();
  for (const auto& [account, password] : s.login_table) {
    logins[account] = redact_passwords ? std::string("********") : password;
  }
  json rules = json::array();
  for (const auto& r : s.compiler_table) {
    rules.push_back({{"pattern", r.pattern},
                     {"status", to_string(r.status)},
                     {"compile_output", r.compile_output},
                     {"run_output", r.run_output}});
  }
  json latency = json::object();
  for (const auto& [xpath, delay] : s.latency_schedule) latency[xpath] = delay.count();
  return {
      {"ssl_fail", s.ssl_fail},
      {"login_table", logins},
      {"program_store", s.program_store},
      {"compiler_table", rules},
      {"latency_schedule", latency},
      {"compile_duration_ms", s.compile_duration.count()},
      {"compile_never_finishes", s.compile_never_finishes},
      {"api_tokens", redact_passwords ? json(json::array()) : json(s.api_tokens)},
      {"accepted_browsers", s.accepted_browsers},
  };
}

ServiceScenario scenario_from_json(const json& doc) {
  try {
    if (!doc.is_object()) throw Error(ErrorCode::parse_error, "scenario must be a JSON object");
    ServiceScenario s;
    s.ssl_fail = doc.value("ssl_fail", false);
    if (doc.contains("login_table")) {
      s.login_table = doc.at("login_table").get<std::map<std::string, std::string>>();
    }
    if (doc.contains("program_store")) {
      s.program_store = doc.at("program_store").get<std::map<std::string, std::string>>();
    }
    if (doc.contains("compiler_table")) {
      s.compiler_table.clear();
      for (const auto& r : doc.at("compiler_table")) {
        s.compiler_table.push_back({r.value("pattern", std::string()),
                                    parse_compile_status(r.value("status", std::string("success"))),
                                    r.value("compile_output", std::string()),
                                    r.value("run_output", std::string())});
      }
    }
    if (doc.contains("latency_schedule")) {
      for (const auto& [xpath, delay] : doc.at("latency_schedule").items()) {
        s.latency_schedule[xpath] = milliseconds(delay.get<long long>());
      }
    }
    s.compile_duration = milliseconds(doc.value("compile_duration_ms", 250LL));
    s.compile_never_finishes = doc.value("compile_never_finishes", false);
    if (doc.contains("api_tokens")) {
      s.api_tokens = doc.at("api_tokens").get<std::set<std::string>>();
    }
    if (doc.contains("accepted_browsers")) {
      s.accepted_browsers = doc.at("accepted_browsers").get<std::set<std::string>>();
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("scenario: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::parse_error) throw;
    throw Error(ErrorCode::parse_error, std::string("scenario: ") + e.detail());
  }
}

}  // namespace cloudbridge::mock
