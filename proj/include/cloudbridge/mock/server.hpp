#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "cloudbridge/mock/scenario.hpp"
#include "cloudbridge/mock/site_model.hpp"

namespace cloudbridge::mock {

struct RequestLogEntry {
  enum class Phase { request, response };

  std::uint64_t seq = 0;
  std::int64_t timestamp_ns = 0;  // strictly increasing within one server
  Phase phase = Phase::request;
  std::string method;
  std::string path;
  std::string session_id;  // empty for requests outside /session/{sid}
  int status = 0;          // responses only
  std::string body_digest;
};

struct StateSnapshot {
  ServiceScenario scenario;  // program_store reflects saves
  std::vector<std::string> sessions;
  std::vector<json> capability_log;
  std::vector<RequestLogEntry> request_log;
  std::vector<EventRecord> events;
  std::vector<ActionsRecord> actions;
  std::map<std::string, json> pages;  // session id -> page dump

  json to_json() const;
};

// Hermetic stand-in for the automation server and the grading site. Serves
// the wire-protocol subset, the REST pull endpoint and /mock/ control
// endpoints on one port. Stops when destroyed.
class MockServer {
 public:
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  int port() const;
  // "http://127.0.0.1:<port>"
  std::string url() const;

  StateSnapshot dump_state() const;
  // Replaces the scenario and resets every session and log.
  void load_scenario(ServiceScenario scenario);

  void stop();

 private:
  friend std::unique_ptr<MockServer> serve(ServiceScenario, std::string_view);
  struct Impl;
  explicit MockServer(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

// `bind_address` is "host:port"; port 0 picks a free port. Throws
// Error(bind_failure) if the port is taken.
std::unique_ptr<MockServer> serve(ServiceScenario scenario,
                                  std::string_view bind_address = "127.0.0.1:0");

}  // namespace cloudbridge::mock
