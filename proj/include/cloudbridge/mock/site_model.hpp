#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cloudbridge/mock/scenario.hpp"
#include "cloudbridge/page.hpp"
#include "cloudbridge/wire.hpp"

namespace cloudbridge::mock {

using Clock = std::chrono::steady_clock;
using TimePoint = Clock::time_point;
using page::ElementKind;

// A W3C-shaped failure raised by the site model; the server turns it into an
// error response.
struct MockError {
  int http_status;
  std::string error;  // W3C error code
  std::string message;
};

enum class PageKind { interstitial, login, dashboard, lab, lab_not_found, not_found };
std::string_view to_string(PageKind kind);

struct VirtualElement {
  std::string element_id;
  std::string name;  // logical name used in event logs
  std::string xpath;
  std::string css;
  ElementKind kind = ElementKind::text;
  std::string value;
  bool focusable = false;
  bool secret = false;  // value redacted in dumps
  milliseconds delay{0};
};

struct VirtualPage {
  std::string url;
  PageKind kind = PageKind::not_found;
  std::string lab_id;  // lab and lab_not_found pages
  std::vector<VirtualElement> elements;
  TimePoint rendered_at{};

  bool materialized(const VirtualElement& element, TimePoint now) const {
    return now >= rendered_at + element.delay;
  }
  // When the last scheduled element appears.
  TimePoint ready_at() const;
  VirtualElement* by_id(std::string_view id);
  const VirtualElement* by_id(std::string_view id) const;
  VirtualElement* by_name(std::string_view name);
  const VirtualElement* by_name(std::string_view name) const;
};

// Interactability of element-level commands, by element kind.
bool accepts_element_click(ElementKind kind);
bool accepts_element_keys(ElementKind kind);

struct EventRecord {
  std::uint64_t seq = 0;
  std::string session_id;
  std::string type;    // click, send_keys, select_all, paste, save, login_attempt, ...
  std::string target;  // logical element name, or url for navigate
  std::string detail;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

// One decoded input primitive from an actions payload.
struct Primitive {
  enum class Type { click, key_down, key_up };
  Type type;
  std::string element_id;  // click
  std::string key;         // key_down / key_up: one UTF-8 code point
};

// Decodes a W3C actions body tick by tick. Throws MockError(invalid argument).
std::vector<Primitive> decode_actions(const json& body);

// Symbolic name of a key code point ("META", "ENTER") or the character itself.
// Throws MockError(invalid argument, "unknown key ...") for unsupported
// private-use code points.
std::string describe_key(std::string_view code_point);

struct ActionsRecord {
  std::uint64_t seq = 0;
  std::string session_id;
  std::vector<std::string> steps;  // "click:<name>", "keyDown:<key>", "keyUp:<key>"
  bool applied = false;
};

struct BrowserState {
  std::string session_id;
  wire::SessionCapabilities caps;
  json raw_capabilities;
  milliseconds implicit_wait{0};

  VirtualPage page;
  std::set<std::string> issued_ids;
  std::optional<std::string> focused;
  std::set<std::string> held_modifiers;  // symbolic names
  bool select_all = false;
  std::string clipboard;

  bool ssl_bypassed = false;
  bool ssl_details_open = false;
  std::string interstitial_target;
  bool authenticated = false;
  std::string login_next = "/";
  std::string site_origin;

  bool compile_armed = false;
  bool compile_running = false;
  TimePoint compile_started{};
  std::string compile_source;
};

// The simulated grading site: per-session browser state over a shared
// program store. Not thread-safe; the server serializes access.
class SiteModel {
 public:
  explicit SiteModel(ServiceScenario scenario);

  const ServiceScenario& scenario() const { return scenario_; }

  // Throws MockError(session not created) when the browser is not accepted.
  std::string create_session(const json& capabilities_payload, TimePoint now);
  bool has_session(std::string_view id) const;
  void delete_session(std::string_view id);
  std::vector<std::string> session_ids() const;
  const std::vector<json>& capability_log() const { return capability_log_; }

  void set_implicit_wait(std::string_view id, milliseconds wait);
  milliseconds implicit_wait(std::string_view id) const;

  void navigate(std::string_view id, std::string_view url, TimePoint now);
  std::string current_url(std::string_view id) const;

  // First element in document order matching the locator that has
  // materialized at `now`; nullopt otherwise.
  std::optional<VirtualElement> find(std::string_view id, std::string_view strategy,
                                     std::string_view expression, TimePoint now);
  TimePoint page_ready_at(std::string_view id) const;

  void element_click(std::string_view id, std::string_view element_id, TimePoint now);
  void element_send_keys(std::string_view id, std::string_view element_id, std::string_view text,
                         TimePoint now);
  std::string element_text(std::string_view id, std::string_view element_id, TimePoint now);

  // Applies all primitives or none.
  void perform(std::string_view id, const std::vector<Primitive>& primitives, TimePoint now);
  // Human-readable steps for the actions log.
  std::vector<std::string> describe(std::string_view id, const std::vector<Primitive>& primitives) const;

  void set_clipboard(std::string_view id, std::string text);

  enum class PullStatus { ok, unauthorized, not_found };
  PullStatus pull(std::optional<std::pair<std::string, std::string>> basic_credentials,
                  std::optional<std::string> token, std::string_view lab_id, std::string& code) const;

  // Completes compiles whose duration has elapsed.
  void advance(TimePoint now);

  const std::vector<EventRecord>& events() const { return events_; }
  json dump_page(std::string_view id) const;

 private:
  // Mutations go through a transaction so failed commands leave no trace.
  struct Txn {
    BrowserState browser;
    std::map<std::string, std::string> store_writes;
    std::vector<EventRecord> events;
  };

  BrowserState& browser(std::string_view id);
  const BrowserState& browser(std::string_view id) const;
  Txn begin(std::string_view id);
  void commit(Txn&& txn);

  VirtualElement& resolve(Txn& txn, std::string_view element_id, TimePoint now);
  void render(Txn& txn, std::string_view url, TimePoint now);
  void press(Txn& txn, const std::string& name, TimePoint now);
  void start_compile(Txn& txn, TimePoint now);
  void insert_text(Txn& txn, std::string_view text);
  void apply_primitive(Txn& txn, const Primitive& p, TimePoint now);
  void finish_compile(BrowserState& b, std::vector<EventRecord>& sink, TimePoint now);
  std::string stored_program(const Txn& txn, const std::string& lab) const;
  void record(Txn& txn, std::string type, std::string target, std::string detail = {});

  ServiceScenario scenario_;
  std::map<std::string, BrowserState, std::less<>> sessions_;
  std::vector<json> capability_log_;
  std::vector<EventRecord> events_;
  std::uint64_t next_session_ = 1;
  std::uint64_t next_element_ = 1;
};

}  // namespace cloudbridge::mock
