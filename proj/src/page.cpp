#include "cloudbridge/page.hpp"

#include <set>
#include <thread>

#include "cloudbridge/error.hpp"
#include "cloudbridge/util.hpp"

namespace cloudbridge::page {
namespace {

using wire::HttpMethod;
using wire::WireCommand;

// Vendor extension: the mock reports the element kind alongside the id.
constexpr std::string_view kKindKey = "cloudbridge:kind";

ElementRef element_from_wire(const json& value, const std::string& session_id) {
  if (!value.is_object() || !value.contains(wire::kElementKey) ||
      !value.at(wire::kElementKey).is_string()) {
    throw Error(ErrorCode::protocol_error, "find element response lacks an element reference");
  }
  ElementRef ref;
  ref.element_id = value.at(wire::kElementKey).get<std::string>();
  ref.session_id = session_id;
  if (ref.element_id.empty()) {
    throw Error(ErrorCode::protocol_error, "empty element id");
  }
  if (auto it = value.find(kKindKey); it != value.end() && it->is_string()) {
    ref.kind_hint = parse_element_kind(it->get<std::string>());
  }
  return ref;
}

void check_owner(const Session& session, const ElementRef& element) {
  if (element.element_id.empty()) {
    throw Error(ErrorCode::invalid_argument, "element reference has no id");
  }
  if (element.session_id != session.id()) {
    throw Error(ErrorCode::stale_element, "element " + element.element_id +
                                              " belongs to session " + element.session_id);
  }
}

WireCommand element_command(HttpMethod method, std::string suffix, const ElementRef& element,
                            json body = json::object()) {
  WireCommand cmd{method, "/element/{eid}" + suffix, std::move(body)};
  cmd.params["eid"] = element.element_id;
  return cmd;
}

}  // namespace

void Locator::validate() const {
  if (expression.empty()) {
    throw Error(ErrorCode::invalid_argument, "locator expression must not be empty");
  }
}

json Locator::to_wire() const {
  return {{"using", strategy == LocatorStrategy::xpath ? "xpath" : "css selector"},
          {"value", expression}};
}

void WaitPolicy::validate() const {
  if (mode == WaitMode::implicit_wait) return;
  if (timeout.count() <= 0) {
    throw Error(ErrorCode::invalid_argument, "explicit wait timeout must be positive");
  }
  if (poll_interval.count() <= 0) {
    throw Error(ErrorCode::invalid_argument, "explicit poll interval must be positive");
  }
  if (poll_interval > timeout) {
    throw Error(ErrorCode::invalid_argument, "poll interval exceeds timeout");
  }
}

std::string_view to_string(ElementKind kind) {
  switch (kind) {
    case ElementKind::input: return "input";
    case ElementKind::button: return "button";
    case ElementKind::text: return "text";
    case ElementKind::code_view: return "code-view";
  }
  return "text";
}

std::optional<ElementKind> parse_element_kind(std::string_view name) {
  if (name == "input") return ElementKind::input;
  if (name == "button") return ElementKind::button;
  if (name == "text") return ElementKind::text;
  if (name == "code-view") return ElementKind::code_view;
  return std::nullopt;
}

json ElementRef::to_wire() const { return {{std::string(wire::kElementKey), element_id}}; }

// ---------------------------------------------------------------------------
// Keys

std::string_view key_name(Key key) {
  switch (key) {
    case Key::meta: return "META";
    case Key::control: return "CONTROL";
    case Key::shift: return "SHIFT";
    case Key::enter: return "ENTER";
  }
  return "META";
}

Key parse_key(std::string_view name) {
  if (name == "META" || name == "COMMAND") return Key::meta;
  if (name == "CONTROL" || name == "CTRL") return Key::control;
  if (name == "SHIFT") return Key::shift;
  if (name == "ENTER") return Key::enter;
  throw Error(ErrorCode::unknown_key, "unknown key '" + std::string(name) + "'");
}

std::string_view key_code_point(Key key) {
  switch (key) {
    case Key::meta: return "\xEE\x80\xBD";     // U+E03D
    case Key::control: return "\xEE\x80\x89";  // U+E009
    case Key::shift: return "\xEE\x80\x88";    // U+E008
    case Key::enter: return "\xEE\x80\x87";    // U+E007
  }
  return "";
}

bool is_modifier(Key key) { return key != Key::enter; }

// ---------------------------------------------------------------------------
// ActionSequence

ActionSequence& ActionSequence::click(ElementRef target) {
  steps_.emplace_back(PointerClick{std::move(target)});
  return *this;
}

ActionSequence& ActionSequence::key_down(Key key) {
  steps_.emplace_back(KeyDown{key});
  return *this;
}

ActionSequence& ActionSequence::key_up(Key key) {
  steps_.emplace_back(KeyUp{key});
  return *this;
}

ActionSequence& ActionSequence::type_text(std::string text) {
  steps_.emplace_back(TypeText{std::move(text)});
  return *this;
}

void ActionSequence::validate() const {
  std::set<Key> held;
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    const auto& step = steps_[i];
    if (const auto* down = std::get_if<KeyDown>(&step)) {
      if (is_modifier(down->key) && !held.insert(down->key).second) {
        throw Error(ErrorCode::invalid_sequence,
                    "step " + std::to_string(i) + ": " + std::string(key_name(down->key)) +
                        " pressed twice");
      }
    } else if (const auto* up = std::get_if<KeyUp>(&step)) {
      if (is_modifier(up->key) && held.erase(up->key) == 0) {
        throw Error(ErrorCode::invalid_sequence,
                    "step " + std::to_string(i) + ": " + std::string(key_name(up->key)) +
                        " released without being pressed");
      }
    } else if (const auto* click = std::get_if<PointerClick>(&step)) {
      if (click->target.element_id.empty()) {
        throw Error(ErrorCode::invalid_sequence,
                    "step " + std::to_string(i) + ": click target has no element id");
      }
    } else if (const auto* text = std::get_if<TypeText>(&step)) {
      if (!is_valid_utf8(text->text)) {
        throw Error(ErrorCode::invalid_sequence,
                    "step " + std::to_string(i) + ": text is not valid UTF-8");
      }
    }
  }
  if (!held.empty()) {
    throw Error(ErrorCode::invalid_sequence,
                std::string(key_name(*held.begin())) + " is never released");
  }
}

json ActionSequence::to_payload() const {
  json keys = json::array();
  json pointer = json::array();
  const json pause = {{"type", "pause"}, {"duration", 0}};

  auto key_tick = [&](std::string_view type, std::string_view value) {
    keys.push_back({{"type", type}, {"value", value}});
    pointer.push_back(pause);
  };

  for (const auto& step : steps_) {
    if (const auto* click = std::get_if<PointerClick>(&step)) {
      pointer.push_back({{"type", "pointerMove"},
                         {"duration", 0},
                         {"origin", click->target.to_wire()},
                         {"x", 0},
                         {"y", 0}});
      pointer.push_back({{"type", "pointerDown"}, {"button", 0}});
      pointer.push_back({{"type", "pointerUp"}, {"button", 0}});
      for (int i = 0; i < 3; ++i) keys.push_back(pause);
    } else if (const auto* down = std::get_if<KeyDown>(&step)) {
      key_tick("keyDown", key_code_point(down->key));
    } else if (const auto* up = std::get_if<KeyUp>(&step)) {
      key_tick("keyUp", key_code_point(up->key));
    } else if (const auto* text = std::get_if<TypeText>(&step)) {
      for (const auto& cp : split_code_points(text->text)) {
        key_tick("keyDown", cp);
        key_tick("keyUp", cp);
      }
    }
  }

  json actions = json::array();
  if (!keys.empty()) {
    actions.push_back({{"type", "key"}, {"id", "keyboard"}, {"actions", keys}});
    actions.push_back({{"type", "pointer"},
                       {"id", "mouse"},
                       {"parameters", {{"pointerType", "mouse"}}},
                       {"actions", pointer}});
  }
  return {{"actions", actions}};
}

// ---------------------------------------------------------------------------
// Operations

std::optional<ElementRef> try_find_element(Session& session, const Locator& locator) {
  locator.validate();
  WireCommand cmd{HttpMethod::post, "/element", locator.to_wire()};
  auto response = session.execute_command(cmd);
  if (!response.ok() && response.error().error == "no such element") {
    return std::nullopt;
  }
  return element_from_wire(response.value_or_throw("find element"), session.id());
}

ElementRef find_element(Session& session, const Locator& locator, const WaitPolicy& wait) {
  locator.validate();
  wait.validate();
  if (!session.is_open()) throw Error(ErrorCode::closed_session, "session is closed");

  if (wait.mode == WaitMode::implicit_wait) {
    const auto registered = session.capabilities().implicit_wait;
    if (session.active_implicit_wait() != registered) session.set_implicit_wait(registered);
    if (auto found = try_find_element(session, locator)) return *found;
    throw Error(ErrorCode::not_found_timeout,
                "'" + locator.expression + "' not found within implicit wait of " +
                    std::to_string(registered.count()) + " ms");
  }

  // Explicit polling only works if each lookup returns immediately.
  if (session.active_implicit_wait() != milliseconds(0)) session.set_implicit_wait(milliseconds(0));
  const auto deadline = std::chrono::steady_clock::now() + wait.timeout;
  for (;;) {
    if (auto found = try_find_element(session, locator)) return *found;
    auto now = std::chrono::steady_clock::now();
    if (now >= deadline) break;
    auto remaining = std::chrono::duration_cast<milliseconds>(deadline - now);
    std::this_thread::sleep_for(std::min(wait.poll_interval, remaining + milliseconds(1)));
  }
  throw Error(ErrorCode::not_found_timeout, "'" + locator.expression + "' not found within " +
                                                std::to_string(wait.timeout.count()) + " ms");
}

void click(Session& session, const ElementRef& element) {
  check_owner(session, element);
  session.execute_command(element_command(HttpMethod::post, "/click", element))
      .value_or_throw("click " + element.element_id);
}

void send_keys_to_element(Session& session, const ElementRef& element, std::string_view text) {
  check_owner(session, element);
  json body = {{"text", std::string(text)}};
  session.execute_command(element_command(HttpMethod::post, "/value", element, std::move(body)))
      .value_or_throw("send keys to " + element.element_id);
}

void perform_actions(Session& session, const ActionSequence& sequence) {
  sequence.validate();
  for (const auto& step : sequence.steps()) {
    if (const auto* c = std::get_if<PointerClick>(&step)) check_owner(session, c->target);
  }
  WireCommand cmd{HttpMethod::post, "/actions", sequence.to_payload()};
  session.execute_command(cmd).value_or_throw("perform actions");
}

std::string get_text(Session& session, const ElementRef& element) {
  check_owner(session, element);
  auto response = session.execute_command(element_command(HttpMethod::get, "/text", element));
  const json& value = response.value_or_throw("get text of " + element.element_id);
  if (!value.is_string()) throw Error(ErrorCode::protocol_error, "element text is not a string");
  return value.get<std::string>();
}

}  // namespace cloudbridge::page
