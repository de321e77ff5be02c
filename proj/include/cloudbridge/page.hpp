#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cloudbridge/wire.hpp"

namespace cloudbridge::page {

using std::chrono::milliseconds;
using wire::json;
using wire::Session;

inline constexpr milliseconds kDefaultPollInterval{100};

enum class LocatorStrategy { xpath, css };

struct Locator {
  LocatorStrategy strategy = LocatorStrategy::xpath;
  std::string expression;

  static Locator xpath(std::string expression) {
    return {LocatorStrategy::xpath, std::move(expression)};
  }
  static Locator css(std::string expression) {
    return {LocatorStrategy::css, std::move(expression)};
  }

  void validate() const;
  // {"using": "xpath" | "css selector", "value": expression}
  json to_wire() const;

  friend bool operator==(const Locator&, const Locator&) = default;
};

enum class WaitMode {
  implicit_wait,  // one lookup; the remote applies the session implicit wait
  explicit_wait,  // client-side polling for exactly this element
};

struct WaitPolicy {
  WaitMode mode = WaitMode::explicit_wait;
  milliseconds timeout{5000};
  milliseconds poll_interval = kDefaultPollInterval;

  static WaitPolicy explicit_wait(milliseconds timeout,
                                  milliseconds poll_interval = kDefaultPollInterval) {
    return {WaitMode::explicit_wait, timeout, poll_interval};
  }
  // Timeout is taken from the session's registered implicit wait.
  static WaitPolicy implicit_wait() { return {WaitMode::implicit_wait, {}, {}}; }

  void validate() const;
};

enum class ElementKind { input, button, text, code_view };
std::string_view to_string(ElementKind kind);
std::optional<ElementKind> parse_element_kind(std::string_view name);

struct ElementRef {
  std::string element_id;
  std::string session_id;
  std::optional<ElementKind> kind_hint;

  json to_wire() const;
};

// Symbolic keys accepted in action sequences.
enum class Key { meta, control, shift, enter };

std::string_view key_name(Key key);
// Throws Error(unknown_key).
Key parse_key(std::string_view name);
// The W3C code point for the key, UTF-8 encoded.
std::string_view key_code_point(Key key);
bool is_modifier(Key key);

struct PointerClick {
  ElementRef target;
};
struct KeyDown {
  Key key;
};
struct KeyUp {
  Key key;
};
struct TypeText {
  std::string text;
};

using ActionStep = std::variant<PointerClick, KeyDown, KeyUp, TypeText>;

// An ordered batch of browser-level input primitives delivered in a single
// actions request. Keys are routed to whatever element holds focus.
class ActionSequence {
 public:
  ActionSequence& click(ElementRef target);
  ActionSequence& key_down(Key key);
  ActionSequence& key_up(Key key);
  ActionSequence& type_text(std::string text);

  const std::vector<ActionStep>& steps() const { return steps_; }
  bool empty() const { return steps_.empty(); }

  // Every modifier pressed must be released, in a later step, before the
  // sequence ends. Throws Error(invalid_sequence).
  void validate() const;

  // W3C actions body: one key source ("keyboard") and one pointer source
  // ("mouse"), one real action per tick, the other source pausing.
  json to_payload() const;

 private:
  std::vector<ActionStep> steps_;
};

// Single immediate lookup, no waiting on either side.
std::optional<ElementRef> try_find_element(Session& session, const Locator& locator);

ElementRef find_element(Session& session, const Locator& locator, const WaitPolicy& wait);

// Element-level click. Throws Error(element_not_interactable) when the element
// kind rejects clicks.
void click(Session& session, const ElementRef& element);

// Element-level key input. Only inputs accept it.
void send_keys_to_element(Session& session, const ElementRef& element, std::string_view text);

void perform_actions(Session& session, const ActionSequence& sequence);

std::string get_text(Session& session, const ElementRef& element);

}  // namespace cloudbridge::page
