#include "cloudbridge/mock/site_model.hpp"

#include <algorithm>
#include <cctype>

#include "cloudbridge/error.hpp"
#include "cloudbridge/util.hpp"

namespace cloudbridge::mock {
namespace {

constexpr std::string_view kRedacted = "********";
constexpr std::string_view kLoginFailedText = "Invalid account or password.";

MockError invalid_argument(std::string message) {
  return {400, "invalid argument", std::move(message)};
}

MockError invalid_session(std::string_view id) {
  return {404, "invalid session id", "no session " + std::string(id)};
}

std::uint32_t decode_code_point(std::string_view cp) {
  auto b = [&](std::size_t i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(cp[i])); };
  switch (cp.size()) {
    case 1: return b(0);
    case 2: return ((b(0) & 0x1F) << 6) | (b(1) & 0x3F);
    case 3: return ((b(0) & 0x0F) << 12) | ((b(1) & 0x3F) << 6) | (b(2) & 0x3F);
    case 4: return ((b(0) & 0x07) << 18) | ((b(1) & 0x3F) << 12) | ((b(2) & 0x3F) << 6) | (b(3) & 0x3F);
  }
  return 0;
}

bool is_modifier_name(std::string_view name) {
  return name == "META" || name == "CONTROL" || name == "SHIFT";
}

std::string query_param(std::string_view path, std::string_view name) {
  auto q = path.find('?');
  if (q == std::string_view::npos) return {};
  std::string_view query = path.substr(q + 1);
  while (!query.empty()) {
    auto amp = query.find('&');
    std::string_view pair = query.substr(0, amp);
    if (pair.starts_with(name) && pair.size() > name.size() && pair[name.size()] == '=') {
      return std::string(pair.substr(name.size() + 1));
    }
    if (amp == std::string_view::npos) break;
    query.remove_prefix(amp + 1);
  }
  return {};
}

}  // namespace

std::string_view to_string(PageKind kind) {
  switch (kind) {
    case PageKind::interstitial: return "interstitial";
    case PageKind::login: return "login";
    case PageKind::dashboard: return "dashboard";
    case PageKind::lab: return "lab";
    case PageKind::lab_not_found: return "lab_not_found";
    case PageKind::not_found: return "not_found";
  }
  return "not_found";
}

TimePoint VirtualPage::ready_at() const {
  milliseconds latest{0};
  for (const auto& e : elements) latest = std::max(latest, e.delay);
  return rendered_at + latest;
}

VirtualElement* VirtualPage::by_id(std::string_view id) {
  for (auto& e : elements) {
    if (e.element_id == id) return &e;
  }
  return nullptr;
}

const VirtualElement* VirtualPage::by_id(std::string_view id) const {
  for (const auto& e : elements) {
    if (e.element_id == id) return &e;
  }
  return nullptr;
}

VirtualElement* VirtualPage::by_name(std::string_view name) {
  for (auto& e : elements) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

const VirtualElement* VirtualPage::by_name(std::string_view name) const {
  for (const auto& e : elements) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

// Element-level commands: buttons take clicks only, inputs take keys only,
// the code view takes a click (focus) but no per-element keys, text takes
// neither.
bool accepts_element_click(ElementKind kind) {
  return kind == ElementKind::button || kind == ElementKind::code_view;
}

bool accepts_element_keys(ElementKind kind) { return kind == ElementKind::input; }

std::string describe_key(std::string_view code_point) {
  std::uint32_t cp = decode_code_point(code_point);
  if (cp < 0xE000 || cp > 0xF8FF) return std::string(code_point);
  switch (cp) {
    case 0xE03D:
    case 0xE053:
      return "META";
    case 0xE009:
    case 0xE051:
      return "CONTROL";
    case 0xE008:
    case 0xE050:
      return "SHIFT";
    case 0xE007:
    case 0xE006:
      return "ENTER";
    default: {
      char buf[16];
      std::snprintf(buf, sizeof buf, "U+%04X", cp);
      throw invalid_argument(std::string("unknown key ") + buf);
    }
  }
}

std::vector<Primitive> decode_actions(const json& body) {
  if (!body.is_object() || !body.contains("actions") || !body.at("actions").is_array()) {
    throw invalid_argument("actions body must be {\"actions\": [...]}");
  }
  const json& sources = body.at("actions");
  std::size_t ticks = 0;
  for (const auto& src : sources) {
    if (!src.is_object() || !src.contains("type") || !src.contains("actions") ||
        !src.at("actions").is_array()) {
      throw invalid_argument("malformed input source");
    }
    ticks = std::max(ticks, src.at("actions").size());
  }

  struct PointerState {
    std::string target;
    bool pressed = false;
  };
  std::vector<PointerState> pointers(sources.size());
  std::vector<Primitive> out;

  for (std::size_t tick = 0; tick < ticks; ++tick) {
    for (std::size_t s = 0; s < sources.size(); ++s) {
      const json& list = sources[s].at("actions");
      if (tick >= list.size()) continue;
      const json& action = list[tick];
      const std::string source_type = sources[s].at("type").get<std::string>();
      const std::string type = action.value("type", std::string());
      if (type == "pause") continue;
      if (source_type == "key") {
        if (type != "keyDown" && type != "keyUp") throw invalid_argument("bad key action " + type);
        if (!action.contains("value") || !action.at("value").is_string()) {
          throw invalid_argument("key action without value");
        }
        std::string value = action.at("value").get<std::string>();
        std::vector<std::string> cps;
        try {
          cps = split_code_points(value);
        } catch (const Error&) {
          throw invalid_argument("key value is not UTF-8");
        }
        if (cps.size() != 1) throw invalid_argument("key value must be a single code point");
        describe_key(value);
        out.push_back({type == "keyDown" ? Primitive::Type::key_down : Primitive::Type::key_up, {},
                       value});
      } else if (source_type == "pointer") {
        auto& ps = pointers[s];
        if (type == "pointerMove") {
          const json origin = action.value("origin", json("viewport"));
          if (origin.is_object() && origin.contains(wire::kElementKey)) {
            ps.target = origin.at(wire::kElementKey).get<std::string>();
          } else {
            ps.target.clear();
          }
        } else if (type == "pointerDown") {
          ps.pressed = true;
        } else if (type == "pointerUp") {
          if (ps.pressed && !ps.target.empty()) {
            out.push_back({Primitive::Type::click, ps.target, {}});
          }
          ps.pressed = false;
        } else {
          throw invalid_argument("bad pointer action " + type);
        }
      } else if (source_type != "none") {
        throw invalid_argument("unsupported input source " + source_type);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SiteModel

SiteModel::SiteModel(ServiceScenario scenario) : scenario_(std::move(scenario)) {}

BrowserState& SiteModel::browser(std::string_view id) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw invalid_session(id);
  return it->second;
}

const BrowserState& SiteModel::browser(std::string_view id) const {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw invalid_session(id);
  return it->second;
}

SiteModel::Txn SiteModel::begin(std::string_view id) { return Txn{browser(id), {}, {}}; }

void SiteModel::commit(Txn&& txn) {
  for (auto& [lab, code] : txn.store_writes) scenario_.program_store[lab] = std::move(code);
  for (auto& e : txn.events) {
    e.seq = events_.size() + 1;
    events_.push_back(std::move(e));
  }
  std::string id = txn.browser.session_id;
  sessions_[id] = std::move(txn.browser);
}

void SiteModel::record(Txn& txn, std::string type, std::string target, std::string detail) {
  txn.events.push_back({0, txn.browser.session_id, std::move(type), std::move(target), std::move(detail)});
}

std::string SiteModel::stored_program(const Txn& txn, const std::string& lab) const {
  if (auto it = txn.store_writes.find(lab); it != txn.store_writes.end()) return it->second;
  if (auto it = scenario_.program_store.find(lab); it != scenario_.program_store.end()) return it->second;
  return {};
}

std::string SiteModel::create_session(const json& payload, TimePoint now) {
  wire::SessionCapabilities caps;
  try {
    caps = wire::SessionCapabilities::from_payload(payload);
    caps.validate();
  } catch (const Error& e) {
    throw invalid_argument(e.detail());
  } catch (const json::exception& e) {
    throw invalid_argument(e.what());
  }
  if (!scenario_.accepted_browsers.contains(caps.browser_name)) {
    throw MockError{500, "session not created", "browser '" + caps.browser_name + "' is not available"};
  }
  capability_log_.push_back(payload);
  BrowserState b;
  b.session_id = fnv1a_hex("session-" + std::to_string(next_session_++));
  b.caps = caps;
  b.raw_capabilities = payload;
  b.implicit_wait = caps.implicit_wait;
  b.page.url = "about:blank";
  b.page.kind = PageKind::not_found;
  b.page.rendered_at = now;
  std::string id = b.session_id;
  sessions_.emplace(id, std::move(b));
  return id;
}

bool SiteModel::has_session(std::string_view id) const { return sessions_.find(id) != sessions_.end(); }

void SiteModel::delete_session(std::string_view id) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw invalid_session(id);
  sessions_.erase(it);
}

std::vector<std::string> SiteModel::session_ids() const {
  std::vector<std::string> out;
  for (const auto& [id, b] : sessions_) out.push_back(id);
  return out;
}

void SiteModel::set_implicit_wait(std::string_view id, milliseconds wait) {
  if (wait.count() < 0) throw invalid_argument("implicit timeout must be >= 0");
  browser(id).implicit_wait = wait;
}

milliseconds SiteModel::implicit_wait(std::string_view id) const { return browser(id).implicit_wait; }

void SiteModel::render(Txn& txn, std::string_view url, TimePoint now) {
  UrlParts parts;
  try {
    parts = parse_url(url);
  } catch (const Error& e) {
    throw invalid_argument(e.detail());
  }
  auto& b = txn.browser;
  const std::string origin = origin_of(parts);
  const std::string full_path = parts.path;
  const std::string path = full_path.substr(0, full_path.find_first_of("?#"));

  b.site_origin = origin;
  b.focused.reset();
  b.select_all = false;
  b.held_modifiers.clear();
  b.compile_armed = false;
  b.compile_running = false;

  VirtualPage page;
  page.rendered_at = now;
  auto add = [&](std::string name, std::string xpath, std::string css, ElementKind kind,
                 std::string value = {}, bool focusable = false, bool secret = false) {
    VirtualElement e;
    e.element_id = "el-" + std::to_string(next_element_++);
    e.name = std::move(name);
    if (auto it = scenario_.latency_schedule.find(xpath); it != scenario_.latency_schedule.end()) {
      e.delay = it->second;
    }
    e.xpath = std::move(xpath);
    e.css = std::move(css);
    e.kind = kind;
    e.value = std::move(value);
    e.focusable = focusable;
    e.secret = secret;
    page.elements.push_back(std::move(e));
  };
  auto footer = [&] { add("footer", "//div[@id='footer']", "#footer", ElementKind::text, "WebGPU"); };
  auto login_page = [&](std::string next) {
    page.kind = PageKind::login;
    page.url = origin + "/login" + (next == "/" ? std::string() : "?next=" + next);
    b.login_next = std::move(next);
    add("login_heading", "//h1[@id='login-heading']", "#login-heading", ElementKind::text, "Sign in");
    add("username", "//input[@id='username']", "#username", ElementKind::input, {}, true);
    add("password", "//input[@id='password']", "#password", ElementKind::input, {}, true, true);
    add("login_submit", "//button[@id='login-submit']", "#login-submit", ElementKind::button, "Log in");
    add("login_error", "//div[@id='login-error']", "#login-error", ElementKind::text);
    footer();
  };

  if (scenario_.ssl_fail && !b.ssl_bypassed) {
    page.kind = PageKind::interstitial;
    page.url = std::string(url);
    b.interstitial_target = std::string(url);
    b.ssl_details_open = false;
    add("ssl_heading", "//h1[@id='ssl-heading']", "#ssl-heading", ElementKind::text,
        "Your connection is not private");
    add("ssl_advanced", "//a[@id='details-button']", "#details-button", ElementKind::button, "Advanced");
    add("ssl_proceed", "//a[@id='proceed-link']", "#proceed-link", ElementKind::button,
        "Proceed (unsafe)");
    record(txn, "navigate", std::string(url), "interstitial");
  } else if (path == "/" || path.empty()) {
    if (b.authenticated) {
      page.kind = PageKind::dashboard;
      page.url = origin + "/";
      add("dashboard_heading", "//h1[@id='labs-heading']", "#labs-heading", ElementKind::text, "Labs");
      footer();
    } else {
      login_page("/");
    }
    record(txn, "navigate", page.url, std::string(to_string(page.kind)));
  } else if (path == "/login") {
    std::string next = query_param(full_path, "next");
    login_page(next.empty() ? "/" : next);
    record(txn, "navigate", page.url, "login");
  } else if (path.starts_with("/lab/") && path.size() > 5) {
    std::string lab = path.substr(5);
    if (!b.authenticated) {
      login_page("/lab/" + lab);
    } else if (scenario_.program_store.contains(lab) || txn.store_writes.contains(lab)) {
      page.kind = PageKind::lab;
      page.url = origin + "/lab/" + lab;
      page.lab_id = lab;
      add("lab_heading", "//h1[@id='lab-heading']", "#lab-heading", ElementKind::text, "Lab " + lab);
      add("editor", "//a[@id='code-editor']", "#code-editor", ElementKind::code_view,
          stored_program(txn, lab), true);
      add("compile_button", "//button[@id='compile-run']", "#compile-run", ElementKind::button,
          "Compile & Run");
      add("all_button", "//button[@id='all-datasets']", "#all-datasets", ElementKind::button,
          "Run all datasets");
      add("status", "//div[@id='run-status']", "#run-status", ElementKind::text);
      add("result", "//div[@id='run-result']", "#run-result", ElementKind::text);
      add("output_compile", "//pre[@id='compile-output']", "#compile-output", ElementKind::text);
      add("output_run", "//pre[@id='program-output']", "#program-output", ElementKind::text);
      add("code_echo", "//pre[@id='code-echo']", "#code-echo", ElementKind::text);
      footer();
    } else {
      page.kind = PageKind::lab_not_found;
      page.url = origin + "/lab/" + lab;
      page.lab_id = lab;
      add("lab_not_found", "//div[@id='lab-not-found']", "#lab-not-found", ElementKind::text,
          "Lab " + lab + " does not exist.");
      footer();
    }
    record(txn, "navigate", page.url, std::string(to_string(page.kind)));
  } else {
    page.kind = PageKind::not_found;
    page.url = std::string(url);
    add("not_found", "//div[@id='not-found']", "#not-found", ElementKind::text, "404 Not Found");
    record(txn, "navigate", page.url, "not_found");
  }

  for (const auto& e : page.elements) b.issued_ids.insert(e.element_id);
  b.page = std::move(page);
}

void SiteModel::navigate(std::string_view id, std::string_view url, TimePoint now) {
  Txn txn = begin(id);
  render(txn, url, now);
  commit(std::move(txn));
}

std::string SiteModel::current_url(std::string_view id) const { return browser(id).page.url; }

std::optional<VirtualElement> SiteModel::find(std::string_view id, std::string_view strategy,
                                              std::string_view expression, TimePoint now) {
  advance(now);
  const auto& b = browser(id);
  bool by_xpath = strategy == "xpath";
  if (!by_xpath && strategy != "css selector") {
    throw invalid_argument("unsupported locator strategy '" + std::string(strategy) + "'");
  }
  if (expression.empty()) throw invalid_argument("empty selector");
  for (const auto& e : b.page.elements) {
    const std::string& key = by_xpath ? e.xpath : e.css;
    if (key == expression && b.page.materialized(e, now)) return e;
  }
  return std::nullopt;
}

TimePoint SiteModel::page_ready_at(std::string_view id) const { return browser(id).page.ready_at(); }

VirtualElement& SiteModel::resolve(Txn& txn, std::string_view element_id, TimePoint now) {
  auto& b = txn.browser;
  if (auto* e = b.page.by_id(element_id)) {
    if (!b.page.materialized(*e, now)) {
      throw MockError{404, "no such element", "element " + std::string(element_id) + " not yet present"};
    }
    return *e;
  }
  if (b.issued_ids.contains(std::string(element_id))) {
    throw MockError{404, "stale element reference",
                    "element " + std::string(element_id) + " is no longer attached to the page"};
  }
  throw MockError{404, "no such element", "unknown element " + std::string(element_id)};
}

void SiteModel::start_compile(Txn& txn, TimePoint now) {
  auto& b = txn.browser;
  b.compile_armed = false;
  b.compile_running = true;
  b.compile_started = now;
  b.compile_source = stored_program(txn, b.page.lab_id);
  for (std::string_view name : {"result", "output_compile", "output_run", "code_echo"}) {
    if (auto* e = b.page.by_name(name)) e->value.clear();
  }
  if (auto* status = b.page.by_name("status")) status->value = "RUNNING";
  record(txn, "compile_start", b.page.lab_id, std::to_string(b.compile_source.size()) + " bytes");
}

void SiteModel::press(Txn& txn, const std::string& name, TimePoint now) {
  auto& b = txn.browser;
  if (name == "ssl_advanced") {
    b.ssl_details_open = true;
  } else if (name == "ssl_proceed") {
    if (b.ssl_details_open) {
      b.ssl_bypassed = true;
      record(txn, "ssl_bypass", b.interstitial_target);
      std::string target = b.interstitial_target;
      render(txn, target, now);
    }
  } else if (name == "login_submit") {
    auto* user = b.page.by_name("username");
    auto* pass = b.page.by_name("password");
    if (user == nullptr || pass == nullptr) return;
    std::string account = user->value;
    record(txn, "login_attempt", "login_submit", account);
    auto it = scenario_.login_table.find(account);
    if (!account.empty() && it != scenario_.login_table.end() && it->second == pass->value) {
      b.authenticated = true;
      record(txn, "login_ok", "", account);
      std::string target = b.site_origin + b.login_next;
      render(txn, target, now);
    } else {
      pass->value.clear();
      if (auto* err = b.page.by_name("login_error")) err->value = std::string(kLoginFailedText);
      record(txn, "login_failed", "", account);
    }
  } else if (name == "compile_button") {
    if (b.page.kind == PageKind::lab) b.compile_armed = true;
  } else if (name == "all_button") {
    if (b.page.kind == PageKind::lab && b.compile_armed) start_compile(txn, now);
  }
}

void SiteModel::insert_text(Txn& txn, std::string_view text) {
  auto& b = txn.browser;
  VirtualElement* target = b.focused ? b.page.by_id(*b.focused) : nullptr;
  if (target == nullptr) {
    throw MockError{400, "element not interactable", "no focused element to receive keys"};
  }
  if (b.select_all) {
    target->value = std::string(text);
    b.select_all = false;
  } else {
    target->value += text;
  }
}

void SiteModel::apply_primitive(Txn& txn, const Primitive& p, TimePoint now) {
  auto& b = txn.browser;
  if (p.type == Primitive::Type::click) {
    VirtualElement& e = resolve(txn, p.element_id, now);
    std::string name = e.name;
    ElementKind kind = e.kind;
    std::string eid = e.element_id;
    record(txn, "click", name, "pointer");
    switch (kind) {
      case ElementKind::button:
        b.focused.reset();
        b.select_all = false;
        press(txn, name, now);
        break;
      case ElementKind::input:
      case ElementKind::code_view:
        b.focused = eid;
        b.select_all = false;
        break;
      case ElementKind::text:
        b.focused.reset();
        b.select_all = false;
        break;
    }
    return;
  }

  const std::string key = describe_key(p.key);
  if (p.type == Primitive::Type::key_up) {
    if (is_modifier_name(key)) b.held_modifiers.erase(key);
    return;
  }
  if (is_modifier_name(key)) {
    b.held_modifiers.insert(key);
    return;
  }
  if (key == "ENTER") {
    VirtualElement* focused = b.focused ? b.page.by_id(*b.focused) : nullptr;
    if (focused == nullptr) {
      throw MockError{400, "element not interactable", "no focused element to receive ENTER"};
    }
    if (focused->kind == ElementKind::input && b.page.kind == PageKind::login) {
      press(txn, "login_submit", now);
    } else {
      insert_text(txn, "\n");
    }
    return;
  }

  const bool command = b.held_modifiers.contains("META") || b.held_modifiers.contains("CONTROL");
  if (command) {
    std::string chord = key;
    if (chord.size() == 1) chord[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(chord[0])));
    VirtualElement* focused = b.focused ? b.page.by_id(*b.focused) : nullptr;
    if (chord == "a") {
      if (focused == nullptr) {
        throw MockError{400, "element not interactable", "no focused element for select-all"};
      }
      b.select_all = true;
      record(txn, "select_all", focused->name);
    } else if (chord == "v") {
      if (focused == nullptr) {
        throw MockError{400, "element not interactable", "no focused element to paste into"};
      }
      std::string name = focused->name;
      insert_text(txn, b.clipboard);
      record(txn, "paste", name, std::to_string(b.clipboard.size()) + " bytes");
    } else if (chord == "c") {
      if (focused != nullptr && b.select_all) b.clipboard = focused->value;
    } else if (chord == "s") {
      if (b.page.kind == PageKind::lab) {
        if (const auto* editor = b.page.by_name("editor")) {
          txn.store_writes[b.page.lab_id] = editor->value;
          record(txn, "save", "editor", std::to_string(editor->value.size()) + " bytes");
        }
      }
    }
    return;
  }

  std::string text = key;
  if (b.held_modifiers.contains("SHIFT") && text.size() == 1) {
    text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
  }
  insert_text(txn, text);
}

void SiteModel::element_click(std::string_view id, std::string_view element_id, TimePoint now) {
  advance(now);
  Txn txn = begin(id);
  VirtualElement& e = resolve(txn, element_id, now);
  if (!accepts_element_click(e.kind)) {
    throw MockError{400, "element not interactable",
                    std::string(page::to_string(e.kind)) + " '" + e.name + "' does not accept clicks"};
  }
  std::string name = e.name;
  ElementKind kind = e.kind;
  std::string eid = e.element_id;
  record(txn, "click", name, "element");
  if (kind == ElementKind::code_view) {
    txn.browser.focused = eid;
    txn.browser.select_all = false;
  } else {
    txn.browser.focused.reset();
    press(txn, name, now);
  }
  commit(std::move(txn));
}

void SiteModel::element_send_keys(std::string_view id, std::string_view element_id,
                                  std::string_view text, TimePoint now) {
  advance(now);
  Txn txn = begin(id);
  VirtualElement& e = resolve(txn, element_id, now);
  if (!accepts_element_keys(e.kind)) {
    throw MockError{400, "element not interactable",
                    std::string(page::to_string(e.kind)) + " '" + e.name + "' does not accept keys"};
  }
  e.value += text;
  txn.browser.focused = e.element_id;
  txn.browser.select_all = false;
  record(txn, "send_keys", e.name, std::to_string(text.size()) + " bytes");
  commit(std::move(txn));
}

std::string SiteModel::element_text(std::string_view id, std::string_view element_id, TimePoint now) {
  advance(now);
  Txn txn = begin(id);
  const VirtualElement& e = resolve(txn, element_id, now);
  // Like a browser, the rendered text of a form input is empty.
  return e.kind == ElementKind::input ? std::string() : e.value;
}

void SiteModel::perform(std::string_view id, const std::vector<Primitive>& primitives, TimePoint now) {
  advance(now);
  Txn txn = begin(id);
  for (const auto& p : primitives) apply_primitive(txn, p, now);
  commit(std::move(txn));
}

std::vector<std::string> SiteModel::describe(std::string_view id,
                                             const std::vector<Primitive>& primitives) const {
  const auto& b = browser(id);
  std::vector<std::string> out;
  for (const auto& p : primitives) {
    switch (p.type) {
      case Primitive::Type::click: {
        const VirtualElement* e = b.page.by_id(p.element_id);
        out.push_back("click:" + (e ? e->name : p.element_id));
        break;
      }
      case Primitive::Type::key_down:
        out.push_back("keyDown:" + describe_key(p.key));
        break;
      case Primitive::Type::key_up:
        out.push_back("keyUp:" + describe_key(p.key));
        break;
    }
  }
  return out;
}

void SiteModel::set_clipboard(std::string_view id, std::string text) {
  browser(id).clipboard = std::move(text);
}

SiteModel::PullStatus SiteModel::pull(std::optional<std::pair<std::string, std::string>> basic,
                                      std::optional<std::string> token, std::string_view lab_id,
                                      std::string& code) const {
  bool authorized = false;
  if (token) {
    authorized = scenario_.api_tokens.contains(*token);
  } else if (basic) {
    auto it = scenario_.login_table.find(basic->first);
    authorized = it != scenario_.login_table.end() && it->second == basic->second;
  }
  if (!authorized) return PullStatus::unauthorized;
  auto it = scenario_.program_store.find(std::string(lab_id));
  if (it == scenario_.program_store.end()) return PullStatus::not_found;
  code = it->second;
  return PullStatus::ok;
}

void SiteModel::finish_compile(BrowserState& b, std::vector<EventRecord>& sink, TimePoint) {
  CompileResult result = fake_compile(b.compile_source, scenario_.compiler_table);
  b.compile_running = false;
  auto set = [&](std::string_view name, std::string value) {
    if (auto* e = b.page.by_name(name)) e->value = std::move(value);
  };
  set("result", std::string(to_string(result.status)));
  set("output_compile", result.compile_output);
  set("output_run", result.run_output);
  set("code_echo", b.compile_source);
  set("status", "DONE");
  sink.push_back({events_.size() + sink.size() + 1, b.session_id, "compile_done", b.page.lab_id,
                  std::string(to_string(result.status))});
}

void SiteModel::advance(TimePoint now) {
  if (scenario_.compile_never_finishes) return;
  std::vector<EventRecord> done;
  for (auto& [id, b] : sessions_) {
    if (b.compile_running && now >= b.compile_started + scenario_.compile_duration) {
      finish_compile(b, done, now);
    }
  }
  for (auto& e : done) events_.push_back(std::move(e));
}

json SiteModel::dump_page(std::string_view id) const {
  const auto& b = browser(id);
  json elements = json::array();
  std::string focused_name;
  for (const auto& e : b.page.elements) {
    if (b.focused && *b.focused == e.element_id) focused_name = e.name;
    elements.push_back({{"id", e.element_id},
                        {"name", e.name},
                        {"xpath", e.xpath},
                        {"kind", page::to_string(e.kind)},
                        {"value", e.secret && !e.value.empty() ? std::string(kRedacted) : e.value},
                        {"delay_ms", e.delay.count()}});
  }
  return {{"url", b.page.url},
          {"kind", to_string(b.page.kind)},
          {"lab_id", b.page.lab_id},
          {"authenticated", b.authenticated},
          {"focused", focused_name},
          {"select_all", b.select_all},
          {"clipboard_bytes", b.clipboard.size()},
          {"implicit_wait_ms", b.implicit_wait.count()},
          {"elements", elements}};
}

}  // namespace cloudbridge::mock
