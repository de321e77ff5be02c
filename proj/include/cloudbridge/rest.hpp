#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "cloudbridge/secret.hpp"

namespace cloudbridge::rest {

struct AuthContext {
  std::string account;
  Secret password;
  // Sent as X-Session-Token instead of Basic credentials when present.
  std::optional<std::string> session_token;
};

struct SourceDocument {
  std::string lab_id;
  std::string content;  // exactly the bytes the server stores
  std::chrono::system_clock::time_point fetched_at;
};

// Lab ids are [A-Za-z0-9_.-]+; they end up in URL paths.
bool is_valid_lab_id(std::string_view lab_id);

// GET {base_url}/api/labs/{lab_id}/program -> {"code": "..."}.
// Throws Error(unauthorized | not_found | connection_refused | transport | timeout).
SourceDocument fetch_program(std::string_view base_url, const AuthContext& auth,
                             std::string_view lab_id,
                             std::chrono::milliseconds timeout = std::chrono::milliseconds(30000));

// Writes doc.content to `path` through a sibling temp file and a rename, so
// readers never observe a partial file. Throws Error(io_error).
void write_workspace(const SourceDocument& doc, const std::filesystem::path& path);

}  // namespace cloudbridge::rest
