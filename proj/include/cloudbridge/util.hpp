#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cloudbridge {

// Splits UTF-8 text into code points, each returned as its own UTF-8 string.
// Throws Error(invalid_argument) on malformed input.
std::vector<std::string> split_code_points(std::string_view utf8);

bool is_valid_utf8(std::string_view text);

// 64-bit FNV-1a, hex encoded. Used wherever a stable body digest is needed.
std::string fnv1a_hex(std::string_view data);

struct UrlParts {
  std::string scheme;
  std::string host;
  int port = 0;  // 0 when absent
  std::string path;  // includes query, always begins with '/'
};

// Parses an absolute http(s)-style URL. Throws Error(invalid_url).
UrlParts parse_url(std::string_view url);
bool is_absolute_url(std::string_view url);

// "scheme://host[:port]" for a parsed URL.
std::string origin_of(const UrlParts& parts);

std::string base64_encode(std::string_view data);
// Returns false on malformed input.
bool base64_decode(std::string_view data, std::string& out);

}  // namespace cloudbridge
