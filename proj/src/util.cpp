#include "cloudbridge/util.hpp"

#include <cstdio>
#include <regex>

#include "cloudbridge/error.hpp"

namespace cloudbridge {
namespace {

// Length of the UTF-8 sequence starting at `lead`, or 0 if `lead` is not a
// valid leading byte.
std::size_t sequence_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead & 0xE0) == 0xC0) return lead >= 0xC2 ? 2 : 0;
  if ((lead & 0xF0) == 0xE0) return 3;
  if ((lead & 0xF8) == 0xF0) return lead <= 0xF4 ? 4 : 0;
  return 0;
}

bool valid_sequence(std::string_view text, std::size_t pos, std::size_t len) {
  if (len == 0 || pos + len > text.size()) return false;
  for (std::size_t i = 1; i < len; ++i) {
    if ((static_cast<unsigned char>(text[pos + i]) & 0xC0) != 0x80) return false;
  }
  auto b0 = static_cast<unsigned char>(text[pos]);
  if (len == 3) {
    auto b1 = static_cast<unsigned char>(text[pos + 1]);
    if (b0 == 0xE0 && b1 < 0xA0) return false;  // overlong
    if (b0 == 0xED && b1 >= 0xA0) return false;  // surrogates
  }
  if (len == 4) {
    auto b1 = static_cast<unsigned char>(text[pos + 1]);
    if (b0 == 0xF0 && b1 < 0x90) return false;
    if (b0 == 0xF4 && b1 >= 0x90) return false;
  }
  return true;
}

constexpr std::string_view kBase64Alphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

}  // namespace

std::vector<std::string> split_code_points(std::string_view utf8) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < utf8.size()) {
    std::size_t len = sequence_length(static_cast<unsigned char>(utf8[pos]));
    if (!valid_sequence(utf8, pos, len)) {
      throw Error(ErrorCode::invalid_argument,
                  "malformed UTF-8 at byte " + std::to_string(pos));
    }
    out.emplace_back(utf8.substr(pos, len));
    pos += len;
  }
  return out;
}

bool is_valid_utf8(std::string_view text) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t len = sequence_length(static_cast<unsigned char>(text[pos]));
    if (!valid_sequence(text, pos, len)) return false;
    pos += len;
  }
  return true;
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

UrlParts parse_url(std::string_view url) {
  static const std::regex kUrl(
      R"(^([A-Za-z][A-Za-z0-9+.\-]*)://([A-Za-z0-9.\-_~]+|\[[0-9A-Fa-f:.]+\])(?::([0-9]{1,5}))?([/?#][^\s]*)?$)");
  std::cmatch m;
  if (!std::regex_match(url.data(), url.data() + url.size(), m, kUrl)) {
    throw Error(ErrorCode::invalid_url, "not an absolute URL: '" + std::string(url) + "'");
  }
  UrlParts parts;
  parts.scheme = m[1].str();
  parts.host = m[2].str();
  if (m[3].matched) {
    int port = std::stoi(m[3].str());
    if (port <= 0 || port > 65535) {
      throw Error(ErrorCode::invalid_url, "port out of range in '" + std::string(url) + "'");
    }
    parts.port = port;
  }
  parts.path = m[4].matched ? m[4].str() : "/";
  if (parts.path.front() != '/') parts.path.insert(parts.path.begin(), '/');
  return parts;
}

bool is_absolute_url(std::string_view url) {
  try {
    parse_url(url);
    return true;
  } catch (const Error&) {
    return false;
  }
}

std::string origin_of(const UrlParts& parts) {
  std::string out = parts.scheme + "://" + parts.host;
  if (parts.port != 0) out += ":" + std::to_string(parts.port);
  return out;
}

std::string base64_encode(std::string_view data) {
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 2 < data.size()) {
    std::uint32_t n = (static_cast<unsigned char>(data[i]) << 16) |
                      (static_cast<unsigned char>(data[i + 1]) << 8) |
                      static_cast<unsigned char>(data[i + 2]);
    out += kBase64Alphabet[(n >> 18) & 63];
    out += kBase64Alphabet[(n >> 12) & 63];
    out += kBase64Alphabet[(n >> 6) & 63];
    out += kBase64Alphabet[n & 63];
    i += 3;
  }
  std::size_t rest = data.size() - i;
  if (rest == 1) {
    std::uint32_t n = static_cast<unsigned char>(data[i]) << 16;
    out += kBase64Alphabet[(n >> 18) & 63];
    out += kBase64Alphabet[(n >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    std::uint32_t n = (static_cast<unsigned char>(data[i]) << 16) |
                      (static_cast<unsigned char>(data[i + 1]) << 8);
    out += kBase64Alphabet[(n >> 18) & 63];
    out += kBase64Alphabet[(n >> 12) & 63];
    out += kBase64Alphabet[(n >> 6) & 63];
    out += '=';
  }
  return out;
}

bool base64_decode(std::string_view data, std::string& out) {
  out.clear();
  if (data.size() % 4 != 0) return false;
  std::uint32_t acc = 0;
  int bits = 0;
  std::size_t padding = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    char c = data[i];
    if (c == '=') {
      if (i + 2 < data.size()) return false;
      ++padding;
      continue;
    }
    if (padding > 0) return false;
    auto idx = kBase64Alphabet.find(c);
    if (idx == std::string_view::npos) return false;
    acc = (acc << 6) | static_cast<std::uint32_t>(idx);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out += static_cast<char>((acc >> bits) & 0xFF);
    }
  }
  return true;
}

}  // namespace cloudbridge
