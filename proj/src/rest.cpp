#include "cloudbridge/rest.hpp"

#include <fstream>
#include <random>
#include <regex>
#include <system_error>

#include "cloudbridge/error.hpp"
#include "cloudbridge/util.hpp"
#include "httplib.h"
#include "json.hpp"

namespace cloudbridge::rest {

bool is_valid_lab_id(std::string_view lab_id) {
  static const std::regex kLabId(R"([A-Za-z0-9_.\-]+)");
  if (lab_id == "." || lab_id == "..") return false;  // would walk the URL path
  return std::regex_match(lab_id.begin(), lab_id.end(), kLabId);
}

SourceDocument fetch_program(std::string_view base_url, const AuthContext& auth,
                             std::string_view lab_id, std::chrono::milliseconds timeout) {
  if (!is_valid_lab_id(lab_id)) {
    throw Error(ErrorCode::invalid_argument, "invalid lab id '" + std::string(lab_id) + "'");
  }
  if (auth.account.empty() && !auth.session_token) {
    throw Error(ErrorCode::invalid_argument, "account must not be empty");
  }
  UrlParts parts = parse_url(base_url);
  std::string prefix = parts.path == "/" ? "" : parts.path;
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  httplib::Client client(origin_of(parts));
  client.set_tcp_nodelay(true);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_connection_timeout(std::min<long long>(secs.count(), 10), 0);

  httplib::Headers headers;
  if (auth.session_token) {
    headers.emplace("X-Session-Token", *auth.session_token);
  } else {
    client.set_basic_auth(auth.account, auth.password.reveal());
  }

  const std::string path = prefix + "/api/labs/" + std::string(lab_id) + "/program";
  auto result = client.Get(path, headers);
  if (!result) {
    auto err = result.error();
    if (err == httplib::Error::Connection) {
      throw Error(ErrorCode::connection_refused, "cannot reach " + origin_of(parts));
    }
    if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) {
      throw Error(ErrorCode::timeout, "GET " + path + ": " + httplib::to_string(err));
    }
    throw Error(ErrorCode::transport, "GET " + path + ": " + httplib::to_string(err));
  }
  switch (result->status) {
    case 200:
      break;
    case 401:
    case 403:
      throw Error(ErrorCode::unauthorized, "server rejected credentials for account '" +
                                               auth.account + "'");
    case 404:
      throw Error(ErrorCode::not_found, "lab '" + std::string(lab_id) + "' not found");
    default:
      throw Error(ErrorCode::transport, "GET " + path + " -> HTTP " + std::to_string(result->status));
  }
  auto doc = nlohmann::json::parse(result->body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("code") ||
      !doc.at("code").is_string()) {
    throw Error(ErrorCode::protocol_error, "pull response is not {\"code\": string}");
  }
  return {std::string(lab_id), doc.at("code").get<std::string>(), std::chrono::system_clock::now()};
}

void write_workspace(const SourceDocument& doc, const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  fs::path parent = path.parent_path();
  if (parent.empty()) parent = ".";
  std::error_code ec;
  if (!fs::is_directory(parent, ec)) {
    throw Error(ErrorCode::io_error, "directory " + parent.string() + " does not exist");
  }
  std::random_device rd;
  fs::path tmp = parent / ("." + path.filename().string() + ".tmp" + std::to_string(rd()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot open " + tmp.string() + " for writing");
    out.write(doc.content.data(), static_cast<std::streamsize>(doc.content.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp, ec);
      throw Error(ErrorCode::io_error, "short write to " + tmp.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw Error(ErrorCode::io_error, "cannot replace " + path.string() + ": " + ec.message());
  }
}

}  // namespace cloudbridge::rest
