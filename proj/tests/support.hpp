#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "cloudbridge/config.hpp"
#include "cloudbridge/mock/server.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using namespace std::chrono_literals;

inline const std::string kAccount = "student1";
inline const std::string kPassword = "Gpu-L4b-Pa55!";

// A scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("cloudbridge-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Config for the default scenario served at `url`.
inline cloudbridge::RemoteConfig mock_config(const std::string& url, const fs::path& workdir) {
  cloudbridge::RemoteConfig c;
  c.account = kAccount;
  c.password = cloudbridge::Secret(kPassword);
  c.base_url = url;
  c.lab_id = "mp1";
  c.automation_endpoint = url;
  c.browser = cloudbridge::BrowserKind::mock;
  c.implicit_wait = 3000ms;
  c.explicit_poll = 20ms;
  c.command_timeout = 10000ms;
  c.compile_timeout = 10000ms;
  c.workspace_file = workdir / "mp1.cu";
  return c;
}

// Random printable source text: ASCII, tabs, CRLF/LF line ends and a few
// multi-byte characters. At least `min_len` bytes.
inline std::string random_source(std::mt19937& rng, std::size_t min_len = 16) {
  static const char* const kPieces[] = {"\t", "\r\n", "\n", "é", "λ", "→", "漢", "🚀", "  ", "{", "}", ";"};
  std::uniform_int_distribution<int> len(static_cast<int>(min_len), 200);
  std::uniform_int_distribution<int> pick(0, 9);
  std::uniform_int_distribution<int> ascii(0x20, 0x7e);
  std::uniform_int_distribution<int> piece(0, static_cast<int>(std::size(kPieces)) - 1);
  std::string out;
  const auto target = static_cast<std::size_t>(len(rng));
  while (out.size() < target) {
    if (pick(rng) < 7) {
      out += static_cast<char>(ascii(rng));
    } else {
      out += kPieces[piece(rng)];
    }
  }
  return out;
}

}  // namespace testsupport
