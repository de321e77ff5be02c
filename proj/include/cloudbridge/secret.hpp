#pragma once

#include <ostream>
#include <string>
#include <utility>

namespace cloudbridge {

// Holds a credential. Streaming or formatting a Secret never prints the value;
// callers that must hand it to the remote end use reveal().
class Secret {
 public:
  Secret() = default;
  explicit Secret(std::string value) : value_(std::move(value)) {}

  const std::string& reveal() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  friend bool operator==(const Secret&, const Secret&) = default;

  friend std::ostream& operator<<(std::ostream& os, const Secret&) {
    return os << "********";
  }

 private:
  std::string value_;
};

}  // namespace cloudbridge
