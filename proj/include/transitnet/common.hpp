#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace transitnet {

// Error categories double as CLI exit codes.
enum class ErrorKind : int {
  internal = 1,
  config = 2,
  artifact = 3,
  data = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void throw_config(const std::string& what);
[[noreturn]] void throw_artifact(const std::string& what);
[[noreturn]] void throw_data(const std::string& what);

// Great-circle distance in meters (haversine, mean Earth radius).
double haversine_m(double lat1, double lon1, double lat2, double lon2);

// Hex SHA-256 of a byte string / a file's contents.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

}  // namespace transitnet
