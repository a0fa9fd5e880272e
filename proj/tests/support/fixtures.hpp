#pragma once

#include "transitnet/netcore.hpp"

#include <filesystem>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

namespace fixture {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

void write_file(const std::string& path, const std::string& text);
std::string read_file(const std::string& path);

// Nodes named by letters or numbers, in the given order.
transitnet::SupplyGraph graph(const std::vector<std::string>& nodes,
                              const std::vector<std::pair<std::string, std::string>>& edges, double w = 1.0);
transitnet::SupplyGraph bidirected(const std::vector<std::string>& nodes,
                                   const std::vector<std::pair<std::string, std::string>>& edges, double w = 1.0);
transitnet::SupplyGraph bidirected_path(int n);
transitnet::SupplyGraph bidirected_star(int leaves);

}  // namespace fixture
