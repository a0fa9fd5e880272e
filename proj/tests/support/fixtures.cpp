#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace fixture {

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("transitnet-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

transitnet::SupplyGraph graph(const std::vector<std::string>& nodes,
                              const std::vector<std::pair<std::string, std::string>>& edges, double w) {
  transitnet::SupplyGraph g(nodes);
  for (const auto& [a, b] : edges) g.add_edge(*g.find(a), *g.find(b), w);
  return g;
}

transitnet::SupplyGraph bidirected(const std::vector<std::string>& nodes,
                                   const std::vector<std::pair<std::string, std::string>>& edges, double w) {
  transitnet::SupplyGraph g(nodes);
  for (const auto& [a, b] : edges) {
    g.add_edge(*g.find(a), *g.find(b), w);
    g.add_edge(*g.find(b), *g.find(a), w);
  }
  return g;
}

transitnet::SupplyGraph bidirected_path(int n) {
  std::vector<std::string> nodes;
  std::vector<std::pair<std::string, std::string>> edges;
  for (int i = 0; i < n; ++i) nodes.push_back("p" + std::to_string(i));
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(nodes[i], nodes[i + 1]);
  return bidirected(nodes, edges);
}

transitnet::SupplyGraph bidirected_star(int leaves) {
  std::vector<std::string> nodes{"hub"};
  std::vector<std::pair<std::string, std::string>> edges;
  for (int i = 0; i < leaves; ++i) {
    nodes.push_back("leaf" + std::to_string(i));
    edges.emplace_back("hub", nodes.back());
  }
  return bidirected(nodes, edges);
}

}  // namespace fixture
