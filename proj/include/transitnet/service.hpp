#pragma once

#include "transitnet/intervene.hpp"

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stop_token>
#include <string>

namespace transitnet {

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

// Read models over a workspace. Each request is answered from an immutable
// snapshot keyed by the manifest digest; a new snapshot is loaded when the
// manifest changes. handle() is safe to call concurrently.
class Service {
 public:
  // Throws an artifact error unless graph, partition and flows are present.
  Service(std::string workspace_dir, MetricOptions metrics = {}, std::size_t default_k = 5);
  ~Service();

  Response handle(const std::string& method, const std::string& path,
                  const std::map<std::string, std::string>& query = {}, const std::string& body = {}) const;

  std::string manifest_digest() const;

  struct Snapshot;

 private:
  std::shared_ptr<const Snapshot> current() const;

  std::string dir_;
  MetricOptions metrics_;
  std::size_t default_k_;
  mutable std::mutex mu_;
  mutable std::shared_ptr<const Snapshot> snap_;
};

// Blocks serving HTTP until `stop` is requested or the process ends. Port 0
// picks a free port; `on_ready` receives the bound port.
void serve(const Service& service, const std::string& host, int port,
           const std::function<void(int)>& on_ready = {}, std::stop_token stop = {});

}  // namespace transitnet
