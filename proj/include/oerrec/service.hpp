#pragma once

// HTTP/JSON front end of the engine with durable state and a batch scheduler.
//
//   GET   /health
//   GET   /jobs?query=...
//   GET   /jobs/{job}/skills?location=...
//   POST  /learners                          {job, personal, skill_levels}
//   GET   /learners/{id}
//   PATCH /learners/{id}/skills              {skill: level, ...}
//   GET   /learners/{id}/recommendation
//   POST  /recommendations/{rid}/rating      {stars}
//   POST  /recommendations/{rid}/irrelevant
//   POST  /recommendations/{rid}/change
//   POST  /admin/batch                       {period_end}
//
// Errors are {"code", "message"} with status 400 (invalid input), 404
// (unknown entity or route), 409 (feedback on a recommendation that already
// has feedback) or 500.

#include <atomic>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>

#include "oerrec/config.hpp"
#include "oerrec/engine.hpp"
#include "oerrec/store.hpp"

namespace httplib {
class Server;
}

namespace oerrec {

using Clock = std::function<Timestamp()>;
Clock system_clock();

struct HttpResponse {
  int status = 200;
  Json body;
};

class Service {
 public:
  Service(ServiceConfig config, EngineConfig engine_config, Clock clock = system_clock());
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Restores state from the data directory, seeds job profiles and the
  /// catalog, binds the port and starts serving in the background. Throws
  /// PersistenceError for a corrupt data directory and Error when the port
  /// cannot be bound.
  void start();
  void stop();
  /// Blocks until stop() is called from another thread.
  void wait();

  int port() const noexcept { return port_; }
  const RecoveryReport& recovery() const noexcept { return recovery_; }
  Engine& engine() noexcept { return *engine_; }

  BatchReport run_batch(Timestamp period_end);
  void snapshot();

  /// Routes one request without the network layer (used by the HTTP
  /// handlers and by tests).
  HttpResponse handle(const std::string& method, const std::string& path,
                      const std::multimap<std::string, std::string>& query, const std::string& body);

 private:
  void seed(Timestamp now);
  void after_mutation();
  void scheduler_loop();

  ServiceConfig config_;
  Clock clock_;
  std::unique_ptr<Engine> engine_;
  std::unique_ptr<Store> store_;
  std::unique_ptr<httplib::Server> server_;
  std::thread server_thread_;
  std::thread scheduler_thread_;
  std::mutex scheduler_mutex_;
  std::condition_variable scheduler_cv_;
  bool stopping_ = false;
  std::mutex snapshot_mutex_;
  std::atomic<int> events_since_snapshot_{0};
  std::atomic<bool> journal_failed_{false};
  RecoveryReport recovery_;
  int port_ = 0;
};

/// Loads the importance inputs named in the config; nullptr when the
/// vacancy or skill file is not configured.
std::shared_ptr<const ImportanceSource> load_importance_source(const ServiceConfig& config);

/// Fetches every configured repository. Unreachable repositories are
/// reported through `warn` and skipped.
std::vector<OerDraft> fetch_catalog(const ServiceConfig& config,
                                    const std::function<void(const std::string&)>& warn);

}  // namespace oerrec
