#pragma once

#include <atomic>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fq/orchestrator/store.hpp"

namespace fq::orchestrator {

/// Emulates abrupt worker death: the loop lets it escape without touching
/// the store, so the lease is simply abandoned.
class WorkerCrash : public std::exception {
 public:
  const char* what() const noexcept override { return "worker crash"; }
};

struct TaskContext {
  TaskStore& store;
  std::string worker_id;
  /// Fresh per-attempt directory for output files.
  std::filesystem::path artifact_dir;
};

using Handler = std::function<nlohmann::json(const TaskDocument& task, TaskContext& context)>;
using HandlerMap = std::map<std::string, Handler>;

struct WorkerOptions {
  std::string worker_id;
  /// Kinds to claim; empty means every kind with a handler.
  std::vector<std::string> kinds;
  double lease_secs = 300.0;
  double heartbeat_secs = 60.0;
  double poll_initial = 0.02;
  double poll_max = 1.0;
  /// Exit after this long without claiming anything; negative waits forever.
  double drain_timeout = 5.0;
  /// Stop after this many claims (0 = unlimited).
  std::size_t max_tasks = 0;
  const std::atomic<bool>* stop = nullptr;
};

struct WorkerStats {
  std::size_t claimed = 0;
  std::size_t completed = 0;
  std::size_t failed = 0;  ///< handler threw
  std::size_t lost = 0;    ///< lease lost before completion
};

/// Claims, runs and completes tasks until drained, stopped or max_tasks is
/// reached. A heartbeat thread keeps the lease alive while a handler runs.
WorkerStats worker_loop(TaskStore& store, const HandlerMap& handlers, const WorkerOptions& options);

/// host:pid:counter
std::string make_worker_id(const std::string& prefix = "w");

}  // namespace fq::orchestrator
