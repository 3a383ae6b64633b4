#include "fq/orchestrator/worker.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <thread>

#include <fmt/format.h>

namespace fq::orchestrator {

using nlohmann::json;

std::string make_worker_id(const std::string& prefix) {
  static std::atomic<std::size_t> counter{0};
  char host[128] = {0};
  if (::gethostname(host, sizeof(host) - 1) != 0) host[0] = '\0';
  return fmt::format("{}-{}-{}-{}", prefix, host, ::getpid(), counter++);
}

namespace {

class Heartbeat {
 public:
  Heartbeat(TaskStore& store, const TaskDocument& task, double lease, double period)
      : thread_([this, &store, task, lease, period] {
          std::unique_lock lock(mutex_);
          while (!done_) {
            if (cv_.wait_for(lock, std::chrono::duration<double>(period), [this] { return done_; })) break;
            lock.unlock();
            bool ok = false;
            try {
              ok = store.heartbeat(task, lease);
            } catch (...) {
            }
            lock.lock();
            if (!ok) break;
          }
        }) {}
  ~Heartbeat() { stop(); }
  void stop() {
    {
      std::lock_guard g(mutex_);
      done_ = true;
    }
    cv_.notify_all();
    if (thread_.joinable()) thread_.join();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  bool done_ = false;
  std::thread thread_;
};

}  // namespace

WorkerStats worker_loop(TaskStore& store, const HandlerMap& handlers, const WorkerOptions& options) {
  std::vector<std::string> kinds = options.kinds;
  if (kinds.empty()) {
    for (const auto& [k, h] : handlers) kinds.push_back(k);
  }
  for (const auto& k : kinds) {
    if (handlers.count(k) == 0) throw ValidationError("no handler registered for kind '" + k + "'");
  }
  if (!(options.lease_secs > 0.0) || !(options.heartbeat_secs > 0.0)) {
    throw ValidationError("lease and heartbeat periods must be positive");
  }
  const std::string id = options.worker_id.empty() ? make_worker_id() : options.worker_id;
  using clock = std::chrono::steady_clock;
  WorkerStats stats;
  auto idle_since = clock::now();
  double backoff = options.poll_initial;
  const auto stopped = [&] { return options.stop != nullptr && options.stop->load(); };

  while (!stopped()) {
    if (options.max_tasks != 0 && stats.claimed >= options.max_tasks) break;
    auto task = store.claim_next(kinds, id, options.lease_secs);
    if (!task) {
      const double idle = std::chrono::duration<double>(clock::now() - idle_since).count();
      if (options.drain_timeout >= 0.0 && idle >= options.drain_timeout) break;
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff = std::min(options.poll_max, backoff * 2.0);
      continue;
    }
    ++stats.claimed;
    backoff = options.poll_initial;
    TaskContext context{store, id, store.artifact_dir(*task)};
    json result;
    bool ok = false;
    json error;
    {
      Heartbeat beat(store, *task, options.lease_secs, options.heartbeat_secs);
      try {
        result = handlers.at(task->kind)(*task, context);
        ok = true;
      } catch (const WorkerCrash&) {
        throw;
      } catch (const std::exception& e) {
        error = {{"message", e.what()}, {"worker", id}, {"attempt", task->attempts}};
      }
    }
    try {
      if (ok) {
        store.complete(*task, result);
        ++stats.completed;
      } else {
        store.fail_requeue(*task, error);
        ++stats.failed;
      }
    } catch (const LeaseLost&) {
      ++stats.lost;
    }
    idle_since = clock::now();
  }
  return stats;
}

}  // namespace fq::orchestrator
