#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "fq/error.hpp"

namespace fq::orchestrator {

enum class TaskStatus { pending, claimed, done, failed };

const char* to_string(TaskStatus status);
TaskStatus parse_status(std::string_view text);

/// The task kinds the pipeline exchanges.
const std::vector<std::string>& task_kinds();
bool is_task_kind(std::string_view kind);

/// Checksum or structure mismatch in persisted store files.
class StoreCorruption : public Error {
 public:
  using Error::Error;
};

/// Same id enqueued with a different body, or a done task completed with a different result.
class ConflictError : public Error {
 public:
  using Error::Error;
};

/// The caller no longer holds the lease it acts on.
class LeaseLost : public Error {
 public:
  using Error::Error;
};

struct TaskEvent {
  std::string event;  ///< enqueue | claim | expired | done | requeue | failed
  std::string worker;
  std::size_t attempt = 0;
  double time = 0.0;
  std::string detail;
};

struct TaskDocument {
  std::string id;
  std::string kind;
  nlohmann::json payload = nlohmann::json::object();
  TaskStatus status = TaskStatus::pending;
  double lease_expiry = 0.0;  ///< unix seconds
  std::string lease_owner;
  std::size_t attempts = 0;
  std::string result_ref;   ///< file name inside the task directory
  std::string result_hash;
  nlohmann::json error;
  std::vector<std::string> parents;
  std::uint64_t seq = 0;
  std::vector<TaskEvent> history;

  nlohmann::json to_json() const;
  static TaskDocument from_json(const nlohmann::json& doc);
};

struct StoreOptions {
  std::size_t max_attempts = 3;
  /// fsync files before renaming them into place.
  bool durable = true;
  /// Wall clock in unix seconds; replaceable for tests.
  std::function<double()> clock;
  /// Called at named points inside state transitions. A hook that throws
  /// aborts the transition there, which is how tests emulate a process dying
  /// mid-write.
  std::function<void(std::string_view point)> fault;
};

/// Hex FNV-1a of a byte string.
std::string content_hash(std::string_view bytes);
/// Writes through a unique temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes, bool durable = true);
std::string read_file(const std::filesystem::path& path);

/// File-backed document store: one directory per task, state changes by
/// atomic rename, every file checksummed, transitions serialized by an
/// exclusive flock on <root>/lock (shared across processes and threads).
class TaskStore {
 public:
  explicit TaskStore(std::filesystem::path root, StoreOptions options = {});

  /// $FQ_STORE, else ./fq_store.
  static std::filesystem::path default_root();

  const std::filesystem::path& root() const { return root_; }
  const StoreOptions& options() const { return options_; }
  double now() const;

  /// Returns the id (generated when empty). Re-enqueueing an identical
  /// document is a no-op; a different kind or payload under the same id is a conflict.
  std::string enqueue(TaskDocument doc);

  /// Atomically claims the oldest pending or lease-expired task of the given
  /// kinds (all kinds when empty) whose parents are all done. Expired tasks
  /// at the attempt cap, and tasks with a failed parent, are marked failed instead.
  std::optional<TaskDocument> claim_next(std::span<const std::string> kinds, const std::string& worker_id,
                                         double lease_secs);

  /// Extends the lease; false when the lease has been lost.
  bool heartbeat(const TaskDocument& claimed, double lease_secs);

  /// Writes the result and marks the task done. Idempotent for an identical
  /// result; a differing result on a done task raises ConflictError.
  void complete(const TaskDocument& claimed, const nlohmann::json& result);

  /// Re-pends below the attempt cap, else marks failed.
  void fail_requeue(const TaskDocument& claimed, const nlohmann::json& error);

  std::optional<TaskDocument> find(const std::string& id) const;
  TaskDocument get(const std::string& id) const;
  /// Result of a done task, checksum-verified.
  nlohmann::json result(const std::string& id) const;
  /// Every task in enqueue order.
  std::vector<TaskDocument> list() const;
  std::map<TaskStatus, std::size_t> counts() const;

  /// Per-attempt directory for large outputs; nothing there is referenced until complete.
  std::filesystem::path artifact_dir(const TaskDocument& claimed) const;

  /// Re-reads every index entry, document and result and checks them.
  void verify() const;

 private:
  struct IndexEntry {
    std::string id;
    std::string kind;
  };

  std::filesystem::path task_dir(const std::string& id) const;
  std::vector<IndexEntry> read_index() const;
  void write_index(const std::vector<IndexEntry>& entries) const;
  void recover();
  TaskDocument read_doc(const std::string& id) const;
  void write_doc(const TaskDocument& doc) const;
  void hit(std::string_view point) const;
  void mark_terminal(const std::string& id) const;
  bool known_terminal(const std::string& id) const;
  void check_owner(const TaskDocument& current, const TaskDocument& claimed) const;

  std::filesystem::path root_;
  StoreOptions options_;
  mutable std::mutex cache_mutex_;
  mutable std::unordered_set<std::string> terminal_;
};

}  // namespace fq::orchestrator
