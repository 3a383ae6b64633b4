#include "fq/orchestrator/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "fq/surrogate/dataset.hpp"

namespace fq::orchestrator {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(TaskStatus status) {
  switch (status) {
    case TaskStatus::pending: return "pending";
    case TaskStatus::claimed: return "claimed";
    case TaskStatus::done: return "done";
    case TaskStatus::failed: return "failed";
  }
  return "?";
}

TaskStatus parse_status(std::string_view text) {
  if (text == "pending") return TaskStatus::pending;
  if (text == "claimed") return TaskStatus::claimed;
  if (text == "done") return TaskStatus::done;
  if (text == "failed") return TaskStatus::failed;
  throw ValidationError("unknown task status '" + std::string(text) + "'");
}

const std::vector<std::string>& task_kinds() {
  static const std::vector<std::string> kinds = {"sample", "label_mid", "label_high", "train", "transfer",
                                                 "neq",    "fep",       "qre",        "guiding"};
  return kinds;
}

bool is_task_kind(std::string_view kind) {
  const auto& k = task_kinds();
  return std::find(k.begin(), k.end(), kind) != k.end();
}

json TaskDocument::to_json() const {
  json h = json::array();
  for (const auto& e : history) {
    h.push_back({{"event", e.event}, {"worker", e.worker}, {"attempt", e.attempt}, {"time", e.time}, {"detail", e.detail}});
  }
  return {{"id", id},
          {"kind", kind},
          {"payload", payload},
          {"status", orchestrator::to_string(status)},
          {"lease_expiry", lease_expiry},
          {"lease_owner", lease_owner},
          {"attempts", attempts},
          {"result_ref", result_ref},
          {"result_hash", result_hash},
          {"error", error},
          {"parents", parents},
          {"seq", seq},
          {"history", h}};
}

TaskDocument TaskDocument::from_json(const json& doc) {
  TaskDocument t;
  try {
    t.id = doc.at("id").get<std::string>();
    t.kind = doc.at("kind").get<std::string>();
    t.payload = doc.at("payload");
    t.status = parse_status(doc.at("status").get<std::string>());
    t.lease_expiry = doc.at("lease_expiry").get<double>();
    t.lease_owner = doc.at("lease_owner").get<std::string>();
    t.attempts = doc.at("attempts").get<std::size_t>();
    t.result_ref = doc.at("result_ref").get<std::string>();
    t.result_hash = doc.at("result_hash").get<std::string>();
    t.error = doc.at("error");
    t.parents = doc.at("parents").get<std::vector<std::string>>();
    t.seq = doc.at("seq").get<std::uint64_t>();
    for (const auto& e : doc.at("history")) {
      t.history.push_back({e.at("event").get<std::string>(), e.at("worker").get<std::string>(),
                           e.at("attempt").get<std::size_t>(), e.at("time").get<double>(),
                           e.at("detail").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw StoreCorruption(std::string("malformed task document: ") + e.what());
  }
  return t;
}

std::string content_hash(std::string_view bytes) {
  return fmt::format("{:016x}", surrogate::fnv1a(bytes.data(), bytes.size()));
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view bytes, bool durable) {
  static std::atomic<std::uint64_t> counter{0};
  const auto tid = std::hash<std::thread::id>{}(std::this_thread::get_id());
  const fs::path tmp = path.parent_path() /
                       fmt::format(".{}.tmp.{}.{:x}.{}", path.filename().string(), ::getpid(), tid, counter++);
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw Error("cannot create " + tmp.string() + ": " + std::strerror(errno));
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = ::write(fd, bytes.data() + off, bytes.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      throw Error("write failed on " + tmp.string());
    }
    off += static_cast<std::size_t>(n);
  }
  if (durable) ::fsync(fd);
  ::close(fd);
  fs::rename(tmp, path);
}

namespace {

// RAII flock on a freshly opened descriptor, so threads of one process exclude each other too.
class FileLock {
 public:
  FileLock(const fs::path& path, bool exclusive) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error("cannot open lock " + path.string() + ": " + std::strerror(errno));
    while (::flock(fd_, exclusive ? LOCK_EX : LOCK_SH) != 0) {
      if (errno != EINTR) {
        ::close(fd_);
        throw Error("flock failed on " + path.string());
      }
    }
  }
  ~FileLock() { ::close(fd_); }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

json seal(const json& body) { return {{"body", body}, {"checksum", content_hash(body.dump())}}; }

json unseal(const std::string& text, const std::string& what) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception&) {
    throw StoreCorruption(what + " is not valid JSON");
  }
  if (!doc.is_object() || !doc.contains("body") || !doc.contains("checksum")) {
    throw StoreCorruption(what + " lacks body/checksum");
  }
  if (content_hash(doc["body"].dump()) != doc["checksum"].get<std::string>()) {
    throw StoreCorruption("checksum mismatch in " + what);
  }
  return doc["body"];
}

bool valid_id(const std::string& id) {
  if (id.empty() || id.front() == '.' || id.size() > 200) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
  });
}

std::string random_suffix() {
  thread_local std::mt19937_64 rng(std::random_device{}() ^
                                   (static_cast<std::uint64_t>(::getpid()) << 32) ^
                                   std::hash<std::thread::id>{}(std::this_thread::get_id()));
  return fmt::format("{:016x}", rng());
}

bool kind_selected(std::span<const std::string> kinds, const std::string& kind) {
  return kinds.empty() || std::find(kinds.begin(), kinds.end(), kind) != kinds.end();
}

}  // namespace

TaskStore::TaskStore(fs::path root, StoreOptions options) : root_(std::move(root)), options_(std::move(options)) {
  if (options_.max_attempts == 0) throw ValidationError("max_attempts must be positive");
  fs::create_directories(root_ / "tasks");
  fs::create_directories(root_ / "artifacts");
  FileLock lock(root_ / "lock", true);
  if (!fs::exists(root_ / "index.json")) write_index({});
  recover();
}

fs::path TaskStore::default_root() {
  if (const char* env = std::getenv("FQ_STORE"); env != nullptr && *env != '\0') return env;
  return "fq_store";
}

double TaskStore::now() const {
  if (options_.clock) return options_.clock();
  return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
}

void TaskStore::hit(std::string_view point) const {
  if (options_.fault) options_.fault(point);
}

fs::path TaskStore::task_dir(const std::string& id) const { return root_ / "tasks" / id; }

std::vector<TaskStore::IndexEntry> TaskStore::read_index() const {
  const auto body = unseal(read_file(root_ / "index.json"), "index");
  std::vector<IndexEntry> out;
  try {
    for (const auto& e : body.at("entries")) out.push_back({e.at(0).get<std::string>(), e.at(1).get<std::string>()});
  } catch (const json::exception&) {
    throw StoreCorruption("malformed index");
  }
  return out;
}

void TaskStore::write_index(const std::vector<IndexEntry>& entries) const {
  json e = json::array();
  for (const auto& x : entries) e.push_back({x.id, x.kind});
  write_file_atomic(root_ / "index.json", seal({{"entries", e}}).dump(), options_.durable);
}

// Adds task directories that a crash left out of the index.
void TaskStore::recover() {
  auto index = read_index();
  std::unordered_set<std::string> known;
  for (const auto& e : index) known.insert(e.id);
  std::vector<TaskDocument> missing;
  for (const auto& entry : fs::directory_iterator(root_ / "tasks")) {
    const auto name = entry.path().filename().string();
    if (!entry.is_directory() || !valid_id(name) || known.count(name) != 0) continue;
    if (!fs::exists(entry.path() / "doc.json")) continue;
    missing.push_back(read_doc(name));
  }
  if (missing.empty()) return;
  std::sort(missing.begin(), missing.end(), [](const auto& a, const auto& b) { return a.seq < b.seq; });
  for (const auto& d : missing) index.push_back({d.id, d.kind});
  write_index(index);
}

TaskDocument TaskStore::read_doc(const std::string& id) const {
  const auto path = task_dir(id) / "doc.json";
  if (!fs::exists(path)) throw StoreCorruption("task " + id + " is indexed but has no document");
  auto doc = TaskDocument::from_json(unseal(read_file(path), "document of " + id));
  if (doc.id != id) throw StoreCorruption("document id mismatch for " + id);
  return doc;
}

void TaskStore::write_doc(const TaskDocument& doc) const {
  write_file_atomic(task_dir(doc.id) / "doc.json", seal(doc.to_json()).dump(), options_.durable);
}

void TaskStore::mark_terminal(const std::string& id) const {
  std::lock_guard g(cache_mutex_);
  terminal_.insert(id);
}

bool TaskStore::known_terminal(const std::string& id) const {
  std::lock_guard g(cache_mutex_);
  return terminal_.count(id) != 0;
}

std::string TaskStore::enqueue(TaskDocument doc) {
  if (!is_task_kind(doc.kind)) throw ValidationError("unknown task kind '" + doc.kind + "'");
  if (doc.id.empty()) doc.id = doc.kind + "-" + random_suffix();
  if (!valid_id(doc.id)) throw ValidationError("invalid task id '" + doc.id + "'");
  FileLock lock(root_ / "lock", true);
  auto index = read_index();
  if (fs::exists(task_dir(doc.id) / "doc.json")) {
    const auto existing = read_doc(doc.id);
    if (existing.kind != doc.kind || existing.payload != doc.payload || existing.parents != doc.parents) {
      throw ConflictError("task " + doc.id + " already exists with a different body");
    }
    if (std::none_of(index.begin(), index.end(), [&](const auto& e) { return e.id == doc.id; })) {
      index.push_back({doc.id, doc.kind});
      write_index(index);
    }
    return doc.id;
  }
  doc.status = TaskStatus::pending;
  doc.lease_expiry = 0.0;
  doc.lease_owner.clear();
  doc.attempts = 0;
  doc.result_ref.clear();
  doc.result_hash.clear();
  doc.error = nullptr;
  doc.seq = index.size();
  doc.history = {{"enqueue", "", 0, now(), ""}};
  // Build the directory aside, then rename it in whole.
  const auto staging = root_ / "tasks" / fmt::format(".stage-{}-{}", doc.id, random_suffix());
  fs::create_directories(staging);
  write_file_atomic(staging / "doc.json", seal(doc.to_json()).dump(), options_.durable);
  fs::rename(staging, task_dir(doc.id));
  hit("enqueue:before_index");
  index.push_back({doc.id, doc.kind});
  write_index(index);
  return doc.id;
}

std::optional<TaskDocument> TaskStore::claim_next(std::span<const std::string> kinds, const std::string& worker_id,
                                                  double lease_secs) {
  if (!(lease_secs > 0.0)) throw ValidationError("lease_secs must be positive");
  if (worker_id.empty()) throw ValidationError("worker id must not be empty");
  FileLock lock(root_ / "lock", true);
  const double t = now();
  for (const auto& entry : read_index()) {
    if (!kind_selected(kinds, entry.kind) || known_terminal(entry.id)) continue;
    auto doc = read_doc(entry.id);
    if (doc.status == TaskStatus::done || doc.status == TaskStatus::failed) {
      mark_terminal(doc.id);
      continue;
    }
    if (doc.status == TaskStatus::claimed) {
      if (doc.lease_expiry > t) continue;
      doc.history.push_back({"expired", doc.lease_owner, doc.attempts, t, ""});
      if (doc.attempts >= options_.max_attempts) {
        doc.status = TaskStatus::failed;
        doc.error = {{"message", fmt::format("lease expired on attempt {}", doc.attempts)}};
        doc.lease_owner.clear();
        doc.history.push_back({"failed", "", doc.attempts, t, "attempt cap reached"});
        write_doc(doc);
        mark_terminal(doc.id);
        continue;
      }
    }
    if (!doc.parents.empty()) {
      bool ready = true;
      std::string dead;
      for (const auto& parent : doc.parents) {
        if (!fs::exists(task_dir(parent) / "doc.json")) {
          ready = false;
          continue;
        }
        const auto status = read_doc(parent).status;
        if (status == TaskStatus::failed) dead = parent;
        if (status != TaskStatus::done) ready = false;
      }
      if (!dead.empty()) {
        doc.status = TaskStatus::failed;
        doc.error = {{"message", "parent " + dead + " failed"}};
        doc.lease_owner.clear();
        doc.history.push_back({"failed", "", doc.attempts, t, "parent failed"});
        write_doc(doc);
        mark_terminal(doc.id);
        continue;
      }
      if (!ready) continue;
    }
    doc.status = TaskStatus::claimed;
    doc.lease_owner = worker_id;
    doc.lease_expiry = t + lease_secs;
    ++doc.attempts;
    doc.history.push_back({"claim", worker_id, doc.attempts, t, ""});
    hit("claim:before_write");
    write_doc(doc);
    return doc;
  }
  return std::nullopt;
}

void TaskStore::check_owner(const TaskDocument& current, const TaskDocument& claimed) const {
  if (current.status != TaskStatus::claimed || current.lease_owner != claimed.lease_owner ||
      current.attempts != claimed.attempts) {
    throw LeaseLost(fmt::format("worker {} no longer holds task {} (attempt {})", claimed.lease_owner, claimed.id,
                                claimed.attempts));
  }
}

bool TaskStore::heartbeat(const TaskDocument& claimed, double lease_secs) {
  if (!(lease_secs > 0.0)) throw ValidationError("lease_secs must be positive");
  FileLock lock(root_ / "lock", true);
  auto doc = read_doc(claimed.id);
  if (doc.status != TaskStatus::claimed || doc.lease_owner != claimed.lease_owner ||
      doc.attempts != claimed.attempts) {
    return false;
  }
  doc.lease_expiry = now() + lease_secs;
  write_doc(doc);
  return true;
}

void TaskStore::complete(const TaskDocument& claimed, const json& result) {
  const auto bytes = result.dump();
  const auto hash = content_hash(bytes);
  FileLock lock(root_ / "lock", true);
  auto doc = read_doc(claimed.id);
  if (doc.status == TaskStatus::done) {
    if (doc.result_hash == hash) return;
    throw ConflictError("task " + doc.id + " is already done with a different result");
  }
  check_owner(doc, claimed);
  const auto ref = fmt::format("result-{}.json", doc.attempts);
  write_file_atomic(task_dir(doc.id) / ref, seal(result).dump(), options_.durable);
  hit("complete:after_result");
  const double t = now();
  doc.status = TaskStatus::done;
  doc.result_ref = ref;
  doc.result_hash = hash;
  doc.lease_expiry = 0.0;
  doc.history.push_back({"done", claimed.lease_owner, doc.attempts, t, hash});
  write_doc(doc);
  hit("complete:after_doc");
  mark_terminal(doc.id);
}

void TaskStore::fail_requeue(const TaskDocument& claimed, const json& error) {
  FileLock lock(root_ / "lock", true);
  auto doc = read_doc(claimed.id);
  check_owner(doc, claimed);
  const double t = now();
  doc.error = error;
  doc.lease_owner.clear();
  doc.lease_expiry = 0.0;
  const std::string message = error.is_object() && error.contains("message") ? error["message"].get<std::string>() : error.dump();
  if (doc.attempts >= options_.max_attempts) {
    doc.status = TaskStatus::failed;
    doc.history.push_back({"failed", claimed.lease_owner, doc.attempts, t, message});
  } else {
    doc.status = TaskStatus::pending;
    doc.history.push_back({"requeue", claimed.lease_owner, doc.attempts, t, message});
  }
  write_doc(doc);
  if (doc.status == TaskStatus::failed) mark_terminal(doc.id);
}

std::optional<TaskDocument> TaskStore::find(const std::string& id) const {
  if (!valid_id(id)) return std::nullopt;
  FileLock lock(root_ / "lock", false);
  if (!fs::exists(task_dir(id) / "doc.json")) return std::nullopt;
  return read_doc(id);
}

TaskDocument TaskStore::get(const std::string& id) const {
  auto doc = find(id);
  if (!doc) throw ValidationError("no task '" + id + "'");
  return *doc;
}

json TaskStore::result(const std::string& id) const {
  FileLock lock(root_ / "lock", false);
  const auto doc = read_doc(id);
  if (doc.status != TaskStatus::done) throw ValidationError("task " + id + " is not done");
  auto body = unseal(read_file(task_dir(id) / doc.result_ref), "result of " + id);
  if (content_hash(body.dump()) != doc.result_hash) throw StoreCorruption("result hash mismatch for " + id);
  return body;
}

std::vector<TaskDocument> TaskStore::list() const {
  FileLock lock(root_ / "lock", false);
  std::vector<TaskDocument> out;
  for (const auto& e : read_index()) out.push_back(read_doc(e.id));
  return out;
}

std::map<TaskStatus, std::size_t> TaskStore::counts() const {
  std::map<TaskStatus, std::size_t> c{{TaskStatus::pending, 0}, {TaskStatus::claimed, 0}, {TaskStatus::done, 0},
                                      {TaskStatus::failed, 0}};
  for (const auto& d : list()) ++c[d.status];
  return c;
}

fs::path TaskStore::artifact_dir(const TaskDocument& claimed) const {
  const auto dir = root_ / "artifacts" / claimed.id / fmt::format("a{}", claimed.attempts);
  fs::create_directories(dir);
  return dir;
}

void TaskStore::verify() const {
  FileLock lock(root_ / "lock", false);
  const auto index = read_index();
  std::unordered_set<std::string> seen;
  for (const auto& e : index) {
    if (!seen.insert(e.id).second) throw StoreCorruption("duplicate index entry " + e.id);
    const auto doc = read_doc(e.id);
    if (doc.kind != e.kind) throw StoreCorruption("index kind mismatch for " + e.id);
    if (doc.status == TaskStatus::done) {
      const auto body = unseal(read_file(task_dir(e.id) / doc.result_ref), "result of " + e.id);
      if (content_hash(body.dump()) != doc.result_hash) throw StoreCorruption("result hash mismatch for " + e.id);
    }
  }
}

}  // namespace fq::orchestrator
