#include "fq/orchestrator/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "artifacts.hpp"
#include "fq/free_energy/neq.hpp"
#include "fq/model/system_io.hpp"

namespace fq::orchestrator {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; })) {
      throw ValidationError("unknown key '" + k + "' in " + where);
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(fmt::format("bad value for '{}' in {}", key, where));
  }
}

std::uint64_t mix_seed(std::uint64_t seed, const std::string& tag) {
  std::uint64_t z = seed ^ surrogate::fnv1a(tag.data(), tag.size());
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return (z ^ (z >> 31)) & 0x7fffffffffffULL;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j, const fs::path& base) {
  reject_unknown(j, {"run_id", "system", "beta", "seed", "report", "workers", "lease_secs", "heartbeat_secs", "store",
                     "fep", "ml", "transfer", "neq"},
                 "pipeline config");
  PipelineConfig c;
  read(j, "run_id", c.run_id, "pipeline config");
  if (!j.contains("system")) throw ValidationError("pipeline config needs 'system'");
  c.system = j.at("system").get<std::string>();
  if (c.system.is_relative()) c.system = base / c.system;
  read(j, "beta", c.beta, "pipeline config");
  read(j, "seed", c.seed, "pipeline config");
  read(j, "workers", c.workers, "pipeline config");
  read(j, "lease_secs", c.lease_secs, "pipeline config");
  read(j, "heartbeat_secs", c.heartbeat_secs, "pipeline config");
  if (j.contains("store")) {
    fs::path s = j.at("store").get<std::string>();
    c.store = s.is_relative() ? base / s : s;
  }
  if (j.contains("report")) {
    reject_unknown(j["report"], {"kj_per_mol"}, "report");
    read(j["report"], "kj_per_mol", c.kj_per_mol, "report");
  }
  if (j.contains("fep")) {
    const auto& f = j["fep"];
    reject_unknown(f, {"windows", "dt", "gamma", "n_equil", "n_steps", "snapshot_stride", "max_snapshots", "n_bootstrap",
                       "overlap_threshold", "max_refinements"},
                   "fep");
    read(f, "windows", c.fep.windows, "fep");
    read(f, "dt", c.fep.dt, "fep");
    read(f, "gamma", c.fep.gamma, "fep");
    read(f, "n_equil", c.fep.n_equil, "fep");
    read(f, "n_steps", c.fep.n_steps, "fep");
    read(f, "snapshot_stride", c.fep.snapshot_stride, "fep");
    read(f, "max_snapshots", c.fep.max_snapshots, "fep");
    read(f, "n_bootstrap", c.fep.n_bootstrap, "fep");
    read(f, "overlap_threshold", c.fep.overlap_threshold, "fep");
    read(f, "max_refinements", c.fep.max_refinements, "fep");
  }
  if (j.contains("ml")) {
    const auto& m = j["ml"];
    reject_unknown(m, {"family", "members", "initial_points", "label_batch", "sigma_threshold", "budget", "max_rounds",
                       "max_per_round", "candidates_per_round", "candidate_steps"},
                   "ml");
    read(m, "family", c.ml.family, "ml");
    read(m, "members", c.ml.members, "ml");
    read(m, "initial_points", c.ml.initial_points, "ml");
    read(m, "label_batch", c.ml.label_batch, "ml");
    read(m, "sigma_threshold", c.ml.sigma_threshold, "ml");
    read(m, "budget", c.ml.budget, "ml");
    read(m, "max_rounds", c.ml.max_rounds, "ml");
    read(m, "max_per_round", c.ml.max_per_round, "ml");
    read(m, "candidates_per_round", c.ml.candidates_per_round, "ml");
    read(m, "candidate_steps", c.ml.candidate_steps, "ml");
  }
  if (j.contains("transfer")) {
    const auto& t = j["transfer"];
    reject_unknown(t, {"window", "max_points", "label_batch"}, "transfer");
    read(t, "window", c.transfer.window, "transfer");
    read(t, "max_points", c.transfer.max_points, "transfer");
    read(t, "label_batch", c.transfer.label_batch, "transfer");
  }
  if (j.contains("neq")) {
    const auto& n = j["neq"];
    reject_unknown(n, {"switches", "batch", "switch_steps", "dt", "gamma", "equil_steps", "stride", "n_bootstrap"}, "neq");
    read(n, "switches", c.neq.switches, "neq");
    read(n, "batch", c.neq.batch, "neq");
    read(n, "switch_steps", c.neq.switch_steps, "neq");
    read(n, "dt", c.neq.dt, "neq");
    read(n, "gamma", c.neq.gamma, "neq");
    read(n, "equil_steps", c.neq.equil_steps, "neq");
    read(n, "stride", c.neq.stride, "neq");
    read(n, "n_bootstrap", c.neq.n_bootstrap, "neq");
  }
  if (!fs::exists(c.system)) throw ValidationError("system file not found: " + c.system.string());
  try {
    c.system_doc = json::parse(read_file(c.system));
  } catch (const json::exception&) {
    throw ValidationError("system file is not valid JSON: " + c.system.string());
  }
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError("pipeline config is not valid JSON: " + std::string(e.what()));
  }
  return from_json(j, path.parent_path());
}

json PipelineConfig::to_json() const {
  json j = {{"run_id", run_id},
            {"system", system.string()},
            {"beta", beta},
            {"seed", seed},
            {"report", {{"kj_per_mol", kj_per_mol}}},
            {"workers", workers},
            {"lease_secs", lease_secs},
            {"heartbeat_secs", heartbeat_secs},
            {"fep",
             {{"windows", fep.windows}, {"dt", fep.dt}, {"gamma", fep.gamma}, {"n_equil", fep.n_equil},
              {"n_steps", fep.n_steps}, {"snapshot_stride", fep.snapshot_stride}, {"max_snapshots", fep.max_snapshots},
              {"n_bootstrap", fep.n_bootstrap}, {"overlap_threshold", fep.overlap_threshold},
              {"max_refinements", fep.max_refinements}}},
            {"ml",
             {{"family", ml.family}, {"members", ml.members}, {"initial_points", ml.initial_points},
              {"label_batch", ml.label_batch}, {"sigma_threshold", ml.sigma_threshold}, {"budget", ml.budget},
              {"max_rounds", ml.max_rounds}, {"max_per_round", ml.max_per_round},
              {"candidates_per_round", ml.candidates_per_round}, {"candidate_steps", ml.candidate_steps}}},
            {"transfer",
             {{"window", transfer.window}, {"max_points", transfer.max_points}, {"label_batch", transfer.label_batch}}},
            {"neq",
             {{"switches", neq.switches}, {"batch", neq.batch}, {"switch_steps", neq.switch_steps}, {"dt", neq.dt},
              {"gamma", neq.gamma}, {"equil_steps", neq.equil_steps}, {"stride", neq.stride},
              {"n_bootstrap", neq.n_bootstrap}}}};
  if (store) j["store"] = store->string();
  return j;
}

void PipelineConfig::validate() const {
  const auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ValidationError("pipeline config: " + what);
  };
  require(!run_id.empty() && run_id.find_first_not_of(
                                 "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-") == std::string::npos,
          "run_id must be alphanumeric with - or _");
  require(beta > 0.0, "beta must be positive");
  require(kj_per_mol > 0.0, "report.kj_per_mol must be positive");
  require(lease_secs > 0.0 && heartbeat_secs > 0.0 && heartbeat_secs < lease_secs,
          "need 0 < heartbeat_secs < lease_secs");
  require(fep.windows >= 2 && fep.n_steps > fep.n_equil && fep.snapshot_stride > 0 && fep.dt > 0.0,
          "fep needs >= 2 windows, n_steps > n_equil, positive stride and dt");
  require(ml.family == "krr" || ml.family == "mlp", "ml.family must be krr or mlp");
  require(ml.members >= 2, "ml.members must be at least 2");
  require(ml.initial_points >= 10 && ml.label_batch > 0, "ml.initial_points >= 10 and label_batch > 0");
  require(ml.candidates_per_round > 0 && ml.candidate_steps >= ml.candidates_per_round,
          "ml.candidate_steps must cover candidates_per_round");
  require(transfer.window > 0.0 && transfer.max_points >= 10 && transfer.label_batch > 0,
          "transfer needs a positive window, max_points >= 10 and label_batch > 0");
  require(neq.switches >= 2 && neq.batch > 0 && neq.switch_steps > 0 && neq.stride > 0 && neq.dt > 0.0,
          "neq needs >= 2 switches and positive batch, switch_steps, stride, dt");
  require(!system_doc.is_null(), "system definition not loaded");
  // The end-state corrections live at full coupling only; check that the decoupled state carries none.
  const auto def = model::parse_system(system_doc);
  if (def.potential.system().indices(model::Role::guest).size() > 1 || def.oracle.mid.anchor_to_origin ||
      def.oracle.high.anchor_to_origin) {
    throw ValidationError("pipeline config: oracle corrections must vanish at lambda = 0 (single guest, no anchors)");
  }
}

const TierResult* RunReport::tier(const std::string& label) const {
  for (const auto& t : tiers) {
    if (t.label == label) return &t;
  }
  return nullptr;
}

json RunReport::to_json() const {
  json t = json::array();
  for (const auto& x : tiers) {
    t.push_back({{"label", x.label},
                 {"dG", x.dG},
                 {"stderr", x.std_error},
                 {"dG_reduced", x.dG_reduced},
                 {"stderr_reduced", x.std_error_reduced},
                 {"n_switches", x.n_switches}});
  }
  return {{"run_id", run_id}, {"status", status}, {"units", units},
          {"tiers", t},       {"failures", failures}, {"provenance", provenance}};
}

RunReport RunReport::from_json(const json& j) {
  RunReport r;
  r.run_id = j.at("run_id");
  r.status = j.at("status");
  r.units = j.value("units", "kJ/mol");
  for (const auto& x : j.at("tiers")) {
    r.tiers.push_back({x.at("label"), x.at("dG"), x.at("stderr"), x.value("dG_reduced", 0.0),
                       x.value("stderr_reduced", 0.0), x.at("n_switches")});
  }
  r.failures = j.value("failures", json::array());
  r.provenance = j.value("provenance", json::object());
  return r;
}

std::string RunReport::to_csv() const {
  std::ostringstream out;
  out << "label,dG,stderr,n_switches\n";
  for (const auto& t : tiers) out << fmt::format("{},{:.6f},{:.6f},{}\n", t.label, t.dG, t.std_error, t.n_switches);
  return out.str();
}

RunReport load_report(const fs::path& store_root, const std::string& run_id) {
  const auto path = store_root / "runs" / run_id / "report.json";
  if (!fs::exists(path)) throw ValidationError("no report for run '" + run_id + "' under " + store_root.string());
  return RunReport::from_json(json::parse(read_file(path)));
}

namespace {

class WorkerPool {
 public:
  WorkerPool(TaskStore& store, HandlerMap handlers, const PipelineConfig& config, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      threads_.emplace_back([this, &store, handlers, &config, i] {
        std::size_t restarts = 0;
        while (!stop_.load()) {
          WorkerOptions o;
          o.worker_id = make_worker_id(fmt::format("{}-{}-r{}", config.run_id, i, restarts));
          o.lease_secs = config.lease_secs;
          o.heartbeat_secs = config.heartbeat_secs;
          o.drain_timeout = -1.0;
          o.poll_max = 0.2;
          o.stop = &stop_;
          try {
            worker_loop(store, handlers, o);
          } catch (const WorkerCrash&) {
            ++restarts;  // a fresh worker takes the slot
          }
        }
      });
    }
  }
  ~WorkerPool() {
    stop_ = true;
    for (auto& t : threads_) t.join();
  }

 private:
  std::atomic<bool> stop_{false};
  std::vector<std::thread> threads_;
};

struct StageOutcome {
  bool ok = true;
  json failures = json::array();
};

StageOutcome wait_for(const TaskStore& store, const std::vector<std::string>& ids, const std::string& stage,
                      double timeout) {
  const auto t0 = std::chrono::steady_clock::now();
  while (true) {
    StageOutcome out;
    bool pending = false;
    for (const auto& id : ids) {
      const auto doc = store.get(id);
      if (doc.status == TaskStatus::failed) {
        out.ok = false;
        out.failures.push_back({{"stage", stage}, {"task", id}, {"error", doc.error}});
      } else if (doc.status != TaskStatus::done) {
        pending = true;
      }
    }
    if (!out.ok || !pending) return out;
    if (timeout >= 0.0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() > timeout) {
      out.ok = false;
      out.failures.push_back({{"stage", stage}, {"task", ""}, {"error", {{"message", "stage timed out"}}}});
      return out;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

TaskDocument make_task(const std::string& id, const std::string& kind, json payload,
                       std::vector<std::string> parents = {}) {
  TaskDocument d;
  d.id = id;
  d.kind = kind;
  d.payload = std::move(payload);
  d.parents = std::move(parents);
  return d;
}

struct Correction {
  free_energy::Estimate estimate;
  std::size_t n_switches = 0;
  bool converged = false;
};

Correction bar_from_tasks(const TaskStore& store, const std::vector<std::string>& fwd, const std::vector<std::string>& bwd,
                          double beta, std::size_t n_bootstrap, std::uint64_t seed) {
  std::vector<double> wf;
  std::vector<double> wb;
  for (const auto& id : fwd) {
    const auto r = store.result(id);
    for (double w : r.at("works")) wf.push_back(w);
  }
  for (const auto& id : bwd) {
    const auto r = store.result(id);
    for (double w : r.at("works")) wb.push_back(w);
  }
  const auto r =
      free_energy::crooks_bar_estimate(wf, wb, model::ThermoState(beta), {.n_resamples = n_bootstrap, .seed = seed});
  return {r.estimate, wf.size() + wb.size(), r.converged};
}

}  // namespace

RunReport pipeline_run(const PipelineConfig& config, const PipelineRuntime& runtime) {
  config.validate();
  const fs::path root = runtime.store ? *runtime.store : config.store ? *config.store : TaskStore::default_root();
  TaskStore store(root, runtime.store_options);

  HandlerMap handlers = pipeline_handlers();
  if (runtime.before_handler) {
    for (auto& [kind, h] : handlers) {
      h = [inner = h, hook = runtime.before_handler](const TaskDocument& t, TaskContext& c) {
        hook(t);
        return inner(t, c);
      };
    }
  }
  const std::size_t n_workers = runtime.workers.value_or(config.workers);
  std::optional<WorkerPool> pool;
  if (n_workers > 0) pool.emplace(store, handlers, config, n_workers);

  const std::string& run = config.run_id;
  const json common = {{"system", config.system_doc}, {"beta", config.beta}};
  const auto with = [&](json extra) {
    json p = common;
    p.update(extra);
    return p;
  };
  const auto scale = config.kj_per_mol;

  RunReport report;
  report.run_id = run;
  report.status = "partial";
  json prov_tiers = json::object();
  std::vector<std::string> all_tasks;

  const auto finish = [&]() {
    json tasks = json::object();
    for (const auto& id : all_tasks) {
      const auto doc = store.find(id);
      if (!doc) continue;
      std::string worker;
      for (const auto& e : doc->history) {
        if (e.event == "done") worker = e.worker;
      }
      tasks[id] = {{"kind", doc->kind},
                   {"status", to_string(doc->status)},
                   {"attempts", doc->attempts},
                   {"parents", doc->parents},
                   {"result_hash", doc->result_hash},
                   {"worker", worker}};
    }
    const auto cfg = config.to_json();
    report.provenance = {{"store", fs::absolute(root).string()},
                         {"config", cfg},
                         {"config_hash", content_hash(cfg.dump())},
                         {"system_hash", content_hash(config.system_doc.dump())},
                         {"tiers", prov_tiers},
                         {"tasks", tasks}};
    const auto dir = root / "runs" / run;
    fs::create_directories(dir);
    write_file_atomic(dir / "report.json", report.to_json().dump(2));
    return report;
  };
  const auto fail = [&](const StageOutcome& o) {
    for (const auto& f : o.failures) report.failures.push_back(f);
    return finish();
  };

  // Stage 1: BASE-tier FEP.
  const std::string fep_id = run + ".fep";
  all_tasks.push_back(fep_id);
  store.enqueue(make_task(fep_id, "fep",
                          with({{"windows", config.fep.windows},
                                {"dt", config.fep.dt},
                                {"gamma", config.fep.gamma},
                                {"n_equil", config.fep.n_equil},
                                {"n_steps", config.fep.n_steps},
                                {"snapshot_stride", config.fep.snapshot_stride},
                                {"max_snapshots", config.fep.max_snapshots},
                                {"n_bootstrap", config.fep.n_bootstrap},
                                {"overlap_threshold", config.fep.overlap_threshold},
                                {"max_refinements", config.fep.max_refinements},
                                {"seed", mix_seed(config.seed, "fep")}})));
  if (auto o = wait_for(store, {fep_id}, "MM", runtime.stage_timeout); !o.ok) return fail(o);
  const auto fep = store.result(fep_id);
  const double dg_mm = fep.at("dG");
  const double se_mm = fep.at("stderr");
  report.tiers.push_back({"MM", dg_mm * scale, se_mm * scale, dg_mm, se_mm, 0});
  prov_tiers["MM"] = {{"tasks", {fep_id}}, {"dG_reduced", dg_mm}, {"stderr_reduced", se_mm}};
  if (runtime.stop_after_stage == 1) return finish();

  // Stage 2: snapshots, MID labels, active learning, NEQ to MM+ML1.
  const std::string sample_id = run + ".sample.mm";
  const std::size_t n_snap = config.ml.initial_points + config.neq.switches;
  store.enqueue(make_task(sample_id, "sample",
                          with({{"count", n_snap},
                                {"stride", config.fep.snapshot_stride * 2},
                                {"n_equil", config.fep.n_equil},
                                {"dt", config.fep.dt},
                                {"gamma", config.fep.gamma},
                                {"seed", mix_seed(config.seed, "sample")}}),
                          {fep_id}));
  std::vector<std::string> label_ids;
  for (std::size_t b = 0; b < config.ml.initial_points; b += config.ml.label_batch) {
    const auto id = fmt::format("{}.label_mid.{:03d}", run, b / config.ml.label_batch);
    label_ids.push_back(id);
    store.enqueue(make_task(id, "label_mid",
                            with({{"snapshots_task", sample_id},
                                  {"begin", b},
                                  {"end", std::min(b + config.ml.label_batch, config.ml.initial_points)}}),
                            {sample_id}));
  }
  const json ml = {{"family", config.ml.family},
                   {"members", config.ml.members},
                   {"sigma_threshold", config.ml.sigma_threshold},
                   {"budget", config.ml.budget},
                   {"max_rounds", config.ml.max_rounds},
                   {"max_per_round", config.ml.max_per_round},
                   {"candidates_per_round", config.ml.candidates_per_round},
                   {"candidate_steps", config.ml.candidate_steps}};
  const std::string train_id = run + ".train.ml1";
  store.enqueue(make_task(train_id, "train",
                          with({{"label_tasks", label_ids},
                                {"ml", ml},
                                {"dt", config.fep.dt},
                                {"gamma", config.fep.gamma},
                                {"seed", mix_seed(config.seed, "ml1")}}),
                          label_ids));

  const auto enqueue_neq = [&](const std::string& tag, const std::string& model_task, std::vector<std::string>& fwd,
                               std::vector<std::string>& bwd) {
    for (const std::string dir : {"forward", "backward"}) {
      for (std::size_t b = 0; b < config.neq.switches; b += config.neq.batch) {
        const auto id = fmt::format("{}.neq.{}.{}.{:03d}", run, tag, dir == "forward" ? "fwd" : "bwd", b / config.neq.batch);
        (dir == "forward" ? fwd : bwd).push_back(id);
        store.enqueue(make_task(
            id, "neq",
            with({{"model_task", model_task},
                  {"snapshots_task", sample_id},
                  {"direction", dir},
                  // Forward starts use the snapshots after the training block.
                  {"begin", (dir == "forward" ? config.ml.initial_points : 0) + b},
                  {"count", std::min(config.neq.batch, config.neq.switches - b)},
                  {"switch_steps", config.neq.switch_steps},
                  {"dt", config.neq.dt},
                  {"gamma", config.neq.gamma},
                  {"equil_steps", config.neq.equil_steps},
                  {"stride", config.neq.stride},
                  {"seed", mix_seed(config.seed, id)}}),
            {model_task, sample_id}));
      }
    }
  };
  std::vector<std::string> fwd1;
  std::vector<std::string> bwd1;
  enqueue_neq("ml1", train_id, fwd1, bwd1);
  std::vector<std::string> stage2 = {sample_id};
  stage2.insert(stage2.end(), label_ids.begin(), label_ids.end());
  stage2.push_back(train_id);
  stage2.insert(stage2.end(), fwd1.begin(), fwd1.end());
  stage2.insert(stage2.end(), bwd1.begin(), bwd1.end());
  all_tasks.insert(all_tasks.end(), stage2.begin(), stage2.end());
  if (auto o = wait_for(store, stage2, "MM+ML1", runtime.stage_timeout); !o.ok) return fail(o);

  const auto c1 = bar_from_tasks(store, fwd1, bwd1, config.beta, config.neq.n_bootstrap, mix_seed(config.seed, "bar1"));
  const double dg1 = dg_mm + c1.estimate.value;
  const double se1 = std::hypot(se_mm, c1.estimate.error);
  report.tiers.push_back({"MM+ML1", dg1 * scale, se1 * scale, dg1, se1, c1.n_switches});
  const auto train = store.result(train_id);
  std::vector<std::string> ml1_tasks = fwd1;
  ml1_tasks.insert(ml1_tasks.end(), bwd1.begin(), bwd1.end());
  prov_tiers["MM+ML1"] = {{"tasks", ml1_tasks},
                          {"forward", fwd1},
                          {"backward", bwd1},
                          {"base_tier", "MM"},
                          {"model_task", train_id},
                          {"correction", c1.estimate.value},
                          {"correction_stderr", c1.estimate.error},
                          {"bar_converged", c1.converged},
                          {"dG_reduced", dg1},
                          {"stderr_reduced", se1},
                          {"active_learning",
                           {{"converged", train.at("converged")},
                            {"added", train.at("added")},
                            {"rounds", train.at("rounds")},
                            {"n_train", train.at("n_train")}}}};
  if (runtime.stop_after_stage == 2) return finish();

  // Stage 3: transfer set, HIGH labels, transfer learning, NEQ to MM+ML2.
  const std::size_t n_high = config.transfer.max_points;
  std::vector<std::string> high_ids;
  for (std::size_t b = 0; b < n_high; b += config.transfer.label_batch) {
    const auto id = fmt::format("{}.label_high.{:03d}", run, b / config.transfer.label_batch);
    high_ids.push_back(id);
    store.enqueue(make_task(id, "label_high",
                            with({{"dataset_task", train_id},
                                  {"window_reduced", config.transfer.window / scale},
                                  {"max_points", config.transfer.max_points},
                                  {"begin", b},
                                  {"end", std::min(b + config.transfer.label_batch, n_high)}}),
                            {train_id}));
  }
  const std::string transfer_id = run + ".transfer.ml2";
  store.enqueue(make_task(transfer_id, "transfer",
                          with({{"model_task", train_id}, {"label_tasks", high_ids}, {"seed", mix_seed(config.seed, "ml2")}}),
                          high_ids));
  std::vector<std::string> fwd2;
  std::vector<std::string> bwd2;
  enqueue_neq("ml2", transfer_id, fwd2, bwd2);
  std::vector<std::string> stage3 = high_ids;
  stage3.push_back(transfer_id);
  stage3.insert(stage3.end(), fwd2.begin(), fwd2.end());
  stage3.insert(stage3.end(), bwd2.begin(), bwd2.end());
  all_tasks.insert(all_tasks.end(), stage3.begin(), stage3.end());
  if (auto o = wait_for(store, stage3, "MM+ML2", runtime.stage_timeout); !o.ok) return fail(o);

  const auto c2 = bar_from_tasks(store, fwd2, bwd2, config.beta, config.neq.n_bootstrap, mix_seed(config.seed, "bar2"));
  const double dg2 = dg_mm + c2.estimate.value;
  const double se2 = std::hypot(se_mm, c2.estimate.error);
  report.tiers.push_back({"MM+ML2", dg2 * scale, se2 * scale, dg2, se2, c2.n_switches});
  const auto tr = store.result(transfer_id);
  std::vector<std::string> ml2_tasks = fwd2;
  ml2_tasks.insert(ml2_tasks.end(), bwd2.begin(), bwd2.end());
  prov_tiers["MM+ML2"] = {{"tasks", ml2_tasks},
                          {"forward", fwd2},
                          {"backward", bwd2},
                          {"base_tier", "MM"},
                          {"model_task", transfer_id},
                          {"correction", c2.estimate.value},
                          {"correction_stderr", c2.estimate.error},
                          {"bar_converged", c2.converged},
                          {"dG_reduced", dg2},
                          {"stderr_reduced", se2},
                          {"transfer",
                           {{"n_high", tr.at("n_high")},
                            {"rmse_before_transfer", tr.at("rmse_before_transfer")},
                            {"rmse_after_transfer", tr.at("rmse_after_transfer")}}}};
  report.status = "complete";
  return finish();
}

std::vector<std::string> audit_provenance(const TaskStore& store, const RunReport& report) {
  std::vector<std::string> problems;
  const auto& prov = report.provenance;
  if (!prov.contains("tasks") || !prov.contains("tiers")) return {"provenance lacks tasks or tiers"};
  const auto& tasks = prov.at("tasks");
  std::set<std::string> verified;
  // Walks a task and its ancestors.
  std::function<void(const std::string&)> check = [&](const std::string& id) {
    if (!verified.insert(id).second) return;
    const auto doc = store.find(id);
    if (!doc) {
      problems.push_back("task " + id + " missing from store");
      return;
    }
    if (doc->status != TaskStatus::done) {
      problems.push_back("task " + id + " is not done");
      return;
    }
    const auto dones = std::count_if(doc->history.begin(), doc->history.end(), [](const auto& e) { return e.event == "done"; });
    if (dones != 1) problems.push_back(fmt::format("task {} has {} done records", id, dones));
    if (!tasks.contains(id)) {
      problems.push_back("task " + id + " is not listed in the report");
    } else if (tasks.at(id).at("result_hash") != doc->result_hash) {
      problems.push_back("result hash of " + id + " differs from the report");
    }
    try {
      const auto result = store.result(id);
      std::vector<json> refs;
      collect_artifact_refs(result, refs);
      for (const auto& r : refs) artifact_path(store, r);
    } catch (const Error& e) {
      problems.push_back("task " + id + ": " + e.what());
    }
    for (const auto& p : doc->parents) check(p);
    // Inputs named in the payload are ancestors as well.
    for (const char* key : {"snapshots_task", "model_task", "dataset_task"}) {
      if (doc->payload.contains(key)) check(doc->payload.at(key).get<std::string>());
    }
    if (doc->payload.contains("label_tasks")) {
      for (const auto& l : doc->payload.at("label_tasks")) check(l.get<std::string>());
    }
  };
  for (const auto& t : report.tiers) {
    if (!prov.at("tiers").contains(t.label)) {
      problems.push_back("tier " + t.label + " has no provenance");
      continue;
    }
    const auto& pt = prov.at("tiers").at(t.label);
    for (const auto& id : pt.at("tasks")) check(id.get<std::string>());
    if (t.label == "MM") {
      const double dg = store.result(pt.at("tasks").at(0).get<std::string>()).at("dG");
      if (dg != t.dG_reduced) problems.push_back("MM tier does not match its FEP result");
      continue;
    }
    // Recompute the correction from the raw work records.
    try {
      std::vector<double> wf;
      std::vector<double> wb;
      for (const auto& id : pt.at("forward")) {
        const auto path = artifact_path(store, store.result(id).at("records"));
        for (const auto& r : free_energy::read_work_records_csv(path)) wf.push_back(r.work);
      }
      for (const auto& id : pt.at("backward")) {
        const auto path = artifact_path(store, store.result(id).at("records"));
        for (const auto& r : free_energy::read_work_records_csv(path)) wb.push_back(r.work);
      }
      if (wf.size() + wb.size() != t.n_switches) problems.push_back("tier " + t.label + " switch count mismatch");
      const double beta = prov.at("config").at("beta");
      const auto bar = free_energy::bar_point(wf, wb, beta);
      const double base = prov.at("tiers").at("MM").at("dG_reduced");
      if (std::abs(base + bar.estimate.value - t.dG_reduced) > 1e-6 * std::max(1.0, std::abs(t.dG_reduced))) {
        problems.push_back(fmt::format("tier {} dG {} not reproduced from work records ({})", t.label, t.dG_reduced,
                                       base + bar.estimate.value));
      }
    } catch (const Error& e) {
      problems.push_back("tier " + t.label + ": " + e.what());
    }
  }
  return problems;
}

}  // namespace fq::orchestrator
