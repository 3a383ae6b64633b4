#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fq/orchestrator/store.hpp"
#include "fq/orchestrator/worker.hpp"

namespace fq::orchestrator {

struct FepStageConfig {
  std::size_t windows = 11;
  double dt = 0.02;
  double gamma = 1.0;
  std::size_t n_equil = 500;
  std::size_t n_steps = 20500;
  std::size_t snapshot_stride = 10;
  std::size_t max_snapshots = 2000;
  std::size_t n_bootstrap = 50;
  double overlap_threshold = 0.03;
  std::size_t max_refinements = 2;
};

struct MlStageConfig {
  std::string family = "krr";  ///< krr | mlp
  std::size_t members = 5;
  std::size_t initial_points = 300;
  std::size_t label_batch = 100;
  double sigma_threshold = 0.05;
  std::size_t budget = 200;
  std::size_t max_rounds = 8;
  std::size_t max_per_round = 40;
  std::size_t candidates_per_round = 100;
  std::size_t candidate_steps = 2000;
};

struct TransferStageConfig {
  /// Energy window around the median, in report units.
  double window = 400.0;
  std::size_t max_points = 150;
  std::size_t label_batch = 50;
};

struct NeqStageConfig {
  std::size_t switches = 60;  ///< per direction
  std::size_t batch = 20;
  std::size_t switch_steps = 200;
  double dt = 0.02;
  double gamma = 1.0;
  /// Burn-in on the target surface before backward switches.
  std::size_t equil_steps = 2000;
  std::size_t stride = 20;
  std::size_t n_bootstrap = 200;
};

struct PipelineConfig {
  std::string run_id = "run";
  std::filesystem::path system;
  nlohmann::json system_doc;  ///< parsed system definition, carried into task payloads
  double beta = 1.0;
  std::uint64_t seed = 1;
  double kj_per_mol = 1.0;
  std::size_t workers = 4;
  double lease_secs = 300.0;
  double heartbeat_secs = 60.0;
  std::optional<std::filesystem::path> store;
  FepStageConfig fep;
  MlStageConfig ml;
  TransferStageConfig transfer;
  NeqStageConfig neq;

  /// Relative paths resolve against `base`. Unknown keys are rejected.
  static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base = {});
  static PipelineConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void validate() const;
};

struct TierResult {
  std::string label;  ///< MM | MM+ML1 | MM+ML2
  double dG = 0.0;    ///< report units
  double std_error = 0.0;
  double dG_reduced = 0.0;
  double std_error_reduced = 0.0;
  std::size_t n_switches = 0;
};

struct RunReport {
  std::string run_id;
  std::string status;  ///< complete | partial
  std::string units = "kJ/mol";
  std::vector<TierResult> tiers;
  nlohmann::json failures = nlohmann::json::array();
  nlohmann::json provenance = nlohmann::json::object();

  const TierResult* tier(const std::string& label) const;
  nlohmann::json to_json() const;
  static RunReport from_json(const nlohmann::json& j);
  /// label,dG,stderr,n_switches
  std::string to_csv() const;
};

struct PipelineRuntime {
  /// Overrides config.store and $FQ_STORE.
  std::optional<std::filesystem::path> store;
  /// In-process worker threads; overrides config.workers when set. 0 relies on external workers.
  std::optional<std::size_t> workers;
  /// Return a partial report after this many stages (1..3); emulates an interrupted driver.
  std::size_t stop_after_stage = 0;
  /// Give up waiting for a stage after this many seconds (negative waits forever).
  double stage_timeout = -1.0;
  StoreOptions store_options;
  /// Runs before every handler call in the in-process pool; may throw WorkerCrash.
  std::function<void(const TaskDocument&)> before_handler;
};

/// Handlers for every task kind, usable by in-process and external workers.
HandlerMap pipeline_handlers();

/// MM FEP, then MID labels + active learning + NEQ (ML1), then transfer set,
/// HIGH labels, transfer learning + NEQ (ML2). Task ids are deterministic, so
/// rerunning against the same store resumes where it stopped. The report is
/// written to <store>/runs/<run_id>/report.json.
RunReport pipeline_run(const PipelineConfig& config, const PipelineRuntime& runtime = {});

RunReport load_report(const std::filesystem::path& store_root, const std::string& run_id);

/// Follows every tier back to its task results and artifact files, checking
/// status, result hashes and artifact hashes. Returns the problems found.
std::vector<std::string> audit_provenance(const TaskStore& store, const RunReport& report);

}  // namespace fq::orchestrator
