#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fq/surrogate/ensemble.hpp"

namespace fq::surrogate {

struct ActiveLearningConfig {
  /// Structures with ensemble sigma above this get labeled.
  double threshold = 0.1;
  /// Maximum number of additional oracle labels.
  std::size_t budget = 200;
  std::size_t max_rounds = 20;
  std::size_t max_per_round = 50;
  TrainConfig train;
};

/// Proposes candidate structures by sampling with the current model.
using CandidateSampler = std::function<std::vector<std::vector<double>>(const EnsembleSurrogate& model, std::size_t round)>;
/// Oracle call; `id` is assigned by the loop and must be carried into the entry.
using Labeler = std::function<TrainingEntry(std::span<const double> coords, const std::string& id)>;

struct AuditEvent {
  std::string event;  ///< train | flag | converged | budget_exhausted | round_limit
  std::string structure_id;
  double sigma = 0.0;
  std::string action;
  std::size_t round = 0;
};

struct ActiveLearningResult {
  EnsembleSurrogate model;
  TrainingSet dataset;
  bool converged = false;
  std::size_t added = 0;
  std::size_t rounds = 0;
  /// Largest sigma over the last candidate batch.
  double final_max_sigma = 0.0;
  std::vector<AuditEvent> audit;
};

/// Train → sample → flag sigma > threshold → label → retrain, until a sampled
/// batch raises no flags (converged) or the budget or round limit runs out.
/// Labels within a round are requested in parallel.
ActiveLearningResult active_learning_run(TrainingSet initial, const Featurizer& featurizer,
                                         const CandidateSampler& sampler, const Labeler& labeler,
                                         const ActiveLearningConfig& config);

/// One JSON object per line: event, structure_id, sigma, action, round.
void write_audit_log(std::span<const AuditEvent> events, const std::filesystem::path& path);

}  // namespace fq::surrogate
