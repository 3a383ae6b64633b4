#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fq/model/oracle.hpp"

namespace fq::surrogate {

struct TrainingEntry {
  std::vector<double> coords;
  double energy = 0.0;
  std::optional<std::vector<double>> forces;
  model::Tier tier = model::Tier::mid;
  std::string id;
};

struct TrainingSet {
  std::vector<TrainingEntry> entries;
  std::uint64_t split_seed = 1;

  std::size_t size() const { return entries.size(); }
  /// Unique ids, finite targets, consistent coordinate lengths, no HIGH-tier forces.
  void validate() const;
  /// FNV-1a over ids, coordinates and targets.
  std::uint64_t hash() const;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Deterministic split that depends only on entry ids and the split seed:
/// entries are ranked by a seeded hash of their id and the first
/// round(fraction·N) go to training.
Split split_dataset(const TrainingSet& set, double train_fraction = 0.9);

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ULL);

}  // namespace fq::surrogate
