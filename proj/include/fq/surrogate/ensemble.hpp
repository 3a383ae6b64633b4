#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fq/surrogate/dataset.hpp"
#include "fq/surrogate/descriptor.hpp"
#include "fq/surrogate/regressor.hpp"

namespace fq::surrogate {

struct Normalization {
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
  double energy_mean = 0.0;
  double energy_scale = 1.0;
};

struct TrainingMetadata {
  std::string role = "ML1";
  model::Tier tier = model::Tier::mid;
  std::uint64_t dataset_hash = 0;
  std::size_t n_train = 0;
  std::size_t n_validation = 0;
  double train_rmse = 0.0;  ///< energy units
  double val_rmse = 0.0;
  /// Holdout RMSE against the transfer tier, before and after transfer (NaN when not transferred).
  double rmse_before_transfer = std::numeric_limits<double>::quiet_NaN();
  double rmse_after_transfer = std::numeric_limits<double>::quiet_NaN();
};

struct Prediction {
  double energy = 0.0;
  std::vector<double> forces;
  double sigma = 0.0;
};

/// Ensemble of regressors over a shared descriptor. Energy and forces are
/// ensemble means; sigma is the population standard deviation of member
/// energies. Prediction is const and safe for concurrent callers.
class EnsembleSurrogate {
 public:
  EnsembleSurrogate(Featurizer featurizer, Normalization norm, std::vector<std::unique_ptr<Regressor>> members,
                    TrainingMetadata metadata);
  EnsembleSurrogate(const EnsembleSurrogate& other);
  EnsembleSurrogate& operator=(const EnsembleSurrogate& other);
  EnsembleSurrogate(EnsembleSurrogate&&) noexcept = default;
  EnsembleSurrogate& operator=(EnsembleSurrogate&&) noexcept = default;

  std::size_t size() const { return members_.size(); }
  RegressorKind family() const;
  const Featurizer& featurizer() const { return featurizer_; }
  const Normalization& normalization() const { return norm_; }
  const TrainingMetadata& metadata() const { return metadata_; }
  TrainingMetadata& metadata() { return metadata_; }
  const Regressor& member(std::size_t i) const { return *members_.at(i); }

  Prediction predict(std::span<const double> coords) const;
  /// Mean energy and sigma without forces.
  Prediction predict_energy(std::span<const double> coords) const;
  std::vector<double> member_energies(std::span<const double> coords) const;

  /// Standardized descriptor.
  std::vector<double> normalized_features(std::span<const double> coords, Eigen::MatrixXd* jacobian = nullptr) const;

  void save(const std::filesystem::path& path) const;
  static EnsembleSurrogate load(const std::filesystem::path& path);

 private:
  Featurizer featurizer_;
  Normalization norm_;
  std::vector<std::unique_ptr<Regressor>> members_;
  TrainingMetadata metadata_;
};

struct TrainConfig {
  RegressorKind family = RegressorKind::mlp;
  std::size_t members = 5;
  double train_fraction = 0.9;
  std::uint64_t seed = 1;
  MlpConfig mlp;
  KrrConfig krr;
  std::string role = "ML1";
};

/// Trains every member on the seeded split of `dataset`.
EnsembleSurrogate train(const TrainingSet& dataset, const Featurizer& featurizer, const TrainConfig& config);

/// Indices with |E_i − median(E)| ≤ window.
std::vector<std::size_t> select_transfer_set(std::span<const double> energies, double window);

struct TransferConfig {
  double train_fraction = 0.9;
  std::uint64_t seed = 7;
  std::size_t min_entries = 10;
  /// Fine-tuning for network members: low learning rate, first layer frozen, energies only.
  MlpConfig fine_tune{.hidden = {},
                      .learning_rate = 3e-4,
                      .batch_size = 32,
                      .max_epochs = 800,
                      .force_weight = 0.0,
                      .patience = 40,
                      .min_delta = 1e-5,
                      .frozen_layers = 1};
  /// Additive delta model for kernel members.
  KrrConfig delta{.subsample = 0.8,
                  .ridge_grid = {1e-6, 1e-4, 1e-2, 1e-1, 1.0, 10.0},
                  .linear_weight = 1.0,
                  .length_scale = 0.0,
                  .cv_folds = 5};
};

/// Refines `base` on energy-only data from a higher tier. The held-out part
/// of `high` gives the before/after RMSE stored in the metadata.
EnsembleSurrogate transfer_learn(const EnsembleSurrogate& base, const TrainingSet& high, const TransferConfig& config = {});

/// RMSE of the ensemble mean energy on `entries` (energy units).
double energy_rmse(const EnsembleSurrogate& model, const std::vector<TrainingEntry>& entries);

}  // namespace fq::surrogate
