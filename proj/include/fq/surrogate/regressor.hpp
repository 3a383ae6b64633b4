#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fq/surrogate/binary_io.hpp"

namespace fq::surrogate {

enum class RegressorKind : std::uint32_t { mlp = 1, krr = 2, delta = 3 };

const char* to_string(RegressorKind kind);
RegressorKind parse_regressor_kind(const std::string& name);

/// Scalar model y(x) on standardized descriptor inputs.
class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual RegressorKind kind() const = 0;
  virtual std::size_t input_size() const = 0;
  /// Returns y(x); fills ∂y/∂x when `grad` is non-empty.
  virtual double evaluate(std::span<const double> x, std::span<double> grad) const = 0;
  virtual std::unique_ptr<Regressor> clone() const = 0;
  virtual void write(BinaryWriter& out) const = 0;

  static std::unique_ptr<Regressor> read(BinaryReader& in);
};

/// One training example in normalized units: input x, target y and, when
/// available, forces F̃ together with the input Jacobian J = ∂x/∂coords.
struct Sample {
  Eigen::VectorXd x;
  double y = 0.0;
  bool has_forces = false;
  Eigen::MatrixXd jacobian;
  Eigen::VectorXd forces;
};

// ---------------------------------------------------------------------------

struct MlpConfig {
  std::vector<std::size_t> hidden{32, 32};
  double learning_rate = 2e-3;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 1500;
  /// Weight of the mean squared force residual relative to the energy term.
  double force_weight = 1.0;
  std::size_t patience = 20;
  /// Minimum improvement in normalized validation RMSE (target std = 1).
  double min_delta = 1e-4;
  /// Leading layers excluded from updates (transfer learning).
  std::size_t frozen_layers = 0;
};

/// Fully connected tanh network with a linear scalar output.
class Mlp final : public Regressor {
 public:
  Mlp(std::size_t input, const std::vector<std::size_t>& hidden, std::uint64_t seed);
  Mlp(std::vector<Eigen::MatrixXd> weights, std::vector<Eigen::VectorXd> biases);

  RegressorKind kind() const override { return RegressorKind::mlp; }
  std::size_t input_size() const override { return static_cast<std::size_t>(weights_.front().cols()); }
  double evaluate(std::span<const double> x, std::span<double> grad) const override;
  std::unique_ptr<Regressor> clone() const override { return std::make_unique<Mlp>(*this); }
  void write(BinaryWriter& out) const override;
  static std::unique_ptr<Mlp> read_body(BinaryReader& in);

  std::vector<Eigen::MatrixXd>& weights() { return weights_; }
  std::vector<Eigen::VectorXd>& biases() { return biases_; }
  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  const std::vector<Eigen::VectorXd>& biases() const { return biases_; }

 private:
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

struct FitStats {
  std::size_t epochs = 0;
  double train_rmse = 0.0;  ///< normalized energy RMSE
  double val_rmse = 0.0;
};

/// Batch loss mean_n[(y_n − t_n)² + w_F·|F̃_n − F̃_pred,n|²/n_coords] and,
/// when `gw` is given, its gradient (layers below `frozen_layers` get zero).
/// Force residuals are differentiated through the input gradient by a
/// forward-over-reverse pass.
double mlp_loss(const Mlp& net, std::span<const Sample* const> batch, double force_weight,
                std::vector<Eigen::MatrixXd>* gw = nullptr, std::vector<Eigen::VectorXd>* gb = nullptr,
                std::size_t frozen_layers = 0);

/// Adam on energy (+ force) loss with early stopping on validation energy
/// RMSE; the best parameters seen are kept.
FitStats fit_mlp(Mlp& net, const std::vector<Sample>& train, const std::vector<Sample>& validation,
                 const MlpConfig& config, std::uint64_t seed);

// ---------------------------------------------------------------------------

struct KrrConfig {
  /// Fraction of the training split drawn (without replacement) per member.
  double subsample = 0.8;
  /// Candidate ridge strengths; the best on validation is kept.
  std::vector<double> ridge_grid{1e-8, 1e-6, 1e-4, 1e-2};
  /// Weight of the affine kernel term (keeps extrapolation disagreement alive).
  double linear_weight = 1.0;
  /// Gaussian length scale; 0 selects the median pairwise distance.
  double length_scale = 0.0;
  /// When ≥ 2, ridge is chosen by k-fold error on the member's own points.
  std::size_t cv_folds = 0;
};

/// k(x, x') = exp(−|x − x'|²/(2ℓ²)) + c·(1 + x·x'/D).
class Krr final : public Regressor {
 public:
  Krr(Eigen::MatrixXd centers, Eigen::VectorXd alpha, double length_scale, double linear_weight, double ridge);

  RegressorKind kind() const override { return RegressorKind::krr; }
  std::size_t input_size() const override { return static_cast<std::size_t>(centers_.rows()); }
  double evaluate(std::span<const double> x, std::span<double> grad) const override;
  std::unique_ptr<Regressor> clone() const override { return std::make_unique<Krr>(*this); }
  void write(BinaryWriter& out) const override;
  static std::unique_ptr<Krr> read_body(BinaryReader& in);

  double ridge() const { return ridge_; }
  double length_scale() const { return length_; }

 private:
  Eigen::MatrixXd centers_;  // D × n
  Eigen::VectorXd alpha_;
  double length_;
  double linear_weight_;
  double ridge_;
  // Σ α_i x_i, folded affine part.
  Eigen::VectorXd linear_dir_;
  double linear_bias_;
};

std::unique_ptr<Krr> fit_krr(const std::vector<Sample>& train, const std::vector<Sample>& validation,
                             const KrrConfig& config, std::uint64_t seed, FitStats* stats = nullptr);

/// y = base(x) + correction(x).
class DeltaRegressor final : public Regressor {
 public:
  DeltaRegressor(std::unique_ptr<Regressor> base, std::unique_ptr<Regressor> correction);
  DeltaRegressor(const DeltaRegressor& other);

  RegressorKind kind() const override { return RegressorKind::delta; }
  std::size_t input_size() const override { return base_->input_size(); }
  double evaluate(std::span<const double> x, std::span<double> grad) const override;
  std::unique_ptr<Regressor> clone() const override { return std::make_unique<DeltaRegressor>(*this); }
  void write(BinaryWriter& out) const override;

  const Regressor& base() const { return *base_; }
  const Regressor& correction() const { return *correction_; }

 private:
  std::unique_ptr<Regressor> base_;
  std::unique_ptr<Regressor> correction_;
};

}  // namespace fq::surrogate
