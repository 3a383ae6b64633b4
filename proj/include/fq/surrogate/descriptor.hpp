#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fq/model/potential.hpp"

namespace fq::surrogate {

struct DescriptorSpec {
  std::size_t n_rbf = 12;
  double r_min = 0.5;
  double r_max = 4.0;
  /// Gaussian width; 0 selects the grid spacing.
  double width = 0.0;
};

/// Pair-distance descriptor.
///
/// Pairs are grouped into channels by unordered species pair. Each channel
/// holds Σ_pairs exp(−(r − μ_m)²/(2w²)) for the n_rbf grid centers μ_m and
/// Σ_pairs 1/r. Sums over pairs make it invariant under rigid motions and
/// permutations of same-species particles.
class Featurizer {
 public:
  Featurizer(std::size_t dim, std::vector<int> species, DescriptorSpec spec = {});
  explicit Featurizer(const model::ParticleSystem& system, DescriptorSpec spec = {});

  std::size_t size() const { return n_channels_ * per_channel(); }
  std::size_t n_coords() const { return dim_ * species_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<int>& species() const { return species_; }
  const DescriptorSpec& spec() const { return spec_; }

  std::vector<double> operator()(std::span<const double> coords) const { return featurize(coords, nullptr); }
  /// Optionally fills the dense size() × n_coords() Jacobian.
  std::vector<double> featurize(std::span<const double> coords, Eigen::MatrixXd* jacobian) const;
  /// Adds −Jᵀg to `forces`, i.e. the force of an energy with gradient g in descriptor space.
  void pull_back(std::span<const double> coords, std::span<const double> g, std::span<double> forces) const;

 private:
  std::size_t per_channel() const { return spec_.n_rbf + 1; }
  std::size_t channel(std::size_t i, std::size_t j) const;
  // Fills value and dvalue/dr for one channel block.
  void radial(double r, std::span<double> value, std::span<double> slope) const;
  template <class Visit>
  void for_each_pair(std::span<const double> coords, Visit&& visit) const;

  std::size_t dim_;
  std::vector<int> species_;
  DescriptorSpec spec_;
  double width_;
  std::size_t n_species_;
  std::size_t n_channels_;
};

}  // namespace fq::surrogate
