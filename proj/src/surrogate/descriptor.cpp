#include "fq/surrogate/descriptor.hpp"

#include <algorithm>
#include <cmath>

#include "fq/error.hpp"

namespace fq::surrogate {

namespace {

std::vector<int> species_of(const model::ParticleSystem& system) {
  std::vector<int> out;
  for (const auto& p : system.particles()) out.push_back(p.species);
  return out;
}

}  // namespace

Featurizer::Featurizer(std::size_t dim, std::vector<int> species, DescriptorSpec spec)
    : dim_(dim), species_(std::move(species)), spec_(spec) {
  if (dim_ < 1 || dim_ > 3) throw ValidationError("descriptor dimension must be 1, 2 or 3");
  if (species_.size() < 2) throw ValidationError("descriptor needs at least two particles");
  if (spec_.n_rbf < 1) throw ValidationError("descriptor needs at least one radial basis function");
  if (!(spec_.r_max > spec_.r_min) || spec_.r_min < 0.0) throw ValidationError("descriptor range must satisfy 0 <= r_min < r_max");
  for (int s : species_) {
    if (s < 0) throw ValidationError("species must be non-negative");
  }
  const double spacing = spec_.n_rbf > 1 ? (spec_.r_max - spec_.r_min) / static_cast<double>(spec_.n_rbf - 1)
                                         : spec_.r_max - spec_.r_min;
  width_ = spec_.width > 0.0 ? spec_.width : spacing;
  n_species_ = static_cast<std::size_t>(*std::max_element(species_.begin(), species_.end())) + 1;
  n_channels_ = n_species_ * (n_species_ + 1) / 2;
}

Featurizer::Featurizer(const model::ParticleSystem& system, DescriptorSpec spec)
    : Featurizer(system.dim(), species_of(system), spec) {}

std::size_t Featurizer::channel(std::size_t i, std::size_t j) const {
  auto a = static_cast<std::size_t>(species_[i]);
  auto b = static_cast<std::size_t>(species_[j]);
  if (a > b) std::swap(a, b);
  // Row-major upper triangle.
  return a * n_species_ - a * (a + 1) / 2 + b;
}

void Featurizer::radial(double r, std::span<double> value, std::span<double> slope) const {
  const double spacing =
      spec_.n_rbf > 1 ? (spec_.r_max - spec_.r_min) / static_cast<double>(spec_.n_rbf - 1) : 0.0;
  const double inv_w2 = 1.0 / (width_ * width_);
  for (std::size_t m = 0; m < spec_.n_rbf; ++m) {
    const double d = r - (spec_.r_min + static_cast<double>(m) * spacing);
    const double g = std::exp(-0.5 * d * d * inv_w2);
    value[m] = g;
    slope[m] = -g * d * inv_w2;
  }
  value[spec_.n_rbf] = 1.0 / r;
  slope[spec_.n_rbf] = -1.0 / (r * r);
}

template <class Visit>
void Featurizer::for_each_pair(std::span<const double> coords, Visit&& visit) const {
  if (coords.size() != n_coords()) throw ValidationError("coordinate length does not match descriptor system");
  const std::size_t n = species_.size();
  std::vector<double> value(per_channel());
  std::vector<double> slope(per_channel());
  double disp[3];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double r2 = 0.0;
      for (std::size_t d = 0; d < dim_; ++d) {
        disp[d] = coords[i * dim_ + d] - coords[j * dim_ + d];
        r2 += disp[d] * disp[d];
      }
      const double r = std::sqrt(r2);
      if (!(r > 1e-12)) throw SingularConfiguration("coincident particles: descriptor is singular");
      radial(r, value, slope);
      visit(i, j, channel(i, j) * per_channel(), r, std::span<const double>(disp, dim_), value, slope);
    }
  }
}

std::vector<double> Featurizer::featurize(std::span<const double> coords, Eigen::MatrixXd* jacobian) const {
  std::vector<double> out(size(), 0.0);
  if (jacobian) jacobian->setZero(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(n_coords()));
  for_each_pair(coords, [&](std::size_t i, std::size_t j, std::size_t offset, double r, std::span<const double> disp,
                            const std::vector<double>& value, const std::vector<double>& slope) {
    for (std::size_t m = 0; m < value.size(); ++m) out[offset + m] += value[m];
    if (!jacobian) return;
    for (std::size_t m = 0; m < value.size(); ++m) {
      const auto row = static_cast<Eigen::Index>(offset + m);
      for (std::size_t d = 0; d < dim_; ++d) {
        const double dr = slope[m] * disp[d] / r;
        (*jacobian)(row, static_cast<Eigen::Index>(i * dim_ + d)) += dr;
        (*jacobian)(row, static_cast<Eigen::Index>(j * dim_ + d)) -= dr;
      }
    }
  });
  return out;
}

void Featurizer::pull_back(std::span<const double> coords, std::span<const double> g, std::span<double> forces) const {
  if (g.size() != size() || forces.size() != n_coords()) throw ValidationError("pull_back size mismatch");
  for_each_pair(coords, [&](std::size_t i, std::size_t j, std::size_t offset, double r, std::span<const double> disp,
                            const std::vector<double>&, const std::vector<double>& slope) {
    double de_dr = 0.0;
    for (std::size_t m = 0; m < slope.size(); ++m) de_dr += g[offset + m] * slope[m];
    for (std::size_t d = 0; d < dim_; ++d) {
      const double f = de_dr * disp[d] / r;
      forces[i * dim_ + d] -= f;
      forces[j * dim_ + d] += f;
    }
  });
}

}  // namespace fq::surrogate
