#include "fq/model/potential.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "fq/error.hpp"

namespace fq::model {

namespace {

double distance(std::span<const double> coords, std::size_t dim, std::size_t i, std::size_t j,
                std::vector<double>& disp) {
  double r2 = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    disp[d] = coords[i * dim + d] - coords[j * dim + d];
    r2 += disp[d] * disp[d];
  }
  return std::sqrt(r2);
}

void check_particles(const Term& term, std::size_t n) {
  std::visit(
      [n](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, HarmonicWell>) {
          if (t.particle >= n) throw ValidationError("harmonic well references unknown particle");
          if (!(t.k > 0.0)) throw ValidationError("spring constants must be positive");
        } else {
          if (t.i >= n || t.j >= n || t.i == t.j) throw ValidationError("pair term references invalid particles");
          if constexpr (std::is_same_v<T, HarmonicBond>) {
            if (!(t.k > 0.0)) throw ValidationError("spring constants must be positive");
            if (t.r0 < 0.0) throw ValidationError("bond rest length must be non-negative");
          } else {
            if (!(t.epsilon > 0.0) || !(t.sigma > 0.0)) throw ValidationError("LJ epsilon and sigma must be positive");
          }
        }
      },
      term);
}

}  // namespace

ThermoState::ThermoState(double b) : beta(b) {
  if (!(b > 0.0) || !std::isfinite(b)) throw ValidationError("beta must be positive and finite");
}

ParticleSystem::ParticleSystem(std::size_t dim, std::vector<Particle> particles)
    : dim_(dim), particles_(std::move(particles)) {
  if (dim_ < 1 || dim_ > 3) throw ValidationError("spatial dimension must be 1, 2 or 3");
  if (particles_.empty()) throw ValidationError("a particle system needs at least one particle");
  for (const auto& p : particles_) {
    if (!(p.mass > 0.0)) throw ValidationError("particle masses must be positive");
  }
}

std::vector<std::size_t> ParticleSystem::indices(Role role) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < particles_.size(); ++i) {
    if (particles_[i].role == role) out.push_back(i);
  }
  return out;
}

void ParticleSystem::check_coords(std::span<const double> coords) const {
  if (coords.size() != n_coords()) {
    throw ValidationError("coordinate array has " + std::to_string(coords.size()) + " entries, expected " +
                          std::to_string(n_coords()));
  }
}

void accumulate_term(const Term& term, std::span<const double> coords, std::size_t dim, double weight,
                     double& energy, std::span<double> forces) {
  std::vector<double> disp(dim);
  std::visit(
      [&](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, HarmonicWell>) {
          for (std::size_t d = 0; d < dim; ++d) {
            const double c = t.center.empty() ? 0.0 : t.center[d];
            const double dx = coords[t.particle * dim + d] - c;
            energy += weight * 0.5 * t.k * dx * dx;
            forces[t.particle * dim + d] -= weight * t.k * dx;
          }
        } else if constexpr (std::is_same_v<T, HarmonicBond>) {
          const double r = distance(coords, dim, t.i, t.j, disp);
          const double stretch = r - t.r0;
          energy += weight * 0.5 * t.k * stretch * stretch;
          if (t.r0 == 0.0) {
            // ½k r² has gradient k·disp, regular at r = 0.
            for (std::size_t d = 0; d < dim; ++d) {
              forces[t.i * dim + d] -= weight * t.k * disp[d];
              forces[t.j * dim + d] += weight * t.k * disp[d];
            }
          } else {
            if (r == 0.0) throw SingularConfiguration("coincident particles on a bond with nonzero rest length");
            const double f = weight * t.k * stretch / r;
            for (std::size_t d = 0; d < dim; ++d) {
              forces[t.i * dim + d] -= f * disp[d];
              forces[t.j * dim + d] += f * disp[d];
            }
          }
        } else {
          const double r = distance(coords, dim, t.i, t.j, disp);
          if (r <= 1e-10 * t.sigma) {
            throw SingularConfiguration("singular configuration: coincident Lennard-Jones particles " +
                                        std::to_string(t.i) + " and " + std::to_string(t.j));
          }
          const double sr2 = (t.sigma * t.sigma) / (r * r);
          const double sr6 = sr2 * sr2 * sr2;
          energy += weight * 4.0 * t.epsilon * (sr6 * sr6 - sr6);
          // −dE/dr · 1/r
          const double f = weight * 24.0 * t.epsilon * (2.0 * sr6 * sr6 - sr6) / (r * r);
          for (std::size_t d = 0; d < dim; ++d) {
            forces[t.i * dim + d] += f * disp[d];
            forces[t.j * dim + d] -= f * disp[d];
          }
        }
      },
      term);
}

void accumulate_softcore_lj(const LennardJones& t, std::span<const double> coords, std::size_t dim, double lambda,
                            double alpha, double& energy, std::span<double> forces) {
  std::vector<double> disp(dim);
  const double r = distance(coords, dim, t.i, t.j, disp);
  const double s2 = (r * r) / (t.sigma * t.sigma);
  const double s6 = s2 * s2 * s2;
  const double denom = alpha * (1.0 - lambda) + s6;
  if (denom <= 0.0) {
    throw SingularConfiguration("singular configuration: coincident soft-core particles at full coupling");
  }
  const double inv = 1.0 / denom;
  energy += lambda * 4.0 * t.epsilon * (inv * inv - inv);
  // dE/dD · dD/dr / r, with dD/dr / r = 6 r⁴/σ⁶ (regular at r = 0)
  const double de_dd = lambda * 4.0 * t.epsilon * (-2.0 * inv * inv * inv + inv * inv);
  const double s4 = s2 * s2;
  const double g = de_dd * 6.0 * s4 / (t.sigma * t.sigma);
  for (std::size_t d = 0; d < dim; ++d) {
    forces[t.i * dim + d] -= g * disp[d];
    forces[t.j * dim + d] += g * disp[d];
  }
}

AlchemicalPotential::AlchemicalPotential(ParticleSystem system, std::vector<Term> host_terms,
                                         std::vector<Term> guest_terms, std::vector<Term> interaction_terms,
                                         Coupling coupling, double softcore_alpha)
    : system_(std::move(system)),
      host_terms_(std::move(host_terms)),
      guest_terms_(std::move(guest_terms)),
      interaction_terms_(std::move(interaction_terms)),
      coupling_(coupling),
      softcore_alpha_(softcore_alpha) {
  const auto n = system_.size();
  for (const auto* group : {&host_terms_, &guest_terms_, &interaction_terms_}) {
    for (const auto& term : *group) check_particles(term, n);
  }
  if (!(softcore_alpha_ >= 0.0)) throw ValidationError("soft-core alpha must be non-negative");
}

EnergyForces AlchemicalPotential::energy_and_forces(std::span<const double> coords, double lambda) const {
  system_.check_coords(coords);
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("lambda must lie in [0, 1]");
  const auto dim = system_.dim();
  EnergyForces out;
  out.forces.assign(coords.size(), 0.0);
  for (const auto& term : host_terms_) accumulate_term(term, coords, dim, 1.0, out.energy, out.forces);
  for (const auto& term : guest_terms_) accumulate_term(term, coords, dim, 1.0, out.energy, out.forces);
  if (lambda == 0.0) return out;
  for (const auto& term : interaction_terms_) {
    if (coupling_ == Coupling::softcore && std::holds_alternative<LennardJones>(term)) {
      accumulate_softcore_lj(std::get<LennardJones>(term), coords, dim, lambda, softcore_alpha_, out.energy,
                             out.forces);
    } else {
      accumulate_term(term, coords, dim, lambda, out.energy, out.forces);
    }
  }
  return out;
}

double AlchemicalPotential::energy(std::span<const double> coords, double lambda) const {
  return energy_and_forces(coords, lambda).energy;
}

namespace {

double group_energy(const std::vector<Term>& terms, std::span<const double> coords, std::size_t dim) {
  double e = 0.0;
  std::vector<double> scratch(coords.size(), 0.0);
  for (const auto& term : terms) accumulate_term(term, coords, dim, 1.0, e, scratch);
  return e;
}

}  // namespace

double AlchemicalPotential::host_energy(std::span<const double> coords) const {
  system_.check_coords(coords);
  return group_energy(host_terms_, coords, system_.dim());
}

double AlchemicalPotential::guest_energy(std::span<const double> coords) const {
  system_.check_coords(coords);
  return group_energy(guest_terms_, coords, system_.dim());
}

double AlchemicalPotential::interaction_energy(std::span<const double> coords) const {
  system_.check_coords(coords);
  return group_energy(interaction_terms_, coords, system_.dim());
}

AlchemicalPotential AlchemicalPotential::decoupled() const {
  return AlchemicalPotential(system_, host_terms_, guest_terms_, {}, coupling_, softcore_alpha_);
}

double analytic_free_energy(const AlchemicalPotential& potential, double lambda, const ThermoState& state) {
  const auto n = potential.system().size();
  const auto dim = static_cast<double>(potential.system().dim());
  const auto d = static_cast<Eigen::Index>(potential.system().dim());
  Eigen::MatrixXd stiffness = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  // U = ½ Σ_a x_aᵀ K x_a − b_aᵀ x_a + c per Cartesian axis a.
  Eigen::MatrixXd linear = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), d);
  double constant = 0.0;

  auto add = [&](const Term& term, double weight) {
    if (weight == 0.0) return;
    std::visit(
        [&](const auto& t) {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, HarmonicWell>) {
            const auto i = static_cast<Eigen::Index>(t.particle);
            stiffness(i, i) += weight * t.k;
            for (Eigen::Index a = 0; a < d; ++a) {
              const double c = t.center[static_cast<std::size_t>(a)];
              linear(i, a) += weight * t.k * c;
              constant += 0.5 * weight * t.k * c * c;
            }
          } else if constexpr (std::is_same_v<T, HarmonicBond>) {
            if (t.r0 != 0.0) throw ValidationError("no analytic form: bond with nonzero rest length");
            const auto i = static_cast<Eigen::Index>(t.i);
            const auto j = static_cast<Eigen::Index>(t.j);
            stiffness(i, i) += weight * t.k;
            stiffness(j, j) += weight * t.k;
            stiffness(i, j) -= weight * t.k;
            stiffness(j, i) -= weight * t.k;
          } else {
            throw ValidationError("no analytic form: Lennard-Jones term present");
          }
        },
        term);
  };
  for (const auto& t : potential.host_terms()) add(t, 1.0);
  for (const auto& t : potential.guest_terms()) add(t, 1.0);
  for (const auto& t : potential.interaction_terms()) add(t, lambda);

  Eigen::LLT<Eigen::MatrixXd> llt(stiffness);
  if (llt.info() != Eigen::Success) {
    throw ValidationError("no analytic form: quadratic potential is not positive definite");
  }
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < stiffness.rows(); ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));

  const Eigen::MatrixXd minimizer = llt.solve(linear);
  const double e_min = constant - 0.5 * (linear.array() * minimizer.array()).sum();

  const double beta = state.beta;
  const double log_z =
      0.5 * dim * static_cast<double>(n) * std::log(2.0 * std::numbers::pi / beta) - 0.5 * dim * log_det;
  return e_min - log_z / beta;
}

}  // namespace fq::model
