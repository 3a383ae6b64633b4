#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fq/free_energy/schedule.hpp"
#include "fq/model/potential.hpp"

namespace fq::free_energy {

/// u_kn: reduced potential of pooled sample n under state k, with N_k the
/// number of columns contributed by state k (columns grouped by state).
struct ReducedPotentialMatrix {
  Eigen::MatrixXd u;
  std::vector<std::size_t> counts;

  std::size_t n_states() const { return static_cast<std::size_t>(u.rows()); }
  std::size_t n_samples() const { return static_cast<std::size_t>(u.cols()); }
  void validate() const;
};

using Configuration = std::vector<double>;
using EnergyAt = std::function<double(std::span<const double> coords, double lambda)>;

/// u_kn = β·E(x_n; λ_k); columns are the window sample sets concatenated in schedule order.
ReducedPotentialMatrix evaluate_reduced_potentials(const std::vector<std::vector<Configuration>>& windows,
                                                   const EnergyAt& energy, const LambdaSchedule& schedule,
                                                   const model::ThermoState& state);

struct MBAROptions {
  double tol = 1e-10;
  std::size_t max_iter = 10000;
  std::size_t n_bootstrap = 200;
  std::uint64_t seed = 1;
};

struct MBARResult {
  std::vector<double> f;       ///< dimensionless, f[0] = 0
  std::vector<double> stderr_k;  ///< bootstrap standard error of f[k] − f[0]
  bool converged = false;
  std::size_t iterations = 0;
  double residual = 0.0;  ///< max |f − SC(f)| at return
};

/// Solves the MBAR equations by self-consistent iteration with an adaptive
/// switch to damped Newton steps. Non-convergence is reported, not thrown.
MBARResult mbar_solve(const ReducedPotentialMatrix& matrix, const MBAROptions& options = {});

/// Point estimate only, warm-started from `f0` when given.
MBARResult mbar_point(const ReducedPotentialMatrix& matrix, const MBAROptions& options,
                      const std::vector<double>* f0 = nullptr);

/// Normalized MBAR weights W_nk = exp(f_k − u_kn) / Σ_l N_l exp(f_l − u_ln).
Eigen::MatrixXd mbar_weights(const ReducedPotentialMatrix& matrix, const std::vector<double>& f);

/// Overlap of each adjacent state pair, in [0, 1]: the cosine between the
/// weight columns of the two states (1 for identical states, → 0 for disjoint).
std::vector<double> overlap_diagnostic(const ReducedPotentialMatrix& matrix, const std::vector<double>& f);
std::vector<double> overlap_diagnostic(const ReducedPotentialMatrix& matrix);

}  // namespace fq::free_energy
