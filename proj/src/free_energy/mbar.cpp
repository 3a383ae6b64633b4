#include "fq/free_energy/mbar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "fq/error.hpp"
#include "fq/sampling/rng.hpp"

namespace fq::free_energy {

void ReducedPotentialMatrix::validate() const {
  if (u.rows() == 0) throw ValidationError("reduced potential matrix has no states");
  if (counts.size() != n_states()) throw ValidationError("one sample count per state expected");
  std::size_t total = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] == 0) throw ValidationError(fmt::format("state {} has zero samples", k));
    total += counts[k];
  }
  if (total != n_samples()) throw ValidationError("sample counts do not add up to the number of columns");
  if (!u.allFinite()) throw ValidationError("reduced potential matrix contains non-finite entries");
}

ReducedPotentialMatrix evaluate_reduced_potentials(const std::vector<std::vector<Configuration>>& windows,
                                                   const EnergyAt& energy, const LambdaSchedule& schedule,
                                                   const model::ThermoState& state) {
  if (windows.size() != schedule.size()) throw ValidationError("one sample set per schedule window expected");
  std::size_t total = 0;
  ReducedPotentialMatrix m;
  for (const auto& w : windows) {
    if (w.empty()) throw ValidationError("every window needs at least one snapshot");
    m.counts.push_back(w.size());
    total += w.size();
  }
  const auto K = static_cast<Eigen::Index>(schedule.size());
  m.u.resize(K, static_cast<Eigen::Index>(total));
  Eigen::Index n = 0;
  for (const auto& w : windows) {
    for (const auto& x : w) {
      for (Eigen::Index k = 0; k < K; ++k) {
        const double e = energy(x, schedule[static_cast<std::size_t>(k)]);
        if (!std::isfinite(e)) {
          throw ValidationError(fmt::format("non-finite energy at state {} sample {}", k, n));
        }
        m.u(k, n) = state.beta * e;
      }
      ++n;
    }
  }
  return m;
}

namespace {

// Everything derived from f that the solver needs.
struct Workspace {
  const ReducedPotentialMatrix& m;
  Eigen::VectorXd log_n;

  explicit Workspace(const ReducedPotentialMatrix& matrix) : m(matrix), log_n(matrix.u.rows()) {
    for (Eigen::Index k = 0; k < log_n.size(); ++k) log_n(k) = std::log(static_cast<double>(m.counts[k]));
  }

  Eigen::VectorXd log_denominators(const Eigen::VectorXd& f) const {
    const auto K = m.u.rows();
    const auto N = m.u.cols();
    Eigen::VectorXd out(N);
    for (Eigen::Index n = 0; n < N; ++n) {
      double mx = -std::numeric_limits<double>::infinity();
      for (Eigen::Index k = 0; k < K; ++k) mx = std::max(mx, log_n(k) + f(k) - m.u(k, n));
      double s = 0.0;
      for (Eigen::Index k = 0; k < K; ++k) s += std::exp(log_n(k) + f(k) - m.u(k, n) - mx);
      out(n) = mx + std::log(s);
    }
    return out;
  }

  double objective(const Eigen::VectorXd& f) const {
    double phi = log_denominators(f).sum();
    for (Eigen::Index k = 0; k < f.size(); ++k) phi -= static_cast<double>(m.counts[k]) * f(k);
    return phi;
  }

  Eigen::VectorXd self_consistent(const Eigen::VectorXd& ld) const {
    const auto K = m.u.rows();
    const auto N = m.u.cols();
    Eigen::VectorXd f(K);
    for (Eigen::Index k = 0; k < K; ++k) {
      double mx = -std::numeric_limits<double>::infinity();
      for (Eigen::Index n = 0; n < N; ++n) mx = std::max(mx, -m.u(k, n) - ld(n));
      double s = 0.0;
      for (Eigen::Index n = 0; n < N; ++n) s += std::exp(-m.u(k, n) - ld(n) - mx);
      f(k) = -(mx + std::log(s));
    }
    return f.array() - f(0);
  }

  // W_nk, gradient and Hessian of the convex MBAR objective.
  void derivatives(const Eigen::VectorXd& f, const Eigen::VectorXd& ld, Eigen::VectorXd& grad,
                   Eigen::MatrixXd& hess) const {
    const auto K = m.u.rows();
    const auto N = m.u.cols();
    Eigen::VectorXd nk(K);
    for (Eigen::Index k = 0; k < K; ++k) nk(k) = static_cast<double>(m.counts[k]);
    grad = -nk;
    hess = Eigen::MatrixXd::Zero(K, K);
    Eigen::VectorXd p(K);
    for (Eigen::Index n = 0; n < N; ++n) {
      for (Eigen::Index k = 0; k < K; ++k) p(k) = std::exp(log_n(k) + f(k) - m.u(k, n) - ld(n));
      grad += p;
      hess.diagonal() += p;
      hess.noalias() -= p * p.transpose();
    }
  }
};

double max_abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

MBARResult mbar_point(const ReducedPotentialMatrix& matrix, const MBAROptions& options, const std::vector<double>* f0) {
  matrix.validate();
  if (!(options.tol > 0.0)) throw ValidationError("MBAR tolerance must be positive");
  const auto K = matrix.u.rows();
  MBARResult result;
  if (K == 1) {
    result.f = {0.0};
    result.converged = true;
    result.iterations = 1;
    return result;
  }

  Workspace ws(matrix);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(K);
  if (f0 != nullptr && f0->size() == static_cast<std::size_t>(K)) {
    f = Eigen::Map<const Eigen::VectorXd>(f0->data(), K);
    f.array() -= f(0);
  }

  Eigen::VectorXd ld = ws.log_denominators(f);
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  for (std::size_t it = 1; it <= options.max_iter; ++it) {
    result.iterations = it;
    const Eigen::VectorXd f_sc = ws.self_consistent(ld);

    // Newton candidate on the reduced system with f_0 pinned.
    ws.derivatives(f, ld, grad, hess);
    Eigen::VectorXd f_nt = f;
    const Eigen::VectorXd step =
        hess.bottomRightCorner(K - 1, K - 1).ldlt().solve(-grad.tail(K - 1));
    if (step.allFinite()) {
      const double phi0 = ws.objective(f);
      double scale = 1.0;
      for (int halving = 0; halving < 30; ++halving, scale *= 0.5) {
        Eigen::VectorXd trial = f;
        trial.tail(K - 1) += scale * step;
        if (ws.objective(trial) <= phi0) {
          f_nt = trial;
          break;
        }
      }
    }

    // Keep whichever candidate has the smaller gradient.
    Eigen::VectorXd g_sc;
    Eigen::VectorXd g_nt;
    Eigen::MatrixXd unused;
    const Eigen::VectorXd ld_sc = ws.log_denominators(f_sc);
    const Eigen::VectorXd ld_nt = ws.log_denominators(f_nt);
    ws.derivatives(f_sc, ld_sc, g_sc, unused);
    ws.derivatives(f_nt, ld_nt, g_nt, unused);
    const bool use_newton = g_nt.tail(K - 1).norm() < g_sc.tail(K - 1).norm();
    const Eigen::VectorXd f_next = use_newton ? f_nt : f_sc;
    const double change = max_abs_diff(f_next, f);
    f = f_next;
    ld = use_newton ? ld_nt : ld_sc;
    if (change < options.tol) {
      result.converged = true;
      break;
    }
  }

  result.residual = max_abs_diff(ws.self_consistent(ld), f);
  result.f.assign(f.data(), f.data() + K);
  return result;
}

MBARResult mbar_solve(const ReducedPotentialMatrix& matrix, const MBAROptions& options) {
  auto result = mbar_point(matrix, options);
  const auto K = matrix.n_states();
  result.stderr_k.assign(K, 0.0);
  if (K == 1 || options.n_bootstrap == 0) return result;

  // Offsets of each state's column block.
  std::vector<std::size_t> offset(K, 0);
  for (std::size_t k = 1; k < K; ++k) offset[k] = offset[k - 1] + matrix.counts[k - 1];

  sampling::Philox4x32 rng(options.seed, 0x6d626172ULL);
  std::vector<double> sum(K, 0.0);
  std::vector<double> sum2(K, 0.0);
  std::size_t used = 0;
  ReducedPotentialMatrix boot{Eigen::MatrixXd(matrix.u.rows(), matrix.u.cols()), matrix.counts};
  MBAROptions inner = options;
  inner.tol = std::max(options.tol, 1e-8);
  for (std::size_t b = 0; b < options.n_bootstrap; ++b) {
    Eigen::Index col = 0;
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t i = 0; i < matrix.counts[k]; ++i) {
        const auto pick = offset[k] + static_cast<std::size_t>(sampling::uniform01(rng) * matrix.counts[k]);
        boot.u.col(col++) = matrix.u.col(static_cast<Eigen::Index>(pick));
      }
    }
    const auto r = mbar_point(boot, inner, &result.f);
    if (!r.converged) continue;
    ++used;
    for (std::size_t k = 0; k < K; ++k) {
      sum[k] += r.f[k];
      sum2[k] += r.f[k] * r.f[k];
    }
  }
  if (used > 1) {
    for (std::size_t k = 0; k < K; ++k) {
      const double mean = sum[k] / static_cast<double>(used);
      const double var = (sum2[k] - static_cast<double>(used) * mean * mean) / static_cast<double>(used - 1);
      result.stderr_k[k] = std::sqrt(std::max(var, 0.0));
    }
  }
  return result;
}

Eigen::MatrixXd mbar_weights(const ReducedPotentialMatrix& matrix, const std::vector<double>& f) {
  matrix.validate();
  Workspace ws(matrix);
  const auto K = matrix.u.rows();
  const auto N = matrix.u.cols();
  const Eigen::VectorXd fv = Eigen::Map<const Eigen::VectorXd>(f.data(), K);
  const Eigen::VectorXd ld = ws.log_denominators(fv);
  Eigen::MatrixXd w(N, K);
  for (Eigen::Index n = 0; n < N; ++n) {
    for (Eigen::Index k = 0; k < K; ++k) w(n, k) = std::exp(fv(k) - matrix.u(k, n) - ld(n));
  }
  return w;
}

std::vector<double> overlap_diagnostic(const ReducedPotentialMatrix& matrix, const std::vector<double>& f) {
  if (matrix.n_states() < 2) throw ValidationError("overlap needs at least two states");
  const Eigen::MatrixXd w = mbar_weights(matrix, f);
  const Eigen::MatrixXd gram = w.transpose() * w;
  std::vector<double> out;
  for (Eigen::Index k = 0; k + 1 < gram.rows(); ++k) {
    const double denom = std::sqrt(gram(k, k) * gram(k + 1, k + 1));
    const double o = denom > 0.0 ? gram(k, k + 1) / denom : 0.0;
    out.push_back(std::clamp(o, 0.0, 1.0));
  }
  return out;
}

std::vector<double> overlap_diagnostic(const ReducedPotentialMatrix& matrix) {
  MBAROptions opt;
  opt.n_bootstrap = 0;
  return overlap_diagnostic(matrix, mbar_point(matrix, opt).f);
}

}  // namespace fq::free_energy
