// Acceptance runner: one PASS/FAIL line per criterion. Tolerances are fixed here.

#include <unistd.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "../support/stress.hpp"
#include "fq/free_energy/estimators.hpp"
#include "fq/free_energy/fep.hpp"
#include "fq/free_energy/mbar.hpp"
#include "fq/free_energy/neq.hpp"
#include "fq/guiding/curve.hpp"
#include "fq/guiding/overlap.hpp"
#include "fq/guiding/sector.hpp"
#include "fq/model/system_io.hpp"
#include "fq/orchestrator/pipeline.hpp"
#include "fq/qre/cost.hpp"
#include "fq/qre/generators.hpp"
#include "fq/qre/integrals.hpp"
#include "fq/qre/mapping.hpp"
#include "fq/qre/trotter.hpp"
#include "fq/sampling/langevin.hpp"
#include "fq/surrogate/ensemble.hpp"

using namespace fq;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Pinned tolerances.
constexpr double kSigmas = 3.0;
constexpr double kCrit1Seconds = 60.0;
constexpr double kCrit4Seconds = 1800.0;
constexpr double kTransferRatio = 0.5;
constexpr double kSlopeTarget = 2.0;
constexpr double kSlopeTol = 0.1;
constexpr double kAlphaTol = 0.05;
constexpr double kSpectrumTol = 1e-10;
constexpr double kLosslessTol = 1e-12;
constexpr double kMonotoneSlack = 1e-12;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool within(double a, double ea, double b, double eb) { return std::abs(a - b) <= kSigmas * std::hypot(ea, eb); }

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / fmt::format("fq_accept_{}_{}", name, ::getpid());
  fs::remove_all(p);
  return p;
}

// ---- 1, 2: harmonic two-state data --------------------------------------------

struct HarmonicData {
  free_energy::ReducedPotentialMatrix m;
  std::size_t n = 0;
};

std::vector<double> langevin_samples(double k, std::size_t n, std::uint64_t seed) {
  model::ParticleSystem sys(1, {model::Particle{}});
  const model::AlchemicalPotential pot(sys, {model::HarmonicWell{0, k, {0.0}}}, {}, {});
  sampling::LangevinParams lp;
  lp.dt = 0.05;
  lp.gamma = 2.0;
  lp.n_equil = 2000;
  lp.record_interval = 150;
  lp.n_steps = lp.n_equil + n * lp.record_interval;
  lp.seed = seed;
  const auto traj = sampling::langevin_propagate(sampling::make_surface(pot, 1.0), std::vector<double>{0.0}, lp,
                                                 model::ThermoState(1.0), 1.0);
  std::vector<double> x;
  for (const auto& f : sampling::draw_snapshots(traj, 1, n)) x.push_back(f.coords[0]);
  if (x.size() != n) throw Error("short trajectory");
  return x;
}

HarmonicData harmonic_data(std::uint64_t seed) {
  constexpr std::size_t n = 10000;
  const auto xa = langevin_samples(1.0, n, 1000 + seed);
  const auto xb = langevin_samples(4.0, n, 2000 + seed);
  HarmonicData d;
  d.n = n;
  d.m.u.resize(2, static_cast<Eigen::Index>(2 * n));
  d.m.counts = {n, n};
  for (std::size_t i = 0; i < 2 * n; ++i) {
    const double x = i < n ? xa[i] : xb[i - n];
    d.m.u(0, static_cast<Eigen::Index>(i)) = 0.5 * x * x;
    d.m.u(1, static_cast<Eigen::Index>(i)) = 2.0 * x * x;
  }
  return d;
}

std::vector<HarmonicData>& harmonic_cache() {
  static std::vector<HarmonicData> cache;
  return cache;
}

Outcome criterion1() {
  const double exact = 0.5 * std::log(4.0);
  const auto t0 = std::chrono::steady_clock::now();
  auto& cache = harmonic_cache();
  cache.clear();
  bool ok = true;
  std::string values;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    cache.push_back(harmonic_data(seed));
    const auto r = free_energy::mbar_solve(cache.back().m, {.n_bootstrap = 200, .seed = seed});
    const bool hit = r.converged && std::abs(r.f[1] - exact) <= kSigmas * r.stderr_k[1];
    ok = ok && hit;
    values += fmt::format(" {:.4f}+/-{:.4f}", r.f[1], r.stderr_k[1]);
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < kCrit1Seconds;
  return {ok, fmt::format("exact {:.4f}; MBAR{}; {:.1f} s", exact, values, secs)};
}

Outcome criterion2() {
  auto& cache = harmonic_cache();
  if (cache.size() != 5) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) cache.push_back(harmonic_data(seed));
  }
  const model::ThermoState state(1.0);
  bool ok = true;
  double worst = 0.0;
  std::string worst_detail;
  for (std::size_t s = 0; s < cache.size(); ++s) {
    const auto& d = cache[s];
    const auto r = free_energy::mbar_solve(d.m, {.n_bootstrap = 200, .seed = 50 + s});
    std::vector<double> fwd;  // u_B − u_A on A samples
    std::vector<double> bwd;  // u_A − u_B on B samples
    for (std::size_t i = 0; i < 2 * d.n; ++i) {
      const double du = d.m.u(1, static_cast<Eigen::Index>(i)) - d.m.u(0, static_cast<Eigen::Index>(i));
      (i < d.n ? fwd : bwd).push_back(i < d.n ? du : -du);
    }
    const auto zf = free_energy::zwanzig_with_error(fwd);
    const auto zb = free_energy::zwanzig_with_error(bwd);
    const free_energy::Estimate z{0.5 * (zf.value - zb.value), 0.5 * std::hypot(zf.error, zb.error)};
    const auto bar = free_energy::crooks_bar_estimate(fwd, bwd, state, {.n_resamples = 200, .seed = 70 + s});
    const std::vector<free_energy::Estimate> est{{r.f[1], r.stderr_k[1]}, z, bar.estimate};
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t b = a + 1; b < 3; ++b) {
        ok = ok && within(est[a].value, est[a].error, est[b].value, est[b].error);
        const double gap = std::abs(est[a].value - est[b].value) / std::hypot(est[a].error, est[b].error);
        if (gap > worst) {
          worst = gap;
          worst_detail = fmt::format("seed {}: MBAR {:.4f}+/-{:.4f}, Zwanzig {:.4f}+/-{:.4f} (A->B {:.4f}, B->A {:.4f}), "
                                     "BAR {:.4f}+/-{:.4f}",
                                     s + 1, est[0].value, est[0].error, z.value, z.error, zf.value, -zb.value,
                                     est[2].value, est[2].error);
        }
      }
    }
    ok = ok && bar.converged;
  }
  return {ok, fmt::format("largest pairwise gap {:.2f} sigma; {}", worst, worst_detail)};
}

// ---- 3: translated well -----------------------------------------------------------

Outcome criterion3() {
  const model::ThermoState state(1.0);
  model::ParticleSystem sys(1, {model::Particle{}});
  const model::AlchemicalPotential pa(sys, {model::HarmonicWell{0, 1.0, {0.0}}}, {}, {});
  const model::AlchemicalPotential pb(sys, {model::HarmonicWell{0, 1.0, {1.0}}}, {}, {});
  const auto a = sampling::make_surface(pa, 1.0);
  const auto b = sampling::make_surface(pb, 1.0);
  constexpr std::size_t n = 2000;
  const auto starts = [&](const sampling::Surface& s, double x0, std::uint64_t seed) {
    sampling::LangevinParams lp;
    lp.dt = 0.05;
    lp.gamma = 2.0;
    lp.n_equil = 2000;
    lp.record_interval = 150;
    lp.n_steps = lp.n_equil + n * lp.record_interval;
    lp.seed = seed;
    std::vector<std::vector<double>> out;
    for (auto& f : sampling::draw_snapshots(sampling::langevin_propagate(s, std::vector<double>{x0}, lp, state, 1.0), 1, n)) {
      out.push_back(std::move(f.coords));
    }
    return out;
  };
  const auto sa = starts(a, 0.0, 31);
  const auto sb = starts(b, 1.0, 32);
  const free_energy::SwitchProtocol proto{.switch_steps = 40, .dt = 0.05, .gamma = 1.0};
  std::vector<double> wf;
  std::vector<double> wb;
  for (std::size_t i = 0; i < n; ++i) {
    wf.push_back(free_energy::neq_switch(a, b, sa[i], proto, free_energy::Direction::forward, 5000 + i, state, i).work);
    wb.push_back(free_energy::neq_switch(a, b, sb[i], proto, free_energy::Direction::backward, 9000 + i, state, i).work);
  }
  const auto jar = free_energy::jarzynski_estimate(wf, state, {.n_resamples = 500, .seed = 3});
  double mean = 0.0;
  for (double w : wf) mean += w;
  mean /= static_cast<double>(wf.size());
  const auto cross = free_energy::work_histogram_crossing(wf, wb, 30);
  const bool ok = std::abs(jar.value) <= kSigmas * jar.error && mean > 0.0 && cross.found &&
                  std::abs(cross.crossing) <= cross.bin_width;
  return {ok, fmt::format("Jarzynski {:.4f}+/-{:.4f}; <W> {:.4f}; crossing {:.4f} (bin {:.4f})", jar.value, jar.error,
                          mean, cross.crossing, cross.bin_width)};
}

// ---- 4, 5: pipeline on the shipped toy config ----------------------------------

struct PipelineRun {
  orchestrator::RunReport report;
  fs::path store;
  double seconds = 0.0;
};

PipelineRun& pipeline_once() {
  static std::optional<PipelineRun> run;
  if (!run) {
    PipelineRun r;
    r.store = scratch("pipeline");
    const auto cfg = orchestrator::PipelineConfig::load(fs::path(FQ_CONFIG_DIR) / "pipeline_toy.json");
    orchestrator::PipelineRuntime rt;
    rt.store = r.store;
    const auto t0 = std::chrono::steady_clock::now();
    r.report = orchestrator::pipeline_run(cfg, rt);
    r.seconds = seconds_since(t0);
    run = std::move(r);
  }
  return *run;
}

// Direct MBAR on the HIGH-tier alchemical path (reduced units).
free_energy::Estimate high_tier_truth(const orchestrator::PipelineConfig& cfg) {
  const auto def = model::parse_system(cfg.system_doc);
  const model::OracleHierarchy h(def.potential, def.oracle);
  const model::ThermoState state(cfg.beta);
  free_energy::FepConfig c;
  c.schedule = free_energy::LambdaSchedule::uniform_decoupling(cfg.fep.windows);
  c.sampling.dt = cfg.fep.dt;
  c.sampling.gamma = cfg.fep.gamma;
  c.sampling.n_equil = cfg.fep.n_equil;
  c.sampling.n_steps = 2 * cfg.fep.n_steps;
  c.sampling.seed = 777;
  c.snapshot_stride = cfg.fep.snapshot_stride;
  c.max_snapshots = 2 * cfg.fep.max_snapshots;
  c.mbar.n_bootstrap = 100;
  c.mbar.seed = 778;
  c.overlap_threshold = cfg.fep.overlap_threshold;
  c.max_refinements = cfg.fep.max_refinements;
  const auto surface = [&h](double l) {
    auto s = sampling::make_surface(h.base(), l);
    s.evaluate = [&h, l](std::span<const double> x) {
      auto ef = h.base().energy_and_forces(x, l);
      h.mid_correction().accumulate(x, l, 1.0, ef.energy, ef.forces);
      h.high_correction().accumulate(x, l, 1.0, ef.energy, ef.forces);
      return ef;
    };
    return s;
  };
  const auto r = free_energy::run_fep([&h](std::span<const double> x, double l) { return h.energy(model::Tier::high, x, l); },
                                      surface, def.start_coords, c, state);
  if (!r.mbar.converged) throw Error("HIGH-tier MBAR did not converge");
  return {-r.delta.value, r.delta.error};
}

Outcome criterion4() {
  const auto& run = pipeline_once();
  const auto& rep = run.report;
  if (rep.status != "complete") return {false, "pipeline status " + rep.status + ": " + rep.failures.dump()};
  const auto* mm = rep.tier("MM");
  const auto* ml2 = rep.tier("MM+ML2");
  const auto cfg = orchestrator::PipelineConfig::load(fs::path(FQ_CONFIG_DIR) / "pipeline_toy.json");
  const auto truth = high_tier_truth(cfg);
  const double u = cfg.kj_per_mol;
  const bool agree = within(ml2->dG_reduced, ml2->std_error_reduced, truth.value, truth.error);
  const bool shifted = !within(ml2->dG_reduced, ml2->std_error_reduced, mm->dG_reduced, mm->std_error_reduced);
  const orchestrator::TaskStore store(run.store);
  const auto audit = orchestrator::audit_provenance(store, rep);
  const bool ok = agree && shifted && run.seconds < kCrit4Seconds && audit.empty();
  return {ok, fmt::format("MM {:.3f}+/-{:.3f}, ML2 {:.3f}+/-{:.3f}, HIGH MBAR {:.3f}+/-{:.3f} kJ/mol; run {:.0f} s; "
                          "audit {}",
                          mm->dG, mm->std_error, ml2->dG, ml2->std_error, truth.value * u, truth.error * u,
                          run.seconds, audit.empty() ? "clean" : audit.front())};
}

surrogate::EnsembleSurrogate model_of(const fs::path& store_root, const std::string& task) {
  const orchestrator::TaskStore store(store_root);
  const auto ref = store.result(task).at("model");
  const fs::path p = store_root / ref.at("path").get<std::string>();
  if (orchestrator::content_hash(orchestrator::read_file(p)) != ref.at("hash").get<std::string>()) {
    throw Error("model artifact hash mismatch: " + p.string());
  }
  return surrogate::EnsembleSurrogate::load(p);
}

Outcome criterion5() {
  const auto& run = pipeline_once();
  if (run.report.status != "complete") return {false, "pipeline did not complete"};
  const auto cfg = orchestrator::PipelineConfig::load(fs::path(FQ_CONFIG_DIR) / "pipeline_toy.json");
  const auto ml1 = model_of(run.store, cfg.run_id + ".train.ml1");
  const auto ml2 = model_of(run.store, cfg.run_id + ".transfer.ml2");
  const auto def = model::parse_system(cfg.system_doc);
  const model::OracleHierarchy h(def.potential, def.oracle);
  // Holdout: fresh BASE-tier configurations at full coupling, independent seed.
  sampling::LangevinParams lp;
  lp.dt = cfg.fep.dt;
  lp.gamma = cfg.fep.gamma;
  lp.n_equil = 2000;
  lp.record_interval = 40;
  constexpr std::size_t n = 300;
  lp.n_steps = lp.n_equil + n * lp.record_interval;
  lp.seed = 424242;
  const auto traj = sampling::langevin_propagate(sampling::make_surface(h.base(), 1.0), def.start_coords, lp,
                                                 model::ThermoState(cfg.beta), 1.0);
  double s1 = 0.0;
  double s2 = 0.0;
  std::size_t count = 0;
  for (const auto& f : sampling::draw_snapshots(traj, 1, n)) {
    const double target = h.energy(model::Tier::high, f.coords, 1.0) - h.energy(model::Tier::base, f.coords, 1.0);
    s1 += std::pow(ml1.predict_energy(f.coords).energy - target, 2);
    s2 += std::pow(ml2.predict_energy(f.coords).energy - target, 2);
    ++count;
  }
  const double r1 = std::sqrt(s1 / static_cast<double>(count));
  const double r2 = std::sqrt(s2 / static_cast<double>(count));
  return {count == n && r2 <= kTransferRatio * r1,
          fmt::format("holdout RMSE vs HIGH: ML1 {:.4f}, ML2 {:.4f} (ratio {:.3f}, n={})", r1, r2, r2 / r1, count)};
}

// ---- 6-8: resource estimation -------------------------------------------------

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  Eigen::MatrixXd a(static_cast<Eigen::Index>(x.size()), 2);
  Eigen::VectorXd b(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    a(static_cast<Eigen::Index>(i), 0) = 1.0;
    a(static_cast<Eigen::Index>(i), 1) = std::log(x[i]);
    b(static_cast<Eigen::Index>(i)) = std::log(y[i]);
  }
  return a.colPivHouseholderQr().solve(b)(1);
}

Outcome criterion6() {
  qre::PppChainSpec c3;
  c3.n_sites = 3;
  qre::PppChainSpec c4;
  c4.n_sites = 4;
  const std::vector<std::pair<std::string, qre::PauliHamiltonian>> fixtures{
      {"H2", qre::jordan_wigner(qre::parse_fcidump(fs::path(FQ_DATA_DIR) / "fcidump" / "h2_sto3g.fcidump"))},
      {"PPP3", qre::jordan_wigner(qre::ppp_chain(c3))},
      {"PPP4", qre::jordan_wigner(qre::ppp_chain(c4))}};
  bool ok = true;
  std::string detail = "slopes";
  const std::vector<double> deltas{0.2, 0.1, 0.05, 0.025};
  for (const auto& [name, h] : fixtures) {
    if (h.n_qubits() > 8) return {false, name + " exceeds 8 qubits"};
    std::vector<double> e;
    for (double d : deltas) e.push_back(qre::trotter_error_exact(h, d));
    const double slope = loglog_slope(deltas, e);
    ok = ok && std::abs(slope - kSlopeTarget) <= kSlopeTol;
    detail += fmt::format(" {}={:.3f}", name, slope);
  }
  // Synthetic constants from the published fit, with 10% multiplicative noise.
  const double c0 = 1.08e-4;
  const double a0 = 1.25;
  detail += "; alpha";
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> noise(0.9, 1.1);
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < 30; ++i) {
      const double lambda = std::pow(10.0, 0.3 + 2.7 * i / 29.0);
      pts.emplace_back(lambda, std::pow(c0 * std::pow(lambda, a0), 2) * noise(rng));
    }
    const double alpha = qre::fit_trotter_constant(pts).alpha;
    ok = ok && std::abs(alpha - a0) <= kAlphaTol;
    detail += fmt::format(" {:.4f}", alpha);
  }
  return {ok, detail};
}

// Eigenvalues of the dense matrix restricted to fixed Hamming weight.
Eigen::VectorXd weight_spectrum(const qre::PauliHamiltonian& h, std::size_t n) {
  const Eigen::MatrixXcd full = h.dense();
  std::vector<Eigen::Index> idx;
  for (Eigen::Index b = 0; b < full.rows(); ++b) {
    if (static_cast<std::size_t>(std::popcount(static_cast<std::uint64_t>(b))) == n) idx.push_back(b);
  }
  const auto d = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXcd sub(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) sub(i, j) = full(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(sub, Eigen::EigenvaluesOnly).eigenvalues();
}

Outcome criterion7() {
  std::mt19937_64 rng(7);
  std::size_t raised = 0;
  double worst = 0.0;
  double mean_drop = 0.0;
  constexpr int count = 200;
  for (int i = 0; i < count; ++i) {
    const std::size_t n_orb = 1 + rng() % 4;
    const std::size_t n_el = 1 + rng() % (2 * n_orb - (n_orb > 1 ? 1 : 0));
    const double scale = 0.2 + 1.8 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto h = qre::jordan_wigner(qre::random_integrals(n_orb, std::min(n_el, 2 * n_orb), rng(), scale));
    const std::size_t ne = std::min(n_el, 2 * n_orb);
    const auto s = qre::symmetry_shift(h, ne);
    if (s.lambda_after > s.lambda_before) ++raised;
    mean_drop += (s.lambda_before - s.lambda_after) / s.lambda_before;
    const auto a = weight_spectrum(h, ne);
    const auto b = weight_spectrum(s.hamiltonian, ne);
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff() / std::max(1.0, a.cwiseAbs().maxCoeff()));
  }
  return {raised == 0 && worst <= kSpectrumTol,
          fmt::format("{} Hamiltonians; lambda raised in {}; mean relative drop {:.3f}; max spectrum deviation {:.2e}",
                      count, raised, mean_drop / count, worst)};
}

Outcome criterion8() {
  qre::CostReport r;
  r.total_gates = 1.2e10;
  r.max_gates_per_circuit = 1.2e10;
  r.circuits_count = 1.0;
  qre::HardwareProfile p;
  p.gate_time = 1e-7;
  p.parallel_factor = 1;
  const double wall = qre::runtime_estimate(r, p).wall_seconds;
  const auto q = qre::system_qubits(30);
  const double xi1 = qre::xi_from_overlap(1.0);
  const double xi05 = qre::xi_from_overlap(0.5);
  const bool ok = std::abs(wall - 1200.0) <= 1e-9 * 1200.0 && q == 60 && xi1 == 0.0 && xi05 == std::numbers::pi / 2;
  return {ok, fmt::format("runtime {:.6f} s; qubits(N=30) {}; xi(1) {}; xi(0.5) - pi/2 = {:.1e}", wall, q, xi1,
                          xi05 - std::numbers::pi / 2)};
}

// ---- 9: guiding overlaps ------------------------------------------------------

Outcome criterion9() {
  std::vector<std::pair<std::string, qre::FermionIntegrals>> fixtures{
      {"H2", qre::parse_fcidump(fs::path(FQ_DATA_DIR) / "fcidump" / "h2_sto3g.fcidump")}};
  for (std::size_t n = 2; n <= 6; ++n) {
    qre::PppChainSpec s;
    s.n_sites = n;
    fixtures.emplace_back(fmt::format("PPP{}", n), qre::ppp_chain(s));
  }
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    fixtures.emplace_back(fmt::format("rand{}", seed), qre::random_integrals(4, 4, 100 + seed, 0.7));
  }
  bool monotone = true;
  bool lossless = true;
  double h2_hf = 0.0;
  for (const auto& [name, x] : fixtures) {
    const auto g = guiding::exact_ground_state(x);
    const auto& ci = g.state;
    const std::size_t dim = ci.basis.size();
    double prev = -1.0;
    for (std::size_t k = 1; k <= dim; ++k) {
      const double eta = guiding::sum_of_slater(ci, k).eta;
      monotone = monotone && eta >= prev - kMonotoneSlack;
      prev = eta;
    }
    lossless = lossless && std::abs(prev - 1.0) <= kLosslessTol;
    const auto mps = guiding::ci_to_mps(ci);
    prev = -1.0;
    for (std::size_t chi = 1; chi <= mps.max_bond(); ++chi) {
      const double eta = guiding::mps_overlap(guiding::truncate_mps(mps, chi), ci, chi).eta;
      monotone = monotone && eta >= prev - kMonotoneSlack;
      prev = eta;
    }
    lossless = lossless && std::abs(prev - 1.0) <= kLosslessTol &&
               std::abs(guiding::mps_overlap(mps, ci).eta - 1.0) <= kLosslessTol;
    if (name == "H2") h2_hf = guiding::hartree_fock_overlap(ci, guiding::hartree_fock_determinant(ci.sector)).eta;
  }
  return {monotone && lossless && h2_hf > 0.9,
          fmt::format("{} fixtures; monotone {}; lossless {}; H2 eta_HF {:.4f}", fixtures.size(), monotone, lossless,
                      h2_hf)};
}

// ---- 10: exactly-once ---------------------------------------------------------

Outcome criterion10() {
  std::size_t clean = 0;
  std::string first_problem;
  double secs = 0.0;
  for (std::uint64_t rep = 0; rep < 10; ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto out = fq::testing::run_stress(scratch(fmt::format("stress{}", rep)), 100, 8, 20, 9000 + rep);
    secs += seconds_since(t0);
    if (out.ok() && out.done == 100 && out.crashes == 20) {
      ++clean;
    } else if (first_problem.empty()) {
      first_problem = out.problems.empty() ? "incomplete" : out.problems.front();
    }
  }
  return {clean == 10, fmt::format("{}/10 repetitions clean ({:.1f} s){}", clean, secs,
                                   first_problem.empty() ? "" : "; " + first_problem)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                       criterion6, criterion7, criterion8, criterion9, criterion10};
  // Usage: acceptance [--known-failure N]... [N...]
  // Exit status is 0 only when the failing set equals the declared known failures.
  std::vector<int> only;
  std::vector<int> known;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--known-failure" && i + 1 < argc) {
      known.push_back(std::atoi(argv[++i]));
    } else {
      only.push_back(std::atoi(argv[i]));
    }
  }
  std::vector<int> failed;
  std::vector<int> ran;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    ran.push_back(id);
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) failed.push_back(id);
    std::cout << fmt::format("criterion {:2d}: {} ({})", id, o.pass ? "PASS" : "FAIL", o.detail) << std::endl;
  }
  std::vector<int> expected;
  for (int k : known) {
    if (std::find(ran.begin(), ran.end(), k) != ran.end()) expected.push_back(k);
  }
  std::sort(expected.begin(), expected.end());
  std::cout << fmt::format("{} of {} criteria pass; failing: [{}]; declared known failures: [{}]", ran.size() - failed.size(),
                           ran.size(), fmt::join(failed, ","), fmt::join(expected, ","))
            << std::endl;
  return failed == expected ? 0 : 1;
}
