#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "fq/error.hpp"
#include "fq/free_energy/estimators.hpp"
#include "fq/free_energy/fep.hpp"
#include "fq/free_energy/mbar.hpp"
#include "fq/free_energy/neq.hpp"
#include "fq/free_energy/schedule.hpp"

using namespace fq;
using namespace fq::free_energy;
using Catch::Approx;

namespace {

// Two harmonic states k_a, k_b in 1D with exact samples; β = 1.
ReducedPotentialMatrix harmonic_pair(double ka, double kb, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> za(0.0, 1.0 / std::sqrt(ka));
  std::normal_distribution<double> zb(0.0, 1.0 / std::sqrt(kb));
  ReducedPotentialMatrix m;
  m.u.resize(2, static_cast<Eigen::Index>(2 * n));
  m.counts = {n, n};
  for (std::size_t i = 0; i < 2 * n; ++i) {
    const double x = i < n ? za(rng) : zb(rng);
    m.u(0, static_cast<Eigen::Index>(i)) = 0.5 * ka * x * x;
    m.u(1, static_cast<Eigen::Index>(i)) = 0.5 * kb * x * x;
  }
  return m;
}

model::AlchemicalPotential guest_in_well(double k_guest, double k_inter, double shift) {
  model::ParticleSystem sys(1, {model::Particle{1.0, 0, model::Role::guest}});
  return model::AlchemicalPotential(sys, {}, {model::HarmonicWell{0, k_guest, {0.0}}},
                                    {model::HarmonicWell{0, k_inter, {shift}}});
}

sampling::Surface well_surface(double k, double center) {
  model::ParticleSystem sys(1, {model::Particle{}});
  model::AlchemicalPotential pot(sys, {model::HarmonicWell{0, k, {center}}}, {}, {});
  return sampling::make_surface(pot, 1.0);
}

}  // namespace

TEST_CASE("MBAR on identical states gives zero difference", "[mbar]") {
  ReducedPotentialMatrix m;
  m.u.resize(2, 4);
  m.u << 0.1, 0.5, 1.2, 3.0, 0.1, 0.5, 1.2, 3.0;
  m.counts = {2, 2};
  const auto r = mbar_solve(m, {.n_bootstrap = 50});
  REQUIRE(r.converged);
  CHECK(r.f[0] == 0.0);
  CHECK(r.f[1] == Approx(0.0).margin(1e-10));
  const auto ov = overlap_diagnostic(m, r.f);
  REQUIRE(ov.size() == 1);
  CHECK(ov[0] == Approx(1.0).margin(1e-12));
}

TEST_CASE("MBAR harmonic stiffness change matches half log ratio", "[mbar]") {
  const auto m = harmonic_pair(1.0, 4.0, 1000, 7);
  const auto r = mbar_solve(m, {.n_bootstrap = 200, .seed = 3});
  REQUIRE(r.converged);
  const double exact = 0.5 * std::log(4.0);
  CHECK(exact == Approx(0.6931).margin(1e-4));
  REQUIRE(r.stderr_k[1] > 0.0);
  CHECK(std::abs(r.f[1] - exact) < 3.0 * r.stderr_k[1]);
  CHECK(r.stderr_k[1] < 0.05);
}

TEST_CASE("MBAR single state and validation", "[mbar]") {
  ReducedPotentialMatrix one;
  one.u = Eigen::MatrixXd::Constant(1, 3, 2.0);
  one.counts = {3};
  const auto r = mbar_solve(one);
  CHECK(r.converged);
  CHECK(r.f == std::vector<double>{0.0});

  ReducedPotentialMatrix bad;
  bad.u = Eigen::MatrixXd::Zero(2, 3);
  bad.counts = {3, 0};
  CHECK_THROWS_AS(mbar_solve(bad), ValidationError);
  bad.counts = {2, 2};
  CHECK_THROWS_AS(mbar_solve(bad), ValidationError);
  bad.counts = {2, 1};
  bad.u(1, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(mbar_solve(bad), ValidationError);
}

TEST_CASE("Two-state MBAR coincides with BAR", "[mbar][bar]") {
  const auto m = harmonic_pair(1.0, 2.5, 400, 11);
  const auto r = mbar_point(m, {});
  std::vector<double> wf;
  std::vector<double> wb;
  for (Eigen::Index i = 0; i < m.u.cols(); ++i) {
    const double du = m.u(1, i) - m.u(0, i);
    (i < 400 ? wf : wb).push_back(i < 400 ? du : -du);
  }
  const auto bar = bar_point(wf, wb, 1.0);
  REQUIRE(bar.converged);
  CHECK(bar.estimate.value == Approx(r.f[1]).margin(1e-8));
}

TEST_CASE("Overlap diagnostic bounds", "[mbar]") {
  ReducedPotentialMatrix disjoint;
  disjoint.u.resize(2, 4);
  // Each state assigns enormous energy to the other's samples.
  disjoint.u << 0.0, 0.0, 60.0, 60.0, 60.0, 60.0, 0.0, 0.0;
  disjoint.counts = {2, 2};
  CHECK(overlap_diagnostic(disjoint)[0] < 0.01);

  const auto m = harmonic_pair(1.0, 9.0, 300, 5);
  for (double o : overlap_diagnostic(m)) {
    CHECK(o >= 0.0);
    CHECK(o <= 1.0);
  }
}

TEST_CASE("MBAR joint solve agrees with sum of adjacent pairs", "[mbar]") {
  // Three harmonic states; differences telescope exactly within one solve and
  // approximately against separate pairwise solves.
  std::mt19937_64 rng(21);
  const std::vector<double> ks{1.0, 2.0, 4.0};
  const std::size_t n = 2000;
  ReducedPotentialMatrix m;
  m.u.resize(3, static_cast<Eigen::Index>(3 * n));
  m.counts = {n, n, n};
  for (std::size_t k = 0; k < 3; ++k) {
    std::normal_distribution<double> z(0.0, 1.0 / std::sqrt(ks[k]));
    for (std::size_t i = 0; i < n; ++i) {
      const double x = z(rng);
      for (std::size_t l = 0; l < 3; ++l) m.u(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k * n + i)) = 0.5 * ks[l] * x * x;
    }
  }
  const auto r = mbar_solve(m, {.n_bootstrap = 100});
  CHECK(r.f[2] == Approx((r.f[1] - r.f[0]) + (r.f[2] - r.f[1])).margin(1e-12));
  CHECK(std::abs(r.f[2] - 0.5 * std::log(4.0)) < 3.0 * r.stderr_k[2] + 1e-3);
  CHECK(std::abs(r.f[1] - 0.5 * std::log(2.0)) < 3.0 * r.stderr_k[1] + 1e-3);
}

TEST_CASE("Zwanzig estimator", "[zwanzig]") {
  const std::vector<double> constant(50, 2.5);
  CHECK(zwanzig_estimate(constant) == Approx(2.5).margin(1e-12));
  CHECK(zwanzig_with_error(constant).error == Approx(0.0).margin(1e-12));

  // Gaussian Δu ~ N(μ, σ²) has Δf = μ − σ²/2.
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(1.0, std::sqrt(2.0));
  std::vector<double> du(400000);
  for (auto& v : du) v = g(rng);
  const auto est = zwanzig_with_error(du);
  CHECK(est.value == Approx(0.0).margin(0.03));
  CHECK(std::abs(est.value) < 4.0 * est.error + 1e-3);

  // Large offsets do not overflow.
  CHECK(zwanzig_estimate(std::vector<double>{-1000.0, -1000.0}) == Approx(-1000.0));
  CHECK_THROWS_AS(zwanzig_estimate(std::vector<double>{}), ValidationError);
}

TEST_CASE("Telescope sum and binding cycle", "[cycle]") {
  const std::vector<Estimate> windows{{1.0, 0.0}, {1.5, 0.0}};
  const auto t = telescope_sum(windows);
  CHECK(t.value == Approx(2.5));
  CHECK(t.error == 0.0);
  const std::vector<Estimate> errs{{0.0, 3.0}, {0.0, 4.0}};
  CHECK(telescope_sum(errs).error == Approx(5.0));

  const auto b = binding_cycle({-20.0, 1.0}, {-5.0, 0.0});
  CHECK(b.binding.value == Approx(-15.0));
  CHECK(b.binding.error == Approx(1.0));
  CHECK(b.tier == "MM");
}

TEST_CASE("Jarzynski estimator", "[jarzynski]") {
  const model::ThermoState state(2.0);
  const std::vector<double> w(40, 1.75);
  const auto e = jarzynski_estimate(w, state, {.n_resamples = 100});
  CHECK(e.value == Approx(1.75).margin(1e-12));
  CHECK(e.error == Approx(0.0).margin(1e-12));

  // Gaussian work: ΔF = μ − βσ²/2.
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(1.0, 0.5);
  std::vector<double> gw(20000);
  for (auto& v : gw) v = g(rng);
  const auto ge = jarzynski_estimate(gw, state, {.n_resamples = 200});
  CHECK(ge.value == Approx(1.0 - 2.0 * 0.25 / 2.0).margin(0.02));
  CHECK(ge.error > 0.0);
}

TEST_CASE("BAR estimator", "[bar]") {
  const model::ThermoState state(1.0);
  // Identical work distributions in both directions: ΔF = 0 by symmetry.
  const std::vector<double> w{0.3, 0.7, 1.1, 0.9, 0.5};
  const auto sym = crooks_bar_estimate(w, w, state, {.n_resamples = 200});
  REQUIRE(sym.converged);
  CHECK(sym.estimate.value == Approx(0.0).margin(1e-10));

  // Antisymmetry: swapping the roles of F and B negates ΔF.
  const std::vector<double> wf{2.1, 2.6, 1.9, 3.0, 2.4, 2.2};
  const std::vector<double> wb{-0.4, -0.9, -0.2, -1.3, -0.6};
  const auto ab = bar_point(wf, wb, 1.3);
  const auto ba = bar_point(wb, wf, 1.3);
  REQUIRE(ab.converged);
  REQUIRE(ba.converged);
  CHECK(ab.estimate.value == Approx(-ba.estimate.value).margin(1e-10));

  // Crooks-consistent Gaussian works with ΔF = 1.5, σ = 1, β = 1.
  std::mt19937_64 rng(4);
  std::normal_distribution<double> pf(1.5 + 0.5, 1.0);
  std::normal_distribution<double> pb(-1.5 + 0.5, 1.0);
  std::vector<double> gf(5000);
  std::vector<double> gb(5000);
  for (auto& v : gf) v = pf(rng);
  for (auto& v : gb) v = pb(rng);
  const auto g = crooks_bar_estimate(gf, gb, state, {.n_resamples = 100});
  CHECK(g.estimate.value == Approx(1.5).margin(0.06));
  CHECK(std::abs(g.estimate.value - 1.5) < 4.0 * g.estimate.error);
  const auto cross = work_histogram_crossing(gf, gb, 30);
  REQUIRE(cross.found);
  CHECK(cross.crossing == Approx(1.5).margin(2.0 * cross.bin_width));
}

TEST_CASE("Lambda schedule validation and refinement", "[schedule]") {
  CHECK_NOTHROW(LambdaSchedule({1.0, 0.5, 0.0}));
  CHECK_NOTHROW(LambdaSchedule({0.0, 0.5, 1.0}));
  CHECK_THROWS_AS(LambdaSchedule({1.0, 0.6, 0.7, 0.0}), ValidationError);
  CHECK_THROWS_AS(LambdaSchedule({0.9, 0.0}), ValidationError);
  CHECK_THROWS_AS(LambdaSchedule({1.0}), ValidationError);
  const auto u = LambdaSchedule::uniform_decoupling(5);
  CHECK(u.values() == std::vector<double>{1.0, 0.75, 0.5, 0.25, 0.0});
  const auto r = refine_schedule(u, {0.5, 0.01, 0.2, 0.02});
  CHECK(r.values() == std::vector<double>{1.0, 0.75, 0.625, 0.5, 0.25, 0.125, 0.0});
}

TEST_CASE("NEQ switch between identical surfaces does no work", "[neq]") {
  const model::ThermoState state(1.0);
  const auto s = well_surface(1.0, 0.0);
  const std::vector<double> x0{0.3};
  const auto rec = neq_switch(s, s, x0, {.switch_steps = 200}, Direction::forward, 5, state);
  CHECK(rec.work == Approx(0.0).margin(1e-14));
  CHECK(rec.work + rec.heat == Approx(rec.end_energy - rec.start_energy).margin(1e-10));
}

TEST_CASE("NEQ translated well: Jarzynski and BAR recover zero", "[neq]") {
  const model::ThermoState state(1.0);
  const auto a = well_surface(1.0, 0.0);
  const auto b = well_surface(1.0, 0.5);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> wf;
  std::vector<double> wb;
  const SwitchProtocol proto{.switch_steps = 50, .dt = 0.05};
  for (std::size_t i = 0; i < 400; ++i) {
    const std::vector<double> xa{z(rng)};
    const std::vector<double> xb{0.5 + z(rng)};
    const auto f = neq_switch(a, b, xa, proto, Direction::forward, 100 + i, state, i);
    const auto r = neq_switch(a, b, xb, proto, Direction::backward, 900 + i, state, i);
    CHECK(f.work + f.heat == Approx(f.end_energy - f.start_energy).margin(1e-9));
    CHECK(r.work + r.heat == Approx(r.end_energy - r.start_energy).margin(1e-9));
    wf.push_back(f.work);
    wb.push_back(r.work);
  }
  const auto jar = jarzynski_estimate(wf, state, {.n_resamples = 200});
  CHECK(std::abs(jar.value) < 4.0 * jar.error + 0.01);
  const auto bar = crooks_bar_estimate(wf, wb, state, {.n_resamples = 200});
  REQUIRE(bar.converged);
  CHECK(std::abs(bar.estimate.value) < 4.0 * bar.estimate.error + 0.01);
}

TEST_CASE("Work record CSV round trip", "[neq]") {
  std::vector<WorkRecord> recs(3);
  recs[0] = {Direction::forward, 0.1 + 0.2, 0, 0, 0, 4, "linear", 7};
  recs[1] = {Direction::backward, -1.0 / 3.0, 0, 0, 0, 5, "linear", 8};
  recs[2] = {Direction::forward, 1e-300, 0, 0, 0, 6, "linear", 9};
  const auto path = std::filesystem::temp_directory_path() / "fq_work_records.csv";
  write_work_records_csv(recs, path);
  const auto back = read_work_records_csv(path);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].direction == recs[i].direction);
    CHECK(back[i].work == recs[i].work);
    CHECK(back[i].seed == recs[i].seed);
    CHECK(back[i].snapshot_id == recs[i].snapshot_id);
  }
  std::filesystem::remove(path);
}

TEST_CASE("FEP driver recovers the analytic decoupling free energy", "[fep]") {
  const model::ThermoState state(1.0);
  const auto pot = guest_in_well(1.0, 3.0, 0.8);
  const double exact =
      model::analytic_free_energy(pot, 0.0, state) - model::analytic_free_energy(pot, 1.0, state);
  FepConfig cfg;
  cfg.schedule = LambdaSchedule::uniform_decoupling(6);
  cfg.sampling.n_steps = 20000;
  cfg.sampling.n_equil = 500;
  cfg.sampling.dt = 0.05;
  cfg.sampling.seed = 3;
  cfg.snapshot_stride = 10;
  cfg.mbar.n_bootstrap = 100;
  EnergyAt energy = [&](std::span<const double> x, double l) { return pot.energy(x, l); };
  SurfaceAt surf = [&](double l) { return sampling::make_surface(pot, l); };
  const std::vector<double> start{0.5};
  const auto r = run_fep(energy, surf, start, cfg, state);
  REQUIRE(r.mbar.converged);
  CHECK(r.schedule.size() >= 6);
  CHECK(std::abs(r.delta.value - exact) < 4.0 * r.delta.error + 0.02);
  for (double o : r.overlaps) CHECK(o >= cfg.overlap_threshold);
}
