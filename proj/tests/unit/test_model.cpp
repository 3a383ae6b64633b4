#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "fq/model/oracle.hpp"
#include "fq/model/potential.hpp"
#include "fq/model/system_io.hpp"

using namespace fq::model;
using Catch::Approx;

namespace {

AlchemicalPotential single_well(double k, double center = 0.0) {
  ParticleSystem sys(1, {Particle{}});
  return AlchemicalPotential(sys, {HarmonicWell{0, k, {center}}}, {}, {});
}

// Three particles in 2D: host 0 and 1 bonded, guest 2 interacting through LJ.
AlchemicalPotential lj_triplet(Coupling coupling) {
  ParticleSystem sys(2, {Particle{1.0, 0, Role::host}, Particle{2.0, 0, Role::host}, Particle{1.0, 1, Role::guest}});
  std::vector<Term> host{HarmonicBond{0, 1, 3.0, 1.2}, HarmonicWell{0, 0.5, {0.0, 0.0}}};
  std::vector<Term> guest{HarmonicWell{2, 0.2, {0.5, 0.5}}};
  std::vector<Term> inter{LennardJones{0, 2, 1.0, 1.0}, LennardJones{1, 2, 0.7, 1.1}};
  return AlchemicalPotential(sys, host, guest, inter, coupling);
}

template <class EnergyFn>
double max_fd_error(const EnergyFn& energy, std::vector<double> x, const std::vector<double>& forces) {
  const double h = 1e-5;
  double worst = 0.0;
  double scale = 1.0;
  for (double f : forces) scale = std::max(scale, std::abs(f));
  for (std::size_t c = 0; c < x.size(); ++c) {
    const double keep = x[c];
    x[c] = keep + h;
    const double ep = energy(x);
    x[c] = keep - h;
    const double em = energy(x);
    x[c] = keep;
    const double fd = -(ep - em) / (2 * h);
    worst = std::max(worst, std::abs(fd - forces[c]) / scale);
  }
  return worst;
}

std::vector<double> random_triplet_coords(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (;;) {
    std::vector<double> x(6);
    for (auto& v : x) v = u(rng);
    bool ok = true;
    for (int i = 0; i < 3; ++i) {
      for (int j = i + 1; j < 3; ++j) {
        const double dx = x[2 * i] - x[2 * j];
        const double dy = x[2 * i + 1] - x[2 * j + 1];
        if (dx * dx + dy * dy < 0.8 * 0.8) ok = false;
      }
    }
    if (ok) return x;
  }
}

}  // namespace

TEST_CASE("harmonic well energy and force", "[model]") {
  const auto pot = single_well(1.0);
  const std::vector<double> x{2.0};
  const auto ef = pot.energy_and_forces(x, 1.0);
  CHECK(ef.energy == 2.0);
  CHECK(ef.forces[0] == -2.0);
}

TEST_CASE("lambda = 0 decomposes into host and guest energies", "[model]") {
  std::mt19937_64 rng(11);
  const auto pot = lj_triplet(Coupling::linear);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_triplet_coords(rng);
    CHECK(pot.energy(x, 0.0) == Approx(pot.host_energy(x) + pot.guest_energy(x)).epsilon(1e-14));
  }
}

TEST_CASE("Lennard-Jones forces match central finite differences", "[model]") {
  std::mt19937_64 rng(5);
  for (auto coupling : {Coupling::linear, Coupling::softcore}) {
    const auto pot = lj_triplet(coupling);
    for (double lambda : {1.0, 0.6, 0.1}) {
      for (int trial = 0; trial < 10; ++trial) {
        const auto x = random_triplet_coords(rng);
        const auto ef = pot.energy_and_forces(x, lambda);
        const double err = max_fd_error([&](const std::vector<double>& y) { return pot.energy(y, lambda); }, x,
                                        ef.forces);
        CHECK(err < 1e-6);
      }
    }
  }
}

TEST_CASE("linear coupling is affine in lambda", "[model]") {
  std::mt19937_64 rng(7);
  const auto pot = lj_triplet(Coupling::linear);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = random_triplet_coords(rng);
    const double e0 = pot.energy(x, 0.0);
    const double e1 = pot.energy(x, 1.0);
    for (double lambda : {0.25, 0.5, 0.9}) {
      CHECK(pot.energy(x, lambda) - e0 == Approx(lambda * (e1 - e0)).epsilon(1e-12).margin(1e-12));
    }
  }
}

TEST_CASE("coincident particles are singular without soft-core", "[model]") {
  const auto pot = lj_triplet(Coupling::linear);
  const std::vector<double> x{0.0, 0.0, 1.2, 0.0, 0.0, 0.0};
  CHECK_THROWS_AS(pot.energy_and_forces(x, 0.5), fq::SingularConfiguration);

  const auto soft = lj_triplet(Coupling::softcore);
  const auto ef = soft.energy_and_forces(x, 0.5);
  CHECK(std::isfinite(ef.energy));
  CHECK_THROWS_AS(soft.energy_and_forces(x, 1.0), fq::SingularConfiguration);
}

TEST_CASE("construction rejects invalid systems", "[model]") {
  CHECK_THROWS_AS(ParticleSystem(2, {}), fq::ValidationError);
  ParticleSystem sys(1, {Particle{}});
  CHECK_THROWS_AS(AlchemicalPotential(sys, {HarmonicWell{0, -1.0, {0.0}}}, {}, {}), fq::ValidationError);
  CHECK_THROWS_AS(ThermoState(0.0), fq::ValidationError);
  const auto pot = single_well(1.0);
  CHECK_THROWS_AS(pot.energy_and_forces(std::vector<double>{1.0, 2.0}, 1.0), fq::ValidationError);
  CHECK_THROWS_AS(pot.energy_and_forces(std::vector<double>{1.0}, 1.5), fq::ValidationError);
}

TEST_CASE("analytic free energy of harmonic wells", "[model]") {
  const ThermoState beta1(1.0);
  CHECK(analytic_free_energy(single_well(1.0), 1.0, beta1) == Approx(-0.5 * std::log(2 * std::numbers::pi)));
  CHECK(analytic_free_energy(single_well(1.0), 1.0, beta1) == Approx(-0.9189385332046727));

  const double df = analytic_free_energy(single_well(4.0), 1.0, beta1) - analytic_free_energy(single_well(1.0), 1.0, beta1);
  CHECK(df == Approx(0.5 * std::log(4.0)));

  const double shift = analytic_free_energy(single_well(2.0, 3.0), 1.0, beta1) -
                       analytic_free_energy(single_well(2.0, 0.0), 1.0, beta1);
  CHECK(shift == Approx(0.0).margin(1e-14));

  CHECK_THROWS_AS(analytic_free_energy(lj_triplet(Coupling::linear), 1.0, beta1), fq::ValidationError);
}

TEST_CASE("analytic free energy with coupled springs", "[model]") {
  // Two wells k coupled by a zero-length spring c: eigenvalues k and k + 2c.
  ParticleSystem sys(2, {Particle{1.0, 0, Role::host}, Particle{1.0, 0, Role::guest}});
  const double k = 1.5;
  const double c = 0.75;
  AlchemicalPotential pot(sys, {HarmonicWell{0, k, {0, 0}}}, {HarmonicWell{1, k, {1, 1}}}, {HarmonicBond{0, 1, c, 0.0}});
  const ThermoState st(2.0);
  const double expected_logz = 2.0 * std::log(2 * std::numbers::pi / st.beta) - (std::log(k) + std::log(k + 2 * c));
  // Minimum over each axis of ½kx² + ½k(y − 1)² + ½c(x − y)² is kc / (2(k + 2c)).
  const double e_min = 2.0 * k * c / (2.0 * (k + 2 * c));
  CHECK(analytic_free_energy(pot, 1.0, st) == Approx(e_min - expected_logz / st.beta));
  const double decoupled_logz = 2.0 * std::log(2 * std::numbers::pi / st.beta) - 2.0 * std::log(k);
  CHECK(analytic_free_energy(pot, 0.0, st) == Approx(-decoupled_logz / st.beta));
}

TEST_CASE("oracle tiers", "[model][oracle]") {
  const auto base = lj_triplet(Coupling::linear);
  std::mt19937_64 rng(3);

  SECTION("zero amplitude leaves MID equal to BASE") {
    OracleHierarchy oracle(base, OracleSpec{BumpSpec{0.0}, BumpSpec{0.0}});
    for (int t = 0; t < 10; ++t) {
      const auto x = random_triplet_coords(rng);
      CHECK(oracle.energy(Tier::mid, x, 1.0) == oracle.energy(Tier::base, x, 1.0));
    }
  }

  OracleSpec spec;
  spec.mid = BumpSpec{0.8, 0.3, 4, 0.8, 2.0, 17};
  spec.high = BumpSpec{0.4, 0.4, 3, 0.8, 2.0, 23};
  OracleHierarchy oracle(base, spec);

  SECTION("evaluation is deterministic and seed-dependent") {
    OracleHierarchy again(base, spec);
    auto other = spec;
    other.mid.seed = 18;
    OracleHierarchy reseeded(base, other);
    const auto x = random_triplet_coords(rng);
    CHECK(oracle.energy(Tier::high, x, 1.0) == again.energy(Tier::high, x, 1.0));
    CHECK(oracle.energy(Tier::mid, x, 1.0) != reseeded.energy(Tier::mid, x, 1.0));
  }

  SECTION("BASE equals the potential and tiers telescope") {
    for (int t = 0; t < 20; ++t) {
      const auto x = random_triplet_coords(rng);
      const double b = oracle.energy(Tier::base, x, 1.0);
      const double m = oracle.energy(Tier::mid, x, 1.0);
      const double h = oracle.energy(Tier::high, x, 1.0);
      CHECK(b == base.energy(x, 1.0));
      CHECK(h - b == Approx((h - m) + (m - b)).margin(1e-12));
      CHECK(m - b == Approx(oracle.mid_correction().energy(x, 1.0)).margin(1e-12));
      CHECK(std::abs(m - b) <= 0.8 * 4 * 2 + 1e-12);  // bounded by Σ|A_b| per guest pair
    }
  }

  SECTION("HIGH tier refuses forces; MID forces are exact gradients") {
    const auto x = random_triplet_coords(rng);
    CHECK_THROWS_AS(oracle.energy_and_forces(Tier::high, x, 1.0), EnergiesOnly);
    for (double lambda : {1.0, 0.3}) {
      const auto ef = oracle.energy_and_forces(Tier::mid, x, lambda);
      CHECK(ef.energy == oracle.energy(Tier::mid, x, lambda));
      const double err = max_fd_error(
          [&](const std::vector<double>& y) { return oracle.energy(Tier::mid, y, lambda); }, x, ef.forces);
      CHECK(err < 1e-6);
    }
  }

  SECTION("guest-host correction vanishes with the interaction") {
    const auto x = random_triplet_coords(rng);
    CHECK(oracle.mid_correction().energy(x, 0.0) == 0.0);
  }
}

TEST_CASE("Zwanzig estimate of BASE to MID matches quadrature on a 1D well", "[model][oracle]") {
  ParticleSystem sys(1, {Particle{1.0, 0, Role::guest}});
  AlchemicalPotential well(sys, {}, {HarmonicWell{0, 1.0, {0.0}}}, {});
  BumpSpec mid{0.7, 0.5, 3, 0.0, 2.0, 9, true};
  OracleHierarchy oracle(well, OracleSpec{mid, BumpSpec{0.0}});

  // Quadrature of both configurational partition functions.
  double z_base = 0.0;
  double z_mid = 0.0;
  const double h = 1e-3;
  for (double x = -12.0; x <= 12.0; x += h) {
    const std::vector<double> c{x};
    z_base += std::exp(-oracle.energy(Tier::base, c, 1.0)) * h;
    z_mid += std::exp(-oracle.energy(Tier::mid, c, 1.0)) * h;
  }
  const double df_quadrature = -std::log(z_mid / z_base);

  // Exponential averaging over exact BASE samples.
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = 200000;
  double sum = 0.0;
  double sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const std::vector<double> c{gauss(rng)};
    const double w = std::exp(-oracle.mid_correction().energy(c, 1.0));
    sum += w;
    sum2 += w * w;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  const double df_zwanzig = -std::log(mean);
  const double stderr_df = std::sqrt(var / n) / mean;
  CHECK(std::abs(df_zwanzig - df_quadrature) < 3 * stderr_df);
  CHECK(std::abs(df_quadrature) > 0.05);
}

TEST_CASE("system definition parsing", "[model][io]") {
  const auto doc = nlohmann::json::parse(R"({
    "dim": 2,
    "coupling": "softcore",
    "particles": [
      {"role": "host", "position": [1.0, 0.0], "well": {"k": 5.0, "center": [1.0, 0.0]}},
      {"role": "host", "position": [-1.0, 0.0], "well": {"k": 5.0, "center": [-1.0, 0.0]}},
      {"role": "guest", "species": 1, "position": [0.0, 0.1], "well": {"k": 0.5}}
    ],
    "pair_terms": [{"type": "harmonic", "i": 0, "j": 1, "k": 1.0, "r0": 2.0}],
    "interaction_terms": [{"type": "lj", "i": 0, "j": 2, "epsilon": 1.0, "sigma": 0.9},
                          {"type": "lj", "i": 1, "j": 2, "epsilon": 1.0, "sigma": 0.9}],
    "oracle": {"seed": 4, "mid": {"amplitude": 0.5}, "high": {"amplitude": 0.2, "seed": 99}}
  })");
  const auto def = parse_system(doc);
  CHECK(def.potential.system().size() == 3);
  CHECK(def.potential.host_terms().size() == 3);
  CHECK(def.potential.guest_terms().size() == 1);
  CHECK(def.potential.interaction_terms().size() == 2);
  CHECK(def.potential.coupling() == Coupling::softcore);
  CHECK(def.oracle.mid.seed == 9);
  CHECK(def.oracle.high.seed == 99);
  CHECK(def.start_coords.size() == 6);

  auto bad = doc;
  bad["pair_terms"] = nlohmann::json::parse(R"([{"type": "harmonic", "i": 0, "j": 2, "k": 1.0}])");
  CHECK_THROWS_AS(parse_system(bad), fq::ValidationError);
  bad = doc;
  bad["particles"] = nlohmann::json::array();
  CHECK_THROWS_AS(parse_system(bad), fq::ValidationError);
}
