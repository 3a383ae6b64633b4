#include "fq/model/system_io.hpp"

#include <fstream>

namespace fq::model {

namespace {

using nlohmann::json;

Role parse_role(const std::string& s) {
  if (s == "host") return Role::host;
  if (s == "guest") return Role::guest;
  throw ValidationError("unknown particle role '" + s + "'");
}

Term parse_pair_term(const json& t) {
  const auto type = t.at("type").get<std::string>();
  if (type == "harmonic") {
    return HarmonicBond{t.at("i").get<std::size_t>(), t.at("j").get<std::size_t>(), t.at("k").get<double>(),
                        t.value("r0", 0.0)};
  }
  if (type == "lj") {
    return LennardJones{t.at("i").get<std::size_t>(), t.at("j").get<std::size_t>(), t.at("epsilon").get<double>(),
                        t.at("sigma").get<double>()};
  }
  throw ValidationError("unknown pair term type '" + type + "'");
}

std::pair<std::size_t, std::size_t> pair_of(const Term& term) {
  return std::visit(
      [](const auto& t) -> std::pair<std::size_t, std::size_t> {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, HarmonicWell>) {
          return {t.particle, t.particle};
        } else {
          return {t.i, t.j};
        }
      },
      term);
}

}  // namespace

BumpSpec parse_bump_spec(const json& doc, std::uint64_t default_seed) {
  BumpSpec spec;
  spec.amplitude = doc.value("amplitude", spec.amplitude);
  spec.width = doc.value("width", spec.width);
  spec.n_bumps = doc.value("n_bumps", spec.n_bumps);
  spec.r_min = doc.value("r_min", spec.r_min);
  spec.r_max = doc.value("r_max", spec.r_max);
  spec.seed = doc.value("seed", default_seed);
  spec.anchor_to_origin = doc.value("anchor_to_origin", false);
  return spec;
}

SystemDefinition parse_system(const json& doc) {
  const auto dim = doc.at("dim").get<std::size_t>();
  const auto& plist = doc.at("particles");
  if (!plist.is_array() || plist.empty()) {
    throw ValidationError("system definition must list at least one particle");
  }

  std::vector<Particle> particles;
  std::vector<Term> host_terms;
  std::vector<Term> guest_terms;
  std::vector<double> start;
  for (std::size_t i = 0; i < plist.size(); ++i) {
    const auto& p = plist[i];
    Particle particle;
    particle.mass = p.value("mass", 1.0);
    particle.species = p.value("species", 0);
    particle.role = parse_role(p.value("role", std::string("host")));
    particles.push_back(particle);

    const auto pos = p.at("position").get<std::vector<double>>();
    if (pos.size() != dim) throw ValidationError("particle position has wrong dimension");
    start.insert(start.end(), pos.begin(), pos.end());

    if (p.contains("well")) {
      const auto& w = p.at("well");
      HarmonicWell well{i, w.at("k").get<double>(), w.value("center", std::vector<double>(dim, 0.0))};
      if (well.center.size() != dim) throw ValidationError("well center has wrong dimension");
      (particle.role == Role::guest ? guest_terms : host_terms).push_back(std::move(well));
    }
  }

  for (const auto& t : doc.value("pair_terms", json::array())) {
    auto term = parse_pair_term(t);
    const auto [i, j] = pair_of(term);
    if (i >= particles.size() || j >= particles.size()) throw ValidationError("pair term index out of range");
    const auto ri = particles[i].role;
    if (ri != particles[j].role) {
      throw ValidationError("host-guest pair terms belong in interaction_terms");
    }
    (ri == Role::guest ? guest_terms : host_terms).push_back(std::move(term));
  }

  std::vector<Term> interaction;
  for (const auto& t : doc.value("interaction_terms", json::array())) interaction.push_back(parse_pair_term(t));

  const auto coupling_name = doc.value("coupling", std::string("linear"));
  Coupling coupling = Coupling::linear;
  if (coupling_name == "softcore") {
    coupling = Coupling::softcore;
  } else if (coupling_name != "linear") {
    throw ValidationError("unknown coupling mode '" + coupling_name + "'");
  }

  OracleSpec oracle;
  if (doc.contains("oracle")) {
    const auto& o = doc.at("oracle");
    const auto seed = o.value("seed", std::uint64_t{1});
    if (o.contains("mid")) oracle.mid = parse_bump_spec(o.at("mid"), 2 * seed + 1);
    if (o.contains("high")) oracle.high = parse_bump_spec(o.at("high"), 2 * seed + 2);
  }

  AlchemicalPotential potential(ParticleSystem(dim, std::move(particles)), std::move(host_terms),
                                std::move(guest_terms), std::move(interaction), coupling,
                                doc.value("softcore_alpha", 0.5));
  return SystemDefinition{std::move(potential), oracle, std::move(start)};
}

SystemDefinition load_system(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open system file " + path.string());
  return parse_system(json::parse(in));
}

}  // namespace fq::model
